#include "costyle/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "costyle/data/kfold.hpp"
#include "costyle/nn/losses.hpp"

namespace costyle {

using data::Cohort;
using namespace nn;

double cohens_d(std::span<const double> sample_a, std::span<const double> sample_b) {
  const std::size_t na = sample_a.size(), nb = sample_b.size();
  if (na < 2 || nb < 2) {
    throw DataError("cohens_d: each sample needs at least 2 values");
  }
  auto mean_of = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double ma = mean_of(sample_a);
  const double mb = mean_of(sample_b);
  auto ss_of = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double pooled_var =
      (ss_of(sample_a, ma) + ss_of(sample_b, mb)) / static_cast<double>(na + nb - 2);
  if (pooled_var == 0.0) {
    if (ma == mb) return 0.0;
    throw NumericError("cohens_d: zero pooled variance with unequal means");
  }
  return (ma - mb) / std::sqrt(pooled_var);
}

std::vector<GeneratedCell> cross_generate(const Cohort& cohort,
                                          const ContentModel& model,
                                          const std::vector<StylePair>& styles) {
  std::vector<const StylePair*> by_target(cohort.modality_count(), nullptr);
  for (const auto& s : styles) by_target.at(s.target_modality) = &s;
  for (int t = 0; t < cohort.modality_count(); ++t) {
    if (!by_target[t]) {
      throw DataError("cross_generate: no style pair for modality '" +
                      cohort.modalities[t] + "'");
    }
  }
  std::vector<GeneratedCell> out;
  for (int s = 0; s < cohort.modality_count(); ++s) {
    for (int t = 0; t < cohort.modality_count(); ++t) {
      for (int k = 0; k < static_cast<int>(cohort.subjects.size()); ++k) {
        const auto& subj = cohort.subjects[k];
        if (!subj.has(s)) continue;
        out.push_back({k, subj.label, s, t,
                       impute_one(model, *by_target[t], *subj.features[s])});
      }
    }
  }
  return out;
}

std::vector<GeneratedCell> cross_generate_pairwise(const Cohort& cohort,
                                                   const PairwiseModelSet& set) {
  if (set.modality_count != cohort.modality_count()) {
    throw ShapeError("cross_generate_pairwise: model set does not match cohort");
  }
  std::vector<GeneratedCell> out;
  for (int s = 0; s < cohort.modality_count(); ++s) {
    for (int t = 0; t < cohort.modality_count(); ++t) {
      const auto& model = set.at(s, t);
      for (int k = 0; k < static_cast<int>(cohort.subjects.size()); ++k) {
        const auto& subj = cohort.subjects[k];
        if (!subj.has(s)) continue;
        out.push_back({k, subj.label, s, t,
                       pairwise_generate(model, *subj.features[s], subj.label,
                                         cohort.label_count())});
      }
    }
  }
  return out;
}

std::vector<GeneratedCell> generated_from_completion(
    const Cohort& completed, const std::vector<Provenance>& filled) {
  std::vector<GeneratedCell> out;
  for (const auto& prov : filled) {
    if (prov.sources.size() != 1) continue;  // only single-source fills attributable
    int subject = -1;
    for (int k = 0; k < static_cast<int>(completed.subjects.size()); ++k) {
      if (completed.subjects[k].subject_id == prov.subject_id) {
        subject = k;
        break;
      }
    }
    if (subject < 0) {
      throw DataError("provenance names unknown subject '" + prov.subject_id + "'");
    }
    const auto& subj = completed.subjects[subject];
    out.push_back({subject, subj.label, prov.sources[0], prov.target,
                   *subj.features[prov.target]});
  }
  return out;
}

std::optional<double> EffectSizeTable::overall_mean() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& e : entries) {
    if (!e.valid) continue;
    sum += e.mean_abs_d;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

EffectSizeTable effect_size_table(const Cohort& actual,
                                  const std::vector<GeneratedCell>& generated) {
  const int s_count = actual.modality_count();
  const int c_count = actual.label_count();
  const int p = actual.roi_count;

  EffectSizeTable table;
  for (int s = 0; s < s_count; ++s) {
    for (int t = 0; t < s_count; ++t) {
      for (int c = 0; c < c_count; ++c) {
        EffectSizeEntry entry;
        entry.source = s;
        entry.target = t;
        entry.cls = c;

        std::vector<const std::vector<double>*> gen;
        for (const auto& cell : generated) {
          if (cell.source == s && cell.target == t && cell.cls == c) {
            gen.push_back(&cell.values);
          }
        }
        std::vector<const std::vector<double>*> real;
        for (const auto& subj : actual.subjects) {
          if (subj.label == c && subj.has(t)) real.push_back(&*subj.features[t]);
        }

        if (gen.size() >= 2 && real.size() >= 2) {
          entry.valid = true;
          entry.abs_d.resize(p);
          double sum = 0.0;
          try {
            for (int r = 0; r < p; ++r) {
              std::vector<double> a(real.size()), b(gen.size());
              for (std::size_t i = 0; i < real.size(); ++i) a[i] = (*real[i])[r];
              for (std::size_t i = 0; i < gen.size(); ++i) b[i] = (*gen[i])[r];
              entry.abs_d[r] = std::abs(cohens_d(a, b));
              sum += entry.abs_d[r];
            }
            entry.mean_abs_d = sum / p;
          } catch (const NumericError&) {
            entry.valid = false;
            entry.abs_d.clear();
            entry.mean_abs_d = 0.0;
          }
        }
        table.entries.push_back(std::move(entry));
      }
    }
  }
  return table;
}

WeightedMetrics weighted_precision_recall(
    const std::vector<std::vector<long>>& confusion) {
  const int classes = static_cast<int>(confusion.size());
  long total = 0;
  std::vector<long> support(classes, 0), predicted(classes, 0);
  for (int i = 0; i < classes; ++i) {
    if (static_cast<int>(confusion[i].size()) != classes) {
      throw ShapeError("weighted_precision_recall: confusion must be square");
    }
    for (int j = 0; j < classes; ++j) {
      support[i] += confusion[i][j];
      predicted[j] += confusion[i][j];
      total += confusion[i][j];
    }
  }
  if (total == 0) throw DataError("weighted_precision_recall: empty confusion");

  WeightedMetrics m;
  for (int c = 0; c < classes; ++c) {
    const double weight = static_cast<double>(support[c]) / total;
    if (support[c] > 0) {
      m.recall += weight * static_cast<double>(confusion[c][c]) / support[c];
    }
    if (predicted[c] > 0) {
      m.precision += weight * static_cast<double>(confusion[c][c]) / predicted[c];
    } else if (support[c] > 0) {
      m.zero_division = true;  // class never predicted, contributes 0
    }
  }
  return m;
}

double accuracy_from_confusion(const std::vector<std::vector<long>>& confusion) {
  long hit = 0, total = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    for (std::size_t j = 0; j < confusion[i].size(); ++j) {
      total += confusion[i][j];
      if (i == j) hit += confusion[i][j];
    }
  }
  if (total == 0) throw DataError("accuracy: empty confusion");
  return static_cast<double>(hit) / total;
}

namespace {

// Concatenated modality features of a fully observed subject.
std::vector<double> concat_features(const data::SubjectRecord& subj) {
  std::vector<double> out;
  for (const auto& f : subj.features) {
    out.insert(out.end(), f->begin(), f->end());
  }
  return out;
}

struct ColumnStats {
  std::vector<double> mean, stddev;
};

ColumnStats fit_columns(const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.front().size();
  ColumnStats cs;
  cs.mean.assign(dim, 0.0);
  cs.stddev.assign(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < dim; ++i) cs.mean[i] += r[i];
  }
  for (double& v : cs.mean) v /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = r[i] - cs.mean[i];
      cs.stddev[i] += d * d;
    }
  }
  for (double& v : cs.stddev) {
    v = rows.size() > 1 ? std::sqrt(v / static_cast<double>(rows.size() - 1)) : 0.0;
  }
  return cs;
}

void apply_columns(std::vector<std::vector<double>>& rows, const ColumnStats& cs) {
  for (auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = cs.stddev[i] == 0.0 ? 0.0 : (r[i] - cs.mean[i]) / cs.stddev[i];
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<std::vector<long>> train_eval_classifier(const Cohort& train,
                                                     const Cohort& eval_set,
                                                     int depth, std::uint64_t seed,
                                                     const ClassifierHyper& hyper) {
  if (!train.fully_observed() || !eval_set.fully_observed()) {
    throw DataError("classifier needs fully observed cohorts");
  }
  if (depth < 1) throw ConfigError("classifier depth must be >= 1");
  if (train.subjects.empty() || eval_set.subjects.empty()) {
    throw DataError("classifier needs non-empty train and eval sets");
  }

  std::vector<std::vector<double>> x_train, x_eval;
  std::vector<int> y_train, y_eval;
  for (const auto& s : train.subjects) {
    x_train.push_back(concat_features(s));
    y_train.push_back(s.label);
  }
  for (const auto& s : eval_set.subjects) {
    x_eval.push_back(concat_features(s));
    y_eval.push_back(s.label);
  }
  // column standardization fit on the training split only
  const ColumnStats cs = fit_columns(x_train);
  apply_columns(x_train, cs);
  apply_columns(x_eval, cs);

  const int in_dim = static_cast<int>(x_train.front().size());
  const int classes = train.label_count();
  Rng rng(seed);
  MlpParams net = make_mlp(geometric_dims(in_dim, classes, depth),
                           HiddenAct::LeakyRelu, OutputAct::SoftmaxLogits, rng);
  AdamWState opt =
      make_adamw_state(net, {.lr = hyper.lr, .weight_decay = hyper.weight_decay});
  MlpGrads grads = MlpGrads::zeros_like(net);

  std::vector<int> order(x_train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const int batch = std::max(1, hyper.batch_size);

  auto eval_confusion = [&] {
    std::vector<std::vector<long>> confusion(classes, std::vector<long>(classes, 0));
    double loss = 0.0;
    for (std::size_t i = 0; i < x_eval.size(); ++i) {
      const auto logits = mlp_forward(net, x_eval[i]);
      loss += cross_entropy(logits, y_eval[i]).loss;
      const int pred = static_cast<int>(
          std::max_element(logits.begin(), logits.end()) - logits.begin());
      confusion[y_eval[i]][pred] += 1;
    }
    return std::pair{loss / static_cast<double>(x_eval.size()), confusion};
  };

  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::vector<long>> best_confusion;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch)) {
      const std::size_t end = std::min(order.size(), start + batch);
      grads.zero();
      for (std::size_t i = start; i < end; ++i) {
        GradTape tape;
        const auto logits = mlp_forward(net, x_train[order[i]], &tape);
        mlp_backward(net, tape, cross_entropy(logits, y_train[order[i]]).logit_grad,
                     grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      adamw_step(net, grads, opt);
    }
    const auto [loss, confusion] = eval_confusion();
    if (!std::isfinite(loss)) {
      throw NumericError("classifier: non-finite eval loss at epoch " +
                         std::to_string(epoch));
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_confusion = confusion;
    }
  }
  return best_confusion;
}

ClassificationReport downstream_classify(const Cohort& completed, int depth, int k,
                                         std::uint64_t seed,
                                         const ClassifierHyper& hyper) {
  if (!completed.fully_observed()) {
    throw DataError("downstream_classify: cohort has missing cells");
  }
  const auto folds = data::kfold_split(completed, k, seed);

  ClassificationReport report;
  report.depth = depth;
  report.folds = k;
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_idx;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    const auto confusion = train_eval_classifier(
        completed.subset(train_idx), completed.subset(folds[f]), depth,
        seed + 1000 * static_cast<std::uint64_t>(f + 1), hyper);
    const auto metrics = weighted_precision_recall(confusion);
    report.fold_accuracy.push_back(accuracy_from_confusion(confusion));
    report.fold_precision.push_back(metrics.precision);
    report.fold_recall.push_back(metrics.recall);
  }
  report.accuracy_mean = mean_of(report.fold_accuracy);
  report.accuracy_std = std_of(report.fold_accuracy);
  report.precision_mean = mean_of(report.fold_precision);
  report.precision_std = std_of(report.fold_precision);
  report.recall_mean = mean_of(report.fold_recall);
  report.recall_std = std_of(report.fold_recall);
  return report;
}

using nlohmann::json;

json classification_report_to_json(const ClassificationReport& r) {
  return json{{"method", r.method},
              {"depth", r.depth},
              {"folds", r.folds},
              {"generator_count", r.generator_count},
              {"fold_accuracy", r.fold_accuracy},
              {"fold_precision", r.fold_precision},
              {"fold_recall", r.fold_recall},
              {"accuracy_mean", r.accuracy_mean},
              {"accuracy_std", r.accuracy_std},
              {"precision_mean", r.precision_mean},
              {"precision_std", r.precision_std},
              {"recall_mean", r.recall_mean},
              {"recall_std", r.recall_std}};
}

int emit_reports(const EffectSizeTable& table,
                 const std::vector<ClassificationReport>& reports,
                 const Cohort& cohort, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  int files = 0;

  {
    std::ofstream out(out_dir / "effect_sizes.csv");
    if (!out) throw DataError("cannot write to '" + out_dir.string() + "'");
    out << "source,target,class,roi,abs_d\n";
    for (const auto& e : table.entries) {
      const std::string key = cohort.modalities.at(e.source) + "," +
                              cohort.modalities.at(e.target) + "," +
                              cohort.labels.at(e.cls);
      if (!e.valid) {
        out << key << ",mean,\n";  // flagged missing, no value fabricated
        continue;
      }
      for (std::size_t r = 0; r < e.abs_d.size(); ++r) {
        out << key << ',' << r << ',' << data::format_double(e.abs_d[r]) << "\n";
      }
      out << key << ",mean," << data::format_double(e.mean_abs_d) << "\n";
    }
    ++files;
  }

  {
    json doc = json::array();
    for (const auto& r : reports) doc.push_back(classification_report_to_json(r));
    std::ofstream out(out_dir / "classification.json");
    if (!out) throw DataError("cannot write to '" + out_dir.string() + "'");
    out << doc.dump(2) << "\n";
    ++files;
  }

  for (const auto& e : table.entries) {
    if (!e.valid) continue;
    const std::string name = "roi_map_" + cohort.modalities.at(e.source) + "_" +
                             cohort.modalities.at(e.target) + "_" +
                             cohort.labels.at(e.cls) + ".csv";
    std::ofstream out(out_dir / name);
    if (!out) throw DataError("cannot write '" + name + "'");
    out << "roi,abs_d\n";
    for (std::size_t r = 0; r < e.abs_d.size(); ++r) {
      out << r << ',' << data::format_double(e.abs_d[r]) << "\n";
    }
    ++files;
  }
  return files;
}

}  // namespace costyle
