#include "costyle/imputer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace costyle {

using data::Cohort;

std::string to_string(FillStrategy s) {
  switch (s) {
    case FillStrategy::FirstAvailable: return "first_available";
    case FillStrategy::AverageOverSources: return "average_over_sources";
  }
  throw ConfigError("unknown fill strategy");
}

FillStrategy fill_strategy_from_string(const std::string& s) {
  if (s == "first_available") return FillStrategy::FirstAvailable;
  if (s == "average_over_sources") return FillStrategy::AverageOverSources;
  if (s == "mean") throw ConfigError("'mean' is an imputation method, not a fill strategy");
  throw ConfigError("unknown fill strategy '" + s + "'");
}

ImputationPlan default_plan(const Cohort& cohort) {
  ImputationPlan plan;
  plan.priority.resize(cohort.modality_count());
  for (int i = 0; i < cohort.modality_count(); ++i) plan.priority[i] = i;
  return plan;
}

namespace {

void check_plan(const ImputationPlan& plan, const Cohort& cohort) {
  std::vector<int> sorted = plan.priority;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < cohort.modality_count(); ++i) {
    if (i >= static_cast<int>(sorted.size()) || sorted[i] != i) {
      throw ConfigError("imputation priority must be a permutation of cohort modalities");
    }
  }
}

}  // namespace

std::vector<double> impute_one(const ContentModel& model, const StylePair& style,
                               std::span<const double> x_source) {
  const auto e = embed(model, x_source);
  auto out = nn::mlp_forward(style.generator, e);
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericError("impute_one: non-finite output");
  }
  return out;
}

ImputationResult impute_cohort(const Cohort& cohort, const ContentModel& model,
                               const std::vector<StylePair>& styles,
                               const ImputationPlan& plan) {
  check_plan(plan, cohort);
  // style lookup by target modality
  std::vector<const StylePair*> by_target(cohort.modality_count(), nullptr);
  for (const auto& s : styles) {
    if (s.target_modality >= 0 && s.target_modality < cohort.modality_count()) {
      by_target[s.target_modality] = &s;
    }
  }

  ImputationResult result;
  result.completed = cohort;
  for (auto& subj : result.completed.subjects) {
    if (subj.observed_count() == 0) {
      throw DataError("subject '" + subj.subject_id + "' has no observed modalities");
    }
    for (int t = 0; t < cohort.modality_count(); ++t) {
      if (subj.has(t)) continue;
      if (!by_target[t]) {
        throw DataError("no style checkpoint for modality '" +
                        cohort.modalities[t] + "'");
      }
      Provenance prov;
      prov.subject_id = subj.subject_id;
      prov.target = t;
      prov.strategy = plan.strategy;
      std::vector<double> fill;
      if (plan.strategy == FillStrategy::FirstAvailable) {
        int source = -1;
        for (int m : plan.priority) {
          if (subj.has(m)) {
            source = m;
            break;
          }
        }
        fill = impute_one(model, *by_target[t], *subj.features[source]);
        prov.sources = {source};
      } else {
        fill.assign(cohort.roi_count, 0.0);
        for (int m : plan.priority) {
          if (!subj.has(m)) continue;
          const auto one = impute_one(model, *by_target[t], *subj.features[m]);
          for (int r = 0; r < cohort.roi_count; ++r) fill[r] += one[r];
          prov.sources.push_back(m);
        }
        const double inv = 1.0 / static_cast<double>(prov.sources.size());
        for (double& v : fill) v *= inv;
      }
      subj.features[t] = std::move(fill);
      result.filled.push_back(std::move(prov));
    }
  }
  return result;
}

ClassMeans fit_class_means(const Cohort& training) {
  ClassMeans means;
  const int classes = training.label_count();
  const int mods = training.modality_count();
  means.mean.assign(classes, std::vector<std::vector<double>>(
                                 mods, std::vector<double>(training.roi_count, 0.0)));
  for (int c = 0; c < classes; ++c) {
    for (int m = 0; m < mods; ++m) {
      long n = 0;
      auto& acc = means.mean[c][m];
      for (const auto& subj : training.subjects) {
        if (subj.label != c || !subj.has(m)) continue;
        const auto& f = *subj.features[m];
        for (int r = 0; r < training.roi_count; ++r) acc[r] += f[r];
        ++n;
      }
      if (n == 0) {
        throw DataError("mean_impute: class '" + training.labels[c] +
                        "' has no observed values for modality '" +
                        training.modalities[m] + "'");
      }
      for (double& v : acc) v /= static_cast<double>(n);
    }
  }
  return means;
}

ImputationResult mean_impute(const Cohort& cohort, const ClassMeans& means) {
  ImputationResult result;
  result.completed = cohort;
  for (auto& subj : result.completed.subjects) {
    for (int t = 0; t < cohort.modality_count(); ++t) {
      if (subj.has(t)) continue;
      subj.features[t] = means.mean.at(subj.label).at(t);
      Provenance prov;
      prov.subject_id = subj.subject_id;
      prov.target = t;
      prov.strategy = FillStrategy::FirstAvailable;  // unused for mean fills
      prov.sources = {};
      result.filled.push_back(std::move(prov));
    }
  }
  return result;
}

ImputationResult mean_impute(const Cohort& cohort) {
  return mean_impute(cohort, fit_class_means(cohort));
}

Cohort merge_imputed_cells(const Cohort& raw, const Cohort& filled_std,
                           const data::StandardizationStats& stats) {
  const Cohort raw_filled = data::inverse_standardize(filled_std, stats);
  Cohort out = raw;
  for (std::size_t i = 0; i < out.subjects.size(); ++i) {
    for (int m = 0; m < out.modality_count(); ++m) {
      if (!out.subjects[i].has(m)) {
        out.subjects[i].features[m] = raw_filled.subjects[i].features[m];
      }
    }
  }
  return out;
}

void save_provenance(const std::vector<Provenance>& filled, const Cohort& cohort,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "subject_id,modality,strategy,source_modality\n";
  for (const auto& p : filled) {
    out << p.subject_id << ',' << cohort.modalities.at(p.target) << ',';
    if (p.sources.empty()) {
      out << "mean,";
    } else {
      out << to_string(p.strategy) << ',';
      for (std::size_t i = 0; i < p.sources.size(); ++i) {
        if (i) out << '+';
        out << cohort.modalities.at(p.sources[i]);
      }
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<Provenance> load_provenance(const std::filesystem::path& path,
                                        const Cohort& cohort) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty provenance file");
  std::vector<Provenance> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, target, strategy, sources;
    std::getline(ss, id, ',');
    std::getline(ss, target, ',');
    std::getline(ss, strategy, ',');
    std::getline(ss, sources);
    Provenance p;
    p.subject_id = id;
    p.target = cohort.modality_index(target);
    if (p.target < 0) {
      throw DataError("provenance line " + std::to_string(line_no) +
                      ": unknown modality '" + target + "'");
    }
    if (strategy != "mean") {
      p.strategy = fill_strategy_from_string(strategy);
      std::istringstream srcs(sources);
      std::string tok;
      while (std::getline(srcs, tok, '+')) {
        const int m = cohort.modality_index(tok);
        if (m < 0) {
          throw DataError("provenance line " + std::to_string(line_no) +
                          ": unknown source modality '" + tok + "'");
        }
        p.sources.push_back(m);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace costyle
