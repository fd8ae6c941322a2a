#include "costyle/data/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace costyle::data {

int SubjectRecord::observed_count() const {
  int n = 0;
  for (const auto& f : features) n += f.has_value() ? 1 : 0;
  return n;
}

int Cohort::modality_index(const std::string& name) const {
  const auto it = std::find(modalities.begin(), modalities.end(), name);
  return it == modalities.end() ? -1
                                : static_cast<int>(it - modalities.begin());
}

int Cohort::label_index(const std::string& name) const {
  const auto it = std::find(labels.begin(), labels.end(), name);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

std::vector<int> Cohort::class_counts() const {
  std::vector<int> counts(labels.size(), 0);
  for (const auto& s : subjects) counts[s.label] += 1;
  return counts;
}

bool Cohort::fully_observed() const {
  for (const auto& s : subjects) {
    if (s.observed_count() != modality_count()) return false;
  }
  return true;
}

std::vector<int> Cohort::complete_subjects() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(subjects.size()); ++i) {
    if (subjects[i].observed_count() == modality_count()) out.push_back(i);
  }
  return out;
}

std::vector<int> Cohort::incomplete_subjects() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(subjects.size()); ++i) {
    if (subjects[i].observed_count() < modality_count()) out.push_back(i);
  }
  return out;
}

Cohort Cohort::subset(const std::vector<int>& subject_indices) const {
  Cohort out;
  out.modalities = modalities;
  out.labels = labels;
  out.roi_count = roi_count;
  out.standardization = standardization;
  out.subjects.reserve(subject_indices.size());
  for (int i : subject_indices) out.subjects.push_back(subjects.at(i));
  return out;
}

void Cohort::validate() const {
  if (modalities.size() < 2) throw DataError("cohort needs at least 2 modalities");
  if (labels.empty()) throw DataError("cohort has no label set");
  if (roi_count <= 0) throw DataError("cohort roi_count must be positive");
  for (const auto& s : subjects) {
    if (s.features.size() != modalities.size()) {
      throw DataError("subject '" + s.subject_id + "' has wrong modality slots");
    }
    if (s.label < 0 || s.label >= label_count()) {
      throw DataError("subject '" + s.subject_id + "' has invalid label index");
    }
    if (s.observed_count() == 0) {
      throw DataError("subject '" + s.subject_id + "' has no observed modalities");
    }
    for (const auto& f : s.features) {
      if (!f) continue;
      if (static_cast<int>(f->size()) != roi_count) {
        throw DataError("subject '" + s.subject_id + "' has wrong feature length");
      }
      for (double v : *f) {
        if (!std::isfinite(v)) {
          throw DataError("subject '" + s.subject_id + "' has non-finite feature");
        }
      }
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, int line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw DataError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                    cell + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError("line " + std::to_string(line_no) + ": non-finite value '" +
                    cell + "'");
  }
  return v;
}

std::string feature_header(int roi_count) {
  std::ostringstream h;
  for (int i = 0; i < roi_count; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), ",f%03d", i);
    h << buf;
  }
  return h.str();
}

}  // namespace

Cohort load_cohort(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "label" ||
      header[2] != "modality") {
    throw DataError("'" + path.string() +
                    "': header must start with subject_id,label,modality,f000,...");
  }
  const int roi_count = static_cast<int>(header.size()) - 3;
  for (int i = 0; i < roi_count; ++i) {
    if (header[3 + i].empty() || header[3 + i][0] != 'f') {
      throw DataError("'" + path.string() + "': feature column " +
                      std::to_string(i) + " not named f*");
    }
  }

  Cohort cohort;
  cohort.roi_count = roi_count;
  cohort.modalities = options.modalities;
  cohort.labels = options.labels;
  const bool discover_modalities = cohort.modalities.empty();
  const bool discover_labels = cohort.labels.empty();

  std::map<std::string, int> subject_index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 3 + roi_count) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(3 + roi_count) + " columns, got " +
                      std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    const std::string& label_name = cells[1];
    const std::string& modality_name = cells[2];

    int modality = cohort.modality_index(modality_name);
    if (modality < 0) {
      if (!discover_modalities) {
        throw DataError("line " + std::to_string(line_no) + ": unknown modality '" +
                        modality_name + "'");
      }
      modality = cohort.modality_count();
      cohort.modalities.push_back(modality_name);
      for (auto& s : cohort.subjects) s.features.emplace_back(std::nullopt);
    }
    int label = cohort.label_index(label_name);
    if (label < 0) {
      if (!discover_labels) {
        throw DataError("line " + std::to_string(line_no) + ": unknown label '" +
                        label_name + "'");
      }
      label = cohort.label_count();
      cohort.labels.push_back(label_name);
    }

    int subj;
    const auto it = subject_index.find(id);
    if (it == subject_index.end()) {
      subj = static_cast<int>(cohort.subjects.size());
      subject_index.emplace(id, subj);
      SubjectRecord rec;
      rec.subject_id = id;
      rec.label = label;
      rec.features.assign(cohort.modality_count(), std::nullopt);
      cohort.subjects.push_back(std::move(rec));
    } else {
      subj = it->second;
      if (cohort.subjects[subj].label != label) {
        throw DataError("line " + std::to_string(line_no) + ": subject '" + id +
                        "' has conflicting labels");
      }
    }
    if (cohort.subjects[subj].features[modality].has_value()) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate row for (" +
                      id + ", " + modality_name + ")");
    }
    std::vector<double> values(roi_count);
    for (int i = 0; i < roi_count; ++i) values[i] = parse_cell(cells[3 + i], line_no);
    cohort.subjects[subj].features[modality] = std::move(values);
  }

  if (cohort.subjects.empty()) throw DataError("'" + path.string() + "': no subjects");
  cohort.validate();
  return cohort;
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << "subject_id,label,modality" << feature_header(cohort.roi_count) << "\n";
  for (const auto& s : cohort.subjects) {
    for (int m = 0; m < cohort.modality_count(); ++m) {
      if (!s.has(m)) continue;
      out << s.subject_id << ',' << cohort.labels[s.label] << ','
          << cohort.modalities[m];
      for (double v : *s.features[m]) out << ',' << format_double(v);
      out << "\n";
    }
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::pair<Cohort, StandardizationStats> standardize(const Cohort& cohort) {
  const int s_count = cohort.modality_count();
  const int p = cohort.roi_count;
  StandardizationStats stats;
  stats.mean.assign(s_count, std::vector<double>(p, 0.0));
  stats.stddev.assign(s_count, std::vector<double>(p, 0.0));

  for (int m = 0; m < s_count; ++m) {
    for (int r = 0; r < p; ++r) {
      double sum = 0.0;
      int n = 0;
      for (const auto& subj : cohort.subjects) {
        if (!subj.has(m)) continue;
        sum += (*subj.features[m])[r];
        ++n;
      }
      if (n < 2) {
        throw DataError("modality '" + cohort.modalities[m] + "' roi " +
                        std::to_string(r) + " has " + std::to_string(n) +
                        " present values, need at least 2");
      }
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& subj : cohort.subjects) {
        if (!subj.has(m)) continue;
        const double d = (*subj.features[m])[r] - mean;
        ss += d * d;
      }
      stats.mean[m][r] = mean;
      stats.stddev[m][r] = std::sqrt(ss / (n - 1));
    }
  }
  return {apply_standardization(cohort, stats), stats};
}

Cohort apply_standardization(const Cohort& cohort, const StandardizationStats& stats) {
  Cohort out = cohort;
  for (auto& subj : out.subjects) {
    for (int m = 0; m < out.modality_count(); ++m) {
      if (!subj.has(m)) continue;
      auto& f = *subj.features[m];
      for (int r = 0; r < out.roi_count; ++r) {
        const double sd = stats.stddev[m][r];
        f[r] = sd == 0.0 ? 0.0 : (f[r] - stats.mean[m][r]) / sd;
      }
    }
  }
  out.standardization = stats;
  return out;
}

Cohort inverse_standardize(const Cohort& cohort, const StandardizationStats& stats) {
  Cohort out = cohort;
  for (auto& subj : out.subjects) {
    for (int m = 0; m < out.modality_count(); ++m) {
      if (!subj.has(m)) continue;
      auto& f = *subj.features[m];
      for (int r = 0; r < out.roi_count; ++r) {
        f[r] = f[r] * stats.stddev[m][r] + stats.mean[m][r];
      }
    }
  }
  out.standardization.reset();
  return out;
}

}  // namespace costyle::data
