#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "costyle/benchmark.hpp"

namespace costyle {

/// Everything a run needs, serialized verbatim into run_meta.json. Flags
/// override file values; every field has a default.
struct RunConfig {
  std::string data;
  std::string out_dir = "runs/out";
  std::vector<std::string> modalities{"CT", "Tau", "FDG", "Abeta"};
  std::vector<std::string> labels{"CN", "EMCI", "LMCI"};
  std::vector<std::string> priority;  // empty = modality order
  std::string strategy = "first_available";
  bool standardize = true;
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<int> depths{2, 3, 4};
  std::vector<std::string> methods{"none", "mean", "cgan", "wgan", "ours"};
  std::vector<std::uint64_t> seeds;  // benchmark seeds; empty = {seed}
  Phase1Hyper phase1;
  Phase2Hyper phase2;
  PairwiseHyper pairwise;
  ClassifierHyper classifier;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

/// FNV-1a over the canonical JSON dump.
std::string config_hash(const nlohmann::json& doc);

/// Entry point shared by the binary and the tests. Returns the process
/// exit code: 0 ok, 2 config error, 3 data error, 4 numeric failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace costyle
