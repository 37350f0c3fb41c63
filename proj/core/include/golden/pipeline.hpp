#pragma once

// End-to-end experiment orchestration: corpus -> SFT -> PPO -> eval, with
// every artifact persisted under <out>/<run-id>/ and summarized in a
// manifest. Re-running a stage set with the same config and seed reproduces
// the metric files byte for byte.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "golden/run_config.hpp"

namespace golden {

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, std::string> artifacts;  // logical name -> relative path
  std::map<std::string, std::string> digests;    // relative path -> sha256
  std::vector<std::string> stages_run;
  std::string started_at;   // UTC, ISO 8601
  std::string finished_at;
  bool complete = false;
  double bpt = 0.0;  // resolved bytes-per-token used by the reward probe

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

// Absolute run directory for a config: <out>/<run-id>.
std::filesystem::path run_dir(const RunConfig& config);

// Executes the requested stages in corpus, sft, ppo, eval order. Missing
// prerequisites raise StageError; a failing stage leaves the manifest on disk
// marked incomplete. Holds <run-dir>/.lock for the duration.
RunManifest run_pipeline(const RunConfig& config, const std::set<std::string>& stages);

RunManifest load_manifest(const std::filesystem::path& run_directory);

struct Comparison {
  std::string csv;
  std::string text;
};

// Headline metrics side by side, one row per run. Throws StageError when a
// run has no eval report or the schemas disagree.
Comparison compare_runs(const std::vector<std::filesystem::path>& run_directories);

}  // namespace golden
