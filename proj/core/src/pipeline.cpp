#include "golden/pipeline.hpp"

#include <json.hpp>

#include <cstdio>
#include <ctime>

#include "golden/util.hpp"

namespace golden {

namespace {

std::string now_utc_iso() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Exclusive-create lock file; releases (removes) on scope exit.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& path) : path_(path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wx");
    if (f == nullptr) {
      throw StageError("run directory is locked by another process: " + path.string());
    }
    std::fclose(f);
  }
  ~RunLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

void add_artifact(RunManifest& manifest, const std::filesystem::path& dir,
                  const std::string& name, const std::string& rel) {
  manifest.artifacts[name] = rel;
  manifest.digests[rel] = sha256_hex(read_file(dir / rel));
}

const std::set<std::string> kKnownStages = {"corpus", "sft", "ppo", "eval"};

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["config_hash"] = config_hash;
  j["artifacts"] = artifacts;
  j["digests"] = digests;
  j["stages_run"] = stages_run;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["complete"] = complete;
  j["bpt"] = bpt;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunManifest m;
  m.run_id = j.value("run_id", "");
  m.config_hash = j.value("config_hash", "");
  if (j.contains("artifacts")) {
    m.artifacts = j["artifacts"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("digests")) {
    m.digests = j["digests"].get<std::map<std::string, std::string>>();
  }
  if (j.contains("stages_run")) {
    m.stages_run = j["stages_run"].get<std::vector<std::string>>();
  }
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.complete = j.value("complete", false);
  m.bpt = j.value("bpt", 0.0);
  return m;
}

std::filesystem::path run_dir(const RunConfig& config) {
  return std::filesystem::path(config.out_dir) / config.run_id;
}

RunManifest run_pipeline(const RunConfig& config, const std::set<std::string>& stages) {
  config.validate();
  for (const std::string& s : stages) {
    if (!kKnownStages.count(s)) throw ConfigError("unknown stage '" + s + "'");
  }
  if (stages.empty()) throw ConfigError("no stages requested");

  const std::filesystem::path dir = run_dir(config);
  std::filesystem::create_directories(dir / "datasets");
  std::filesystem::create_directories(dir / "checkpoints");
  std::filesystem::create_directories(dir / "metrics");
  std::filesystem::create_directories(dir / "reports");
  RunLock lock(dir / ".lock");

  RunManifest manifest;
  manifest.run_id = config.run_id;
  manifest.config_hash = config.config_hash();
  manifest.started_at = now_utc_iso();
  write_file(dir / "config.canonical", config.canonical());
  add_artifact(manifest, dir, "config", "config.canonical");

  const Vocab vocab = Vocab::builtin();
  DatasetSplit data;
  bool have_data = false;

  auto ensure_data = [&]() {
    if (have_data) return;
    if (!std::filesystem::exists(dir / "datasets" / "train.tsv")) {
      throw StageError("missing prerequisite artifact: datasets (run the corpus stage first)");
    }
    data = load_split(dir / "datasets", vocab);
    data.seed = config.corpus_spec().seed;
    have_data = true;
    manifest.bpt = mean_bytes_per_token(data, vocab);
  };

  auto finish = [&](bool ok) {
    manifest.finished_at = now_utc_iso();
    manifest.complete = ok;
    write_file(dir / "manifest", manifest.to_json());
  };

  try {
    if (stages.count("corpus")) {
      data = synth_corpus(config.corpus_spec(), vocab);
      have_data = true;
      save_split(dir / "datasets", data, vocab);
      manifest.bpt = mean_bytes_per_token(data, vocab);
      add_artifact(manifest, dir, "dataset.train", "datasets/train.tsv");
      add_artifact(manifest, dir, "dataset.validation", "datasets/validation.tsv");
      add_artifact(manifest, dir, "dataset.test", "datasets/test.tsv");
      add_artifact(manifest, dir, "vocab", "datasets/vocab.txt");
      manifest.stages_run.push_back("corpus");
    }

    if (stages.count("sft")) {
      ensure_data();
      PolicyParams base = init_policy(config.policy_spec());
      SftResult result = sft_train(base, data, config.sft_config(), vocab);
      save_checkpoint(result.params, dir / "checkpoints" / "sft.ckpt");
      std::string csv = "step,epoch,loss,eos_loss\n";
      for (const SftStepRow& row : result.curve) {
        csv += std::to_string(row.step) + "," + std::to_string(row.epoch) + "," +
               format_double(row.loss) + "," + format_double(row.eos_loss) + "\n";
      }
      write_file(dir / "metrics" / "sft_loss.csv", csv);
      add_artifact(manifest, dir, "checkpoint.sft", "checkpoints/sft.ckpt");
      add_artifact(manifest, dir, "metrics.sft", "metrics/sft_loss.csv");
      manifest.stages_run.push_back("sft");
    }

    if (stages.count("ppo")) {
      ensure_data();
      PolicyParams start = [&] {
        if (config.ppo_init == "fresh") return init_policy(config.policy_spec());
        std::filesystem::path sft_ckpt = dir / "checkpoints" / "sft.ckpt";
        if (!std::filesystem::exists(sft_ckpt)) {
          throw StageError("missing prerequisite artifact: checkpoints/sft.ckpt "
                           "(run the sft stage or set ppo.init = fresh)");
        }
        return load_checkpoint(sft_ckpt);
      }();

      RewardConfig reward = config.reward_config(manifest.bpt);
      if (config.stages.empty()) {
        PpoResult result = ppo_train(start, data, config.ppo_config(), reward, vocab);
        save_checkpoint(result.params, dir / "checkpoints" / "ppo_best.ckpt");
        save_checkpoint(result.final_params, dir / "checkpoints" / "ppo_final.ckpt");
        for (size_t i = 0; i < result.history.size(); ++i) {
          std::string name = "ppo_ep" + std::to_string(result.history[i].episode) + ".ckpt";
          save_checkpoint(result.snapshot_params[i], dir / "checkpoints" / name);
          add_artifact(manifest, dir, "checkpoint." + name, "checkpoints/" + name);
        }
        write_file(dir / "metrics" / "ppo.csv", metrics_csv(result.history));
        add_artifact(manifest, dir, "checkpoint.ppo_best", "checkpoints/ppo_best.ckpt");
        add_artifact(manifest, dir, "checkpoint.ppo_final", "checkpoints/ppo_final.ckpt");
        add_artifact(manifest, dir, "metrics.ppo", "metrics/ppo.csv");
      } else {
        StageSpec schedule = StageSpec::parse(config.stages);
        StageResult result =
            stepped_train(start, data, schedule, config.ppo_config(), reward, vocab);
        for (size_t i = 0; i < result.stages.size(); ++i) {
          std::string name = "ppo_stage" + std::to_string(i) + ".csv";
          write_file(dir / "metrics" / name, metrics_csv(result.stages[i].history));
          add_artifact(manifest, dir, "metrics." + name, "metrics/" + name);
        }
        save_checkpoint(result.params, dir / "checkpoints" / "ppo_best.ckpt");
        add_artifact(manifest, dir, "checkpoint.ppo_best", "checkpoints/ppo_best.ckpt");
      }
      manifest.stages_run.push_back("ppo");
    }

    if (stages.count("eval")) {
      ensure_data();
      std::filesystem::path ckpt = dir / "checkpoints" / "ppo_best.ckpt";
      if (!std::filesystem::exists(ckpt)) ckpt = dir / "checkpoints" / "sft.ckpt";
      if (!std::filesystem::exists(ckpt)) {
        throw StageError("missing prerequisite artifact: no checkpoint to evaluate "
                         "(run sft or ppo first)");
      }
      PolicyParams params = load_checkpoint(ckpt);
      RewardConfig reward = config.reward_config(manifest.bpt);
      EvalOutcome outcome = evaluate(params, data, config.eval_config(), reward, vocab);
      write_file(dir / "reports" / "eval.csv",
                 render_report(outcome.report, ReportFormat::csv));
      write_file(dir / "reports" / "eval.txt",
                 render_report(outcome.report, ReportFormat::table_text));
      std::string dump;
      for (const std::string& line : outcome.dump_lines) {
        dump += line;
        dump.push_back('\n');
      }
      write_file(dir / "reports" / "dump.tsv", dump);
      add_artifact(manifest, dir, "report.csv", "reports/eval.csv");
      add_artifact(manifest, dir, "report.text", "reports/eval.txt");
      add_artifact(manifest, dir, "report.dump", "reports/dump.tsv");
      manifest.stages_run.push_back("eval");
    }
  } catch (...) {
    finish(false);
    throw;
  }
  finish(true);
  return manifest;
}

RunManifest load_manifest(const std::filesystem::path& run_directory) {
  std::filesystem::path p = run_directory / "manifest";
  if (!std::filesystem::exists(p)) {
    throw StageError("no manifest under " + run_directory.string());
  }
  return RunManifest::from_json(read_file(p));
}

Comparison compare_runs(const std::vector<std::filesystem::path>& run_directories) {
  if (run_directories.size() < 2) {
    throw StageError("compare needs at least two runs");
  }
  struct Row {
    std::string id;
    EvalReport report;
  };
  std::vector<Row> rows;
  for (const auto& d : run_directories) {
    RunManifest m = load_manifest(d);
    auto it = m.artifacts.find("report.csv");
    if (it == m.artifacts.end()) {
      throw StageError("run '" + m.run_id + "' has no eval report");
    }
    EvalReport rep = parse_report_csv(read_file(d / it->second));
    rows.push_back({m.run_id, std::move(rep)});
  }

  Comparison out;
  out.csv = "run,valid_fraction,mean_len,degeneracy_fraction\n";
  for (const Row& r : rows) {
    out.csv += r.id + "," + format_double(r.report.valid_fraction) + "," +
               format_double(r.report.mean_len) + "," +
               format_double(r.report.degeneracy_fraction) + "\n";
  }

  size_t width = 3;
  for (const Row& r : rows) width = std::max(width, r.id.size());
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %14s  %10s  %12s\n", static_cast<int>(width), "run",
                "valid_fraction", "mean_len", "degeneracy");
  out.text = buf;
  for (const Row& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %14.4f  %10.2f  %12.4f\n", static_cast<int>(width),
                  r.id.c_str(), r.report.valid_fraction, r.report.mean_len,
                  r.report.degeneracy_fraction);
    out.text += buf;
  }
  return out;
}

}  // namespace golden
