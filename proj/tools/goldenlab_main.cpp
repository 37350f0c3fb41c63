// goldenlab: train a tiny token policy with SFT, fine-tune it with PPO
// against programmatic length/validity rewards, and report valid-output
// proportions. One subcommand per pipeline stage, plus report and compare.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "golden/pipeline.hpp"
#include "golden/run_config.hpp"
#include "golden/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitCheck = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  uint64_t seed_override = 0;
  bool seed_set = false;
  std::vector<std::string> extra_stages;
  std::vector<std::string> checks;
};

void attach_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_override, "override the output directory");
  cmd->add_option("--seed", args.seed_override, "override the run seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--stage", args.extra_stages,
                  "additional pipeline stages to run (corpus|sft|ppo|eval)");
  cmd->add_option("--check", args.checks,
                  "assert 'metric op value' against the eval report, e.g. valid_fraction>=0.9");
}

golden::RunConfig load_config(const CommonArgs& args) {
  golden::RunConfig config = golden::parse_config(args.config_path);
  if (!args.out_override.empty()) config.out_dir = args.out_override;
  if (args.seed_set) config.seed = args.seed_override;
  return config;
}

double report_metric(const golden::EvalReport& report, const std::string& name) {
  if (name == "n") return report.n;
  if (name == "valid_fraction") return report.valid_fraction;
  if (name == "mean_len") return report.mean_len;
  if (name == "degeneracy_fraction") return report.degeneracy_fraction;
  if (name == "format_rate") return report.choice.format_rate;
  if (name == "accuracy") return report.choice.accuracy;
  if (name == "hacking_flag") return report.choice.hacking_flag ? 1.0 : 0.0;
  throw golden::ConfigError("unknown report metric '" + name + "'");
}

// Returns true when every check holds; prints one line per check.
bool run_checks(const golden::EvalReport& report, const std::vector<std::string>& checks) {
  bool all_ok = true;
  for (const std::string& expr : checks) {
    static const char* ops[] = {">=", "<=", "==", ">", "<"};
    size_t pos = std::string::npos;
    std::string op;
    for (const char* candidate : ops) {
      pos = expr.find(candidate);
      if (pos != std::string::npos) {
        op = candidate;
        break;
      }
    }
    if (pos == std::string::npos) {
      throw golden::ConfigError("check '" + expr + "' has no comparison operator");
    }
    std::string metric(golden::trim(expr.substr(0, pos)));
    double rhs;
    try {
      rhs = std::stod(expr.substr(pos + op.size()));
    } catch (const std::exception&) {
      throw golden::ConfigError("check '" + expr + "' has no numeric right-hand side");
    }
    double lhs = report_metric(report, metric);
    bool ok = false;
    if (op == ">=") ok = lhs >= rhs;
    else if (op == "<=") ok = lhs <= rhs;
    else if (op == ">") ok = lhs > rhs;
    else if (op == "<") ok = lhs < rhs;
    else ok = lhs == rhs;
    std::printf("check %-10s %s (%s = %g)\n", ok ? "passed:" : "FAILED:", expr.c_str(),
                metric.c_str(), lhs);
    if (!ok) all_ok = false;
  }
  return all_ok;
}

int run_stages(const CommonArgs& args, const std::string& primary) {
  golden::RunConfig config = load_config(args);
  std::set<std::string> stages;
  if (!primary.empty()) stages.insert(primary);
  for (const std::string& s : args.extra_stages) stages.insert(s);
  golden::RunManifest manifest = golden::run_pipeline(config, stages);
  std::printf("run %s: %zu artifacts under %s\n", manifest.run_id.c_str(),
              manifest.artifacts.size(), golden::run_dir(config).string().c_str());

  if (!args.checks.empty()) {
    auto it = manifest.artifacts.find("report.csv");
    if (it == manifest.artifacts.end()) {
      throw golden::StageError("--check requires the eval stage to have produced a report");
    }
    golden::EvalReport report =
        golden::parse_report_csv(golden::read_file(golden::run_dir(config) / it->second));
    if (!run_checks(report, args.checks)) return kExitCheck;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"golden-reward RLHF laboratory"};
  app.require_subcommand(1);

  CommonArgs corpus_args, sft_args, ppo_args, eval_args, run_args, report_args;
  std::string report_dir;
  std::vector<std::string> compare_dirs;
  bool compare_csv = false;

  attach_common(app.add_subcommand("corpus", "synthesize the dataset"), corpus_args, true);
  attach_common(app.add_subcommand("sft", "supervised fine-tuning"), sft_args, true);
  attach_common(app.add_subcommand("ppo", "PPO against the golden reward"), ppo_args, true);
  attach_common(app.add_subcommand("eval", "evaluate the current best checkpoint"), eval_args,
                true);
  attach_common(app.add_subcommand("run", "run stages given by --stage (default: all)"), run_args,
                true);

  auto* report_cmd = app.add_subcommand("report", "print the eval report of a finished run");
  attach_common(report_cmd, report_args, false);
  report_cmd->add_option("--run-dir", report_dir, "run directory (alternative to --config)");

  auto* compare_cmd = app.add_subcommand("compare", "compare headline metrics across runs");
  compare_cmd->add_option("dirs", compare_dirs, "run directories")->expected(-2);
  compare_cmd->add_flag("--csv", compare_csv, "emit CSV instead of the aligned table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand("corpus")) return run_stages(corpus_args, "corpus");
    if (app.got_subcommand("sft")) return run_stages(sft_args, "sft");
    if (app.got_subcommand("ppo")) return run_stages(ppo_args, "ppo");
    if (app.got_subcommand("eval")) return run_stages(eval_args, "eval");
    if (app.got_subcommand("run")) {
      if (run_args.extra_stages.empty()) {
        run_args.extra_stages = {"corpus", "sft", "ppo", "eval"};
      }
      return run_stages(run_args, "");
    }
    if (app.got_subcommand("report")) {
      std::filesystem::path dir;
      if (!report_dir.empty()) {
        dir = report_dir;
      } else if (!report_args.config_path.empty()) {
        dir = golden::run_dir(load_config(report_args));
      } else {
        throw golden::ConfigError("report needs --run-dir or --config");
      }
      golden::RunManifest manifest = golden::load_manifest(dir);
      auto it = manifest.artifacts.find("report.csv");
      if (it == manifest.artifacts.end()) {
        throw golden::StageError("run '" + manifest.run_id + "' has no eval report");
      }
      golden::EvalReport report = golden::parse_report_csv(golden::read_file(dir / it->second));
      std::fputs(golden::render_report(report, golden::ReportFormat::table_text).c_str(), stdout);
      if (!report_args.checks.empty() && !run_checks(report, report_args.checks)) {
        return kExitCheck;
      }
      return kExitOk;
    }
    if (app.got_subcommand("compare")) {
      std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
      golden::Comparison cmp = golden::compare_runs(dirs);
      std::fputs((compare_csv ? cmp.csv : cmp.text).c_str(), stdout);
      return kExitOk;
    }
  } catch (const golden::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const golden::StageError& e) {
    std::fprintf(stderr, "stage error: %s\n", e.what());
    return kExitStage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitStage;
  }
  return kExitOk;
}
