#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tisim/montecarlo.hpp"
#include "tisim/qubit.hpp"
#include "tisim/spec_io.hpp"

namespace tisim::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write '" + path.string() + "'");
  out << text;
}

struct RunFlags {
  std::string experiment;
  std::string spec_path;
  std::string strategy = "sequential";
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;
  std::string format = "json";
  bool no_tie_break = false;
  std::string emitter_state = "responded";
};

unsigned default_workers() {
  if (const char* env = std::getenv("SIM_DEFAULT_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw SimError("SIM_DEFAULT_WORKERS must be a positive integer");
  }
  return 1;
}

int cmd_run(const RunFlags& f, std::ostream& out) {
  if (f.experiment.empty() == f.spec_path.empty()) throw SimError("give exactly one of --experiment or --spec");
  const ExperimentSpec spec = f.spec_path.empty() ? builtin_spec(f.experiment) : load_spec(read_file(f.spec_path));

  RunConfig cfg;
  cfg.strategy = parse_strategy(f.strategy);
  cfg.tie_break = !f.no_tie_break;
  if (f.emitter_state == "responded") {
    cfg.emitter_policy = EmitterStatePolicy::Responded;
  } else if (f.emitter_state == "final-configuration") {
    cfg.emitter_policy = EmitterStatePolicy::FinalConfiguration;
  } else {
    throw SimError("unknown emitter-state policy '" + f.emitter_state + "'");
  }
  if (f.format != "json" && f.format != "csv") throw SimError("--format must be json or csv");

  // Strategy/spec incompatibility is reported before the remaining flags.
  if (!TrialRunner(spec).supports(cfg.strategy, cfg.tie_break)) throw SimError("strategy requires fixed absorber set");

  if (!f.seed) throw SimError("--seed is required");
  if (!f.trials || *f.trials < 1) throw SimError("--trials must be given and >= 1");
  cfg.seed = *f.seed;
  cfg.n_trials = *f.trials;
  cfg.parallelism = f.workers ? *f.workers : default_workers();
  if (cfg.parallelism < 1) throw SimError("--workers must be >= 1");

  const RunResult result = run_experiment(spec, cfg);
  const nlohmann::json table = to_json(result.table);
  const nlohmann::json report = to_json(result.report);
  const nlohmann::json payload{{"experiment", spec.name},
                               {"strategy", to_string(cfg.strategy)},
                               {"trials", cfg.n_trials},
                               {"seed", cfg.seed},
                               {"tie_break", cfg.tie_break},
                               {"emitter_state_policy", f.emitter_state},
                               {"frequency_table", table},
                               {"consistency_report", report}};
  const bool csv = f.format == "csv";
  if (csv && !spec.screen) throw SimError("experiment '" + spec.name + "' has no screen histogram");

  if (f.out_dir.empty()) {
    out << (csv ? histogram_csv(result.table, *spec.screen) : payload.dump(2) + "\n");
  } else {
    const std::filesystem::path dir(f.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "frequency_table.json", table.dump(2) + "\n");
    write_file(dir / "consistency_report.json", report.dump(2) + "\n");
    if (csv) write_file(dir / "histogram.csv", histogram_csv(result.table, *spec.screen));
    out << "wrote " << dir.string() << "\n";
  }
  const bool consistent = result.report.clean() && result.report.weight_sum_max_error <= kWeightTolerance;
  return consistent ? kExitOk : kExitInconsistent;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const ExperimentSpec spec = parse_spec(read_file(path));
  const auto errors = validate_spec(spec);
  if (errors.empty()) {
    out << "ok\n";
    return kExitOk;
  }
  for (const auto& e : errors) out << e << "\n";
  return kExitUsage;
}

int cmd_abl(const std::string& pre, const std::string& post, const std::string& observable,
            const std::string& outcome, std::ostream& out) {
  const double p = qubit::abl_spin(qubit::parse_state(pre), qubit::parse_state(post), observable, outcome);
  out << std::fixed << std::setprecision(12) << p << "\n";
  return kExitOk;
}

}  // namespace

std::string cmd_list() {
  std::ostringstream os;
  for (const auto& e : builtin_experiments()) os << std::left << std::setw(14) << e.name << e.description << "\n";
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo simulator of offer/confirmation-wave transactions"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List built-in experiments");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate an experiment JSON file");
  validate->add_option("path", validate_path, "Experiment file")->required();

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run an experiment");
  std::string positional;
  run->add_option("name", positional, "Built-in experiment (same as --experiment)");
  auto* exp_opt = run->add_option("--experiment", flags.experiment, "Built-in experiment name");
  auto* spec_opt = run->add_option("--spec", flags.spec_path, "Experiment JSON file");
  exp_opt->excludes(spec_opt);
  run->add_option("--strategy", flags.strategy, "sequential | global-echo | hierarchy");
  run->add_option("--trials", flags.trials, "Number of trials");
  run->add_option("--seed", flags.seed, "Run seed (required)");
  run->add_option("--workers", flags.workers, "Worker threads (default: SIM_DEFAULT_WORKERS or 1)");
  run->add_option("--out", flags.out_dir, "Output directory");
  run->add_option("--format", flags.format, "json | csv");
  run->add_flag("--no-tie-break", flags.no_tie_break, "Report equal-interval ties as degenerate (hierarchy)");
  run->add_option("--emitter-state", flags.emitter_state, "responded | final-configuration");

  std::string pre, post, observable, outcome;
  auto* abl = app.add_subcommand("abl", "ABL probability for a qubit between pre- and post-selection");
  abl->add_option("--pre", pre, "Pre-selected state (+z, -x, ... or re0,im0,re1,im1)")->required();
  abl->add_option("--post", post, "Post-selected state")->required();
  abl->add_option("--observable", observable, "x | y | z")->required();
  abl->add_option("--outcome", outcome, "+x, -z, ...")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (list->parsed()) {
      out << cmd_list();
      return kExitOk;
    }
    if (validate->parsed()) return cmd_validate(validate_path, out);
    if (run->parsed()) {
      if (!positional.empty()) {
        if (!flags.experiment.empty() || !flags.spec_path.empty()) {
          throw SimError("give exactly one of --experiment or --spec");
        }
        flags.experiment = positional;
      }
      return cmd_run(flags, out);
    }
    if (abl->parsed()) return cmd_abl(pre, post, observable, outcome, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace tisim::cli
