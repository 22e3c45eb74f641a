#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tisim/experiment.hpp"

namespace tisim {

struct RunConfig {
  std::uint64_t n_trials = 1;
  std::uint64_t seed = 0;
  ResolutionStrategy strategy = ResolutionStrategy::SequentialContingent;
  unsigned parallelism = 1;
  bool tie_break = true;
  EmitterStatePolicy emitter_policy = EmitterStatePolicy::Responded;
};

/// Aggregated outcomes of a run. Conditions are strings such as "failed:A",
/// "succeeded:A", "coin:up" and "emitter:OW(A,B)"; a trial contributes to
/// every condition its ledger satisfies.
struct FrequencyTable {
  std::uint64_t n_trials = 0;
  std::map<std::string, std::uint64_t> counts;
  std::map<std::string, std::uint64_t> condition_counts;
  std::map<std::pair<std::string, std::string>, std::uint64_t> conditional_counts;
  std::map<std::string, std::uint64_t> emitter_state_counts;
  /// Weight of each absorber's incipient transaction(s) as formed in the run.
  std::map<std::string, double> transaction_weights;
  /// Per-bin screen counts, overall and per condition; empty without a screen.
  std::vector<std::uint64_t> histogram;
  std::map<std::string, std::vector<std::uint64_t>> conditional_histograms;

  /// Associative, commutative merge.
  void merge(const FrequencyTable& other);
  bool operator==(const FrequencyTable&) const = default;
};

struct ConsistencyReport {
  std::uint64_t bilking_violations = 0;
  std::uint64_t emitter_state_outcome_mismatches = 0;
  double weight_sum_max_error = 0.0;
  /// First few violation messages, for diagnostics.
  std::vector<std::string> examples;

  bool clean() const { return bilking_violations == 0 && emitter_state_outcome_mismatches == 0; }
  void merge(const ConsistencyReport& other);
};

struct RunResult {
  FrequencyTable table;
  ConsistencyReport report;
};

/// Trial i draws from RandomStream(cfg.seed, i); workers process contiguous
/// index ranges and their tables are merged, so the result does not depend on
/// cfg.parallelism.
RunResult run_experiment(const ExperimentSpec& spec, const RunConfig& cfg);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// count / n with binomial standard error sqrt(p(1-p)/n).
Estimate frequency(const FrequencyTable& t, const std::string& outcome);

/// Estimate among trials satisfying `condition`; throws "empty conditional".
Estimate conditional_frequency(const FrequencyTable& t, const std::string& condition, const std::string& outcome);

/// (max - min) / (max + min) of the values as given.
double visibility(std::span<const double> values);

/// visibility of a counts histogram after a 3-bin moving average over
/// interior bins.
double histogram_visibility(std::span<const std::uint64_t> counts);

struct ComparisonReport {
  struct Offender {
    std::string outcome;
    double estimate;
    double expected;
  };
  bool pass = true;
  std::vector<Offender> offenders;
};

ComparisonReport compare_to_expected(const FrequencyTable& t, const std::map<std::string, double>& expected,
                                     double tolerance);

/// Pearson correlation between the coin indicator (1 for `coin_label`) and a
/// slit indicator: +1 for `slit_a`, -1 for `slit_b`, 0 otherwise.
double coin_slit_correlation(const FrequencyTable& t, const std::string& coin_label, const std::string& slit_a,
                             const std::string& slit_b);

nlohmann::json to_json(const FrequencyTable& t);
nlohmann::json to_json(const ConsistencyReport& r);

/// "bin_center,count,probability" rows for the overall histogram.
std::string histogram_csv(const FrequencyTable& t, const ScreenModel& m);

}  // namespace tisim
