#include "tisim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

namespace tisim {

namespace {

constexpr std::size_t kMaxExamples = 5;

template <typename Map>
void add_counts(Map& into, const Map& from) {
  for (const auto& [k, v] : from) into[k] += v;
}

void add_histogram(std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
  if (into.size() < from.size()) into.resize(from.size(), 0);
  for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i];
}

struct Recorder {
  const TrialRunner& runner;
  std::size_t bins;
  FrequencyTable table;
  ConsistencyReport report;

  void record(const TrialResult& r) {
    const auto& ledger = r.ledger;
    ++table.n_trials;
    ++table.counts[r.outcome];
    const std::string state = ledger.emitter_state.label();
    ++table.emitter_state_counts[state];

    auto& conditions = conditions_;
    auto& confirmed = confirmed_;
    conditions.clear();
    confirmed.clear();
    conditions.push_back("emitter:" + state);
    const LedgerStep* success = nullptr;
    for (const auto& s : ledger.steps) {
      switch (s.kind) {
        case StepKind::TransactionFailed:
          conditions.push_back("failed:" + s.absorber);
          break;
        case StepKind::TransactionSucceeded:
          conditions.push_back("succeeded:" + s.absorber);
          success = &s;
          break;
        case StepKind::CoinFlipped:
          conditions.push_back("coin:" + s.label);
          break;
        case StepKind::ConfirmationReturned: {
          confirmed.push_back(s.absorber);
          auto [it, inserted] = table.transaction_weights.try_emplace(s.absorber, s.weight);
          if (!inserted) it->second = std::max(it->second, s.weight);
          break;
        }
        default:
          break;
      }
    }
    sort_unique(conditions);
    sort_unique(confirmed);
    for (const auto& c : conditions) {
      ++table.condition_counts[c];
      ++table.conditional_counts[{c, r.outcome}];
    }
    if (r.bin) {
      if (table.histogram.empty()) table.histogram.assign(bins, 0);
      ++table.histogram[*r.bin];
      for (const auto& c : conditions) {
        auto& h = table.conditional_histograms[c];
        if (h.empty()) h.assign(bins, 0);
        ++h[*r.bin];
      }
    }

    const auto bilking = check_bilking(ledger, runner.spec().rules);
    if (!bilking.ok()) {
      ++report.bilking_violations;
      if (report.examples.size() < kMaxExamples) report.examples.push_back(bilking.violations.front());
    }
    state_set_.assign(ledger.emitter_state.cw_set.begin(), ledger.emitter_state.cw_set.end());
    sort_unique(state_set_);
    const bool success_in_state =
        !success || std::binary_search(state_set_.begin(), state_set_.end(), success->absorber);
    if (state_set_ != confirmed || !success_in_state) {
      ++report.emitter_state_outcome_mismatches;
      if (report.examples.size() < kMaxExamples) {
        report.examples.push_back("emitter state " + state + " inconsistent with outcome '" + r.outcome + "'");
      }
    }
    report.weight_sum_max_error = std::max(report.weight_sum_max_error, runner.mass_balance_error(ledger));
  }

  static void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  // Per-trial scratch, reused to avoid reallocating.
  std::vector<std::string> conditions_;
  std::vector<AbsorberId> confirmed_;
  std::vector<AbsorberId> state_set_;
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void FrequencyTable::merge(const FrequencyTable& other) {
  n_trials += other.n_trials;
  add_counts(counts, other.counts);
  add_counts(condition_counts, other.condition_counts);
  add_counts(conditional_counts, other.conditional_counts);
  add_counts(emitter_state_counts, other.emitter_state_counts);
  for (const auto& [k, w] : other.transaction_weights) {
    auto [it, inserted] = transaction_weights.try_emplace(k, w);
    if (!inserted) it->second = std::max(it->second, w);
  }
  add_histogram(histogram, other.histogram);
  for (const auto& [k, h] : other.conditional_histograms) add_histogram(conditional_histograms[k], h);
}

void ConsistencyReport::merge(const ConsistencyReport& other) {
  bilking_violations += other.bilking_violations;
  emitter_state_outcome_mismatches += other.emitter_state_outcome_mismatches;
  weight_sum_max_error = std::max(weight_sum_max_error, other.weight_sum_max_error);
  for (const auto& e : other.examples) {
    if (examples.size() < kMaxExamples) examples.push_back(e);
  }
}

RunResult run_experiment(const ExperimentSpec& spec, const RunConfig& cfg) {
  if (cfg.n_trials == 0) throw SimError("n_trials must be positive");
  const TrialRunner runner(spec);
  if (!runner.supports(cfg.strategy, cfg.tie_break)) throw SimError("strategy requires fixed absorber set");

  const TrialOptions options{cfg.strategy, cfg.tie_break, cfg.emitter_policy};
  const std::size_t bins = spec.screen ? spec.screen->bins : 0;
  const std::uint64_t workers =
      std::clamp<std::uint64_t>(cfg.parallelism == 0 ? 1 : cfg.parallelism, 1, cfg.n_trials);

  std::vector<Recorder> recorders;
  recorders.reserve(workers);
  for (std::uint64_t w = 0; w < workers; ++w) recorders.push_back(Recorder{runner, bins, {}, {}, {}, {}, {}});
  std::vector<std::exception_ptr> failures(workers);

  auto work = [&](std::uint64_t w) {
    try {
      const std::uint64_t begin = cfg.n_trials * w / workers;
      const std::uint64_t end = cfg.n_trials * (w + 1) / workers;
      for (std::uint64_t i = begin; i < end; ++i) {
        RandomStream stream(cfg.seed, i);
        recorders[w].record(runner.run(options, stream));
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::uint64_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  RunResult out;
  for (const auto& r : recorders) {
    out.table.merge(r.table);
    out.report.merge(r.report);
  }
  return out;
}

Estimate frequency(const FrequencyTable& t, const std::string& outcome) {
  if (t.n_trials == 0) throw SimError("empty frequency table");
  const auto it = t.counts.find(outcome);
  const double n = static_cast<double>(t.n_trials);
  const double p = it == t.counts.end() ? 0.0 : static_cast<double>(it->second) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

Estimate conditional_frequency(const FrequencyTable& t, const std::string& condition, const std::string& outcome) {
  const auto c = t.condition_counts.find(condition);
  if (c == t.condition_counts.end() || c->second == 0) throw SimError("empty conditional");
  const auto it = t.conditional_counts.find({condition, outcome});
  const double n = static_cast<double>(c->second);
  const double p = it == t.conditional_counts.end() ? 0.0 : static_cast<double>(it->second) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

double visibility(std::span<const double> values) {
  if (values.size() < 3) throw SimError("visibility needs at least 3 bins");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > 0.0)) throw SimError("visibility of an all-zero histogram");
  return (*hi - *lo) / (*hi + *lo);
}

double histogram_visibility(std::span<const std::uint64_t> counts) {
  if (counts.size() < 3) throw SimError("visibility needs at least 3 bins");
  std::vector<double> smoothed;
  smoothed.reserve(counts.size() - 2);
  for (std::size_t i = 1; i + 1 < counts.size(); ++i) {
    smoothed.push_back(static_cast<double>(counts[i - 1] + counts[i] + counts[i + 1]) / 3.0);
  }
  if (smoothed.size() < 3) {
    // Three or four bins leave too few interior windows; use the raw counts.
    smoothed.assign(counts.begin(), counts.end());
  }
  return visibility(smoothed);
}

ComparisonReport compare_to_expected(const FrequencyTable& t, const std::map<std::string, double>& expected,
                                     double tolerance) {
  double total = 0.0;
  for (const auto& [k, p] : expected) total += p;
  if (std::abs(total - 1.0) > kWeightTolerance) throw SimError("expected distribution does not sum to 1");
  ComparisonReport report;
  for (const auto& [outcome, p] : expected) {
    const double est = frequency(t, outcome).value;
    if (std::abs(est - p) > tolerance) report.offenders.push_back({outcome, est, p});
  }
  report.pass = report.offenders.empty();
  return report;
}

double coin_slit_correlation(const FrequencyTable& t, const std::string& coin_label, const std::string& slit_a,
                             const std::string& slit_b) {
  if (t.n_trials == 0) throw SimError("empty frequency table");
  const double n = static_cast<double>(t.n_trials);
  auto count = [&](const std::string& o) {
    const auto it = t.counts.find(o);
    return it == t.counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  auto joint = [&](const std::string& o) {
    const auto it = t.conditional_counts.find({"coin:" + coin_label, o});
    return it == t.conditional_counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  const auto coin_it = t.condition_counts.find("coin:" + coin_label);
  const double ec = coin_it == t.condition_counts.end() ? 0.0 : static_cast<double>(coin_it->second) / n;
  const double es = (count(slit_a) - count(slit_b)) / n;
  const double es2 = (count(slit_a) + count(slit_b)) / n;
  const double ecs = (joint(slit_a) - joint(slit_b)) / n;
  const double var_c = ec - ec * ec;
  const double var_s = es2 - es * es;
  if (!(var_c > 0.0) || !(var_s > 0.0)) return 0.0;
  return (ecs - ec * es) / std::sqrt(var_c * var_s);
}

nlohmann::json to_json(const FrequencyTable& t) {
  using nlohmann::json;
  json j;
  j["n_trials"] = t.n_trials;
  j["counts"] = t.counts;
  json freqs = json::object();
  for (const auto& [outcome, c] : t.counts) {
    const auto e = frequency(t, outcome);
    freqs[outcome] = {{"estimate", e.value}, {"stderr", e.standard_error}};
  }
  j["frequencies"] = freqs;
  j["condition_counts"] = t.condition_counts;
  json cond = json::object();
  for (const auto& [key, c] : t.conditional_counts) cond[key.first][key.second] = c;
  j["conditional_counts"] = cond;
  j["emitter_state_counts"] = t.emitter_state_counts;
  j["transaction_weights"] = t.transaction_weights;
  if (!t.histogram.empty()) {
    j["histogram"] = t.histogram;
    j["conditional_histograms"] = t.conditional_histograms;
  }
  return j;
}

nlohmann::json to_json(const ConsistencyReport& r) {
  return {{"bilking_violations", r.bilking_violations},
          {"emitter_state_outcome_mismatches", r.emitter_state_outcome_mismatches},
          {"weight_sum_max_error", r.weight_sum_max_error},
          {"examples", r.examples}};
}

std::string histogram_csv(const FrequencyTable& t, const ScreenModel& m) {
  std::ostringstream os;
  os << "bin_center,count,probability\n";
  const double n = static_cast<double>(t.n_trials);
  for (std::size_t k = 0; k < m.bins; ++k) {
    const std::uint64_t c = k < t.histogram.size() ? t.histogram[k] : 0;
    os << number(m.bin_center(k)) << ',' << c << ',' << number(n > 0 ? static_cast<double>(c) / n : 0.0) << '\n';
  }
  return os.str();
}

}  // namespace tisim
