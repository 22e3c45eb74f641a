#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace tisim {

/// Source of categorical decisions. Every stochastic step in the engine goes
/// through choose(), so the same code path can be sampled or enumerated.
class Chooser {
 public:
  virtual ~Chooser() = default;

  /// Pick an index with the given probabilities. Options with probability
  /// <= 0 are never picked.
  virtual std::size_t choose(std::span<const double> probabilities) = 0;
};

/// Per-trial random stream: a SplitMix64 sequence started from a hash of
/// (run seed, trial index), so a trial's draws depend only on its own index.
/// Trials draw only a handful of values, so a small-state generator keeps the
/// per-trial setup cost negligible.
class RandomStream final : public Chooser {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}
  RandomStream(std::uint64_t run_seed, std::uint64_t trial_index) : state_(derive_seed(run_seed, trial_index)) {}

  static std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t trial_index);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  std::size_t choose(std::span<const double> probabilities) override;

 private:
  std::uint64_t next();

  std::uint64_t state_;
};

/// One leaf of an enumerated decision tree.
template <typename Result>
struct Branch {
  Result result;
  double probability;
  std::vector<std::size_t> choices;
};

/// Replays `run` once per leaf of its decision tree, depth-first. The callback
/// must be a pure function of the choices it receives. Throws SimError if more
/// than `max_leaves` leaves exist.
class DecisionTreeEnumerator {
 public:
  explicit DecisionTreeEnumerator(std::size_t max_leaves = 1'000'000) : max_leaves_(max_leaves) {}

  void enumerate(const std::function<void(Chooser&)>& run,
                 const std::function<void(double probability, std::span<const std::size_t> choices)>& leaf);

  template <typename Result>
  std::vector<Branch<Result>> branches(const std::function<Result(Chooser&)>& run) {
    std::vector<Branch<Result>> out;
    Result last{};
    enumerate([&](Chooser& c) { last = run(c); },
              [&](double p, std::span<const std::size_t> choices) {
                out.push_back({last, p, {choices.begin(), choices.end()}});
              });
    return out;
  }

 private:
  std::size_t max_leaves_;
};

}  // namespace tisim
