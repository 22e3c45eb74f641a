#include "tisim/random.hpp"

#include "tisim/error.hpp"

namespace tisim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Scripted chooser: replays a fixed prefix, then takes the first admissible
// option and remembers the alternatives for backtracking.
class ReplayChooser final : public Chooser {
 public:
  struct Decision {
    std::vector<double> probabilities;
    std::size_t taken;
  };

  explicit ReplayChooser(std::vector<Decision>& path) : path_(path) {}

  std::size_t choose(std::span<const double> probabilities) override {
    if (depth_ < path_.size()) {
      auto& d = path_[depth_++];
      if (d.probabilities.size() != probabilities.size()) {
        throw SimError("decision tree callback is not deterministic");
      }
      return d.taken;
    }
    std::size_t first = probabilities.size();
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      if (probabilities[i] > 0.0) {
        first = i;
        break;
      }
    }
    if (first == probabilities.size()) throw SimError("decision with no admissible option");
    path_.push_back({{probabilities.begin(), probabilities.end()}, first});
    ++depth_;
    return first;
  }

  std::size_t depth() const { return depth_; }

 private:
  std::vector<Decision>& path_;
  std::size_t depth_ = 0;
};

}  // namespace

std::uint64_t RandomStream::derive_seed(std::uint64_t run_seed, std::uint64_t trial_index) {
  return splitmix64(splitmix64(run_seed) ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
}

std::uint64_t RandomStream::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RandomStream::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::size_t RandomStream::choose(std::span<const double> probabilities) {
  if (probabilities.empty()) throw SimError("decision with no options");
  if (probabilities.size() == 1) return 0;
  const double u = uniform();
  double cumulative = 0.0;
  std::size_t last_admissible = probabilities.size();
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cumulative += probabilities[i];
    last_admissible = i;
    if (u < cumulative) return i;
  }
  // Rounding left a sliver above the cumulative sum.
  if (last_admissible == probabilities.size()) throw SimError("decision with no admissible option");
  return last_admissible;
}

void DecisionTreeEnumerator::enumerate(
    const std::function<void(Chooser&)>& run,
    const std::function<void(double, std::span<const std::size_t>)>& leaf) {
  std::vector<ReplayChooser::Decision> path;
  std::vector<std::size_t> choices;
  std::size_t leaves = 0;
  while (true) {
    ReplayChooser chooser(path);
    run(chooser);
    if (chooser.depth() != path.size()) throw SimError("decision tree callback is not deterministic");
    if (++leaves > max_leaves_) throw SimError("decision tree exceeds enumeration limit");

    double p = 1.0;
    choices.clear();
    for (const auto& d : path) {
      p *= d.probabilities[d.taken];
      choices.push_back(d.taken);
    }
    leaf(p, choices);

    // Advance the deepest decision that still has an untried admissible option.
    while (!path.empty()) {
      auto& d = path.back();
      std::size_t next = d.taken + 1;
      while (next < d.probabilities.size() && !(d.probabilities[next] > 0.0)) ++next;
      if (next < d.probabilities.size()) {
        d.taken = next;
        break;
      }
      path.pop_back();
    }
    if (path.empty()) return;
  }
}

}  // namespace tisim
