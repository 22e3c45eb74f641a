#include "tisim/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace tisim {

namespace {

void require_same_basis_set(const std::vector<ChannelLabel>& a, const std::vector<ChannelLabel>& b) {
  if (a.size() != b.size() ||
      std::set<ChannelLabel>(a.begin(), a.end()) != std::set<ChannelLabel>(b.begin(), b.end())) {
    throw SimError("basis mismatch");
  }
}

}  // namespace

StateVector::StateVector(std::vector<ChannelLabel> basis, std::vector<Amplitude> amps)
    : basis_(std::move(basis)), amps_(std::move(amps)) {
  if (basis_.size() != amps_.size()) {
    throw SimError("state has " + std::to_string(basis_.size()) + " labels but " +
                   std::to_string(amps_.size()) + " amplitudes");
  }
  std::set<std::string_view> seen;
  for (const auto& label : basis_) {
    if (label.empty()) throw SimError("empty channel label");
    if (!seen.insert(label).second) throw SimError("duplicate channel label '" + label + "'");
  }
  for (const auto& a : amps_) {
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
      throw SimError("non-finite amplitude");
    }
  }
}

StateVector StateVector::basis_state(std::vector<ChannelLabel> basis, std::string_view label) {
  std::vector<Amplitude> amps(basis.size());
  StateVector s(std::move(basis), std::move(amps));
  const auto idx = s.index_of(label);
  if (!idx) throw SimError("unknown channel '" + std::string(label) + "'");
  s.amps_[*idx] = 1.0;
  return s;
}

std::optional<std::size_t> StateVector::index_of(std::string_view label) const {
  const auto it = std::find(basis_.begin(), basis_.end(), label);
  if (it == basis_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - basis_.begin());
}

Amplitude StateVector::amplitude(std::string_view label) const {
  const auto idx = index_of(label);
  if (!idx) throw SimError("unknown channel '" + std::string(label) + "'");
  return amps_[*idx];
}

double StateVector::norm_squared() const {
  double sum = 0.0;
  for (const auto& a : amps_) sum += std::norm(a);
  return sum;
}

Observable::Observable(std::vector<ChannelLabel> basis, std::vector<Outcome> outcomes)
    : basis_(std::move(basis)), outcomes_(std::move(outcomes)) {
  std::set<std::string_view> labels(basis_.begin(), basis_.end());
  if (labels.size() != basis_.size()) throw SimError("observable basis has duplicate labels");
  std::set<std::string_view> names;
  std::set<std::string_view> covered;
  for (const auto& o : outcomes_) {
    if (o.channels.empty()) throw SimError("outcome '" + o.name + "' has no channels");
    if (!names.insert(o.name).second) throw SimError("duplicate outcome '" + o.name + "'");
    for (const auto& c : o.channels) {
      if (!labels.contains(c)) throw SimError("outcome '" + o.name + "' names unknown channel '" + c + "'");
      if (!covered.insert(c).second) throw SimError("channel '" + c + "' appears in two outcomes");
    }
  }
  if (covered.size() != labels.size()) throw SimError("outcomes do not cover the basis");
}

Observable Observable::finest(const std::vector<ChannelLabel>& basis) {
  std::vector<Outcome> outcomes;
  outcomes.reserve(basis.size());
  for (const auto& label : basis) outcomes.push_back({label, {label}});
  return Observable(basis, std::move(outcomes));
}

const Outcome& Observable::outcome(std::string_view name) const {
  for (const auto& o : outcomes_) {
    if (o.name == name) return o;
  }
  throw SimError("unknown outcome '" + std::string(name) + "'");
}

StateVector normalize(const StateVector& s) {
  const double n2 = s.norm_squared();
  if (!(n2 > 0.0)) throw SimError("null state");
  if (std::abs(n2 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return s;
  const double scale = 1.0 / std::sqrt(n2);
  std::vector<Amplitude> amps = s.amplitudes();
  for (auto& a : amps) a *= scale;
  return StateVector(s.basis(), std::move(amps));
}

Amplitude inner_product(const StateVector& a, const StateVector& b) {
  if (a.basis() != b.basis()) throw SimError("basis mismatch");
  Amplitude sum = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    sum += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  }
  return sum;
}

double born_weight(const StateVector& s, const Outcome& outcome) {
  double w = 0.0;
  for (const auto& c : outcome.channels) {
    const Amplitude a = s.amplitude(c);
    // a*_x a_x is real; keep only the real part of the product.
    w += (std::conj(a) * a).real();
  }
  return w;
}

double born_weight(const StateVector& s, const Observable& o, std::string_view outcome) {
  require_same_basis_set(s.basis(), o.basis());
  return born_weight(s, o.outcome(outcome));
}

std::vector<double> complete_weights(const StateVector& s, const Observable& o) {
  require_same_basis_set(s.basis(), o.basis());
  std::vector<double> weights;
  weights.reserve(o.outcomes().size());
  for (const auto& outcome : o.outcomes()) weights.push_back(born_weight(s, outcome));
  return weights;
}

double residual_probability(std::span<const double> weights, std::span<const std::size_t> present) {
  std::set<std::size_t> unique(present.begin(), present.end());
  double mass = 0.0;
  for (const auto idx : unique) {
    if (idx >= weights.size()) throw SimError("outcome index out of range");
    mass += weights[idx];
  }
  return 1.0 - mass;
}

PrePostEnsemble::PrePostEnsemble(StateVector pre, StateVector post)
    : pre_(normalize(pre)), post_(normalize(post)) {
  if (pre_.basis() != post_.basis()) throw SimError("basis mismatch");
}

double abl_probability(const PrePostEnsemble& e, const Observable& o, std::string_view outcome) {
  require_same_basis_set(e.pre().basis(), o.basis());
  auto transition = [&](const Outcome& group) {
    Amplitude amp = 0.0;
    for (const auto& c : group.channels) amp += std::conj(e.post().amplitude(c)) * e.pre().amplitude(c);
    return std::norm(amp);
  };
  const Outcome& target = o.outcome(outcome);
  double denominator = 0.0;
  for (const auto& group : o.outcomes()) denominator += transition(group);
  if (!(denominator > 0.0)) throw SimError("impossible pre/post pair for this observable");
  return transition(target) / denominator;
}

StateVector change_basis(const StateVector& s, std::span<const StateVector> eigenbasis,
                         std::vector<ChannelLabel> labels) {
  if (eigenbasis.size() != s.dimension() || labels.size() != s.dimension()) {
    throw SimError("eigenbasis dimension mismatch");
  }
  for (std::size_t i = 0; i < eigenbasis.size(); ++i) {
    for (std::size_t j = i; j < eigenbasis.size(); ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      if (std::abs(inner_product(eigenbasis[i], eigenbasis[j]) - expected) > kMathTolerance) {
        throw SimError("eigenbasis is not orthonormal");
      }
    }
  }
  std::vector<Amplitude> amps;
  amps.reserve(eigenbasis.size());
  for (const auto& e : eigenbasis) amps.push_back(inner_product(e, s));
  return StateVector(std::move(labels), std::move(amps));
}

}  // namespace tisim
