#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tisim/error.hpp"

namespace tisim {

using Amplitude = std::complex<double>;
using ChannelLabel = std::string;

/// Tolerance for identities that hold exactly in real arithmetic.
inline constexpr double kMathTolerance = 1e-12;

/// Complex amplitudes over an ordered set of uniquely labelled channels.
class StateVector {
 public:
  StateVector() = default;
  StateVector(std::vector<ChannelLabel> basis, std::vector<Amplitude> amps);

  /// |label> over the given basis.
  static StateVector basis_state(std::vector<ChannelLabel> basis, std::string_view label);

  const std::vector<ChannelLabel>& basis() const { return basis_; }
  const std::vector<Amplitude>& amplitudes() const { return amps_; }
  std::size_t dimension() const { return basis_.size(); }

  std::optional<std::size_t> index_of(std::string_view label) const;
  Amplitude amplitude(std::string_view label) const;
  double norm_squared() const;

  bool operator==(const StateVector&) const = default;

 private:
  std::vector<ChannelLabel> basis_;
  std::vector<Amplitude> amps_;
};

/// One projector of an observable: a named group of basis channels.
struct Outcome {
  std::string name;
  std::vector<ChannelLabel> channels;

  bool operator==(const Outcome&) const = default;
};

/// A diagonal observable: a partition of a basis into disjoint nonempty groups.
class Observable {
 public:
  Observable(std::vector<ChannelLabel> basis, std::vector<Outcome> outcomes);

  /// Nondegenerate observable with one outcome per channel, named after it.
  static Observable finest(const std::vector<ChannelLabel>& basis);

  const std::vector<ChannelLabel>& basis() const { return basis_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  const Outcome& outcome(std::string_view name) const;

 private:
  std::vector<ChannelLabel> basis_;
  std::vector<Outcome> outcomes_;
};

/// Scale by a positive real so that the squared norm is 1. Inputs already
/// normalised to within a few ulps are returned unchanged, which keeps the
/// operation exactly idempotent. Throws "null state" on zero norm.
StateVector normalize(const StateVector& s);

/// <a|b> = sum conj(a_x) b_x. Both states must share the same basis.
Amplitude inner_product(const StateVector& a, const StateVector& b);

/// Sum over the outcome's channels of a*_x a_x.
double born_weight(const StateVector& s, const Observable& o, std::string_view outcome);
double born_weight(const StateVector& s, const Outcome& outcome);

/// born_weight for each outcome, in the observable's order.
std::vector<double> complete_weights(const StateVector& s, const Observable& o);

/// Weight mass of the outcomes not listed in `present`: 1 - sum of present weights.
double residual_probability(std::span<const double> weights, std::span<const std::size_t> present);

/// A pre-selected and post-selected state over the same basis with nonzero overlap.
class PrePostEnsemble {
 public:
  PrePostEnsemble(StateVector pre, StateVector post);

  const StateVector& pre() const { return pre_; }
  const StateVector& post() const { return post_; }

 private:
  StateVector pre_;
  StateVector post_;
};

/// Time-symmetric probability for an intermediate measurement of `o`:
///   |<post|P_k|pre>|^2 / sum_j |<post|P_j|pre>|^2
/// Both states are read in the observable's basis.
double abl_probability(const PrePostEnsemble& e, const Observable& o, std::string_view outcome);

/// Components of `s` in another orthonormal basis: c_k = <e_k|s>. The result is
/// labelled with `labels`, one per eigenvector.
StateVector change_basis(const StateVector& s, std::span<const StateVector> eigenbasis,
                         std::vector<ChannelLabel> labels);

}  // namespace tisim
