#include "tisim/transaction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tisim {

namespace {

double total_weight(std::span<const IncipientTransaction> txs) {
  double sum = 0.0;
  for (const auto& tx : txs) sum += tx.weight;
  return sum;
}

}  // namespace

double spacetime_interval2(const SpacetimePoint& emission, const SpacetimePoint& absorption) {
  if (!std::isfinite(emission.t) || !std::isfinite(emission.x) || !std::isfinite(absorption.t) ||
      !std::isfinite(absorption.x)) {
    throw SimError("non-finite spacetime coordinate");
  }
  if (absorption.t < emission.t) throw SimError("absorption before emission");
  const double dt = absorption.t - emission.t;
  const double dx = absorption.x - emission.x;
  return dt * dt - dx * dx;
}

OfferWave::OfferWave(SpacetimePoint emission_point, StateVector s,
                     std::map<ChannelLabel, std::optional<AbsorberId>> targets)
    : emission(emission_point), state(std::move(s)), channel_targets(std::move(targets)) {
  if (std::abs(state.norm_squared() - 1.0) > kMathTolerance) throw SimError("offer wave not normalised");
  for (const auto& [channel, target] : channel_targets) {
    if (!state.index_of(channel)) throw SimError("offer wave has no channel '" + channel + "'");
  }
}

ConfirmationWave respond(const OfferWave& ow, const AbsorberId& absorber, const SpacetimePoint& returned_at) {
  auto cws = respond_all(ow, absorber, returned_at);
  if (cws.size() > 1) throw SimError("absorber '" + absorber + "' is targeted by more than one channel");
  return std::move(cws.front());
}

std::vector<ConfirmationWave> respond_all(const OfferWave& ow, const AbsorberId& absorber,
                                          const SpacetimePoint& returned_at) {
  std::vector<ConfirmationWave> cws;
  const auto& basis = ow.state.basis();
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto it = ow.channel_targets.find(basis[i]);
    if (it == ow.channel_targets.end() || it->second != absorber) continue;
    cws.push_back({basis[i], absorber, std::conj(ow.state.amplitudes()[i]), returned_at});
  }
  if (cws.empty()) throw SimError("absorber '" + absorber + "' is not targeted by the offer wave");
  return cws;
}

IncipientTransaction form_incipient(const OfferWave& ow, const ConfirmationWave& cw,
                                    const SpacetimePoint& emission, const SpacetimePoint& absorption) {
  const auto idx = ow.state.index_of(cw.channel);
  if (!idx) throw SimError("confirmation channel '" + cw.channel + "' not in offer wave");
  const Amplitude product = cw.amp * ow.state.amplitudes()[*idx];
  return {cw.channel, cw.absorber, product.real(), spacetime_interval2(emission, absorption), absorption};
}

std::string to_string(ResolutionStrategy s) {
  switch (s) {
    case ResolutionStrategy::GlobalEcho:
      return "global-echo";
    case ResolutionStrategy::Hierarchy:
      return "hierarchy";
    case ResolutionStrategy::SequentialContingent:
      return "sequential";
  }
  return "?";
}

ResolutionStrategy parse_strategy(std::string_view name) {
  if (name == "global-echo") return ResolutionStrategy::GlobalEcho;
  if (name == "hierarchy") return ResolutionStrategy::Hierarchy;
  if (name == "sequential") return ResolutionStrategy::SequentialContingent;
  throw SimError("unknown strategy '" + std::string(name) + "'");
}

std::size_t resolve_global(std::span<const IncipientTransaction> txs, Chooser& chooser) {
  if (txs.empty() || std::abs(total_weight(txs) - 1.0) > kWeightTolerance) {
    throw SimError("GlobalEcho requires complete absorber coverage");
  }
  std::vector<double> p;
  p.reserve(txs.size());
  for (const auto& tx : txs) p.push_back(tx.weight);
  return chooser.choose(p);
}

HierarchyResult resolve_hierarchy(std::span<const IncipientTransaction> txs, Chooser& chooser,
                                  HierarchyOptions options) {
  if (txs.empty() || std::abs(total_weight(txs) - 1.0) > kWeightTolerance) {
    throw SimError("Hierarchy requires complete absorber coverage");
  }
  std::vector<std::size_t> order(txs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (txs[a].interval2 != txs[b].interval2) return txs[a].interval2 < txs[b].interval2;
    return options.tie_break && txs[a].absorbed_at.t < txs[b].absorbed_at.t;
  });

  HierarchyResult result;
  if (!options.tie_break) {
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (std::abs(txs[order[k]].interval2 - txs[order[k - 1]].interval2) <= kMathTolerance) {
        result.degenerate = true;
        return result;
      }
    }
  }

  double rejected_mass = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (k + 1 == order.size()) {
      // Everything shorter failed; the remaining mass is this transaction's.
      result.accepted = i;
      return result;
    }
    const double remaining = 1.0 - rejected_mass;
    const double accept = std::clamp(txs[i].weight / remaining, 0.0, 1.0);
    const double options2[] = {accept, 1.0 - accept};
    if (chooser.choose(options2) == 0) {
      result.accepted = i;
      return result;
    }
    result.rejected.push_back(i);
    rejected_mass += txs[i].weight;
  }
  return result;
}

std::optional<std::size_t> resolve_step(std::span<const IncipientTransaction> present,
                                        double resolved_failed_mass, Chooser& chooser) {
  const double m = 1.0 - resolved_failed_mass;
  if (!(m > kWeightTolerance)) throw SimError("probability mass exhausted");
  const double offered = total_weight(present);
  if (offered + resolved_failed_mass > 1.0 + kWeightTolerance) {
    throw SimError("offered weight exceeds remaining probability mass");
  }
  std::vector<double> p;
  p.reserve(present.size() + 1);
  for (const auto& tx : present) p.push_back(tx.weight / m);
  // A residual below rounding level is not a real branch.
  const double residual = m - offered;
  p.push_back(residual > kMathTolerance ? residual / m : 0.0);
  const std::size_t pick = chooser.choose(p);
  if (pick == present.size()) return std::nullopt;
  return pick;
}

}  // namespace tisim
