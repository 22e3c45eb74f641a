#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tisim/quantum.hpp"
#include "tisim/random.hpp"

namespace tisim {

using AbsorberId = std::string;

/// Tolerance on weight completeness for the resolution strategies. Looser
/// than kMathTolerance to absorb geometry arithmetic.
inline constexpr double kWeightTolerance = 1e-9;

/// Event in 1+1 dimensions, natural units (c = 1).
struct SpacetimePoint {
  double t = 0.0;
  double x = 0.0;

  bool operator==(const SpacetimePoint&) const = default;
};

/// (dt)^2 - (dx)^2. Zero for any light-like leg; throws if absorption
/// precedes emission.
double spacetime_interval2(const SpacetimePoint& emission, const SpacetimePoint& absorption);

/// Retarded state emitted by the source, with the absorber (if any) that each
/// channel currently reaches.
struct OfferWave {
  SpacetimePoint emission;
  StateVector state;
  std::map<ChannelLabel, std::optional<AbsorberId>> channel_targets;

  /// Validates normalisation and that every target channel is in the state.
  OfferWave(SpacetimePoint emission, StateVector state,
            std::map<ChannelLabel, std::optional<AbsorberId>> targets);
};

/// Advanced response of an absorber to one channel of an offer wave. The
/// amplitude is the complex conjugate of the offer amplitude on that channel.
struct ConfirmationWave {
  ChannelLabel channel;
  AbsorberId absorber;
  Amplitude amp;
  SpacetimePoint returned_at;
};

/// An offer/confirmation pairing between the emitter and one absorber.
struct IncipientTransaction {
  ChannelLabel channel;
  AbsorberId absorber;
  double weight = 0.0;     // a*_x a_x
  double interval2 = 0.0;  // squared interval emission -> absorption
  SpacetimePoint absorbed_at;
};

/// The confirmation wave from the single channel that `absorber` is targeted by.
ConfirmationWave respond(const OfferWave& ow, const AbsorberId& absorber,
                         const SpacetimePoint& returned_at = {});

/// Confirmation waves for every channel that targets `absorber` (basis order).
std::vector<ConfirmationWave> respond_all(const OfferWave& ow, const AbsorberId& absorber,
                                          const SpacetimePoint& returned_at = {});

/// Pair an offer wave with a confirmation: weight = cw.amp * a_x.
IncipientTransaction form_incipient(const OfferWave& ow, const ConfirmationWave& cw,
                                    const SpacetimePoint& emission, const SpacetimePoint& absorption);

enum class ResolutionStrategy { GlobalEcho, Hierarchy, SequentialContingent };

std::string to_string(ResolutionStrategy s);
ResolutionStrategy parse_strategy(std::string_view name);

/// All confirmations arrive at once; one transaction is picked by weight.
/// Returns the index of the actualised transaction.
std::size_t resolve_global(std::span<const IncipientTransaction> txs, Chooser& chooser);

/// Outcome of the interval-ordered walk.
struct HierarchyResult {
  bool degenerate = false;
  std::optional<std::size_t> accepted;  // index into the input
  std::vector<std::size_t> rejected;    // in the order they were tried
};

struct HierarchyOptions {
  /// Break equal-interval ties by absorption time, then input order. When
  /// false, any tie is reported as degenerate.
  bool tie_break = true;
};

/// Transactions are tried in ascending interval2; transaction i is accepted
/// with probability w_i / (1 - sum of weights already rejected).
HierarchyResult resolve_hierarchy(std::span<const IncipientTransaction> txs, Chooser& chooser,
                                  HierarchyOptions options = {});

/// One step of the time-ordered driver. With m = 1 - resolved_failed_mass,
/// transaction i succeeds with probability w_i / m and nothing happens with
/// probability (m - sum w_i) / m. Returns the index or nullopt.
std::optional<std::size_t> resolve_step(std::span<const IncipientTransaction> present,
                                        double resolved_failed_mass, Chooser& chooser);

}  // namespace tisim
