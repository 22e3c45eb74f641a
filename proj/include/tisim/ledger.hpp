#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tisim/transaction.hpp"

namespace tisim {

// Closed trigger/action vocabulary for contingency rules.

enum class TriggerKind { TransactionFailed, TransactionSucceeded, CoinOutcome, Always };
enum class ActionKind { PlaceAbsorber, DivertChannel, RemoveScreen };

std::string to_string(TriggerKind k);
std::string to_string(ActionKind k);
TriggerKind parse_trigger_kind(std::string_view s);
ActionKind parse_action_kind(std::string_view s);

struct Trigger {
  TriggerKind kind = TriggerKind::Always;
  AbsorberId absorber;      // transaction triggers
  std::string label;        // coin outcome
  std::optional<double> t;  // required event time for transaction triggers

  bool operator==(const Trigger&) const = default;
};

struct Action {
  ActionKind kind = ActionKind::PlaceAbsorber;
  AbsorberId absorber;    // placed absorber, diversion target, or screen to remove
  ChannelLabel channel;   // channel of the placed absorber / diverted channel
  SpacetimePoint at;      // absorption event of the absorber brought into play; removal event for screens

  bool operator==(const Action&) const = default;
};

struct ContingencyRule {
  Trigger trigger;
  Action action;
  double time = 0.0;  // when the apparatus change happens

  bool operator==(const ContingencyRule&) const = default;
};

enum class StepKind {
  Emitted,
  CoinFlipped,
  ConfirmationReturned,
  TransactionSucceeded,
  TransactionFailed,
  AbsorberPlaced,
  ChannelDiverted,
  ScreenRemoved,
  NoTransaction,
  Degenerate,
};

std::string to_string(StepKind k);

struct LedgerStep {
  StepKind kind = StepKind::Emitted;
  double t = 0.0;
  AbsorberId absorber;
  ChannelLabel channel;  // "*" for a screen confirmation
  std::string label;     // coin outcome, or the outcome label of a success
  double weight = 0.0;   // transaction weight (summed over a screen's bins)
  int rule = -1;         // index of the rule behind an apparatus change
};

/// Which absorbers have confirmation waves present at the emitter.
struct EmitterState {
  std::vector<AbsorberId> cw_set;  // first-response order, no duplicates

  /// "OW(A)", "OW(A,B)"; "OW()" when empty.
  std::string label() const;
  bool contains(const AbsorberId& id) const;
  bool operator==(const EmitterState&) const = default;
};

inline constexpr const char* kOutcomeNone = "none";
inline constexpr const char* kOutcomeDegenerate = "degenerate";

struct TrialLedger {
  std::vector<LedgerStep> steps;
  EmitterState emitter_state;
  std::string final_outcome = kOutcomeNone;

  void add(LedgerStep step) { steps.push_back(std::move(step)); }
};

/// Sets and returns the ledger's emitter state: the absorbers behind `cws`,
/// in order of first appearance.
EmitterState record_emitter_state(TrialLedger& ledger, std::span<const ConfirmationWave> cws);

struct BilkingReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Audits a completed trial against the rules that shaped it:
///  (a) every apparatus change follows, in ledger order and strictly earlier in
///      time, an event satisfying its rule's trigger; no rule whose trigger was
///      satisfied before its time was skipped while the trial was live;
///  (b) exactly one terminal event (one success, "none", or "degenerate"),
///      matching final_outcome;
///  (c) the emitter state equals the set of confirming absorbers and contains
///      the successful absorber; contingent absorbers confirm only after being
///      placed, removed screens and diverted-away absorbers never confirm.
BilkingReport check_bilking(const TrialLedger& ledger, std::span<const ContingencyRule> rules);

}  // namespace tisim
