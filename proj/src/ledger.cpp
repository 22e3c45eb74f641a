#include "tisim/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tisim {

std::string to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::TransactionFailed:
      return "transaction-failed";
    case TriggerKind::TransactionSucceeded:
      return "transaction-succeeded";
    case TriggerKind::CoinOutcome:
      return "coin-outcome";
    case TriggerKind::Always:
      return "always";
  }
  return "?";
}

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::PlaceAbsorber:
      return "place-absorber";
    case ActionKind::DivertChannel:
      return "divert-channel";
    case ActionKind::RemoveScreen:
      return "remove-screen";
  }
  return "?";
}

TriggerKind parse_trigger_kind(std::string_view s) {
  for (auto k : {TriggerKind::TransactionFailed, TriggerKind::TransactionSucceeded, TriggerKind::CoinOutcome,
                 TriggerKind::Always}) {
    if (s == to_string(k)) return k;
  }
  throw SimError("unknown trigger kind '" + std::string(s) + "'");
}

ActionKind parse_action_kind(std::string_view s) {
  for (auto k : {ActionKind::PlaceAbsorber, ActionKind::DivertChannel, ActionKind::RemoveScreen}) {
    if (s == to_string(k)) return k;
  }
  throw SimError("unknown action kind '" + std::string(s) + "'");
}

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::Emitted:
      return "emitted";
    case StepKind::CoinFlipped:
      return "coin-flipped";
    case StepKind::ConfirmationReturned:
      return "confirmation-returned";
    case StepKind::TransactionSucceeded:
      return "transaction-succeeded";
    case StepKind::TransactionFailed:
      return "transaction-failed";
    case StepKind::AbsorberPlaced:
      return "absorber-placed";
    case StepKind::ChannelDiverted:
      return "channel-diverted";
    case StepKind::ScreenRemoved:
      return "screen-removed";
    case StepKind::NoTransaction:
      return "no-transaction";
    case StepKind::Degenerate:
      return "degenerate";
  }
  return "?";
}

std::string EmitterState::label() const {
  std::string out = "OW(";
  for (std::size_t i = 0; i < cw_set.size(); ++i) {
    if (i) out += ',';
    out += cw_set[i];
  }
  return out + ")";
}

bool EmitterState::contains(const AbsorberId& id) const {
  return std::find(cw_set.begin(), cw_set.end(), id) != cw_set.end();
}

EmitterState record_emitter_state(TrialLedger& ledger, std::span<const ConfirmationWave> cws) {
  EmitterState state;
  for (const auto& cw : cws) {
    if (!state.contains(cw.absorber)) state.cw_set.push_back(cw.absorber);
  }
  ledger.emitter_state = state;
  return state;
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= kMathTolerance; }

// Whether some step among steps[0, end) fires `trigger` strictly before `before`.
bool trigger_satisfied(const Trigger& trigger, std::span<const LedgerStep> steps, double before) {
  if (trigger.kind == TriggerKind::Always) return true;
  for (const auto& s : steps) {
    if (!(s.t < before)) continue;
    switch (trigger.kind) {
      case TriggerKind::TransactionFailed:
      case TriggerKind::TransactionSucceeded: {
        const auto wanted = trigger.kind == TriggerKind::TransactionFailed ? StepKind::TransactionFailed
                                                                            : StepKind::TransactionSucceeded;
        if (s.kind == wanted && s.absorber == trigger.absorber && (!trigger.t || same_time(s.t, *trigger.t))) {
          return true;
        }
        break;
      }
      case TriggerKind::CoinOutcome:
        if (s.kind == StepKind::CoinFlipped && s.label == trigger.label) return true;
        break;
      case TriggerKind::Always:
        break;
    }
  }
  return false;
}

StepKind step_for(ActionKind k) {
  switch (k) {
    case ActionKind::PlaceAbsorber:
      return StepKind::AbsorberPlaced;
    case ActionKind::DivertChannel:
      return StepKind::ChannelDiverted;
    case ActionKind::RemoveScreen:
      return StepKind::ScreenRemoved;
  }
  return StepKind::AbsorberPlaced;
}

bool is_apparatus_change(StepKind k) {
  return k == StepKind::AbsorberPlaced || k == StepKind::ChannelDiverted || k == StepKind::ScreenRemoved;
}

}  // namespace

BilkingReport check_bilking(const TrialLedger& ledger, std::span<const ContingencyRule> rules) {
  BilkingReport report;
  auto violation = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const std::span<const LedgerStep> steps(ledger.steps);

  // (b) terminal events.
  std::optional<std::size_t> terminal;
  std::size_t terminal_count = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto k = steps[i].kind;
    if (k == StepKind::TransactionSucceeded || k == StepKind::NoTransaction || k == StepKind::Degenerate) {
      ++terminal_count;
      terminal = i;
    }
  }
  if (terminal_count != 1) {
    violation("expected exactly one terminal event, found " + std::to_string(terminal_count));
  }
  double live_until = INFINITY;
  if (terminal) {
    const auto& end = steps[*terminal];
    const std::string expected = end.kind == StepKind::TransactionSucceeded ? end.label
                                 : end.kind == StepKind::NoTransaction      ? std::string(kOutcomeNone)
                                                                            : std::string(kOutcomeDegenerate);
    if (ledger.final_outcome != expected) {
      violation("final outcome '" + ledger.final_outcome + "' disagrees with terminal event '" + expected + "'");
    }
    if (end.kind == StepKind::TransactionSucceeded) live_until = end.t;
    if (end.kind == StepKind::Degenerate) live_until = -INFINITY;
  }

  // (a) apparatus changes and their triggers.
  std::vector<bool> fired(rules.size(), false);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    if (!is_apparatus_change(s.kind)) continue;
    if (s.rule < 0 || static_cast<std::size_t>(s.rule) >= rules.size()) {
      violation(to_string(s.kind) + " of '" + s.absorber + "' has no rule");
      continue;
    }
    const auto& rule = rules[static_cast<std::size_t>(s.rule)];
    const std::string tag = "rule " + std::to_string(s.rule);
    if (step_for(rule.action.kind) != s.kind || rule.action.absorber != s.absorber) {
      violation(tag + ": ledger step does not match the rule's action");
    }
    if (!same_time(s.t, rule.time)) violation(tag + ": fired at t=" + std::to_string(s.t) + " instead of its time");
    if (fired[static_cast<std::size_t>(s.rule)]) violation(tag + ": fired twice");
    fired[static_cast<std::size_t>(s.rule)] = true;
    if (!trigger_satisfied(rule.trigger, steps.first(i), rule.time)) {
      violation(tag + ": " + to_string(s.kind) + " of '" + s.absorber + "' without a prior " +
                to_string(rule.trigger.kind) + " trigger");
    }
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (fired[r] || rules[r].time > live_until) continue;
    if (trigger_satisfied(rules[r].trigger, steps, rules[r].time)) {
      violation("rule " + std::to_string(r) + ": trigger satisfied but the rule never fired");
    }
  }

  // (c) confirmations, emitter state and the outcome.
  std::set<AbsorberId> contingent;
  for (const auto& rule : rules) {
    if (rule.action.kind != ActionKind::RemoveScreen) contingent.insert(rule.action.absorber);
  }
  std::set<AbsorberId> placed;
  std::set<AbsorberId> removed;
  std::vector<std::pair<ChannelLabel, AbsorberId>> diverted;
  std::set<AbsorberId> confirmed;
  std::set<std::pair<AbsorberId, ChannelLabel>> resolved;
  for (const auto& s : steps) {
    switch (s.kind) {
      case StepKind::AbsorberPlaced:
        placed.insert(s.absorber);
        break;
      case StepKind::ChannelDiverted:
        placed.insert(s.absorber);
        diverted.emplace_back(s.channel, s.absorber);
        break;
      case StepKind::ScreenRemoved:
        removed.insert(s.absorber);
        break;
      case StepKind::ConfirmationReturned:
        if (contingent.contains(s.absorber) && !placed.contains(s.absorber)) {
          violation("'" + s.absorber + "' confirmed before being placed");
        }
        if (removed.contains(s.absorber)) violation("removed screen '" + s.absorber + "' confirmed");
        for (const auto& [channel, target] : diverted) {
          if (s.channel == channel && s.absorber != target) {
            violation("'" + s.absorber + "' confirmed on diverted channel '" + channel + "'");
          }
        }
        confirmed.insert(s.absorber);
        break;
      case StepKind::TransactionSucceeded:
      case StepKind::TransactionFailed:
        if (!confirmed.contains(s.absorber)) {
          violation("transaction with '" + s.absorber + "' resolved without a confirmation");
        }
        if (!resolved.insert({s.absorber, s.channel}).second) violation("transaction with '" + s.absorber + "' resolved twice");
        break;
      default:
        break;
    }
  }
  const std::set<AbsorberId> state(ledger.emitter_state.cw_set.begin(), ledger.emitter_state.cw_set.end());
  if (state != confirmed) {
    violation("emitter state " + ledger.emitter_state.label() + " does not match the confirming absorbers");
  }
  if (terminal && steps[*terminal].kind == StepKind::TransactionSucceeded &&
      !ledger.emitter_state.contains(steps[*terminal].absorber)) {
    violation("outcome at '" + steps[*terminal].absorber + "' but emitter state is " +
              ledger.emitter_state.label());
  }
  return report;
}

}  // namespace tisim
