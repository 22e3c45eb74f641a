#include "tisim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tisim {

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= kMathTolerance; }

bool finite(const SpacetimePoint& p) { return std::isfinite(p.t) && std::isfinite(p.x); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const AbsorberConfig* find_listed(const ExperimentSpec& spec, const AbsorberId& id) {
  for (const auto& a : spec.absorbers) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

bool is_transaction_trigger(TriggerKind k) {
  return k == TriggerKind::TransactionFailed || k == TriggerKind::TransactionSucceeded;
}

// Absorbers brought into play by rules, keyed by id.
std::map<AbsorberId, AbsorberConfig> rule_absorbers(const ExperimentSpec& spec) {
  std::map<AbsorberId, AbsorberConfig> out;
  for (const auto& rule : spec.rules) {
    if (rule.action.kind == ActionKind::RemoveScreen) continue;
    out.try_emplace(rule.action.absorber,
                    AbsorberConfig{rule.action.absorber, rule.action.channel, rule.action.at, false});
  }
  return out;
}

}  // namespace

std::vector<std::string> structural_errors(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  auto error = [&](std::string msg) { errors.push_back(std::move(msg)); };
  const auto& basis = spec.initial_state.basis();

  if (!finite(spec.emission)) error("emission: non-finite coordinates");
  if (basis.empty()) {
    error("state: no channels");
  } else if (std::abs(spec.initial_state.norm_squared() - 1.0) > kMathTolerance) {
    error("state: not normalised");
  }
  for (const auto& label : basis) {
    if (label == kScreenChannel) error("state: '*' is reserved for screens");
  }
  if (spec.screen) {
    try {
      spec.screen->validate();
    } catch (const SimError& e) {
      error(e.what());
    }
  }

  // Absorbers.
  std::set<AbsorberId> ids;
  bool has_screen = false;
  for (const auto& a : spec.absorbers) {
    const std::string tag = "absorber '" + a.id + "'";
    if (a.id.empty()) error("absorber with empty id");
    if (!ids.insert(a.id).second) error(tag + ": duplicate id");
    if (!finite(a.position)) error(tag + ": non-finite position");
    if (!(a.position.t > spec.emission.t)) error(tag + ": absorption at or before emission");
    if (a.is_screen()) {
      has_screen = true;
      if (!spec.screen) error(tag + ": screen absorber without a screen model");
      if (basis.size() != 2) error(tag + ": a screen needs a two-slit state");
    } else if (!spec.initial_state.index_of(a.channel)) {
      error(tag + ": unknown channel '" + a.channel + "'");
    }
  }
  if (spec.screen && !has_screen) error("screen model given but no absorber uses channel '*'");
  for (std::size_t i = 0; i < spec.absorbers.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.absorbers.size(); ++j) {
      const auto& a = spec.absorbers[i];
      const auto& b = spec.absorbers[j];
      if (!a.initially_present || !b.initially_present || !same_time(a.position.t, b.position.t)) continue;
      if (a.channel == b.channel || a.is_screen() || b.is_screen()) {
        const std::string ch = a.is_screen() ? b.channel : a.channel;
        error("two absorbers on channel '" + ch + "' simultaneously present ('" + a.id + "', '" + b.id + "')");
      }
    }
  }

  // Coin.
  if (spec.coin) {
    const auto& c = *spec.coin;
    if (c.labels[0].empty() || c.labels[1].empty() || c.labels[0] == c.labels[1]) {
      error("coin: labels must be two distinct nonempty strings");
    }
    if (c.weights[0] < 0.0 || c.weights[1] < 0.0 || std::abs(c.weights[0] + c.weights[1] - 1.0) > kMathTolerance) {
      error("coin: weights must be nonnegative and sum to 1");
    }
    if (!std::isfinite(c.flip_time) || !(c.flip_time > spec.emission.t)) error("coin: flip time must follow emission");
    for (const auto& [label, idx] : c.on) {
      if (label != c.labels[0] && label != c.labels[1]) error("coin: 'on' names unknown outcome '" + label + "'");
      if (idx >= spec.rules.size()) {
        error("coin: 'on' references missing rule " + std::to_string(idx));
      } else if (spec.rules[idx].trigger.kind != TriggerKind::CoinOutcome || spec.rules[idx].trigger.label != label) {
        error("coin: rule " + std::to_string(idx) + " is not triggered by coin outcome '" + label + "'");
      }
    }
  }

  // Rules.
  std::map<AbsorberId, AbsorberConfig> defined;
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    const auto& rule = spec.rules[r];
    const std::string tag = "rule " + std::to_string(r);
    if (!std::isfinite(rule.time)) {
      error(tag + ": non-finite time");
      continue;
    }

    std::optional<double> trigger_time;
    switch (rule.trigger.kind) {
      case TriggerKind::Always:
        trigger_time = spec.emission.t;
        break;
      case TriggerKind::CoinOutcome:
        if (!spec.coin) {
          error(tag + ": coin-outcome trigger without a coin");
        } else {
          trigger_time = spec.coin->flip_time;
          if (rule.trigger.label != spec.coin->labels[0] && rule.trigger.label != spec.coin->labels[1]) {
            error(tag + ": unknown coin outcome '" + rule.trigger.label + "'");
          }
          const auto it = spec.coin->on.find(rule.trigger.label);
          if (it == spec.coin->on.end() || it->second != r) {
            error(tag + ": coin-outcome trigger not linked in coin.on");
          }
        }
        break;
      case TriggerKind::TransactionFailed:
      case TriggerKind::TransactionSucceeded: {
        const AbsorberConfig* listed = find_listed(spec, rule.trigger.absorber);
        const auto from_rules = rule_absorbers(spec);
        const auto it = from_rules.find(rule.trigger.absorber);
        if (!listed && it == from_rules.end()) {
          error(tag + ": trigger names unknown absorber '" + rule.trigger.absorber + "'");
        } else {
          trigger_time = rule.trigger.t ? *rule.trigger.t : (listed ? listed->position.t : it->second.position.t);
        }
        if (rule.trigger.t && !std::isfinite(*rule.trigger.t)) error(tag + ": non-finite trigger time");
        break;
      }
    }
    if (trigger_time && !(rule.time > *trigger_time)) {
      error(tag + ": retro-placement (action time " + fmt(rule.time) + " <= trigger time " + fmt(*trigger_time) + ")");
    }

    const auto& act = rule.action;
    if (act.kind == ActionKind::RemoveScreen) {
      const AbsorberConfig* s = find_listed(spec, act.absorber);
      if (!s || !s->is_screen()) error(tag + ": remove-screen names no screen absorber '" + act.absorber + "'");
      if (!finite(act.at)) error(tag + ": non-finite action point");
      continue;
    }
    if (act.absorber.empty()) {
      error(tag + ": action needs an absorber id");
      continue;
    }
    if (!spec.initial_state.index_of(act.channel)) error(tag + ": unknown channel '" + act.channel + "'");
    if (!finite(act.at) || !(act.at.t >= rule.time)) {
      error(tag + ": absorber '" + act.absorber + "' absorbs before the rule acts");
    }
    const AbsorberConfig candidate{act.absorber, act.channel, act.at, false};
    if (const AbsorberConfig* listed = find_listed(spec, act.absorber)) {
      if (listed->initially_present) {
        error(tag + ": absorber '" + act.absorber + "' is already present");
      } else if (listed->channel != act.channel || !(listed->position == act.at)) {
        error(tag + ": conflicting definition of absorber '" + act.absorber + "'");
      }
    }
    const auto [it, inserted] = defined.try_emplace(act.absorber, candidate);
    if (!inserted && !(it->second == candidate)) error(tag + ": conflicting definition of absorber '" + act.absorber + "'");
  }
  return errors;
}

// ---------------------------------------------------------------------------

struct TrialRunner::TrialState {
  TrialLedger ledger;
  std::vector<char> present;
  std::vector<char> consumed;    // per basis channel
  std::vector<int> diverted_to;  // per basis channel, -1 when not diverted
  std::vector<char> fired;       // per rule
  std::vector<std::pair<std::size_t, double>> failed;
  std::vector<std::pair<std::size_t, double>> succeeded;
  std::vector<std::size_t> confirmed;  // response order
  std::optional<std::size_t> coin;
  double failed_mass = 0.0;
};

TrialRunner::TrialRunner(ExperimentSpec spec) : spec_(std::move(spec)) {
  const auto errors = structural_errors(spec_);
  if (!errors.empty()) {
    std::string msg = "invalid experiment '" + spec_.name + "':";
    for (const auto& e : errors) msg += "\n  " + e;
    throw SimError(msg);
  }

  std::vector<AbsorberConfig> configs = spec_.absorbers;
  for (const auto& [id, cfg] : rule_absorbers(spec_)) {
    if (!find_listed(spec_, id)) configs.push_back(cfg);
  }

  for (auto& cfg : configs) {
    Absorber a;
    a.config = cfg;
    if (cfg.is_screen()) {
      const auto& amps = spec_.initial_state.amplitudes();
      const auto bins = propagate_to_screen(*spec_.screen, amps[0], amps[1]);
      std::vector<ChannelLabel> labels;
      std::map<ChannelLabel, std::optional<AbsorberId>> targets;
      for (std::size_t k = 0; k < bins.size(); ++k) {
        labels.push_back(spec_.screen->bin_label(k));
        targets.emplace(labels.back(), cfg.id);
      }
      const OfferWave ow(spec_.emission, StateVector(std::move(labels), bins), std::move(targets));
      a.cws = respond_all(ow, cfg.id, cfg.position);
      for (const auto& cw : a.cws) a.txs.push_back(form_incipient(ow, cw, spec_.emission, cfg.position));
      a.channels = {0, 1};
    } else {
      std::map<ChannelLabel, std::optional<AbsorberId>> targets{{cfg.channel, cfg.id}};
      const OfferWave ow(spec_.emission, spec_.initial_state, std::move(targets));
      a.cws = {respond(ow, cfg.id, cfg.position)};
      a.txs = {form_incipient(ow, a.cws.front(), spec_.emission, cfg.position)};
      a.channels = {*spec_.initial_state.index_of(cfg.channel)};
    }
    for (const auto& tx : a.txs) a.weight += tx.weight;
    absorbers_.push_back(std::move(a));
  }

  std::vector<double> times;
  for (const auto& a : absorbers_) times.push_back(a.config.position.t);
  for (const auto& r : spec_.rules) times.push_back(r.time);
  if (spec_.coin) times.push_back(spec_.coin->flip_time);
  std::sort(times.begin(), times.end());
  for (double t : times) {
    if (event_times_.empty() || !same_time(event_times_.back(), t)) event_times_.push_back(t);
  }
  for (const auto& r : spec_.rules) transaction_contingent_ |= is_transaction_trigger(r.trigger.kind);

  if (transaction_contingent_) {
    // Hierarchy without tie-break can still run a contingent experiment when
    // every trial ends degenerate before any contingency could matter.
    const TrialOptions probe{ResolutionStrategy::Hierarchy, false, EmitterStatePolicy::Responded};
    bool all_degenerate = true;
    degeneracy_demonstrable_ = true;
    try {
      DecisionTreeEnumerator enumerator(4096);
      enumerator.enumerate(
          [&](Chooser& c) { all_degenerate &= run_fixed(probe, c).outcome == kOutcomeDegenerate; },
          [](double, std::span<const std::size_t>) {});
    } catch (const SimError&) {
      all_degenerate = false;
    }
    degeneracy_demonstrable_ = all_degenerate;
  }
}

bool TrialRunner::has_transaction_contingency() const { return transaction_contingent_; }

bool TrialRunner::supports(ResolutionStrategy strategy, bool tie_break) const {
  if (strategy == ResolutionStrategy::SequentialContingent || !transaction_contingent_) return true;
  return strategy == ResolutionStrategy::Hierarchy && !tie_break && degeneracy_demonstrable_;
}

std::size_t TrialRunner::absorber_index(const AbsorberId& id) const {
  for (std::size_t i = 0; i < absorbers_.size(); ++i) {
    if (absorbers_[i].config.id == id) return i;
  }
  throw SimError("unknown absorber '" + id + "'");
}

const std::vector<IncipientTransaction>& TrialRunner::transactions(const AbsorberId& id) const {
  return absorbers_[absorber_index(id)].txs;
}

std::vector<ConfirmationWave> TrialRunner::all_confirmations() const {
  std::vector<ConfirmationWave> out;
  for (const auto& a : absorbers_) out.insert(out.end(), a.cws.begin(), a.cws.end());
  return out;
}

void TrialRunner::advance(TrialState& st, double t, bool apply_transaction_rules, Chooser& chooser) const {
  if (spec_.coin && same_time(spec_.coin->flip_time, t)) {
    const auto& c = *spec_.coin;
    const std::size_t pick = chooser.choose(c.weights);
    st.coin = pick;
    LedgerStep s;
    s.kind = StepKind::CoinFlipped;
    s.t = c.flip_time;
    s.label = c.labels[pick];
    st.ledger.add(std::move(s));
  }

  for (std::size_t r = 0; r < spec_.rules.size(); ++r) {
    const auto& rule = spec_.rules[r];
    if (!same_time(rule.time, t) || st.fired[r]) continue;
    const auto& trig = rule.trigger;
    bool fire = false;
    switch (trig.kind) {
      case TriggerKind::Always:
        fire = true;
        break;
      case TriggerKind::CoinOutcome:
        fire = st.coin && spec_.coin->labels[*st.coin] == trig.label;
        break;
      case TriggerKind::TransactionFailed:
      case TriggerKind::TransactionSucceeded: {
        if (!apply_transaction_rules) break;
        const auto& events = trig.kind == TriggerKind::TransactionFailed ? st.failed : st.succeeded;
        for (const auto& [idx, when] : events) {
          if (absorbers_[idx].config.id == trig.absorber && when < rule.time && (!trig.t || same_time(when, *trig.t))) {
            fire = true;
          }
        }
        break;
      }
    }
    if (!fire) continue;

    st.fired[r] = 1;
    LedgerStep s;
    s.t = rule.time;
    s.rule = static_cast<int>(r);
    s.absorber = rule.action.absorber;
    s.channel = rule.action.channel;
    const std::size_t j = absorber_index(rule.action.absorber);
    switch (rule.action.kind) {
      case ActionKind::PlaceAbsorber:
        s.kind = StepKind::AbsorberPlaced;
        st.present[j] = 1;
        break;
      case ActionKind::DivertChannel:
        s.kind = StepKind::ChannelDiverted;
        st.present[j] = 1;
        st.diverted_to[absorbers_[j].channels.front()] = static_cast<int>(j);
        break;
      case ActionKind::RemoveScreen:
        s.kind = StepKind::ScreenRemoved;
        st.present[j] = 0;
        break;
    }
    st.ledger.add(std::move(s));
  }
}

std::vector<std::size_t> TrialRunner::reached_at(const TrialState& st, double t) const {
  std::vector<std::size_t> reached;
  std::vector<int> owner(spec_.initial_state.dimension(), -1);
  for (std::size_t j = 0; j < absorbers_.size(); ++j) {
    const auto& a = absorbers_[j];
    if (!st.present[j] || !same_time(a.config.position.t, t)) continue;
    std::size_t open = 0;
    for (const auto c : a.channels) {
      if (!st.consumed[c] && (st.diverted_to[c] < 0 || st.diverted_to[c] == static_cast<int>(j))) ++open;
    }
    if (open == 0) continue;
    if (a.config.is_screen() && open != a.channels.size()) {
      throw SimError("screen '" + a.config.id + "' reached by a partial offer wave");
    }
    for (const auto c : a.channels) {
      if (owner[c] >= 0) {
        throw SimError("two absorbers on channel '" + spec_.initial_state.basis()[c] + "' simultaneously present ('" +
                       absorbers_[static_cast<std::size_t>(owner[c])].config.id + "', '" + a.config.id + "')");
      }
      owner[c] = static_cast<int>(j);
    }
    reached.push_back(j);
  }
  return reached;
}

namespace {

LedgerStep confirmation_step(const AbsorberConfig& cfg, double weight) {
  LedgerStep s;
  s.kind = StepKind::ConfirmationReturned;
  s.t = cfg.position.t;
  s.absorber = cfg.id;
  s.channel = cfg.channel;
  s.weight = weight;
  return s;
}

LedgerStep resolution_step(StepKind kind, const AbsorberConfig& cfg, const ChannelLabel& channel, double weight) {
  LedgerStep s;
  s.kind = kind;
  s.t = cfg.position.t;
  s.absorber = cfg.id;
  s.channel = channel;
  s.weight = weight;
  return s;
}

}  // namespace

TrialResult TrialRunner::run(const TrialOptions& options, Chooser& chooser) const {
  if (options.strategy == ResolutionStrategy::SequentialContingent) return run_sequential(options, chooser);
  return run_fixed(options, chooser);
}

TrialResult TrialRunner::run_sequential(const TrialOptions& options, Chooser& chooser) const {
  TrialState st;
  st.ledger.steps.reserve(8);
  st.present.resize(absorbers_.size());
  for (std::size_t j = 0; j < absorbers_.size(); ++j) st.present[j] = absorbers_[j].config.initially_present;
  st.consumed.assign(spec_.initial_state.dimension(), 0);
  st.diverted_to.assign(spec_.initial_state.dimension(), -1);
  st.fired.assign(spec_.rules.size(), 0);
  st.ledger.add({StepKind::Emitted, spec_.emission.t, {}, {}, {}, 0.0, -1});

  TrialResult result;
  bool done = false;
  std::vector<IncipientTransaction> scratch;
  std::vector<std::size_t> owner_of;  // scratch index -> absorber
  std::vector<std::size_t> offset_of(absorbers_.size(), 0);

  for (const double t : event_times_) {
    if (!done) advance(st, t, true, chooser);
    const auto reached = reached_at(st, t);
    if (reached.empty()) continue;

    for (const auto j : reached) {
      st.ledger.add(confirmation_step(absorbers_[j].config, absorbers_[j].weight));
      st.confirmed.push_back(j);
      for (const auto c : absorbers_[j].channels) st.consumed[c] = 1;
    }
    if (done) continue;  // only reached here under FinalConfiguration

    std::span<const IncipientTransaction> txs;
    owner_of.clear();
    if (reached.size() == 1) {
      txs = absorbers_[reached.front()].txs;
    } else {
      scratch.clear();
      for (const auto j : reached) {
        offset_of[j] = scratch.size();
        scratch.insert(scratch.end(), absorbers_[j].txs.begin(), absorbers_[j].txs.end());
        owner_of.insert(owner_of.end(), absorbers_[j].txs.size(), j);
      }
      txs = scratch;
    }

    const auto pick = resolve_step(txs, st.failed_mass, chooser);
    const std::size_t winner = pick ? (owner_of.empty() ? reached.front() : owner_of[*pick]) : absorbers_.size();
    for (const auto j : reached) {
      if (j == winner) continue;
      const auto& cfg = absorbers_[j].config;
      st.ledger.add(resolution_step(StepKind::TransactionFailed, cfg, cfg.channel, absorbers_[j].weight));
      st.failed.emplace_back(j, t);
      st.failed_mass += absorbers_[j].weight;
    }
    if (pick) {
      const auto& tx = txs[*pick];
      const auto& cfg = absorbers_[winner].config;
      LedgerStep s = resolution_step(StepKind::TransactionSucceeded, cfg, tx.channel, tx.weight);
      if (cfg.is_screen()) {
        result.bin = *pick - (owner_of.empty() ? 0 : offset_of[winner]);
        s.label = tx.channel;
      } else {
        s.label = cfg.id;
      }
      result.outcome = s.label;
      st.ledger.add(std::move(s));
      st.succeeded.emplace_back(winner, t);
      done = true;
      if (options.emitter_policy == EmitterStatePolicy::Responded) break;
    }
  }

  if (!done) {
    const double end = event_times_.empty() ? spec_.emission.t : event_times_.back();
    st.ledger.add({StepKind::NoTransaction, end, {}, {}, {}, 0.0, -1});
    result.outcome = kOutcomeNone;
  }

  std::vector<ConfirmationWave> reps;
  for (const auto j : st.confirmed) reps.push_back(absorbers_[j].cws.front());
  record_emitter_state(st.ledger, reps);
  st.ledger.final_outcome = result.outcome;
  if (st.coin) result.coin_outcome = spec_.coin->labels[*st.coin];
  result.ledger = std::move(st.ledger);
  return result;
}

TrialResult TrialRunner::run_fixed(const TrialOptions& options, Chooser& chooser) const {
  const bool hierarchy = options.strategy == ResolutionStrategy::Hierarchy;
  if (!supports(options.strategy, options.tie_break)) throw SimError("strategy requires fixed absorber set");

  TrialState st;
  st.ledger.steps.reserve(8);
  st.present.resize(absorbers_.size());
  for (std::size_t j = 0; j < absorbers_.size(); ++j) st.present[j] = absorbers_[j].config.initially_present;
  st.consumed.assign(spec_.initial_state.dimension(), 0);
  st.diverted_to.assign(spec_.initial_state.dimension(), -1);
  st.fired.assign(spec_.rules.size(), 0);
  st.ledger.add({StepKind::Emitted, spec_.emission.t, {}, {}, {}, 0.0, -1});

  // Walk the apparatus timeline without resolving anything: every absorber the
  // offer wave reaches returns its confirmation before pseudotime resolution.
  std::vector<std::size_t> reached_all;
  for (const double t : event_times_) {
    advance(st, t, false, chooser);
    for (const auto j : reached_at(st, t)) {
      st.ledger.add(confirmation_step(absorbers_[j].config, absorbers_[j].weight));
      st.confirmed.push_back(j);
      reached_all.push_back(j);
      for (const auto c : absorbers_[j].channels) st.consumed[c] = 1;
    }
  }

  std::vector<IncipientTransaction> scratch;
  std::vector<std::size_t> owner_of;
  std::vector<std::size_t> offset_of(absorbers_.size(), 0);
  std::span<const IncipientTransaction> txs;
  if (reached_all.size() == 1) {
    txs = absorbers_[reached_all.front()].txs;
    owner_of.assign(txs.size(), reached_all.front());
  } else {
    for (const auto j : reached_all) {
      offset_of[j] = scratch.size();
      scratch.insert(scratch.end(), absorbers_[j].txs.begin(), absorbers_[j].txs.end());
      owner_of.insert(owner_of.end(), absorbers_[j].txs.size(), j);
    }
    txs = scratch;
  }

  TrialResult result;
  std::optional<std::size_t> pick;
  if (hierarchy) {
    const auto h = resolve_hierarchy(txs, chooser, {options.tie_break});
    if (h.degenerate) {
      st.ledger.add({StepKind::Degenerate, spec_.emission.t, {}, {}, {}, 0.0, -1});
      result.outcome = kOutcomeDegenerate;
    } else {
      if (transaction_contingent_) throw SimError("strategy requires fixed absorber set");
      for (const auto i : h.rejected) {
        const auto& cfg = absorbers_[owner_of[i]].config;
        st.ledger.add(resolution_step(StepKind::TransactionFailed, cfg, txs[i].channel, txs[i].weight));
      }
      pick = h.accepted;
    }
  } else {
    pick = resolve_global(txs, chooser);
    for (const auto j : reached_all) {
      if (j == owner_of[*pick]) continue;
      const auto& cfg = absorbers_[j].config;
      st.ledger.add(resolution_step(StepKind::TransactionFailed, cfg, cfg.channel, absorbers_[j].weight));
    }
  }

  if (pick) {
    const std::size_t winner = owner_of[*pick];
    const auto& cfg = absorbers_[winner].config;
    const auto& tx = txs[*pick];
    LedgerStep s = resolution_step(StepKind::TransactionSucceeded, cfg, tx.channel, tx.weight);
    s.label = cfg.is_screen() ? tx.channel : cfg.id;
    if (cfg.is_screen()) result.bin = *pick - offset_of[winner];
    result.outcome = s.label;
    st.ledger.add(std::move(s));
  }

  std::vector<ConfirmationWave> reps;
  for (const auto j : st.confirmed) reps.push_back(absorbers_[j].cws.front());
  record_emitter_state(st.ledger, reps);
  st.ledger.final_outcome = result.outcome;
  if (st.coin) result.coin_outcome = spec_.coin->labels[*st.coin];
  result.ledger = std::move(st.ledger);
  return result;
}

double TrialRunner::mass_balance_error(const TrialLedger& ledger) const {
  const auto& basis = spec_.initial_state.basis();
  const auto& amps = spec_.initial_state.amplitudes();
  std::vector<char> covered(basis.size(), 0);
  double offered = 0.0;
  double resolved = 0.0;
  for (const auto& s : ledger.steps) {
    if (s.kind == StepKind::ConfirmationReturned) {
      offered += s.weight;
      if (s.channel == kScreenChannel) {
        std::fill(covered.begin(), covered.end(), 1);
      } else if (const auto idx = spec_.initial_state.index_of(s.channel)) {
        covered[*idx] = 1;
      }
    } else if (s.kind == StepKind::TransactionFailed || s.kind == StepKind::TransactionSucceeded) {
      resolved += s.weight;
    }
  }
  double never_offered = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (!covered[i]) never_offered += std::norm(amps[i]);
  }
  return std::max(std::abs(offered + never_offered - 1.0), resolved - offered);
}

TrialResult run_trial(const ExperimentSpec& spec, const TrialOptions& options, Chooser& chooser) {
  const TrialRunner runner(spec);
  return runner.run(options, chooser);
}

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  auto errors = structural_errors(spec);
  if (!errors.empty()) return errors;

  const TrialRunner runner(spec);
  const TrialOptions opts{ResolutionStrategy::SequentialContingent, true, EmitterStatePolicy::Responded};
  std::optional<std::string> loose_end;  // description of the current leaf if it ended with no transaction
  DecisionTreeEnumerator enumerator;
  try {
    enumerator.enumerate(
        [&](Chooser& c) {
          loose_end.reset();
          const TrialResult r = runner.run(opts, c);
          if (r.outcome != kOutcomeNone) return;
          std::string path;
          for (const auto& s : r.ledger.steps) {
            std::string item;
            if (s.kind == StepKind::TransactionFailed) item = s.absorber + " failed";
            if (s.kind == StepKind::CoinFlipped) item = "coin " + s.label;
            if (s.kind == StepKind::AbsorberPlaced || s.kind == StepKind::ChannelDiverted ||
                s.kind == StepKind::ScreenRemoved) {
              item = "rule " + std::to_string(s.rule);
            }
            if (item.empty()) continue;
            if (!path.empty()) path += ", ";
            path += item + " @t=" + fmt(s.t);
          }
          loose_end = path;
        },
        [&](double p, std::span<const std::size_t>) {
          if (loose_end && p > kWeightTolerance) {
            errors.push_back("incomplete coverage on branch [" + *loose_end + "] (probability " + fmt(p) + ")");
          }
        });
  } catch (const SimError& e) {
    errors.push_back(e.what());
  }
  return errors;
}

// ---------------------------------------------------------------------------

namespace {

StateVector even_superposition(std::vector<ChannelLabel> labels) {
  const double a = 1.0 / std::sqrt(2.0);
  return StateVector(std::move(labels), {a, a});
}

ExperimentSpec dce_base(std::string name) {
  ExperimentSpec s;
  s.name = std::move(name);
  s.emission = {0.0, 0.0};
  // Post-barrier state: runs blocked at the slit plane are not simulated.
  s.initial_state = even_superposition({"slitA", "slitB"});
  s.absorbers = {
      {"S", kScreenChannel, {2.0, 2.0}, true},
      {"TA", "slitA", {3.0, -3.0}, true},
      {"TB", "slitB", {3.0, 3.0}, true},
  };
  s.screen = ScreenModel::default_geometry();
  return s;
}

}  // namespace

ExperimentSpec maudlin_spec() {
  ExperimentSpec s;
  s.name = "maudlin";
  s.emission = {0.0, 0.0};
  s.initial_state = even_superposition({"R", "L"});
  // Slow massive particle: A on the right at t=1; B swings round to the left
  // beam only if the transaction with A fails.
  s.absorbers = {
      {"A", "R", {1.0, 0.5}, true},
      {"B", "L", {2.0, -1.0}, false},
  };
  ContingencyRule swing;
  swing.trigger = {TriggerKind::TransactionFailed, "A", "", 1.0};
  swing.action = {ActionKind::PlaceAbsorber, "B", "L", {2.0, -1.0}};
  swing.time = 1.5;
  s.rules = {swing};
  return s;
}

ExperimentSpec miller_spec() {
  ExperimentSpec s;
  s.name = "miller";
  s.emission = {0.0, 0.0};
  s.initial_state = even_superposition({"A", "B"});
  // Photons only: every leg is light-like. Arm B is trapped until t=3.
  s.absorbers = {
      {"A", "A", {1.0, 1.0}, true},
      {"B", "B", {3.0, -3.0}, true},
      {"B_prime", "B", {3.0, -3.0}, false},
  };
  ContingencyRule mirror;
  mirror.trigger = {TriggerKind::TransactionFailed, "A", "", 1.0};
  mirror.action = {ActionKind::DivertChannel, "B_prime", "B", {3.0, -3.0}};
  mirror.time = 2.0;
  s.rules = {mirror};
  return s;
}

ExperimentSpec dce_spec(ScreenPolicy policy) {
  switch (policy) {
    case ScreenPolicy::AlwaysKeep:
      return dce_base("dce-keep");
    case ScreenPolicy::AlwaysRemove: {
      ExperimentSpec s = dce_base("dce-remove");
      ContingencyRule removal;
      removal.trigger = {TriggerKind::Always, "", "", std::nullopt};
      removal.action = {ActionKind::RemoveScreen, "S", "", {1.5, 0.0}};
      removal.time = 1.5;
      s.rules = {removal};
      return s;
    }
    case ScreenPolicy::CoinFlip: {
      ExperimentSpec s = dce_base("dce-coinflip");
      CoinConfig coin;
      coin.labels = {"up", "down"};
      coin.weights = {0.5, 0.5};
      coin.flip_time = 1.5;
      coin.on = {{"up", 0}};
      s.coin = coin;
      // The removal has to follow the flip strictly; it still precedes the
      // photon's arrival at the screen.
      ContingencyRule removal;
      removal.trigger = {TriggerKind::CoinOutcome, "", "up", std::nullopt};
      removal.action = {ActionKind::RemoveScreen, "S", "", {1.75, 0.0}};
      removal.time = 1.75;
      s.rules = {removal};
      return s;
    }
  }
  throw SimError("unknown screen policy");
}

ExperimentSpec dce_coinflip_spec() { return dce_spec(ScreenPolicy::CoinFlip); }

const std::vector<BuiltinExperiment>& builtin_experiments() {
  static const std::vector<BuiltinExperiment> list{
      {"maudlin", "Maudlin contingent absorber: B swings into the left beam only if detection at A fails"},
      {"miller", "Miller trapped beam: a mirror diverts arm B to B_prime if detection at A fails (photons)"},
      {"dce-keep", "Wheeler delayed choice, screen always kept: interference pattern on the screen"},
      {"dce-remove", "Wheeler delayed choice, screen always removed after slit passage: which-slit telescopes"},
      {"dce-coinflip", "Wheeler delayed choice, screen removed when a Stern-Gerlach coin reads 'up' at t=1.5"},
  };
  return list;
}

ExperimentSpec builtin_spec(std::string_view name) {
  if (name == "maudlin") return maudlin_spec();
  if (name == "miller") return miller_spec();
  if (name == "dce-keep") return dce_spec(ScreenPolicy::AlwaysKeep);
  if (name == "dce-remove") return dce_spec(ScreenPolicy::AlwaysRemove);
  if (name == "dce-coinflip") return dce_coinflip_spec();
  throw SimError("unknown experiment '" + std::string(name) + "'");
}

}  // namespace tisim
