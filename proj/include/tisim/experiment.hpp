#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tisim/ledger.hpp"
#include "tisim/screen.hpp"
#include "tisim/transaction.hpp"

namespace tisim {

/// Channel value marking a screen: the absorber intercepts every channel and
/// resolves over the bins of the experiment's ScreenModel.
inline constexpr const char* kScreenChannel = "*";

struct AbsorberConfig {
  AbsorberId id;
  ChannelLabel channel;
  SpacetimePoint position;  // absorption event
  bool initially_present = true;

  bool is_screen() const { return channel == kScreenChannel; }
  bool operator==(const AbsorberConfig&) const = default;
};

/// An independent two-outcome subsystem flipped at `flip_time`; `on` links an
/// outcome label to the rule it triggers.
struct CoinConfig {
  std::array<std::string, 2> labels{"up", "down"};
  std::array<double, 2> weights{0.5, 0.5};
  double flip_time = 0.0;
  std::map<std::string, std::size_t> on;

  bool operator==(const CoinConfig&) const = default;
};

struct ExperimentSpec {
  std::string name;
  SpacetimePoint emission;
  StateVector initial_state;
  std::vector<AbsorberConfig> absorbers;
  std::vector<ContingencyRule> rules;
  std::optional<CoinConfig> coin;
  std::optional<ScreenModel> screen;

  bool operator==(const ExperimentSpec&) const = default;
};

enum class EmitterStatePolicy {
  /// Absorbers whose confirmation was generated before the trial resolved.
  Responded,
  /// Additionally every absorber the offer wave would still reach in the final
  /// apparatus configuration after the successful transaction.
  FinalConfiguration,
};

struct TrialOptions {
  ResolutionStrategy strategy = ResolutionStrategy::SequentialContingent;
  bool tie_break = true;
  EmitterStatePolicy emitter_policy = EmitterStatePolicy::Responded;
};

struct TrialResult {
  std::string outcome = kOutcomeNone;  // absorber id, screen bin label, "none" or "degenerate"
  std::optional<std::size_t> bin;      // screen bin index when a screen absorbed
  TrialLedger ledger;
  std::optional<std::string> coin_outcome;
};

/// Invariant violations that do not require running the experiment. Empty
/// means the experiment is structurally sound.
std::vector<std::string> structural_errors(const ExperimentSpec& spec);

/// A structurally valid spec compiled for repeated trials. Offer-wave
/// propagation, confirmations and incipient transactions are computed once.
class TrialRunner {
 public:
  /// Throws SimError listing structural errors.
  explicit TrialRunner(ExperimentSpec spec);

  TrialResult run(const TrialOptions& options, Chooser& chooser) const;

  const ExperimentSpec& spec() const { return spec_; }

  /// True if any rule fires on a transaction outcome of the emitted particle.
  bool has_transaction_contingency() const;

  /// Whether trials can run under this strategy. Fixed-absorber strategies
  /// need a fixed absorber set; the one exception is hierarchy with tie-break
  /// disabled on a spec where every trial ends degenerate (the tie surfaces
  /// before any contingency could apply).
  bool supports(ResolutionStrategy strategy, bool tie_break) const;

  /// |offered + never-offered - 1|, plus any excess of resolved over offered
  /// weight, for a ledger produced by this runner.
  double mass_balance_error(const TrialLedger& ledger) const;

  /// All confirmation waves this apparatus can generate, for auditing.
  std::vector<ConfirmationWave> all_confirmations() const;

  /// The incipient transactions formed with one absorber.
  const std::vector<IncipientTransaction>& transactions(const AbsorberId& id) const;

 private:
  struct Absorber {
    AbsorberConfig config;
    std::vector<std::size_t> channels;  // basis indices covered
    std::vector<ConfirmationWave> cws;
    std::vector<IncipientTransaction> txs;
    double weight = 0.0;
  };
  struct TrialState;

  std::size_t absorber_index(const AbsorberId& id) const;
  void advance(TrialState& st, double t, bool apply_transaction_rules, Chooser& chooser) const;
  std::vector<std::size_t> reached_at(const TrialState& st, double t) const;
  TrialResult run_sequential(const TrialOptions& options, Chooser& chooser) const;
  TrialResult run_fixed(const TrialOptions& options, Chooser& chooser) const;

  ExperimentSpec spec_;
  std::vector<Absorber> absorbers_;
  std::vector<double> event_times_;
  bool transaction_contingent_ = false;
  bool degeneracy_demonstrable_ = false;
};

/// Compiles the experiment and runs a single trial.
TrialResult run_trial(const ExperimentSpec& spec, const TrialOptions& options, Chooser& chooser);

/// Structural checks plus branch-complete coverage: the sequential decision
/// tree is enumerated exactly and any branch that can end with no transaction
/// is reported as "incomplete coverage on branch ...".
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

// Built-in experiments.

enum class ScreenPolicy { AlwaysKeep, AlwaysRemove, CoinFlip };

ExperimentSpec maudlin_spec();
ExperimentSpec miller_spec();
ExperimentSpec dce_spec(ScreenPolicy policy);
ExperimentSpec dce_coinflip_spec();

struct BuiltinExperiment {
  std::string name;
  std::string description;
};

const std::vector<BuiltinExperiment>& builtin_experiments();

/// Throws SimError "unknown experiment '<name>'".
ExperimentSpec builtin_spec(std::string_view name);

}  // namespace tisim
