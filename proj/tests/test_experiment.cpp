#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "test_util.hpp"
#include "tisim/error.hpp"
#include "tisim/experiment.hpp"

using namespace tisim;

namespace {

bool any_contains(const std::vector<std::string>& v, const std::string& fragment) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(fragment) != std::string::npos; });
}

std::map<std::string, double> exact_outcomes(const ExperimentSpec& spec, const TrialOptions& opts) {
  const TrialRunner runner(spec);
  DecisionTreeEnumerator e;
  std::map<std::string, double> p;
  for (const auto& leaf : e.branches<std::string>([&](Chooser& c) { return runner.run(opts, c).outcome; })) {
    p[leaf.result] += leaf.probability;
  }
  return p;
}

// n fixed absorbers, one per channel, at distinct spacetime points.
ExperimentSpec fixed_spec(const StateVector& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(1.0, 10.0);
  ExperimentSpec spec;
  spec.name = "fixed";
  spec.initial_state = s;
  for (const auto& c : s.basis()) spec.absorbers.push_back({"D" + c, c, {u(rng), u(rng) - 5.0}, true});
  return spec;
}

const TrialOptions kSequential{ResolutionStrategy::SequentialContingent, true, EmitterStatePolicy::Responded};
const TrialOptions kGlobal{ResolutionStrategy::GlobalEcho, true, EmitterStatePolicy::Responded};
const TrialOptions kHierarchy{ResolutionStrategy::Hierarchy, true, EmitterStatePolicy::Responded};

}  // namespace

TEST_CASE("built-in experiments are listed and valid") {
  std::vector<std::string> names;
  for (const auto& e : builtin_experiments()) {
    names.push_back(e.name);
    CHECK_FALSE(e.description.empty());
    CHECK(validate_spec(builtin_spec(e.name)).empty());
    CHECK(builtin_spec(e.name).name == e.name);
  }
  CHECK(names == std::vector<std::string>{"maudlin", "miller", "dce-keep", "dce-remove", "dce-coinflip"});
  CHECK_THROWS_WITH_AS(builtin_spec("nope"), "unknown experiment 'nope'", SimError);
}

TEST_CASE("Maudlin: only A's transaction exists at emission, with weight one half") {
  const TrialRunner runner(maudlin_spec());
  const auto& a = runner.transactions("A");
  REQUIRE(a.size() == 1);
  CHECK(std::abs(a[0].weight - 0.5) < kMathTolerance);
  CHECK(runner.has_transaction_contingency());
  const auto cws = runner.all_confirmations();
  for (const auto& cw : cws) CHECK(std::abs(cw.amp - 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("Maudlin trials") {
  const auto spec = maudlin_spec();
  testutil::ScriptedChooser win({0});
  const auto a = run_trial(spec, kSequential, win);
  CHECK(a.outcome == "A");
  CHECK(a.ledger.emitter_state.label() == "OW(A)");
  CHECK(std::none_of(a.ledger.steps.begin(), a.ledger.steps.end(),
                     [](const LedgerStep& s) { return s.absorber == "B"; }));

  testutil::ScriptedChooser lose({1});
  const auto b = run_trial(spec, kSequential, lose);
  CHECK(b.outcome == "B");
  CHECK(b.ledger.emitter_state.label() == "OW(A,B)");
  const auto placed = std::find_if(b.ledger.steps.begin(), b.ledger.steps.end(),
                                   [](const LedgerStep& s) { return s.kind == StepKind::AbsorberPlaced; });
  const auto failed = std::find_if(b.ledger.steps.begin(), b.ledger.steps.end(),
                                   [](const LedgerStep& s) { return s.kind == StepKind::TransactionFailed; });
  REQUIRE(placed != b.ledger.steps.end());
  REQUIRE(failed != b.ledger.steps.end());
  CHECK(failed < placed);
  CHECK(failed->absorber == "A");

  const auto p = exact_outcomes(spec, kSequential);
  CHECK(p.size() == 2);
  CHECK(std::abs(p.at("A") - 0.5) < kMathTolerance);
  CHECK(std::abs(p.at("B") - 0.5) < kMathTolerance);
}

TEST_CASE("Maudlin rejects fixed-absorber strategies") {
  RandomStream s(1);
  CHECK_THROWS_WITH_AS(run_trial(maudlin_spec(), kGlobal, s), "strategy requires fixed absorber set", SimError);
  CHECK_THROWS_WITH_AS(run_trial(maudlin_spec(), kHierarchy, s), "strategy requires fixed absorber set", SimError);
}

TEST_CASE("Miller: every leg is null and B is never detected") {
  const TrialRunner runner(miller_spec());
  for (const char* id : {"A", "B", "B_prime"}) {
    for (const auto& tx : runner.transactions(id)) CHECK(tx.interval2 == 0.0);
  }
  const auto p = exact_outcomes(miller_spec(), kSequential);
  CHECK(std::abs(p.at("A") - 0.5) < kMathTolerance);
  CHECK(std::abs(p.at("B_prime") - 0.5) < kMathTolerance);
  CHECK_FALSE(p.contains("B"));

  testutil::ScriptedChooser lose({1});
  const auto r = runner.run(kSequential, lose);
  CHECK(r.outcome == "B_prime");
  const auto& steps = r.ledger.steps;
  const auto divert = std::find_if(steps.begin(), steps.end(),
                                   [](const LedgerStep& s) { return s.kind == StepKind::ChannelDiverted; });
  const auto absorbed = std::find_if(steps.begin(), steps.end(), [](const LedgerStep& s) {
    return s.kind == StepKind::ConfirmationReturned && s.absorber == "B_prime";
  });
  REQUIRE(divert != steps.end());
  REQUIRE(absorbed != steps.end());
  CHECK(divert < absorbed);
}

TEST_CASE("Miller under hierarchy without tie-break is degenerate") {
  const TrialOptions o{ResolutionStrategy::Hierarchy, false, EmitterStatePolicy::Responded};
  const auto p = exact_outcomes(miller_spec(), o);
  REQUIRE(p.size() == 1);
  CHECK(p.at(kOutcomeDegenerate) == 1.0);
  RandomStream s(2);
  const auto r = run_trial(miller_spec(), o, s);
  CHECK(check_bilking(r.ledger, miller_spec().rules).ok());
  CHECK_THROWS_AS(run_trial(miller_spec(), kHierarchy, s), SimError);
}

TEST_CASE("strategy admissibility") {
  const TrialRunner maudlin(maudlin_spec());
  CHECK(maudlin.supports(ResolutionStrategy::SequentialContingent, true));
  CHECK_FALSE(maudlin.supports(ResolutionStrategy::GlobalEcho, true));
  CHECK_FALSE(maudlin.supports(ResolutionStrategy::Hierarchy, true));
  // A is nearer than B, so there is no tie to surface.
  CHECK_FALSE(maudlin.supports(ResolutionStrategy::Hierarchy, false));
  RandomStream s(1);
  const TrialOptions untied{ResolutionStrategy::Hierarchy, false, EmitterStatePolicy::Responded};
  CHECK_THROWS_WITH_AS(run_trial(maudlin_spec(), untied, s), "strategy requires fixed absorber set", SimError);

  const TrialRunner miller(miller_spec());
  CHECK(miller.supports(ResolutionStrategy::Hierarchy, false));
  CHECK_FALSE(miller.supports(ResolutionStrategy::Hierarchy, true));
  CHECK_FALSE(miller.supports(ResolutionStrategy::GlobalEcho, false));

  const TrialRunner keep(dce_spec(ScreenPolicy::AlwaysKeep));
  for (const auto st : {ResolutionStrategy::SequentialContingent, ResolutionStrategy::GlobalEcho,
                        ResolutionStrategy::Hierarchy}) {
    CHECK(keep.supports(st, true));
    CHECK(keep.supports(st, false));
  }
}

TEST_CASE("DCE variants accept every strategy") {
  for (const auto policy : {ScreenPolicy::AlwaysKeep, ScreenPolicy::AlwaysRemove, ScreenPolicy::CoinFlip}) {
    const auto spec = dce_spec(policy);
    CHECK_FALSE(TrialRunner(spec).has_transaction_contingency());
    for (const auto& o : {kSequential, kGlobal, kHierarchy}) {
      RandomStream s(4);
      const auto r = run_trial(spec, o, s);
      CHECK(r.outcome != kOutcomeNone);
      CHECK(check_bilking(r.ledger, spec.rules).ok());
    }
  }
}

TEST_CASE("DCE exact distributions agree across strategies") {
  const auto keep = dce_spec(ScreenPolicy::AlwaysKeep);
  const auto d = screen_distribution(*keep.screen);
  for (const auto& o : {kSequential, kGlobal, kHierarchy}) {
    const auto p = exact_outcomes(keep, o);
    for (std::size_t k = 0; k < keep.screen->bins; ++k) {
      const auto it = p.find(keep.screen->bin_label(k));
      CHECK(std::abs((it == p.end() ? 0.0 : it->second) - d.interference[k]) < kMathTolerance);
    }
    const auto removed = exact_outcomes(dce_spec(ScreenPolicy::AlwaysRemove), o);
    CHECK(removed.size() == 2);
    CHECK(std::abs(removed.at("TA") - 0.5) < kMathTolerance);
    CHECK(std::abs(removed.at("TB") - 0.5) < kMathTolerance);

    const auto coin = exact_outcomes(dce_coinflip_spec(), o);
    CHECK(std::abs(coin.at("TA") - 0.25) < kMathTolerance);
    CHECK(std::abs(coin.at("TB") - 0.25) < kMathTolerance);
  }
}

TEST_CASE("coin-flip trials record the coin and follow it") {
  const auto spec = dce_coinflip_spec();
  testutil::ScriptedChooser up({0});
  const auto r = run_trial(spec, kSequential, up);
  REQUIRE(r.coin_outcome);
  CHECK(*r.coin_outcome == "up");
  CHECK((r.outcome == "TA" || r.outcome == "TB"));
  CHECK_FALSE(r.bin);
  testutil::ScriptedChooser down({1});
  const auto s = run_trial(spec, kSequential, down);
  CHECK(*s.coin_outcome == "down");
  CHECK(s.bin);
  CHECK(s.outcome == spec.screen->bin_label(*s.bin));
}

TEST_CASE("emitter-state policy") {
  // Miller with A succeeding: B still lies in the undiverted beam.
  const TrialOptions final_config{ResolutionStrategy::SequentialContingent, true, EmitterStatePolicy::FinalConfiguration};
  testutil::ScriptedChooser c({0});
  const auto r = run_trial(miller_spec(), final_config, c);
  CHECK(r.outcome == "A");
  CHECK(r.ledger.emitter_state.label() == "OW(A,B)");
  CHECK(check_bilking(r.ledger, miller_spec().rules).ok());
  testutil::ScriptedChooser c2({0});
  CHECK(run_trial(miller_spec(), kSequential, c2).ledger.emitter_state.label() == "OW(A)");
  // Telescopes reached together both respond, whichever one wins.
  testutil::ScriptedChooser c3({0});
  CHECK(run_trial(dce_spec(ScreenPolicy::AlwaysRemove), kSequential, c3).ledger.emitter_state.label() == "OW(TA,TB)");
}

TEST_CASE("fixed-absorber strategies match complete_weights exactly") {
  std::mt19937_64 rng(404);
  for (int iter = 0; iter < 30; ++iter) {
    const std::size_t n = 2 + iter % 3;
    const auto s = testutil::random_state(rng, n);
    const auto spec = fixed_spec(s, rng);
    REQUIRE(validate_spec(spec).empty());
    const auto w = complete_weights(s, Observable::finest(s.basis()));
    for (const auto& o : {kSequential, kGlobal, kHierarchy}) {
      const auto p = exact_outcomes(spec, o);
      for (std::size_t k = 0; k < n; ++k) {
        const auto it = p.find("D" + s.basis()[k]);
        CHECK(std::abs((it == p.end() ? 0.0 : it->second) - w[k]) < kMathTolerance);
      }
      CHECK_FALSE(p.contains(kOutcomeNone));
    }
  }
}

TEST_CASE("mass balance holds on every branch") {
  for (const auto& b : builtin_experiments()) {
    const TrialRunner runner(builtin_spec(b.name));
    DecisionTreeEnumerator e;
    for (const auto& leaf : e.branches<double>([&](Chooser& c) {
           return runner.mass_balance_error(runner.run(kSequential, c).ledger);
         })) {
      CHECK(leaf.result < kWeightTolerance);
    }
  }
}

TEST_CASE("structural validation") {
  auto doubled = maudlin_spec();
  doubled.absorbers.push_back({"C", "R", {1.0, 0.5}, true});
  CHECK(any_contains(validate_spec(doubled), "two absorbers on channel 'R' simultaneously present"));

  auto retro = maudlin_spec();
  retro.rules[0].time = 1.0;
  CHECK(any_contains(validate_spec(retro), "rule 0: retro-placement"));

  auto incomplete = maudlin_spec();
  incomplete.rules.clear();
  const auto errs = validate_spec(incomplete);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].find("incomplete coverage on branch [A failed @t=1]") != std::string::npos);

  auto early = maudlin_spec();
  early.absorbers[0].position.t = -1;
  CHECK(any_contains(validate_spec(early), "absorption at or before emission"));

  auto unknown = maudlin_spec();
  unknown.rules[0].trigger.absorber = "Z";
  CHECK(any_contains(validate_spec(unknown), "unknown absorber 'Z'"));

  auto conflict = maudlin_spec();
  conflict.absorbers[1].position.x = 7.0;
  CHECK(any_contains(validate_spec(conflict), "conflicting definition of absorber 'B'"));

  auto bad_coin = dce_coinflip_spec();
  bad_coin.coin->weights = {0.7, 0.7};
  CHECK(any_contains(validate_spec(bad_coin), "coin: weights"));

  auto no_screen = dce_spec(ScreenPolicy::AlwaysKeep);
  no_screen.screen.reset();
  CHECK(any_contains(validate_spec(no_screen), "screen absorber without a screen model"));
}

TEST_CASE("a spec with no absorbers yields 'none'") {
  ExperimentSpec spec;
  spec.name = "empty";
  spec.initial_state = StateVector({"R"}, {1.0});
  RandomStream s(1);
  CHECK(run_trial(spec, kSequential, s).outcome == kOutcomeNone);
  CHECK(any_contains(validate_spec(spec), "incomplete coverage on branch"));
}
