#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "tisim/spec_io.hpp"

using tisim::cli::run_cli;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation sim(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("list names every built-in") {
  const auto r = sim({"list"});
  CHECK(r.code == 0);
  for (const char* name : {"maudlin", "miller", "dce-keep", "dce-remove", "dce-coinflip"}) {
    CHECK(r.out.find(name) != std::string::npos);
  }
  CHECK(sim({"list"}).out == r.out);
  CHECK(r.out == tisim::cli::cmd_list());
}

TEST_CASE("run emits a JSON payload") {
  const auto r = sim({"run", "maudlin", "--trials", "2000", "--seed", "42"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["experiment"] == "maudlin");
  CHECK(j["strategy"] == "sequential");
  CHECK(j["seed"] == 42);
  CHECK(j["trials"] == 2000);
  CHECK_FALSE(j.contains("workers"));
  CHECK(j["frequency_table"]["n_trials"] == 2000);
  CHECK(j["consistency_report"]["bilking_violations"] == 0);
  CHECK(j["frequency_table"]["transaction_weights"]["B"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("run flag handling") {
  CHECK(sim({"run", "--experiment", "maudlin", "--trials", "10", "--seed", "1"}).code == 0);
  const auto ge = sim({"run", "maudlin", "--strategy", "global-echo"});
  CHECK(ge.code == 1);
  CHECK(ge.err == "error: strategy requires fixed absorber set\n");
  CHECK(sim({"run", "maudlin", "--trials", "10"}).code == 1);
  CHECK(sim({"run", "maudlin", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "maudlin", "--trials", "0", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "maudlin", "--trials", "-3", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "maudlin", "--trials", "10", "--seed", "1", "--strategy", "magic"}).code == 1);
  CHECK(sim({"run", "maudlin", "--trials", "10", "--seed", "1", "--workers", "0"}).code == 1);
  CHECK(sim({"run", "maudlin", "--trials", "10", "--seed", "1", "--format", "xml"}).code == 1);
  CHECK(sim({"run", "--experiment", "maudlin", "--spec", "x.json", "--trials", "1", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "maudlin", "--experiment", "miller", "--trials", "1", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "--trials", "1", "--seed", "1"}).code == 1);
  CHECK(sim({"run", "--spec", "/nonexistent/spec.json", "--trials", "1", "--seed", "1"}).code == 1);
  CHECK(sim({}).code == 1);
  CHECK(sim({"--help"}).code == 0);
  const auto unknown = sim({"run", "nope", "--trials", "1", "--seed", "1"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err == "error: unknown experiment 'nope'\n");
}

TEST_CASE("hierarchy without tie-break surfaces degeneracy") {
  const auto r = sim({"run", "miller", "--strategy", "hierarchy", "--no-tie-break", "--trials", "50", "--seed", "1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["frequency_table"]["counts"]["degenerate"] == 50);
  CHECK(sim({"run", "miller", "--strategy", "hierarchy", "--trials", "50", "--seed", "1"}).code == 1);
  const auto maudlin = sim({"run", "maudlin", "--strategy", "hierarchy", "--no-tie-break", "--trials", "5", "--seed", "1"});
  CHECK(maudlin.code == 1);
  CHECK(maudlin.err == "error: strategy requires fixed absorber set\n");
}

TEST_CASE("payload is independent of workers") {
  const std::vector<std::string> base{"run", "dce-coinflip", "--trials", "3000", "--seed", "11"};
  auto with = [&](const char* w) {
    auto args = base;
    args.insert(args.end(), {"--workers", w});
    return sim(args).out;
  };
  const auto one = with("1");
  CHECK(one == with("2"));
  CHECK(one == with("5"));
  CHECK(one == sim(base).out);
}

TEST_CASE("emitter-state policy flag") {
  const auto r = sim({"run", "dce-remove", "--trials", "100", "--seed", "1", "--emitter-state", "final-configuration"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["frequency_table"]["emitter_state_counts"]["OW(TA,TB)"] == 100);
  CHECK(j["emitter_state_policy"] == "final-configuration");
  CHECK(sim({"run", "dce-remove", "--trials", "1", "--seed", "1", "--emitter-state", "whatever"}).code == 1);
}

TEST_CASE("out directory and csv") {
  const auto dir = std::filesystem::temp_directory_path() / "tisim_test_cli_out";
  std::filesystem::remove_all(dir);
  const auto r = sim({"run", "dce-keep", "--trials", "500", "--seed", "2", "--out", dir.string(), "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "frequency_table.json"));
  CHECK(std::filesystem::exists(dir / "consistency_report.json"));
  CHECK(std::filesystem::exists(dir / "histogram.csv"));
  const auto stdout_csv = sim({"run", "dce-keep", "--trials", "500", "--seed", "2", "--format", "csv"});
  CHECK(stdout_csv.out.rfind("bin_center,count,probability\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("abl command") {
  CHECK(sim({"abl", "--pre", "+z", "--post", "+x", "--observable", "z", "--outcome", "+z"}).out == "1.000000000000\n");
  CHECK(sim({"abl", "--pre", "+z", "--post", "+x", "--observable", "x", "--outcome", "+x"}).out == "1.000000000000\n");
  CHECK(sim({"abl", "--pre", "+z", "--post", "+x", "--observable", "y", "--outcome", "+y"}).out == "0.500000000000\n");
  CHECK(sim({"abl", "--pre", "1,0,0,0", "--post", "1,0,1,0", "--observable", "y", "--outcome", "-y"}).out ==
        "0.500000000000\n");
  CHECK(sim({"abl", "--pre", "+z", "--post", "-z", "--observable", "x", "--outcome", "+x"}).out == "0.500000000000\n");
  const auto bad = sim({"abl", "--pre", "+z", "--post", "-z", "--observable", "z", "--outcome", "+z"});
  CHECK(bad.code == 1);
  CHECK(bad.err == "error: impossible pre/post pair for this observable\n");
  CHECK(sim({"abl", "--pre", "+z", "--post", "+x", "--observable", "q", "--outcome", "+q"}).code == 1);
  CHECK(sim({"abl", "--pre", "+z", "--post", "+x"}).code == 1);
}

TEST_CASE("validate command") {
  const auto dir = std::filesystem::temp_directory_path() / "tisim_test_cli_validate";
  std::filesystem::create_directories(dir);
  const auto good = dir / "maudlin.json";
  {
    std::ofstream(good) << tisim::dump_spec(tisim::maudlin_spec());
  }
  const auto ok = sim({"validate", good.string()});
  CHECK(ok.code == 0);
  CHECK(ok.out == "ok\n");

  auto j = tisim::spec_to_json(tisim::maudlin_spec());
  j["rules"][0]["time"] = 1.0;
  const auto retro = dir / "retro.json";
  {
    std::ofstream(retro) << j.dump();
  }
  const auto r = sim({"validate", retro.string()});
  CHECK(r.code == 1);
  CHECK(r.out.find("rule 0: retro-placement") != std::string::npos);

  const auto garbage = dir / "garbage.json";
  {
    std::ofstream(garbage) << "{";
  }
  const auto g = sim({"validate", garbage.string()});
  CHECK(g.code == 1);
  CHECK(g.err.find("parse error at byte") != std::string::npos);
  CHECK(sim({"validate", (dir / "missing.json").string()}).code == 1);
  std::filesystem::remove_all(dir);
}
