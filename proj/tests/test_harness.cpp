#include <doctest.h>

#include <sstream>

#include "dma/harness.hpp"

using namespace dma;

namespace {

ExperimentConfig tiny_flat() {
  ExperimentConfig cfg;
  cfg.scenario.dims = SystemDims(2, 2, 3);
  cfg.sweep_values = {10.0};
  cfg.n_trials = 2;
  cfg.threads = 1;
  return cfg;
}

ResultRow make_row(double value, Index trial, const std::string& curve, double rate,
                   const std::string& status = "ok") {
  ResultRow r;
  r.sweep_param = "snr_db";
  r.sweep_value = value;
  r.trial = trial;
  r.seed = static_cast<std::uint64_t>(trial);
  r.curve = curve;
  r.rate_bps_hz = rate;
  r.status = status;
  return r;
}

std::string csv_of(const ResultTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("parse_config defaults and overrides") {
  const auto d = parse_config("{}");
  CHECK(d.sweep == SweepKind::Snr);
  CHECK(d.n_trials == 100);
  CHECK(d.weight_sets.size() == 4);
  CHECK(d.scenario.dims.n_ant() == 100);

  const auto c = parse_config(R"({
    "scenario": {"n_users": 3, "n_strips": 2, "n_elems": 4, "n_taps": 2, "base_seed": 9},
    "sweep": {"kind": "snr", "values": [0, 5]},
    "weight_sets": ["UC", {"kind": "AO", "lower": 0.01, "upper": 2}, {"kind": "BA", "level": 0.5}],
    "n_trials": 3,
    "optimizer": {"epsilon": 1e-3, "max_iters": 50, "b_opt": 4},
    "eval_grid": 32,
    "threads": 2
  })");
  CHECK(c.scenario.dims.n_users == 3);
  CHECK(c.scenario.n_taps == 2);
  CHECK(c.scenario.base_seed == 9);
  CHECK(c.sweep_values == std::vector<double>{0, 5});
  REQUIRE(c.weight_sets.size() == 3);
  CHECK(c.weight_sets[1].upper() == 2.0);
  CHECK(c.weight_sets[2].level() == 0.5);
  CHECK(c.optimizer.max_iters == 50);
  CHECK(c.optimizer.b_opt == 4);
  CHECK(c.eval_grid == 32);
  CHECK_FALSE(c.flat());

  // Serialized config parses back to the same config.
  const auto again = parse_config(config_json(c));
  CHECK(config_json(again) == config_json(c));
}

TEST_CASE("parse_config rejects bad input") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"n_user": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"n_users": 101}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n_trials": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n_trials": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"weight_sets": ["ZZ"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"weight_sets": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"kind": "freq"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"optimizer": {"epsilon": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"exclusion_radius_m": 500}})"), ConfigError);
}

TEST_CASE("strip sweep values must divide n_ant") {
  const auto s = parse_config(R"({"sweep": {"kind": "strips"}})");
  CHECK(s.sweep == SweepKind::Strips);
  CHECK(s.sweep_values == std::vector<double>{1, 2, 3, 5, 6, 9, 10, 15, 18});
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"kind": "strips", "values": [4]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"kind": "strips", "values": [2.5]}})"), ConfigError);

  const auto p = s.scenario_at(9);
  CHECK(p.dims.n_strips == 9);
  CHECK(p.dims.n_elems == 10);
  CHECK(p.dims.n_ant() == 90);
  CHECK(p.block_size() == 6);
}

TEST_CASE("aggregate examples") {
  SUBCASE("single row") {
    const auto s = aggregate({make_row(0, 0, "UC", 2.5)});
    CHECK(s.mean == 2.5);
    CHECK(s.median == 2.5);
    CHECK(s.stddev == 0.0);
    CHECK(s.n_ok == 1);
  }
  SUBCASE("two rows") {
    const auto s = aggregate({make_row(0, 0, "UC", 1.0), make_row(0, 1, "UC", 3.0)});
    CHECK(s.mean == 2.0);
    CHECK(s.median == 2.0);
    CHECK(s.stddev == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("constant column") {
    ResultTable t;
    for (Index i = 0; i < 7; ++i) t.push_back(make_row(0, i, "LP", 0.75));
    const auto s = aggregate(t);
    CHECK(s.stddev == 0.0);
    CHECK(s.median == 0.75);
  }
  SUBCASE("failed rows are excluded") {
    const auto s = aggregate({make_row(0, 0, "UC", 1.0), make_row(0, 1, "UC", 100.0, "error: x"),
                              make_row(0, 2, "UC", 5.0)});
    CHECK(s.n_ok == 2);
    CHECK(s.n_failed == 1);
    CHECK(s.mean == 3.0);
  }
  SUBCASE("all failed") {
    CHECK_THROWS_AS(aggregate({make_row(0, 0, "UC", 1.0, "error: x")}), EmptyAggregate);
    CHECK_THROWS_AS(aggregate({}), EmptyAggregate);
  }
}

TEST_CASE("summarize groups by sweep value and curve") {
  const ResultTable t{make_row(0, 0, "UC", 1.0), make_row(0, 1, "UC", 2.0), make_row(5, 0, "UC", 4.0),
                      make_row(0, 0, "AO", 9.0, "error: y")};
  const auto s = summarize(t);
  REQUIRE(s.size() == 3);
  CHECK(s[0].curve == "AO");
  CHECK(s[0].status == "EmptyAggregate");
  CHECK(s[1].curve == "UC");
  CHECK(s[1].median == 1.5);
  CHECK(s[2].sweep_value == 5.0);
  CHECK(s[2].mean == 4.0);
  CHECK_THROWS_AS(summarize({}), EmptyAggregate);
}

TEST_CASE("CSV header and round trip") {
  ResultTable t{make_row(-5, 0, "UC", 0.1 + 0.2), make_row(1e-300, 3, "mopt", 1.0 / 3.0),
                make_row(2, 1, "LP", 0.0, "error: bad, \"quoted\" value")};
  t[0].iters = 17;
  t[0].objective = 12345.678901234567;
  t[1].seed = 18446744073709551615ull;
  const std::string text = csv_of(t);
  CHECK(text.substr(0, text.find('\n')) ==
        "sweep_param,sweep_value,trial,seed,curve,rate_bps_hz,iters,objective,status");
  std::istringstream in(text);
  CHECK(read_csv(in) == t);

  std::istringstream bad("a,b\n");
  CHECK_THROWS_AS(read_csv(bad), Error);
  std::istringstream short_row(std::string(kCsvHeader) + "\nsnr_db,1,2\n");
  CHECK_THROWS_AS(read_csv(short_row), Error);
}

TEST_CASE("run_experiment: one trial, one point, UC only") {
  auto cfg = tiny_flat();
  cfg.n_trials = 1;
  cfg.weight_sets = {WeightSet::unconstrained()};
  const auto t = run_experiment(cfg);
  REQUIRE(t.size() == 3);
  CHECK(t[0].curve == "UC");
  CHECK(t[1].curve == "mopt");
  CHECK(t[2].curve == "opt");
  for (const auto& r : t) {
    CHECK(r.ok());
    CHECK(r.sweep_param == "snr_db");
    CHECK(r.seed == cfg.scenario.base_seed);
    CHECK(r.rate_bps_hz > 0.0);
  }
  CHECK(t[0].iters >= 1);
  CHECK(t[1].iters == 0);
  CHECK(check_ordering(t).empty());
}

TEST_CASE("one element per strip with as many strips as users reaches the limit") {
  ExperimentConfig cfg;
  cfg.scenario.dims = SystemDims(3, 3, 1);
  cfg.scenario.correlation_block = 1;
  cfg.sweep_values = {20.0};
  cfg.n_trials = 3;
  cfg.threads = 1;
  cfg.weight_sets = {WeightSet::unconstrained()};
  const auto t = run_experiment(cfg);
  for (Index trial = 0; trial < 3; ++trial) {
    double uc = 0, lim = 0, opt = 0;
    for (const auto& r : t) {
      if (r.trial != trial) continue;
      if (r.curve == "UC") uc = r.rate_bps_hz;
      if (r.curve == "mopt") lim = r.rate_bps_hz;
      if (r.curve == "opt") opt = r.rate_bps_hz;
    }
    CHECK(std::abs(uc - lim) <= 1e-6);
    CHECK(std::abs(opt - lim) <= 1e-6);
  }
}

TEST_CASE("runs are deterministic and independent of thread count") {
  auto cfg = tiny_flat();
  cfg.sweep_values = {0.0, 30.0};
  cfg.n_trials = 3;
  const std::string a = csv_of(run_experiment(cfg));
  const std::string b = csv_of(run_experiment(cfg));
  cfg.threads = 3;
  const std::string c = csv_of(run_experiment(cfg));
  CHECK(a == b);
  CHECK(a == c);
  cfg.scenario.base_seed += 1;
  CHECK(csv_of(run_experiment(cfg)) != a);
}

TEST_CASE("selective trials report the upper bound curve") {
  auto cfg = tiny_flat();
  cfg.scenario.n_taps = 2;
  cfg.scenario.microstrip_response = true;
  cfg.n_trials = 1;
  cfg.eval_grid = 16;
  cfg.optimizer.b_opt = 4;
  const auto t = run_experiment(cfg);
  REQUIRE(t.size() == 6);
  std::vector<std::string> curves;
  for (const auto& r : t) {
    CHECK(r.ok());
    curves.push_back(r.curve);
  }
  CHECK(curves == std::vector<std::string>{"AO", "BA", "LP", "UC", "mopt", "ub"});
  CHECK(check_ordering(t).empty());
}

TEST_CASE("check_ordering flags planted violations") {
  ResultTable t{make_row(0, 0, "UC", 1.0), make_row(0, 0, "opt", 2.0), make_row(0, 0, "mopt", 3.0)};
  CHECK(check_ordering(t).empty());
  t[0].rate_bps_hz = 2.5;
  auto v = check_ordering(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].detail.find("UC") != std::string::npos);
  t[0].rate_bps_hz = 1.0;
  t[1].rate_bps_hz = 3.5;
  v = check_ordering(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].detail.find("opt") != std::string::npos);
  t[1].rate_bps_hz = 3.0 + 1e-12;
  CHECK(check_ordering(t).empty());
  t[1].status = "error: z";
  t[1].rate_bps_hz = 99.0;
  CHECK(check_ordering(t).empty());
}

TEST_CASE("metadata names the generator and seed rule") {
  const auto cfg = tiny_flat();
  const std::string m = run_metadata(cfg);
  CHECK(m.find(Rng::kAlgorithm) != std::string::npos);
  CHECK(m.find("base_seed + trial") != std::string::npos);
  const std::string j = to_json(cfg, {make_row(0, 0, "UC", 1.0)}, summarize({make_row(0, 0, "UC", 1.0)}));
  CHECK(j.find("\"summary\"") != std::string::npos);
  CHECK(j.find("\"rows\"") != std::string::npos);
}
