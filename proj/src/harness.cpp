#include "dma/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dma {

using json = nlohmann::json;

namespace {

const char* sweep_name(SweepKind k) { return k == SweepKind::Snr ? "snr_db" : "n_strips"; }

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

WeightSet parse_weight_set(const json& j) {
  if (j.is_string()) return WeightSet::from_label(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("weight set must be a label or an object");
  reject_unknown(j, {"kind", "lower", "upper", "level"}, "weight_sets entry");
  const std::string kind = j.at("kind").get<std::string>();
  WeightSet base = WeightSet::from_label(kind);
  switch (base.kind()) {
    case WeightSet::Kind::AmplitudeOnly:
      return WeightSet::amplitude_only(j.value("lower", base.lower()), j.value("upper", base.upper()));
    case WeightSet::Kind::BinaryAmplitude:
      return WeightSet::binary(j.value("level", base.level()));
    default:
      return base;
  }
}

json weight_set_json(const WeightSet& s) {
  json j{{"kind", s.label()}};
  if (s.kind() == WeightSet::Kind::AmplitudeOnly) {
    j["lower"] = s.lower();
    j["upper"] = s.upper();
  } else if (s.kind() == WeightSet::Kind::BinaryAmplitude) {
    j["level"] = s.level();
  }
  return j;
}

void parse_scenario(const json& j, ScenarioParams& p) {
  reject_unknown(j,
                 {"n_users", "n_strips", "n_elems", "cell_radius_m", "exclusion_radius_m", "n_taps",
                  "shadow_std_db", "element_spacing_wavelengths", "alpha_np", "beta_slope",
                  "response_spacing", "microstrip_response", "correlation_block", "snr_db",
                  "base_seed"},
                 "scenario");
  Index nu = p.dims.n_users, nd = p.dims.n_strips, ne = p.dims.n_elems;
  read_opt(j, "n_users", nu);
  read_opt(j, "n_strips", nd);
  read_opt(j, "n_elems", ne);
  p.dims = SystemDims(nu, nd, ne);
  read_opt(j, "cell_radius_m", p.cell_radius_m);
  read_opt(j, "exclusion_radius_m", p.exclusion_radius_m);
  read_opt(j, "n_taps", p.n_taps);
  read_opt(j, "shadow_std_db", p.shadow_std_db);
  read_opt(j, "element_spacing_wavelengths", p.element_spacing_wavelengths);
  read_opt(j, "alpha_np", p.alpha_np);
  read_opt(j, "beta_slope", p.beta_slope);
  read_opt(j, "response_spacing", p.response_spacing);
  read_opt(j, "microstrip_response", p.microstrip_response);
  read_opt(j, "correlation_block", p.correlation_block);
  read_opt(j, "snr_db", p.snr_db);
  read_opt(j, "base_seed", p.base_seed);
}

json scenario_json(const ScenarioParams& p) {
  return json{{"n_users", p.dims.n_users},
              {"n_strips", p.dims.n_strips},
              {"n_elems", p.dims.n_elems},
              {"cell_radius_m", p.cell_radius_m},
              {"exclusion_radius_m", p.exclusion_radius_m},
              {"n_taps", p.n_taps},
              {"shadow_std_db", p.shadow_std_db},
              {"element_spacing_wavelengths", p.element_spacing_wavelengths},
              {"alpha_np", p.alpha_np},
              {"beta_slope", p.beta_slope},
              {"response_spacing", p.response_spacing},
              {"microstrip_response", p.microstrip_response},
              {"correlation_block", p.correlation_block},
              {"snr_db", p.snr_db},
              {"base_seed", p.base_seed}};
}

bool is_reference(const std::string& curve) {
  return curve == kCurveOptimal || curve == kCurveUpperBound || curve == kCurveLimit;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (sweep_values.empty()) throw ConfigError("sweep values must be nonempty");
  if (weight_sets.empty()) throw ConfigError("weight_sets must be nonempty");
  if (eval_grid < 1) throw ConfigError("eval_grid must be >= 1");
  try {
    optimizer.validate();
    scenario.validate();
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
  if (sweep == SweepKind::Strips) {
    const Index nt = scenario.dims.n_ant();
    for (double v : sweep_values) {
      if (!(v >= 1.0) || v != std::floor(v) || nt % static_cast<Index>(v) != 0) {
        throw ConfigError("strip count " + format_double(v) + " does not divide n_ant = " +
                          std::to_string(nt));
      }
    }
  } else {
    for (double v : sweep_values) {
      if (!std::isfinite(v)) throw ConfigError("snr values must be finite");
    }
  }
}

ScenarioParams ExperimentConfig::scenario_at(double v) const {
  ScenarioParams p = scenario;
  if (sweep == SweepKind::Snr) {
    p.snr_db = v;
  } else {
    const Index nt = scenario.dims.n_ant();
    const Index nd = static_cast<Index>(v);
    p.correlation_block = scenario.block_size();
    p.dims = SystemDims(scenario.dims.n_users, nd, nt / nd);
  }
  return p;
}

ExperimentConfig ExperimentConfig::strip_defaults() {
  ExperimentConfig cfg;
  cfg.scenario.dims = SystemDims(10, 15, 6);
  cfg.scenario.correlation_block = 6;
  cfg.sweep = SweepKind::Strips;
  cfg.sweep_values = {1, 2, 3, 5, 6, 9, 10, 15, 18};
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  try {
    reject_unknown(j,
                   {"scenario", "sweep", "weight_sets", "n_trials", "optimizer", "eval_grid", "output",
                    "threads"},
                   "config");
    ExperimentConfig cfg;
    if (auto it = j.find("sweep"); it != j.end()) {
      reject_unknown(*it, {"kind", "values"}, "sweep");
      const std::string kind = it->value("kind", std::string("snr"));
      if (kind == "snr") {
        cfg.sweep = SweepKind::Snr;
      } else if (kind == "strips") {
        cfg = ExperimentConfig::strip_defaults();
      } else {
        throw ConfigError("sweep.kind must be 'snr' or 'strips'");
      }
      read_opt(*it, "values", cfg.sweep_values);
    }
    if (auto it = j.find("scenario"); it != j.end()) parse_scenario(*it, cfg.scenario);
    if (auto it = j.find("weight_sets"); it != j.end()) {
      cfg.weight_sets.clear();
      for (const auto& w : *it) cfg.weight_sets.push_back(parse_weight_set(w));
    }
    read_opt(j, "n_trials", cfg.n_trials);
    if (auto it = j.find("optimizer"); it != j.end()) {
      reject_unknown(*it, {"epsilon", "max_iters", "rel_tol", "b_opt"}, "optimizer");
      read_opt(*it, "epsilon", cfg.optimizer.epsilon);
      read_opt(*it, "max_iters", cfg.optimizer.max_iters);
      read_opt(*it, "rel_tol", cfg.optimizer.rel_tol);
      read_opt(*it, "b_opt", cfg.optimizer.b_opt);
    }
    read_opt(j, "eval_grid", cfg.eval_grid);
    read_opt(j, "output", cfg.output);
    read_opt(j, "threads", cfg.threads);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ResultTable run_trial(const ExperimentConfig& cfg, double sweep_value, Index trial) {
  const ScenarioParams params = cfg.scenario_at(sweep_value);
  const std::uint64_t seed = params.base_seed + static_cast<std::uint64_t>(trial);
  ResultTable rows;
  auto row = [&](const std::string& curve) {
    ResultRow r;
    r.sweep_param = sweep_name(cfg.sweep);
    r.sweep_value = sweep_value;
    r.trial = trial;
    r.seed = seed;
    r.curve = curve;
    return r;
  };
  std::vector<std::string> curves;
  for (const auto& s : cfg.weight_sets) curves.push_back(s.label());
  curves.emplace_back(cfg.flat() ? kCurveOptimal : kCurveUpperBound);
  curves.emplace_back(kCurveLimit);

  std::optional<ScenarioInstance> inst;
  try {
    inst.emplace(make_instance(params, static_cast<std::uint64_t>(trial)));
  } catch (const std::exception& e) {
    for (const auto& c : curves) {
      auto r = row(c);
      r.status = std::string("error: ") + e.what();
      rows.push_back(std::move(r));
    }
    return rows;
  }

  const auto& channel = inst->channel;
  const FrequencyGrid grid(cfg.eval_grid);
  const SystemDims& dims = params.dims;

  auto guarded = [&](const std::string& curve, auto&& fn) {
    auto r = row(curve);
    try {
      fn(r);
    } catch (const std::exception& e) {
      r.rate_bps_hz = 0;
      r.iters = 0;
      r.objective = 0;
      r.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(r));
  };

  if (cfg.flat()) {
    std::optional<NoiseFactors<double>> noise;
    std::optional<CMatrix<double>> target;
    std::string setup_error;
    try {
      noise.emplace(channel.noise_cov());
      target = flat_target<double>(channel.taps().front(), *noise, dims.n_strips);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (const auto& set : cfg.weight_sets) {
      guarded(set.label(), [&](ResultRow& r) {
        if (!target) throw Error(setup_error);
        const auto res = fit_flat<double>(*target, dims, set, cfg.optimizer);
        r.rate_bps_hz =
            flat_sum_rate<double>(expand_weights(res.weights), channel.taps().front(), *noise, dims.n_users)
                .rate_bps_hz;
        r.iters = res.trace.iterations();
        r.objective = res.trace.final_objective();
      });
    }
    guarded(kCurveOptimal, [&](ResultRow& r) {
      r.rate_bps_hz = optimal_flat_rate<double>(channel, dims.n_strips).rate_bps_hz;
    });
  } else {
    std::optional<LiftedBasis<double>> basis;
    std::optional<SelectiveEvaluator<double>> eval;
    std::string setup_error;
    try {
      basis = selective_target<double>(channel, inst->response, dims.n_strips, cfg.optimizer.b_opt);
      eval.emplace(channel, inst->response, grid);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (const auto& set : cfg.weight_sets) {
      guarded(set.label(), [&](ResultRow& r) {
        if (!basis || !eval) throw Error(setup_error);
        const auto res = fit_lifted<double>(*basis, dims, set, cfg.optimizer);
        r.rate_bps_hz = eval->rate(expand_weights(res.weights)).rate_bps_hz;
        r.iters = res.trace.iterations();
        r.objective = res.trace.final_objective();
      });
    }
    guarded(kCurveUpperBound, [&](ResultRow& r) {
      r.rate_bps_hz =
          selective_upper_bound<double>(channel, inst->response, grid, dims.n_strips).rate_bps_hz;
    });
  }
  guarded(kCurveLimit, [&](ResultRow& r) {
    r.rate_bps_hz = fundamental_limit<double>(channel, grid).rate_bps_hz;
  });
  return rows;
}

namespace {

bool row_less(const ResultRow& a, const ResultRow& b) {
  if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
  if (a.trial != b.trial) return a.trial < b.trial;
  return a.curve < b.curve;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    double value;
    Index trial;
  };
  std::vector<Job> jobs;
  for (double v : cfg.sweep_values) {
    for (Index t = 0; t < cfg.n_trials; ++t) jobs.push_back({v, t});
  }
  std::vector<ResultTable> slots(jobs.size());
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));

  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == jobs.size()) return;
        i = next++;
      }
      slots[i] = run_trial(cfg, jobs[i].value, jobs[i].trial);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }

  ResultTable out;
  for (auto& s : slots) std::move(s.begin(), s.end(), std::back_inserter(out));
  std::sort(out.begin(), out.end(), row_less);
  return out;
}

std::vector<OrderingViolation> check_ordering(const ResultTable& table, double slack) {
  std::map<std::pair<double, Index>, std::vector<const ResultRow*>> groups;
  for (const auto& r : table) {
    if (r.ok()) groups[{r.sweep_value, r.trial}].push_back(&r);
  }
  std::vector<OrderingViolation> out;
  for (const auto& [key, rows] : groups) {
    const ResultRow* bound = nullptr;
    const ResultRow* limit = nullptr;
    for (const auto* r : rows) {
      if (r->curve == kCurveOptimal || r->curve == kCurveUpperBound) bound = r;
      if (r->curve == kCurveLimit) limit = r;
    }
    auto violate = [&](const ResultRow& lo, const ResultRow& hi) {
      if (lo.rate_bps_hz > hi.rate_bps_hz + slack) {
        out.push_back({key.first, key.second,
                       lo.curve + " = " + format_double(lo.rate_bps_hz) + " exceeds " + hi.curve +
                           " = " + format_double(hi.rate_bps_hz)});
      }
    };
    for (const auto* r : rows) {
      if (is_reference(r->curve)) continue;
      if (bound) violate(*r, *bound);
      if (limit) violate(*r, *limit);
    }
    if (bound && limit) violate(*bound, *limit);
  }
  return out;
}

SummaryRow aggregate(const ResultTable& rows) {
  if (rows.empty()) throw EmptyAggregate("no rows to aggregate");
  SummaryRow s;
  s.sweep_param = rows.front().sweep_param;
  s.sweep_value = rows.front().sweep_value;
  s.curve = rows.front().curve;
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.ok() && std::isfinite(r.rate_bps_hz)) {
      v.push_back(r.rate_bps_hz);
    } else {
      ++s.n_failed;
    }
  }
  if (v.empty()) {
    throw EmptyAggregate("all " + std::to_string(rows.size()) + " trials failed for curve " + s.curve +
                         " at " + s.sweep_param + " = " + format_double(s.sweep_value));
  }
  s.n_ok = static_cast<Index>(v.size());
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

std::vector<SummaryRow> summarize(const ResultTable& table) {
  if (table.empty()) throw EmptyAggregate("empty result table");
  std::map<std::pair<double, std::string>, ResultTable> groups;
  for (const auto& r : table) groups[{r.sweep_value, r.curve}].push_back(r);
  std::vector<SummaryRow> out;
  for (const auto& [key, rows] : groups) {
    try {
      out.push_back(aggregate(rows));
    } catch (const EmptyAggregate&) {
      SummaryRow s;
      s.sweep_param = rows.front().sweep_param;
      s.sweep_value = key.first;
      s.curve = key.second;
      s.n_failed = static_cast<Index>(rows.size());
      s.status = "EmptyAggregate";
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw Error(std::string("CSV: bad ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& os, const ResultTable& table) {
  os << kCsvHeader << '\n';
  for (const auto& r : table) {
    os << csv_field(r.sweep_param) << ',' << format_double(r.sweep_value) << ',' << r.trial << ','
       << r.seed << ',' << csv_field(r.curve) << ',' << format_double(r.rate_bps_hz) << ',' << r.iters
       << ',' << format_double(r.objective) << ',' << csv_field(r.status) << '\n';
  }
}

ResultTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error("CSV: missing or wrong header");
  ResultTable out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw Error("CSV: expected 9 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.sweep_param = f[0];
    r.sweep_value = parse_number<double>(f[1], "sweep_value");
    r.trial = parse_number<Index>(f[2], "trial");
    r.seed = parse_number<std::uint64_t>(f[3], "seed");
    r.curve = f[4];
    r.rate_bps_hz = parse_number<double>(f[5], "rate_bps_hz");
    r.iters = parse_number<Index>(f[6], "iters");
    r.objective = parse_number<double>(f[7], "objective");
    r.status = f[8];
    out.push_back(std::move(r));
  }
  return out;
}

std::string config_json(const ExperimentConfig& cfg) {
  json ws = json::array();
  for (const auto& s : cfg.weight_sets) ws.push_back(weight_set_json(s));
  const json j{{"scenario", scenario_json(cfg.scenario)},
               {"sweep", {{"kind", cfg.sweep == SweepKind::Snr ? "snr" : "strips"}, {"values", cfg.sweep_values}}},
               {"weight_sets", ws},
               {"n_trials", cfg.n_trials},
               {"optimizer",
                {{"epsilon", cfg.optimizer.epsilon},
                 {"max_iters", cfg.optimizer.max_iters},
                 {"rel_tol", cfg.optimizer.rel_tol},
                 {"b_opt", cfg.optimizer.b_opt}}},
               {"eval_grid", cfg.eval_grid},
               {"output", cfg.output},
               {"threads", cfg.threads}};
  return j.dump(2);
}

std::string run_metadata(const ExperimentConfig& cfg) {
  const json j{{"rng", Rng::kAlgorithm},
               {"base_seed", cfg.scenario.base_seed},
               {"seed_rule", "base_seed + trial"},
               {"config", json::parse(config_json(cfg))}};
  return j.dump(2);
}

std::string to_json(const ExperimentConfig& cfg, const ResultTable& table,
                    const std::vector<SummaryRow>& summary) {
  json rows = json::array();
  for (const auto& r : table) {
    rows.push_back({{"sweep_param", r.sweep_param},
                    {"sweep_value", r.sweep_value},
                    {"trial", r.trial},
                    {"seed", r.seed},
                    {"curve", r.curve},
                    {"rate_bps_hz", r.rate_bps_hz},
                    {"iters", r.iters},
                    {"objective", r.objective},
                    {"status", r.status}});
  }
  json sum = json::array();
  for (const auto& s : summary) {
    sum.push_back({{"sweep_param", s.sweep_param},
                   {"sweep_value", s.sweep_value},
                   {"curve", s.curve},
                   {"n_ok", s.n_ok},
                   {"n_failed", s.n_failed},
                   {"mean", s.mean},
                   {"median", s.median},
                   {"stddev", s.stddev},
                   {"status", s.status}});
  }
  const json j{{"metadata", json::parse(run_metadata(cfg))}, {"rows", rows}, {"summary", sum}};
  return j.dump(2);
}

}  // namespace dma
