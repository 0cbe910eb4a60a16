// Command-line front end: single-scenario evaluation, SNR and strip-count
// sweeps, and weight design dumps.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dma/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<dma::Index> trials;
  std::string out;
  std::string format = "csv";
  std::string set = "UC";
};

dma::ExperimentConfig resolve(const Options& o, dma::SweepKind kind) {
  dma::ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = dma::load_config(o.config);
    if (cfg.sweep != kind) {
      throw dma::ConfigError(std::string("config sweep kind does not match subcommand (expected ") +
                             (kind == dma::SweepKind::Snr ? "snr" : "strips") + ")");
    }
  } else if (kind == dma::SweepKind::Strips) {
    cfg = dma::ExperimentConfig::strip_defaults();
  }
  if (o.seed) cfg.scenario.base_seed = *o.seed;
  if (o.trials) cfg.n_trials = *o.trials;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.validate();
  return cfg;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw dma::Error("cannot write '" + path + "'");
  f << text;
}

void write_table(const dma::ExperimentConfig& cfg, const Options& o, const dma::ResultTable& table) {
  if (o.format == "json") {
    emit(cfg.output, dma::to_json(cfg, table, dma::summarize(table)) + "\n");
    return;
  }
  std::ostringstream ss;
  dma::write_csv(ss, table);
  emit(cfg.output, ss.str());
  if (!cfg.output.empty()) emit(cfg.output + ".meta.json", dma::run_metadata(cfg) + "\n");
}

int report_ordering(const dma::ResultTable& table) {
  const auto bad = dma::check_ordering(table);
  for (const auto& v : bad) {
    std::cerr << "ordering violation at sweep value " << dma::format_double(v.sweep_value) << ", trial "
              << v.trial << ": " << v.detail << '\n';
  }
  return bad.empty() ? 0 : kExitRuntime;
}

int cmd_sweep(const Options& o, dma::SweepKind kind) {
  const auto cfg = resolve(o, kind);
  const auto table = dma::run_experiment(cfg);
  write_table(cfg, o, table);
  for (const auto& s : dma::summarize(table)) {
    std::cerr << s.sweep_param << '=' << dma::format_double(s.sweep_value) << ' ' << s.curve
              << " median=" << dma::format_double(s.median) << " mean=" << dma::format_double(s.mean)
              << " ok=" << s.n_ok << " failed=" << s.n_failed << '\n';
  }
  return report_ordering(table);
}

double base_value(const dma::ExperimentConfig& cfg) {
  return cfg.sweep == dma::SweepKind::Snr ? cfg.scenario.snr_db
                                          : static_cast<double>(cfg.scenario.dims.n_strips);
}

int cmd_eval(const Options& o) {
  auto cfg = resolve(o, o.config.empty() ? dma::SweepKind::Snr : dma::load_config(o.config).sweep);
  const double v = base_value(cfg);
  const auto table = dma::run_trial(cfg, v, 0);
  write_table(cfg, o, table);
  return report_ordering(table);
}

nlohmann::json matrix_json(const dma::CMatrix<double>& m) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (dma::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r, c;
    for (dma::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"real", re}, {"imag", im}};
}

int cmd_optimize(const Options& o) {
  auto cfg = resolve(o, o.config.empty() ? dma::SweepKind::Snr : dma::load_config(o.config).sweep);
  const auto set = dma::WeightSet::from_label(o.set);
  const auto params = cfg.scenario_at(base_value(cfg));
  const auto inst = dma::make_instance(params, 0);
  const dma::FrequencyGrid grid(cfg.eval_grid);

  auto res = cfg.flat() ? dma::design_flat<double>(inst.channel, params.dims, set, cfg.optimizer)
                        : dma::design_selective<double>(inst.channel, inst.response, params.dims, set,
                                                        cfg.optimizer);
  const auto q = dma::expand_weights(res.weights);
  const double rate = cfg.flat() ? dma::flat_sum_rate<double>(res.weights, inst.channel).rate_bps_hz
                                 : dma::selective_sum_rate<double>(q, inst.channel, inst.response, grid)
                                       .rate_bps_hz;
  nlohmann::json j{{"set", set.label()},
                   {"seed", inst.seed},
                   {"rng", dma::Rng::kAlgorithm},
                   {"designer", cfg.flat() ? "flat" : "selective"},
                   {"rate_bps_hz", rate},
                   {"iterations", res.trace.iterations()},
                   {"termination", dma::to_string(res.trace.reason)},
                   {"objective", res.trace.objective},
                   {"coefficients", matrix_json(res.weights.coeffs())}};
  emit(cfg.output, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uplink massive MIMO with dynamic metasurface antennas"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Base seed; trial t uses seed + t");
    sub->add_option("--trials", o.trials, "Monte-Carlo trials per sweep point");
    sub->add_option("--out", o.out, "Output path (stdout if omitted)");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* eval = app.add_subcommand("eval", "Evaluate all curves on one scenario draw");
  auto* snr = app.add_subcommand("sweep-snr", "Monte-Carlo sweep over SNR");
  auto* strips = app.add_subcommand("sweep-strips", "Monte-Carlo sweep over the number of microstrips");
  auto* opt = app.add_subcommand("optimize", "Design weights for one draw and dump them with the trace");
  for (auto* s : {eval, snr, strips, opt}) common(s);
  opt->add_option("--set", o.set, "Weight set label")->check(CLI::IsMember({"UC", "AO", "BA", "LP"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*eval) return cmd_eval(o);
    if (*snr) return cmd_sweep(o, dma::SweepKind::Snr);
    if (*strips) return cmd_sweep(o, dma::SweepKind::Strips);
    return cmd_optimize(o);
  } catch (const dma::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
