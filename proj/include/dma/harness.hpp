#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dma/optimizer.hpp"
#include "dma/scenario.hpp"

namespace dma {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyAggregate : public Error {
 public:
  using Error::Error;
};

enum class SweepKind { Snr, Strips };

struct ExperimentConfig {
  ScenarioParams scenario;
  SweepKind sweep = SweepKind::Snr;
  /// SNR values in dB (Snr) or strip counts N_d (Strips).
  std::vector<double> sweep_values{-5, 0, 5, 10, 15, 20, 25, 30};
  std::vector<WeightSet> weight_sets{WeightSet::from_label("UC"), WeightSet::from_label("AO"),
                                     WeightSet::from_label("BA"), WeightSet::from_label("LP")};
  Index n_trials = 100;
  OptimizerConfig optimizer;
  Index eval_grid = 64;
  std::string output;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  /// Scenario at one sweep point (SNR or strip count applied).
  ScenarioParams scenario_at(double sweep_value) const;
  /// Whether the flat designer applies (memoryless channel, identical response).
  bool flat() const { return scenario.n_taps == 1 && !scenario.microstrip_response; }

  /// Strip sweep at n_ant = 90 with the coupling fixed to I_15 kron Sigma_M(6).
  static ExperimentConfig strip_defaults();
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// One CSV row: a rate for one curve at one (sweep point, trial).
struct ResultRow {
  std::string sweep_param;
  double sweep_value = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  std::string curve;
  double rate_bps_hz = 0;
  Index iters = 0;
  double objective = 0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
  bool operator==(const ResultRow&) const = default;
};

using ResultTable = std::vector<ResultRow>;

/// Reference curve labels.
inline constexpr const char* kCurveOptimal = "opt";       // best unstructured flat combiner
inline constexpr const char* kCurveUpperBound = "ub";     // frequency-varying weights bound
inline constexpr const char* kCurveLimit = "mopt";        // ideal unconstrained array

/// All curves for one trial at one sweep point. Errors land in the status
/// column of every affected row.
ResultTable run_trial(const ExperimentConfig& cfg, double sweep_value, Index trial);

/// Full sweep. Rows are sorted by (sweep value, trial, curve), so the output
/// does not depend on how trials were scheduled across threads.
ResultTable run_experiment(const ExperimentConfig& cfg);

struct OrderingViolation {
  double sweep_value;
  Index trial;
  std::string detail;
};

/// achieved <= bound <= limit (1e-9 slack) for every (sweep point, trial).
std::vector<OrderingViolation> check_ordering(const ResultTable& table, double slack = 1e-9);

struct SummaryRow {
  std::string sweep_param;
  double sweep_value = 0;
  std::string curve;
  Index n_ok = 0;
  Index n_failed = 0;
  double mean = 0;
  double median = 0;
  double stddev = 0;
  std::string status = "ok";
};

/// Per (sweep value, curve) statistics over successful trials. A key whose
/// trials all failed is reported with status "EmptyAggregate".
std::vector<SummaryRow> summarize(const ResultTable& table);

/// Statistics of one key; throws EmptyAggregate when no row succeeded.
SummaryRow aggregate(const ResultTable& rows);

inline constexpr const char* kCsvHeader =
    "sweep_param,sweep_value,trial,seed,curve,rate_bps_hz,iters,objective,status";

void write_csv(std::ostream& os, const ResultTable& table);
ResultTable read_csv(std::istream& is);
std::string to_json(const ExperimentConfig& cfg, const ResultTable& table,
                    const std::vector<SummaryRow>& summary);

/// Config serialized back to the input format.
std::string config_json(const ExperimentConfig& cfg);
/// RNG name, seed rule and config; written next to CSV output.
std::string run_metadata(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace dma
