#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slp/config.hpp"
#include "slp/interchange.hpp"
#include "slp/metrics.hpp"

namespace slp {

// Per (SNR point, block, user) quantities that the CSV does not carry.
struct BlockDiagnostics {
  std::size_t snr_index = 0;
  int block = 0;
  std::uint64_t block_id = 0;
  int user = 0;
  std::optional<double> gamma_bar;
  double power_sum = 0.0;     // sum over the block of ||x[l]||^2 after allocation
  double power_target = 0.0;  // sum over the block of P_T[l]
  double sigma2_all = 0.0;    // Gaussian variance from all pilots
  std::optional<double> sigma2_inner;  // QAM only
};

struct ExperimentResult {
  std::vector<MetricRecord> records;  // SNR-major, then demodulators in config order
  std::vector<BlockDiagnostics> diagnostics;
  std::vector<std::string> errors;  // one entry per aborted block
};

struct RunOptions {
  // Parameters for demod=pfen, keyed by (block_id, user).
  const ParamsTable* external = nullptr;
  std::ostream* log = nullptr;  // diagnostics for aborted blocks and skipped demodulators
};

// block_id of a block at an SNR point, shared by the pilot export and the
// parameter import.
inline std::uint64_t block_id(std::size_t snr_index, int block, int blocks) {
  return static_cast<std::uint64_t>(snr_index) * static_cast<std::uint64_t>(blocks) +
         static_cast<std::uint64_t>(block);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

void write_csv(std::ostream& out, const ExperimentResult& result);

// Transformed pilot pools of every (SNR point, block, user), ordered by
// block_id then user. Signals are identical to those of run_experiment.
std::vector<PilotRecord> export_pilot_sets(const ExperimentConfig& cfg);
void write_pilot_sets(std::ostream& out, const ExperimentConfig& cfg);

// Checks that `table` covers every (block_id, user) of the run with the
// classes the constellation needs; throws std::invalid_argument naming the
// first missing block.
void check_params_coverage(const ExperimentConfig& cfg, const ParamsTable& table);

}  // namespace slp
