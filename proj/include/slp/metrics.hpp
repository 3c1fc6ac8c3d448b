#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slp/demod.hpp"

namespace slp {

/// Running sums for the bit-LLR mutual information estimate
///   MI = 1 - mean log2(1 + exp(-b * LLR)),  b = +1 for bit 1, -1 for bit 0.
/// Accumulators merge, so blocks can be reduced in any grouping.
struct MiAccumulator {
  double penalty = 0.0;  // sum of log2(1 + exp(-b LLR))
  std::uint64_t bits = 0;

  void add(const LlrFrame& frame);
  void add(double llr, int bit);
  void merge(const MiAccumulator& other);
  // Throws std::invalid_argument when no bits were added.
  double value() const;
};

double mutual_information(const LlrFrame& frame);
double mutual_information(std::span<const LlrFrame> frames);

struct ErrorCounter {
  std::uint64_t errors = 0;
  std::uint64_t total = 0;

  void merge(const ErrorCounter& other) {
    errors += other.errors;
    total += other.total;
  }
  // Throws std::invalid_argument when nothing was counted.
  double rate() const;
};

ErrorCounter count_symbol_errors(std::span<const int> decisions, std::span<const int> truth);
ErrorCounter count_bit_errors(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> truth);
double ser(std::span<const int> decisions, std::span<const int> truth);
double ber(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> truth);

// Hard decisions from LLRs (positive means bit 1).
BitMatrix hard_bits(const RMatrix& llr);

// rate * bits_per_symbol * ok / total, in bits/s/Hz.
double spectrum_efficiency(double code_rate, int bits_per_symbol, std::uint64_t blocks_ok,
                           std::uint64_t blocks_total);

struct MetricRecord {
  double snr_db = 0.0;
  std::string precoder;
  std::string demod;
  int lp = 0;
  int ld = 0;
  std::optional<double> mi;
  std::optional<double> ser;
  std::optional<double> ber_uncoded;
  std::optional<double> ber_coded;
  std::optional<double> se;
  std::optional<std::uint64_t> blocks_ok;
  std::uint64_t blocks_total = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader =
    "snr_db,precoder,demod,lp,ld,mi,ser,ber_uncoded,ber_coded,se,blocks_ok,blocks_total,seed";

// Absent optional fields are written as empty cells. Doubles use 17
// significant digits so output is reproducible byte for byte.
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const MetricRecord& r);

}  // namespace slp
