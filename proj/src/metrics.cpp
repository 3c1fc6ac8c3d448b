#include "slp/metrics.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace slp {

namespace {

// log2(1 + exp(v)) without overflow.
double log2_one_plus_exp(double v) {
  const double ln = v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  return ln / std::numbers::ln2;
}

}  // namespace

void MiAccumulator::add(double llr, int bit) {
  const double b = bit ? 1.0 : -1.0;
  penalty += log2_one_plus_exp(-b * llr);
  ++bits;
}

void MiAccumulator::add(const LlrFrame& frame) {
  if (frame.bits.rows() != frame.llr.rows() || frame.bits.cols() != frame.llr.cols())
    throw std::invalid_argument("mutual_information: truth bits missing or misshaped");
  for (Eigen::Index l = 0; l < frame.llr.rows(); ++l)
    for (Eigen::Index i = 0; i < frame.llr.cols(); ++i) add(frame.llr(l, i), frame.bits(l, i));
}

void MiAccumulator::merge(const MiAccumulator& other) {
  penalty += other.penalty;
  bits += other.bits;
}

double MiAccumulator::value() const {
  if (bits == 0) throw std::invalid_argument("mutual_information: empty frames");
  return 1.0 - penalty / static_cast<double>(bits);
}

double mutual_information(const LlrFrame& frame) {
  MiAccumulator acc;
  acc.add(frame);
  return acc.value();
}

double mutual_information(std::span<const LlrFrame> frames) {
  MiAccumulator acc;
  for (const auto& f : frames) acc.add(f);
  return acc.value();
}

double ErrorCounter::rate() const {
  if (total == 0) throw std::invalid_argument("error rate of an empty sequence");
  return static_cast<double>(errors) / static_cast<double>(total);
}

ErrorCounter count_symbol_errors(std::span<const int> decisions, std::span<const int> truth) {
  if (decisions.size() != truth.size()) throw std::invalid_argument("ser: length mismatch");
  ErrorCounter c;
  c.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) c.errors += decisions[i] != truth[i];
  return c;
}

ErrorCounter count_bit_errors(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> truth) {
  if (bits.size() != truth.size()) throw std::invalid_argument("ber: length mismatch");
  ErrorCounter c;
  c.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) c.errors += (bits[i] & 1U) != (truth[i] & 1U);
  return c;
}

double ser(std::span<const int> decisions, std::span<const int> truth) {
  return count_symbol_errors(decisions, truth).rate();
}

double ber(std::span<const std::uint8_t> bits, std::span<const std::uint8_t> truth) {
  return count_bit_errors(bits, truth).rate();
}

BitMatrix hard_bits(const RMatrix& llr) { return (llr.array() > 0.0).cast<std::uint8_t>(); }

double spectrum_efficiency(double code_rate, int bits_per_symbol, std::uint64_t blocks_ok,
                           std::uint64_t blocks_total) {
  if (blocks_total == 0) throw std::invalid_argument("spectrum_efficiency: zero blocks");
  if (blocks_ok > blocks_total) throw std::invalid_argument("spectrum_efficiency: ok > total");
  return code_rate * bits_per_symbol * static_cast<double>(blocks_ok) / static_cast<double>(blocks_total);
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

void write_csv_row(std::ostream& out, const MetricRecord& r) {
  const auto old_precision = out.precision(17);
  auto opt = [&](const auto& v) {
    out << ',';
    if (v) out << *v;
  };
  out << r.snr_db << ',' << r.precoder << ',' << r.demod << ',' << r.lp << ',' << r.ld;
  opt(r.mi);
  opt(r.ser);
  opt(r.ber_uncoded);
  opt(r.ber_coded);
  opt(r.se);
  opt(r.blocks_ok);
  out << ',' << r.blocks_total << ',' << r.seed << '\n';
  out.precision(old_precision);
}

}  // namespace slp
