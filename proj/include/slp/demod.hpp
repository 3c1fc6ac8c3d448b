#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "slp/constellation.hpp"
#include "slp/gmm.hpp"
#include "slp/types.hpp"

namespace slp {

enum class DemodKind { Gaus, MGaus, Gmm, Pfen };
DemodKind demod_from_string(std::string_view s);
std::string_view to_string(DemodKind kind);

inline constexpr double kLlrClamp = 50.0;
// Lower bound on estimated Gaussian variances (noise-free pilots).
inline constexpr double kVarianceFloor = 1e-12;

/// Received 2-D signals with the index of the transmitted symbol.
struct LabeledSignals {
  Points y;
  std::vector<int> symbols;

  Eigen::Index size() const { return y.rows(); }
};

/// Per-symbol soft output. llr(l, i) > 0 means bit i of symbol l is more
/// likely 1. `bits` holds the transmitted bits when they are known.
struct LlrFrame {
  RMatrix llr;
  BitMatrix bits;
  std::size_t degenerate = 0;  // symbols whose likelihoods all underflowed
};

/// Transformed pilot pools, one per point class. PSK uses only `corner`.
struct PilotSets {
  Points inner;
  Points corner;
  Points lateral;
  std::optional<double> gamma_bar;  // present with receiver rescaling
};

struct ClassParams {
  std::optional<GmmParams> inner;
  std::optional<GmmParams> corner;
  std::optional<GmmParams> lateral;
};

// y * exp(-j t 2 pi / order). Quarter turns are applied exactly.
template <typename Derived>
Vector2<typename Derived::Scalar> rotate(const Eigen::MatrixBase<Derived>& y, int t, int order) {
  using Scalar = typename Derived::Scalar;
  const Vector2<Scalar> v = y;
  const long num = static_cast<long>(t) * 4;
  if (num % order == 0) {
    int quarters = static_cast<int>(((num / order) % 4 + 4) % 4);
    Vector2<Scalar> r = v;
    for (; quarters > 0; --quarters) r = Vector2<Scalar>(r.y(), -r.x());  // times -j
    return r;
  }
  const Scalar angle = -Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(t) / Scalar(order);
  const Scalar c = std::cos(angle);
  const Scalar s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Swap of real and imaginary parts (reflection about y = x).
template <typename Derived>
Vector2<typename Derived::Scalar> mirror(const Eigen::MatrixBase<Derived>& y) {
  return {y(1), y(0)};
}

// For 64QAM signals already rotated and mirrored into the first quadrant:
// shifts inner-class signals so their nominal point lands on (d, d) and
// lateral-class signals so theirs lands on (7d, d). `q` is the original
// symbol index.
Vec2 translate64(const Vec2& y, int q, const ConstellationSpec& spec);

// Maps a signal received for symbol q onto the canonical representative of
// q's point class.
Vec2 transform(const Vec2& y, int q, const ConstellationSpec& spec);

PilotSets build_pilot_sets(const LabeledSignals& pilots, const ConstellationSpec& spec,
                           std::optional<double> gamma_bar = std::nullopt);

// LLR_i = log sum_{S_i^+} f_q - log sum_{S_i^-} f_q from log-likelihoods,
// clamped to +-kLlrClamp. Returns false when every likelihood underflowed
// (the LLRs are then zero).
bool llr_from_likelihoods(std::span<const double> log_likelihoods, const ConstellationSpec& spec,
                          std::span<double> llr_out);

double gaussian_variance(const LabeledSignals& pilots, const ConstellationSpec& spec);
double inner_variance(const LabeledSignals& pilots, const ConstellationSpec& spec);

// Complex Gaussian likelihoods around the nominal points with a fixed variance.
LlrFrame gaussian_llr(const LabeledSignals& data, const ConstellationSpec& spec, double variance);

LlrFrame gaussian_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                        const ConstellationSpec& spec);
LlrFrame mgaus_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                     const ConstellationSpec& spec);

ClassParams fit_class_params(const PilotSets& sets, const ConstellationSpec& spec,
                             const EmConfig& em);

LlrFrame external_gmm_demod(const LabeledSignals& data, const ConstellationSpec& spec,
                            const ClassParams& params);

LlrFrame gmm_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                   const ConstellationSpec& spec, std::optional<double> gamma_bar,
                   const EmConfig& em, ClassParams* fitted = nullptr);

// Per-symbol log-likelihoods (rows: signals, cols: symbols) under class GMMs.
RMatrix gmm_log_likelihoods(const Points& y, const ConstellationSpec& spec,
                            const ClassParams& params);

}  // namespace slp
