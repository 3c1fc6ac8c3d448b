#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "slp/constellation.hpp"
#include "slp/qp.hpp"
#include "slp/types.hpp"

namespace slp {

enum class PrecoderKind { Zf, Cisb };
enum class RescaleMode { Wr, Wor };

PrecoderKind precoder_from_string(std::string_view s);
RescaleMode mode_from_string(std::string_view s);

/// Pseudo-inverse data for one channel realization, shared by every symbol
/// of a block.
class ChannelInverse {
 public:
  // Throws std::invalid_argument when H is not of full row rank.
  explicit ChannelInverse(const CMatrix& H);

  const CMatrix& channel() const { return h_; }
  const CMatrix& pinv() const { return pinv_; }  // H^H (H H^H)^-1
  // Real form of 2 (H H^H)^-1 on interleaved (re, im) coordinates, so that
  // ||H^+ s||^2 = 1/2 z' P z.
  const RMatrix& hessian() const { return hessian_; }
  int users() const { return static_cast<int>(h_.rows()); }
  int antennas() const { return static_cast<int>(h_.cols()); }

 private:
  CMatrix h_;
  CMatrix pinv_;
  RMatrix hessian_;
};

struct PrecodeResult {
  CVector x;
  double gamma = 0.0;
  CVector target;  // s~, the noise-free received signal divided by gamma
  int qp_iterations = 0;
  double kkt_residual = 0.0;
};

RVector interleave(const CVector& s);
CVector deinterleave(const RVector& z);

PrecodeResult zf_precode(const ChannelInverse& inv, const CVector& s, double power = 1.0);

// Minimizes ||H^+ s~||^2 over s~_k in the CIR of symbols[k]. QAM components
// are equality / half-line constraints; PSK cones are two half-planes.
QpResult cisb_target(const ChannelInverse& inv, std::span<const int> symbols,
                     const ConstellationSpec& spec, const QpOptions& options = {});

PrecodeResult cisb_precode(const ChannelInverse& inv, std::span<const int> symbols,
                           const ConstellationSpec& spec, double power = 1.0,
                           const QpOptions& options = {});

struct PowerAllocation {
  double gamma_bar = 0.0;
  RVector scale;  // gamma_bar / gamma[l], applied to x[l]
};

PowerAllocation power_allocate(const RVector& gammas, const RVector& powers);

// Signal handed to the demodulator: y / gamma_bar with rescaling, y unchanged
// without.
cdouble demod_signal(cdouble y, double gamma_bar, RescaleMode mode);

}  // namespace slp
