#include "slp/precoder.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <string>

namespace slp {

PrecoderKind precoder_from_string(std::string_view s) {
  if (s == "zf") return PrecoderKind::Zf;
  if (s == "cisb") return PrecoderKind::Cisb;
  throw std::invalid_argument("unknown precoder: " + std::string(s));
}

RescaleMode mode_from_string(std::string_view s) {
  if (s == "wr") return RescaleMode::Wr;
  if (s == "wor") return RescaleMode::Wor;
  throw std::invalid_argument("unknown rescale mode: " + std::string(s));
}

ChannelInverse::ChannelInverse(const CMatrix& H) : h_(H) {
  if (H.rows() > H.cols())
    throw std::invalid_argument("ChannelInverse: more users than antennas");
  const CMatrix gram = H * H.adjoint();
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw std::invalid_argument("ChannelInverse: channel is rank deficient");
  const CMatrix gram_inv = llt.solve(CMatrix::Identity(H.rows(), H.rows()));
  pinv_ = H.adjoint() * gram_inv;

  const Eigen::Index k = H.rows();
  hessian_.resize(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) {
      // Hermitian part only; the anti-Hermitian rounding residue is dropped.
      const cdouble a = 0.5 * (gram_inv(i, j) + std::conj(gram_inv(j, i)));
      hessian_.block<2, 2>(2 * i, 2 * j) << a.real(), -a.imag(), a.imag(), a.real();
    }
  hessian_ *= 2.0;
}

RVector interleave(const CVector& s) {
  RVector z(2 * s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    z[2 * k] = s[k].real();
    z[2 * k + 1] = s[k].imag();
  }
  return z;
}

CVector deinterleave(const RVector& z) {
  CVector s(z.size() / 2);
  for (Eigen::Index k = 0; k < s.size(); ++k) s[k] = {z[2 * k], z[2 * k + 1]};
  return s;
}

namespace {

PrecodeResult scale_to_power(const ChannelInverse& inv, CVector target, double power) {
  if (power <= 0) throw std::invalid_argument("precode: transmit power must be positive");
  PrecodeResult r;
  const CVector x0 = inv.pinv() * target;
  const double norm2 = x0.squaredNorm();
  if (!(norm2 > 0)) throw std::invalid_argument("precode: zero target vector");
  r.gamma = std::sqrt(power / norm2);
  r.x = r.gamma * x0;
  r.target = std::move(target);
  return r;
}

}  // namespace

PrecodeResult zf_precode(const ChannelInverse& inv, const CVector& s, double power) {
  if (s.size() != inv.users()) throw std::invalid_argument("zf_precode: symbol count mismatch");
  return scale_to_power(inv, s, power);
}

QpResult cisb_target(const ChannelInverse& inv, std::span<const int> symbols,
                     const ConstellationSpec& spec, const QpOptions& options) {
  const int k = inv.users();
  if (static_cast<int>(symbols.size()) != k)
    throw std::invalid_argument("cisb_target: symbol count mismatch");

  std::vector<std::pair<int, LinearConstraint>> rows;
  RVector start(2 * k);
  for (int u = 0; u < k; ++u) {
    const Vec2 v = spec.point(symbols[u]);
    start.segment<2>(2 * u) = v;
    for (const auto& c : cir_constraints(cir_of(spec, symbols[u]))) rows.emplace_back(u, c);
  }

  QpProblem pb;
  pb.hessian = inv.hessian();
  pb.linear = RVector::Zero(2 * k);
  pb.constraints = RMatrix::Zero(static_cast<Eigen::Index>(rows.size()), 2 * k);
  pb.bounds.resize(static_cast<Eigen::Index>(rows.size()));
  pb.equality.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& [u, c] = rows[r];
    const auto i = static_cast<Eigen::Index>(r);
    pb.constraints.block<1, 2>(i, 2 * u) = c.normal.transpose();
    pb.bounds[i] = c.bound;
    pb.equality[r] = c.equality;
  }
  QpResult result = solve_qp(pb, start, options);
  if (result.kkt_residual > options.tol * std::max(1.0, pb.hessian.lpNorm<Eigen::Infinity>()))
    throw QpError("cisb_target: KKT residual above tolerance", result.kkt_residual);
  return result;
}

PrecodeResult cisb_precode(const ChannelInverse& inv, std::span<const int> symbols,
                           const ConstellationSpec& spec, double power,
                           const QpOptions& options) {
  const QpResult qp = cisb_target(inv, symbols, spec, options);
  PrecodeResult r = scale_to_power(inv, deinterleave(qp.x), power);
  r.qp_iterations = qp.iterations;
  r.kkt_residual = qp.kkt_residual;
  return r;
}

PowerAllocation power_allocate(const RVector& gammas, const RVector& powers) {
  if (gammas.size() != powers.size() || gammas.size() == 0)
    throw std::invalid_argument("power_allocate: gamma and power lengths differ or are empty");
  if ((gammas.array() <= 0).any()) throw std::invalid_argument("power_allocate: gamma must be positive");
  PowerAllocation pa;
  if ((gammas.array() == gammas[0]).all()) {
    pa.gamma_bar = gammas[0];
    pa.scale = RVector::Ones(gammas.size());
    return pa;
  }
  const double denom = (powers.array() / gammas.array().square()).sum();
  pa.gamma_bar = std::sqrt(powers.sum() / denom);
  pa.scale = pa.gamma_bar / gammas.array();
  return pa;
}

cdouble demod_signal(cdouble y, double gamma_bar, RescaleMode mode) {
  if (mode == RescaleMode::Wor) return y;
  if (!(gamma_bar > 0))
    throw std::invalid_argument("demod_signal: rescaling requires a power-allocated block");
  return y / gamma_bar;
}

}  // namespace slp
