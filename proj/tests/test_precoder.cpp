#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "slp/channel.hpp"
#include "slp/precoder.hpp"

using namespace slp;

namespace {

std::vector<int> random_symbols(int k, int order, Rng& rng) {
  std::uniform_int_distribution<int> u(0, order - 1);
  std::vector<int> s(k);
  for (auto& q : s) q = u(rng);
  return s;
}

CVector nominal(const ConstellationSpec& spec, const std::vector<int>& s) {
  CVector v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t k = 0; k < s.size(); ++k) v[static_cast<Eigen::Index>(k)] = spec.points[s[k]];
  return v;
}

double target_power(const ChannelInverse& inv, const CVector& t) { return (inv.pinv() * t).squaredNorm(); }

}  // namespace

TEST_SUITE("qp") {
  TEST_CASE("box-constrained quadratic") {
    // min 1/2 |x - (2, -1)|^2 s.t. x0 <= 1, x1 >= 0, x0 + x1 = 1.5; optimum (1, 0.5).
    QpProblem pb;
    pb.hessian = RMatrix::Identity(2, 2);
    pb.linear = RVector(2);
    pb.linear << -2, 1;
    pb.constraints.resize(3, 2);
    pb.constraints << 1, 0, 0, -1, 1, 1;
    pb.bounds.resize(3);
    pb.bounds << 1, 0, 1.5;
    pb.equality = {false, false, true};
    RVector start(2);
    start << 0.75, 0.75;
    const QpResult r = solve_qp(pb, start);
    CHECK(r.x[0] == doctest::Approx(1.0));
    CHECK(r.x[1] == doctest::Approx(0.5));
    CHECK(r.kkt_residual < 1e-10);
    CHECK(r.multipliers[0] > 0);
    CHECK(r.multipliers[1] == 0.0);
  }

  TEST_CASE("unconstrained minimum is reached in one step") {
    QpProblem pb;
    pb.hessian = RMatrix::Identity(3, 3) * 2;
    pb.linear = RVector::Constant(3, -2.0);
    pb.constraints.resize(1, 3);
    pb.constraints << 1, 1, 1;
    pb.bounds = RVector::Constant(1, 10.0);
    pb.equality = {false};
    const QpResult r = solve_qp(pb, RVector::Zero(3));
    CHECK((r.x - RVector::Ones(3)).norm() < 1e-12);
    CHECK(r.iterations <= 2);
  }

  TEST_CASE("infeasible start is rejected") {
    QpProblem pb;
    pb.hessian = RMatrix::Identity(1, 1);
    pb.linear = RVector::Zero(1);
    pb.constraints = RMatrix::Ones(1, 1);
    pb.bounds = RVector::Zero(1);
    pb.equality = {false};
    CHECK_THROWS_AS(solve_qp(pb, RVector::Ones(1)), QpError);
  }
}

TEST_SUITE("precoder") {
  TEST_CASE("parsing") {
    CHECK(precoder_from_string("zf") == PrecoderKind::Zf);
    CHECK(precoder_from_string("cisb") == PrecoderKind::Cisb);
    CHECK_THROWS(precoder_from_string("mmse"));
    CHECK(mode_from_string("wr") == RescaleMode::Wr);
    CHECK(mode_from_string("wor") == RescaleMode::Wor);
    CHECK_THROWS(mode_from_string("x"));
  }

  TEST_CASE("ZF precoding") {
    CVector s(3);
    s << cdouble(1, 1), cdouble(-0.5, 2), cdouble(0, -1);
    const ChannelInverse id(CMatrix::Identity(3, 3));
    const PrecodeResult r = zf_precode(id, s, 2.0);
    CHECK(r.gamma == doctest::Approx(std::sqrt(2.0 / s.squaredNorm())));
    CHECK((r.x - r.gamma * s).norm() < 1e-12);

    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const CMatrix H = draw_rayleigh(2, 2, rng).H;
      const ChannelInverse inv(H);
      CVector t(2);
      t << complex_normal(rng), complex_normal(rng);
      const PrecodeResult z = zf_precode(inv, t);
      CHECK(std::abs(z.x.squaredNorm() - 1.0) < 1e-10);
      CHECK((H * z.x - z.gamma * t).norm() < 1e-9);
    }
  }

  TEST_CASE("rank-deficient channels are rejected") {
    CMatrix H(2, 3);
    H << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_AS(ChannelInverse{H}, std::invalid_argument);
    CHECK_THROWS_AS(ChannelInverse{CMatrix::Ones(3, 2)}, std::invalid_argument);
  }

  TEST_CASE("all-inner 16QAM symbols give s~ = s and the ZF output") {
    const auto spec = build_qam(16);
    Rng rng(8);
    const ChannelInverse inv(draw_rayleigh(6, 4, rng).H);
    const std::vector<int> s{0, 4, 8, 12};
    const PrecodeResult c = cisb_precode(inv, s, spec);
    const PrecodeResult z = zf_precode(inv, nominal(spec, s));
    CHECK((c.target - nominal(spec, s)).norm() == 0.0);
    CHECK((c.x - z.x).norm() < 1e-12);
    CHECK(c.gamma == doctest::Approx(z.gamma).epsilon(1e-12));
  }

  TEST_CASE("CISB output properties") {
    Rng rng(12);
    for (const auto& spec : {build_psk(8), build_psk(16), build_qam(16), build_qam(64)}) {
      CAPTURE(spec.id);
      for (int trial = 0; trial < 200; ++trial) {
        const ChannelInverse inv(draw_rayleigh(8, 8, rng).H);
        const auto s = random_symbols(8, spec.size(), rng);
        const QpResult qp = cisb_target(inv, s, spec);
        const CVector t = deinterleave(qp.x);
        CHECK(qp.kkt_residual < 1e-8 * std::max(1.0, inv.hessian().lpNorm<Eigen::Infinity>()));
        CHECK(target_power(inv, t) <= target_power(inv, nominal(spec, s)) + 1e-12);
        for (int k = 0; k < 8; ++k) CHECK(cir_contains(cir_of(spec, s[k]), to_vec2(t[k]), 1e-8));
        const PrecodeResult c = cisb_precode(inv, s, spec);
        CHECK(std::abs(c.x.squaredNorm() - 1.0) < 1e-10);
        CHECK((inv.channel() * c.x - c.gamma * c.target).norm() < 1e-8);
      }
    }
  }

  TEST_CASE("CISB never loses to ZF") {
    Rng rng(21);
    const auto spec = build_psk(8);
    for (int trial = 0; trial < 1000; ++trial) {
      const ChannelInverse inv(draw_rayleigh(4, 4, rng).H);
      const auto s = random_symbols(4, 8, rng);
      const double g_cisb = cisb_precode(inv, s, spec).gamma;
      const double g_zf = zf_precode(inv, nominal(spec, s)).gamma;
      CHECK(g_cisb >= g_zf * (1 - 1e-12));
    }
  }

  TEST_CASE("no feasible perturbation improves the CISB objective") {
    Rng rng(33);
    std::normal_distribution<double> nd;
    for (const auto& spec : {build_psk(8), build_qam(16)}) {
      int total_tested = 0;
      for (int trial = 0; trial < 30; ++trial) {
        const ChannelInverse inv(draw_rayleigh(4, 2, rng).H);
        const auto s = random_symbols(2, spec.size(), rng);
        const CVector t = deinterleave(cisb_target(inv, s, spec).x);
        const double f = target_power(inv, t);
        const std::array<CirRegion, 2> regions{cir_of(spec, s[0]), cir_of(spec, s[1])};
        int tested = 0;
        for (int attempt = 0; attempt < 4000 && tested < 200; ++attempt) {
          RVector dir(4);
          for (auto& v : dir) v = nd(rng);
          // Equality-constrained QAM components cannot move.
          for (int k = 0; k < 2; ++k)
            if (const auto* ax = std::get_if<AxisRegion>(&regions[k]))
              for (int d = 0; d < 2; ++d)
                if (ax->axes[d].kind == AxisConstraint::Kind::Equality) dir[2 * k + d] = 0;
          if (dir.norm() == 0) break;
          dir *= 1e-3 / dir.norm();
          const CVector p = t + deinterleave(dir);
          bool feasible = true;
          for (int k = 0; k < 2; ++k) feasible = feasible && cir_contains(regions[k], to_vec2(p[k]), 1e-12);
          if (!feasible) continue;
          ++tested;
          CHECK(target_power(inv, p) >= f - 1e-9);
        }
        total_tested += tested;
      }
      CHECK(total_tested > 300);
    }
  }

  TEST_CASE("CISB matches the dense grid-search oracle (K=2, 8PSK)") {
    Rng rng(77);
    const auto spec = build_psk(8);
    for (int trial = 0; trial < 5; ++trial) {
      const CMatrix H = draw_rayleigh(4, 2, rng).H;
      const ChannelInverse inv(H);
      const auto s = random_symbols(2, 8, rng);
      const QpResult qp = cisb_target(inv, s, spec);
      const CMatrix A = (H * H.adjoint()).inverse();
      const double grid = oracle::cisb_grid_objective(A, {spec.points[s[0]], spec.points[s[1]]}, spec.psk_half_angle);
      const double f = target_power(inv, deinterleave(qp.x));
      CHECK(f == doctest::Approx(qp.objective).epsilon(1e-9));
      CHECK(std::abs(f - grid) < 1e-3);
      CHECK(f <= grid + 1e-12);
    }
  }

  TEST_CASE("rotating all symbols rotates the precoder output") {
    Rng rng(5);
    for (const auto& [spec, step] : {std::pair{build_psk(8), 1}, std::pair{build_qam(16), 4}}) {
      for (int trial = 0; trial < 50; ++trial) {
        const ChannelInverse inv(draw_rayleigh(4, 4, rng).H);
        const auto s = random_symbols(4, spec.size(), rng);
        const int m = step * std::uniform_int_distribution<int>(1, spec.size() / step - 1)(rng);
        std::vector<int> r(s);
        for (auto& q : r) q = (q + m) % spec.size();
        const PrecodeResult a = cisb_precode(inv, s, spec);
        const PrecodeResult b = cisb_precode(inv, r, spec);
        const cdouble phase = std::polar(1.0, 2 * std::numbers::pi * m / spec.size());
        CHECK((b.x - a.x * phase).norm() <= 1e-6 * a.x.norm());
        CHECK(std::abs(b.gamma - a.gamma) <= 1e-6 * a.gamma);
      }
    }
  }

  TEST_CASE("power allocation") {
    RVector g = RVector::Constant(5, 0.37);
    PowerAllocation pa = power_allocate(g, RVector::Ones(5));
    CHECK(pa.gamma_bar == 0.37);
    CHECK(pa.scale == RVector::Ones(5));

    RVector g2(2);
    g2 << 1, 2;
    pa = power_allocate(g2, RVector::Ones(2));
    CHECK(pa.gamma_bar == doctest::Approx(std::sqrt(1.6)).epsilon(1e-15));

    Rng rng(2);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    RVector g3(100), p3(100);
    for (int i = 0; i < 100; ++i) {
      g3[i] = u(rng);
      p3[i] = u(rng);
    }
    pa = power_allocate(g3, p3);
    // ||x[l]||^2 = P_T[l] before scaling, so the scaled total is sum P_T scale^2.
    CHECK(std::abs((p3.array() * pa.scale.array().square()).sum() - p3.sum()) < 1e-9);

    RVector bad(2);
    bad << 1, 0;
    CHECK_THROWS(power_allocate(bad, RVector::Ones(2)));
    bad << 1, -2;
    CHECK_THROWS(power_allocate(bad, RVector::Ones(2)));
    CHECK_THROWS(power_allocate(RVector::Ones(2), RVector::Ones(3)));
  }

  TEST_CASE("signal handed to the demodulator") {
    const auto spec = build_qam(16);
    const cdouble v = spec.points[5];
    CHECK(demod_signal(2.0 * v, 2.0, RescaleMode::Wr) == v);
    CHECK(demod_signal(cdouble(0.3, -4), 7.0, RescaleMode::Wor) == cdouble(0.3, -4));
    CHECK_THROWS(demod_signal(v, 0.0, RescaleMode::Wr));

    // Noiseless WR: inner QAM symbols arrive exactly at their nominal points.
    Rng rng(6);
    const CMatrix H = draw_rayleigh(4, 4, rng).H;
    const ChannelInverse inv(H);
    const std::vector<int> s{0, 4, 8, 12};
    const PrecodeResult r = cisb_precode(inv, s, spec);
    RVector g = RVector::Constant(1, r.gamma);
    const PowerAllocation pa = power_allocate(g, RVector::Ones(1));
    const CVector y = H * (r.x * pa.scale[0]);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(demod_signal(y[k], pa.gamma_bar, RescaleMode::Wr) - spec.points[s[k]]) < 1e-12);
  }
}
