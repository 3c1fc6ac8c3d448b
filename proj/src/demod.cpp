#include "slp/demod.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>

namespace slp {

DemodKind demod_from_string(std::string_view s) {
  if (s == "gaus") return DemodKind::Gaus;
  if (s == "mgaus") return DemodKind::MGaus;
  if (s == "gmm") return DemodKind::Gmm;
  if (s == "pfen") return DemodKind::Pfen;
  throw std::invalid_argument("unknown demodulator: " + std::string(s));
}

std::string_view to_string(DemodKind kind) {
  switch (kind) {
    case DemodKind::Gaus: return "gaus";
    case DemodKind::MGaus: return "mgaus";
    case DemodKind::Gmm: return "gmm";
    case DemodKind::Pfen: return "pfen";
  }
  return "?";
}

namespace {

// First-quadrant representative of q in units of d, after the mirror step.
std::pair<int, int> canonical_grid(int q, const ConstellationSpec& spec) {
  const Vec2 v = rotate(spec.point(q), (spec.order / 4) * (q / (spec.order / 4)), spec.order);
  int x = static_cast<int>(std::lround(v.x() / spec.d));
  int y = static_cast<int>(std::lround(v.y() / spec.d));
  const int outer = static_cast<int>(std::lround(std::sqrt(spec.order))) - 1;
  if (spec.class_of(q) == PointClass::Lateral && y == outer) std::swap(x, y);
  return {x, y};
}

bool needs_mirror(int q, const ConstellationSpec& spec) {
  if (spec.class_of(q) != PointClass::Lateral) return false;
  const Vec2 v = rotate(spec.point(q), (spec.order / 4) * (q / (spec.order / 4)), spec.order);
  return std::abs(v.y()) > std::abs(v.x());
}

double log_sum_exp(const double* v, const std::vector<int>& idx) {
  double top = -std::numeric_limits<double>::infinity();
  for (int q : idx) top = std::max(top, v[q]);
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double sum = 0;
  for (int q : idx) sum += std::exp(v[q] - top);
  return top + std::log(sum);
}

struct BitPartition {
  std::vector<std::vector<int>> ones;
  std::vector<std::vector<int>> zeros;
};

BitPartition partition(const ConstellationSpec& spec) {
  BitPartition p;
  for (int i = 0; i < spec.bits_per_symbol; ++i) {
    auto [one, zero] = bit_sets(spec, i);
    p.ones.push_back(std::move(one));
    p.zeros.push_back(std::move(zero));
  }
  return p;
}

// Returns false when every likelihood underflowed.
bool llr_with_partition(const double* lik, int order, const BitPartition& parts, double* out) {
  bool any = false;
  for (int q = 0; q < order; ++q) any = any || lik[q] > -std::numeric_limits<double>::infinity();
  const auto bps = parts.ones.size();
  if (!any) {
    std::fill(out, out + bps, 0.0);
    return false;
  }
  for (std::size_t i = 0; i < bps; ++i)
    out[i] = std::clamp(log_sum_exp(lik, parts.ones[i]) - log_sum_exp(lik, parts.zeros[i]),
                        -kLlrClamp, kLlrClamp);
  return true;
}

template <typename LogLikelihood>
LlrFrame demodulate(const LabeledSignals& data, const ConstellationSpec& spec, LogLikelihood&& loglik) {
  const Eigen::Index n = data.size();
  const int bps = spec.bits_per_symbol;
  const BitPartition parts = partition(spec);
  LlrFrame frame;
  frame.llr.resize(n, bps);
  std::vector<double> lik(spec.order);
  std::vector<double> llr(bps);
  for (Eigen::Index l = 0; l < n; ++l) {
    const Vec2 y = data.y.row(l).transpose();
    for (int q = 0; q < spec.order; ++q) lik[q] = loglik(l, y, q);
    if (!llr_with_partition(lik.data(), spec.order, parts, llr.data())) ++frame.degenerate;
    for (int i = 0; i < bps; ++i) frame.llr(l, i) = llr[i];
  }
  if (!data.symbols.empty()) {
    if (static_cast<Eigen::Index>(data.symbols.size()) != n)
      throw std::invalid_argument("demodulate: symbol labels do not match signal count");
    frame.bits.resize(n, bps);
    for (Eigen::Index l = 0; l < n; ++l)
      for (int i = 0; i < bps; ++i) frame.bits(l, i) = static_cast<std::uint8_t>(spec.bit(data.symbols[l], i));
  }
  return frame;
}

void check_labels(const LabeledSignals& s, const ConstellationSpec& spec, const char* who) {
  if (static_cast<Eigen::Index>(s.symbols.size()) != s.size())
    throw std::invalid_argument(std::string(who) + ": every pilot needs its transmitted symbol");
  for (int q : s.symbols)
    if (q < 0 || q >= spec.order) throw std::out_of_range(std::string(who) + ": symbol index out of range");
}

}  // namespace

Vec2 translate64(const Vec2& y, int q, const ConstellationSpec& spec) {
  if (spec.kind != Modulation::Qam || spec.order != 64)
    throw std::invalid_argument("translate64: constellation is not 64QAM");
  const auto [gx, gy] = canonical_grid(q, spec);
  switch (spec.class_of(q)) {
    case PointClass::Inner: return y - spec.d * Vec2(gx - 1, gy - 1);
    case PointClass::Lateral: return y - spec.d * Vec2(0, gy - 1);
    case PointClass::Corner: return y;
  }
  return y;
}

Vec2 transform(const Vec2& y, int q, const ConstellationSpec& spec) {
  if (q < 0 || q >= spec.order) throw std::out_of_range("transform: symbol index out of range");
  if (spec.kind == Modulation::Psk) return rotate(y, q, spec.order);
  const int quarter = spec.order / 4;
  Vec2 r = rotate(y, quarter * (q / quarter), spec.order);
  if (needs_mirror(q, spec)) r = mirror(r);
  if (spec.order == 64) r = translate64(r, q, spec);
  return r;
}

PilotSets build_pilot_sets(const LabeledSignals& pilots, const ConstellationSpec& spec,
                           std::optional<double> gamma_bar) {
  check_labels(pilots, spec, "build_pilot_sets");
  std::array<std::vector<Vec2>, 3> pools;
  for (Eigen::Index l = 0; l < pilots.size(); ++l) {
    const int q = pilots.symbols[l];
    pools[static_cast<int>(spec.class_of(q))].push_back(transform(pilots.y.row(l).transpose(), q, spec));
  }
  auto to_points = [](const std::vector<Vec2>& v) {
    Points p(static_cast<Eigen::Index>(v.size()), 2);
    for (std::size_t i = 0; i < v.size(); ++i) p.row(i) = v[i].transpose();
    return p;
  };
  PilotSets sets;
  sets.inner = to_points(pools[static_cast<int>(PointClass::Inner)]);
  sets.corner = to_points(pools[static_cast<int>(PointClass::Corner)]);
  sets.lateral = to_points(pools[static_cast<int>(PointClass::Lateral)]);
  sets.gamma_bar = gamma_bar;
  if (sets.corner.rows() == 0 ||
      (spec.kind == Modulation::Qam && (sets.inner.rows() == 0 || sets.lateral.rows() == 0)))
    throw std::invalid_argument(
        "build_pilot_sets: a point class has no pilots; use more pilots or a balanced pilot schedule");
  return sets;
}

bool llr_from_likelihoods(std::span<const double> loglik, const ConstellationSpec& spec,
                          std::span<double> out) {
  if (static_cast<int>(loglik.size()) != spec.order || static_cast<int>(out.size()) != spec.bits_per_symbol)
    throw std::invalid_argument("llr_from_likelihoods: size mismatch");
  return llr_with_partition(loglik.data(), spec.order, partition(spec), out.data());
}

double gaussian_variance(const LabeledSignals& pilots, const ConstellationSpec& spec) {
  check_labels(pilots, spec, "gaussian_variance");
  if (pilots.size() == 0) throw std::invalid_argument("gaussian_variance: no pilots");
  double sum = 0;
  for (Eigen::Index l = 0; l < pilots.size(); ++l)
    sum += (pilots.y.row(l).transpose() - spec.point(pilots.symbols[l])).squaredNorm();
  return sum / static_cast<double>(pilots.size());
}

double inner_variance(const LabeledSignals& pilots, const ConstellationSpec& spec) {
  if (spec.inner_set.empty())
    throw std::invalid_argument("inner_variance: constellation has no inner points (PSK)");
  check_labels(pilots, spec, "inner_variance");
  double sum = 0;
  std::size_t count = 0;
  for (Eigen::Index l = 0; l < pilots.size(); ++l) {
    const int q = pilots.symbols[l];
    if (spec.class_of(q) != PointClass::Inner) continue;
    sum += (pilots.y.row(l).transpose() - spec.point(q)).squaredNorm();
    ++count;
  }
  if (count == 0) throw std::invalid_argument("inner_variance: no inner-symbol pilots");
  return sum / static_cast<double>(count);
}

LlrFrame gaussian_llr(const LabeledSignals& data, const ConstellationSpec& spec, double variance) {
  const double var = std::max(variance, kVarianceFloor);
  const double log_norm = -std::log(std::numbers::pi * var);
  return demodulate(data, spec, [&](Eigen::Index, const Vec2& y, int q) {
    return log_norm - (y - spec.point(q)).squaredNorm() / var;
  });
}

LlrFrame gaussian_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                        const ConstellationSpec& spec) {
  return gaussian_llr(data, spec, gaussian_variance(pilots, spec));
}

LlrFrame mgaus_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                     const ConstellationSpec& spec) {
  if (spec.kind == Modulation::Psk)
    throw std::invalid_argument("mgaus_demod: PSK has no inner points");
  return gaussian_llr(data, spec, inner_variance(pilots, spec));
}

ClassParams fit_class_params(const PilotSets& sets, const ConstellationSpec& spec, const EmConfig& em) {
  ClassParams params;
  params.corner = em_fit(sets.corner, em).params;
  if (spec.kind == Modulation::Qam) {
    EmConfig c = em;
    c.seed = em.seed + 1;
    params.inner = em_fit(sets.inner, c).params;
    c.seed = em.seed + 2;
    params.lateral = em_fit(sets.lateral, c).params;
  }
  return params;
}

RMatrix gmm_log_likelihoods(const Points& y, const ConstellationSpec& spec, const ClassParams& params) {
  auto require = [&](const std::optional<GmmParams>& p, const char* name) -> const GmmParams& {
    if (!p) throw std::invalid_argument(std::string("gmm demod: missing ") + name + " class parameters");
    return *p;
  };
  const GmmDensity<double> corner(require(params.corner, "corner"));
  std::optional<GmmDensity<double>> inner, lateral;
  if (spec.kind == Modulation::Qam) {
    inner.emplace(require(params.inner, "inner"));
    lateral.emplace(require(params.lateral, "lateral"));
  }
  RMatrix out(y.rows(), spec.order);
  for (Eigen::Index l = 0; l < y.rows(); ++l) {
    const Vec2 v = y.row(l).transpose();
    for (int q = 0; q < spec.order; ++q) {
      const Vec2 t = transform(v, q, spec);
      switch (spec.class_of(q)) {
        case PointClass::Corner: out(l, q) = corner.log_pdf(t); break;
        case PointClass::Inner: out(l, q) = inner->log_pdf(t); break;
        case PointClass::Lateral: out(l, q) = lateral->log_pdf(t); break;
      }
    }
  }
  return out;
}

LlrFrame external_gmm_demod(const LabeledSignals& data, const ConstellationSpec& spec,
                            const ClassParams& params) {
  const RMatrix lik = gmm_log_likelihoods(data.y, spec, params);
  return demodulate(data, spec, [&](Eigen::Index l, const Vec2&, int q) { return lik(l, q); });
}

LlrFrame gmm_demod(const LabeledSignals& pilots, const LabeledSignals& data,
                   const ConstellationSpec& spec, std::optional<double> gamma_bar,
                   const EmConfig& em, ClassParams* fitted) {
  const PilotSets sets = build_pilot_sets(pilots, spec, gamma_bar);
  ClassParams params = fit_class_params(sets, spec, em);
  LlrFrame frame = external_gmm_demod(data, spec, params);
  if (fitted) *fitted = std::move(params);
  return frame;
}

}  // namespace slp
