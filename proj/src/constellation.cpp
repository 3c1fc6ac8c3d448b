#include "slp/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slp {

namespace {

unsigned gray(unsigned v) { return v ^ (v >> 1); }

int log2_exact(int n) {
  int m = 0;
  while ((1 << m) < n) ++m;
  return m;
}

void assign_sets(ConstellationSpec& spec) {
  spec.inner_set.clear();
  spec.corner_set.clear();
  spec.lateral_set.clear();
  for (int q = 0; q < spec.order; ++q) {
    switch (spec.classes[q]) {
      case PointClass::Inner: spec.inner_set.push_back(q); break;
      case PointClass::Corner: spec.corner_set.push_back(q); break;
      case PointClass::Lateral: spec.lateral_set.push_back(q); break;
    }
  }
}

}  // namespace

int ConstellationSpec::symbol_of_label(unsigned label) const {
  for (int q = 0; q < order; ++q)
    if (labels[q] == label) return q;
  throw std::invalid_argument("symbol_of_label: label not in alphabet");
}

ConstellationSpec build_psk(int order) {
  if (order != 2 && order != 4 && order != 8 && order != 16 && order != 32)
    throw std::invalid_argument("build_psk: order must be one of 2, 4, 8, 16, 32");
  ConstellationSpec spec;
  spec.kind = Modulation::Psk;
  spec.order = order;
  spec.bits_per_symbol = log2_exact(order);
  spec.id = "psk" + std::to_string(order);
  spec.psk_half_angle = std::numbers::pi / order;
  for (int q = 0; q < order; ++q) {
    spec.points.push_back(std::polar(1.0, (q + 0.5) * 2.0 * std::numbers::pi / order));
    spec.labels.push_back(gray(static_cast<unsigned>(q)));
    spec.classes.push_back(PointClass::Corner);
  }
  assign_sets(spec);
  return spec;
}

ConstellationSpec build_qam(int order) {
  if (order != 16 && order != 64)
    throw std::invalid_argument("build_qam: order must be 16 or 64");
  const int side = order == 16 ? 4 : 8;
  const int quarter = order / 4;
  const int half_bits = log2_exact(side);

  // First-quadrant grid positions in units of d.
  std::vector<std::array<int, 2>> base;
  if (order == 16) {
    base = {{1, 1}, {3, 1}, {3, 3}, {1, 3}};
  } else {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) base.push_back({2 * c + 1, 2 * r + 1});
  }

  double energy = 0.0;
  for (const auto& p : base) energy += p[0] * p[0] + p[1] * p[1];
  energy /= quarter;

  ConstellationSpec spec;
  spec.kind = Modulation::Qam;
  spec.order = order;
  spec.bits_per_symbol = log2_exact(order);
  spec.id = "qam" + std::to_string(order);
  spec.d = 1.0 / std::sqrt(energy);

  for (int q = 0; q < order; ++q) {
    auto [x, y] = base[q % quarter];
    for (int k = 0; k < q / quarter; ++k) {  // multiply by j
      const int t = x;
      x = -y;
      y = t;
    }
    spec.points.emplace_back(spec.d * x, spec.d * y);
    const auto level = [side](int c) { return static_cast<unsigned>((c + side - 1) / 2); };
    spec.labels.push_back((gray(level(x)) << half_bits) | gray(level(y)));
    const bool outer_x = std::abs(x) == side - 1;
    const bool outer_y = std::abs(y) == side - 1;
    spec.classes.push_back(outer_x && outer_y   ? PointClass::Corner
                           : outer_x || outer_y ? PointClass::Lateral
                                                : PointClass::Inner);
  }
  assign_sets(spec);
  return spec;
}

ConstellationSpec constellation_from_id(std::string_view id) {
  auto number = [&](std::size_t prefix) {
    const std::string digits(id.substr(prefix));
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit))
      throw std::invalid_argument("unknown constellation id: " + std::string(id));
    return std::stoi(digits);
  };
  if (id.starts_with("psk")) return build_psk(number(3));
  if (id.starts_with("qam")) return build_qam(number(3));
  throw std::invalid_argument("unknown constellation id: " + std::string(id));
}

std::pair<std::vector<int>, std::vector<int>> bit_sets(const ConstellationSpec& spec, int i) {
  if (i < 0 || i >= spec.bits_per_symbol)
    throw std::out_of_range("bit_sets: bit index out of range");
  std::pair<std::vector<int>, std::vector<int>> sets;
  for (int q = 0; q < spec.order; ++q)
    (spec.bit(q, i) ? sets.first : sets.second).push_back(q);
  return sets;
}

CirRegion cir_of(const ConstellationSpec& spec, int q) {
  if (q < 0 || q >= spec.order) throw std::out_of_range("cir_of: symbol index out of range");
  const Vec2 v = spec.point(q);
  if (spec.kind == Modulation::Psk) return ConeRegion{v, spec.psk_half_angle};

  // Outer coordinates sit at +-(side-1)*d; compare in units of d.
  const double outer = std::sqrt(static_cast<double>(spec.order)) - 1.0;
  AxisRegion region;
  for (int a = 0; a < 2; ++a) {
    const double c = v[a];
    if (std::abs(std::abs(c) / spec.d - outer) < 1e-9) {
      region.axes[a] = {AxisConstraint::Kind::HalfLine, c, c > 0 ? 1 : -1};
    } else {
      region.axes[a] = {AxisConstraint::Kind::Equality, c, 0};
    }
  }
  return region;
}

std::vector<LinearConstraint> cir_constraints(const CirRegion& region) {
  std::vector<LinearConstraint> out;
  if (const auto* axes = std::get_if<AxisRegion>(&region)) {
    for (int a = 0; a < 2; ++a) {
      const auto& c = axes->axes[a];
      Vec2 e = Vec2::Zero();
      e[a] = 1.0;
      if (c.kind == AxisConstraint::Kind::Equality) {
        out.push_back({e, c.value, true});
      } else {
        // direction * p_a >= direction * value
        out.push_back({-c.direction * e, -c.direction * c.value, false});
      }
    }
    return out;
  }

  const auto& cone = std::get<ConeRegion>(region);
  const double r = cone.apex.norm();
  const Vec2 along = cone.apex / r;
  const Vec2 across(-along.y(), along.x());
  const double s = std::sin(cone.half_angle);
  const double c = std::cos(cone.half_angle);
  // In the frame aligned with the apex: |p_im| <= (p_re - r) tan(theta).
  if (std::abs(c) < 1e-12) {
    out.push_back({-along, -r, false});
    return out;
  }
  out.push_back({-s * along + c * across, -s * r, false});
  out.push_back({-s * along - c * across, -s * r, false});
  return out;
}

bool cir_contains(const CirRegion& region, const Vec2& p, double tol) {
  for (const auto& lc : cir_constraints(region)) {
    const double lhs = lc.normal.dot(p);
    if (lc.equality ? std::abs(lhs - lc.bound) > tol : lhs - lc.bound > tol) return false;
  }
  return true;
}

int ml_decide(const ConstellationSpec& spec, const Vec2& y) {
  int best = 0;
  double best_dist = (y - spec.point(0)).squaredNorm();
  for (int q = 1; q < spec.order; ++q) {
    const double dist = (y - spec.point(q)).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = q;
    }
  }
  return best;
}

}  // namespace slp
