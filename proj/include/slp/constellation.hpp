#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "slp/types.hpp"

namespace slp {

enum class Modulation { Psk, Qam };

// Inner: neither real component on the outer edge. Corner: both. Lateral: one.
// Every PSK point is a corner point.
enum class PointClass { Inner, Corner, Lateral };

/// A unit-energy PSK or square-QAM alphabet with Gray bit labels.
///
/// QAM indices follow the quadrant-rotation layout: the first Q/4 indices
/// cover the first quadrant and v[q] = v[q mod Q/4] * j^(q / (Q/4)), so the
/// inner-most point of each quadrant sits at an index divisible by Q/4.
/// Bit i of a symbol is counted from the most significant label bit.
struct ConstellationSpec {
  Modulation kind = Modulation::Psk;
  int order = 0;
  int bits_per_symbol = 0;
  std::string id;
  std::vector<cdouble> points;
  std::vector<unsigned> labels;
  std::vector<int> inner_set;
  std::vector<int> corner_set;
  std::vector<int> lateral_set;
  std::vector<PointClass> classes;
  double d = 0.0;               // half spacing between adjacent QAM points
  double psk_half_angle = 0.0;  // pi/Q, PSK only

  int size() const { return order; }
  Vec2 point(int q) const { return to_vec2(points[q]); }
  int bit(int q, int i) const { return (labels[q] >> (bits_per_symbol - 1 - i)) & 1U; }
  PointClass class_of(int q) const { return classes[q]; }
  int symbol_of_label(unsigned label) const;
};

ConstellationSpec build_psk(int order);
ConstellationSpec build_qam(int order);
// "psk2".."psk32", "qam16", "qam64"
ConstellationSpec constellation_from_id(std::string_view id);

// (indices whose bit i is 1, indices whose bit i is 0)
std::pair<std::vector<int>, std::vector<int>> bit_sets(const ConstellationSpec& spec, int i);

// Constructive interference regions.

struct AxisConstraint {
  enum class Kind { Equality, HalfLine };
  Kind kind = Kind::Equality;
  double value = 0.0;
  int direction = 0;  // +1: component >= value, -1: component <= value
};

struct AxisRegion {
  std::array<AxisConstraint, 2> axes;  // real, imaginary
};

struct ConeRegion {
  Vec2 apex;
  double half_angle = 0.0;
};

using CirRegion = std::variant<AxisRegion, ConeRegion>;

// a . p <= bound, or a . p == bound for equalities.
struct LinearConstraint {
  Vec2 normal;
  double bound = 0.0;
  bool equality = false;
};

CirRegion cir_of(const ConstellationSpec& spec, int q);
std::vector<LinearConstraint> cir_constraints(const CirRegion& region);
bool cir_contains(const CirRegion& region, const Vec2& p, double tol = 1e-9);

// Nearest point; ties go to the smaller index.
int ml_decide(const ConstellationSpec& spec, const Vec2& y);

}  // namespace slp
