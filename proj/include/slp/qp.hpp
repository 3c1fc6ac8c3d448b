#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "slp/types.hpp"

namespace slp {

/// Dense strictly convex QP:
///   minimize   1/2 x' P x + c' x
///   subject to a_i' x == b_i  (equality rows)
///              a_i' x <= b_i  (all other rows)
struct QpProblem {
  RMatrix hessian;
  RVector linear;
  RMatrix constraints;  // one row per constraint
  RVector bounds;
  std::vector<bool> equality;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct QpResult {
  RVector x;
  RVector multipliers;  // one per constraint, zero when inactive
  std::vector<int> active;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

class QpError : public std::runtime_error {
 public:
  QpError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Primal active-set method started from a feasible point. The working set is
// seeded with every constraint active at the start that is linearly
// independent of those already taken. Blocking ties and multiplier ties are
// broken by the lowest constraint index.
QpResult solve_qp(const QpProblem& problem, const RVector& feasible_start,
                  const QpOptions& options = {});

// Max of stationarity, primal violation, dual violation and complementarity.
double kkt_residual(const QpProblem& problem, const RVector& x, const RVector& multipliers);

}  // namespace slp
