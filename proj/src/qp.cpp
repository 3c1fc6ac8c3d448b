#include "slp/qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace slp {

namespace {

// Rows of `basis` are orthonormal; returns true and extends the basis when
// `row` is not in their span.
bool extend_basis(std::vector<RVector>& basis, const RVector& row) {
  RVector r = row;
  for (const auto& b : basis) r -= b.dot(r) * b;
  const double n = r.norm();
  if (n <= 1e-10 * std::max(1.0, row.norm())) return false;
  basis.push_back(r / n);
  return true;
}

}  // namespace

double kkt_residual(const QpProblem& pb, const RVector& x, const RVector& lambda) {
  double res = (pb.hessian * x + pb.linear + pb.constraints.transpose() * lambda)
                   .lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < pb.constraints.rows(); ++i) {
    const double slack = pb.constraints.row(i).dot(x) - pb.bounds[i];
    if (pb.equality[i]) {
      res = std::max(res, std::abs(slack));
    } else {
      res = std::max({res, slack, -lambda[i], std::abs(lambda[i] * slack)});
    }
  }
  return res;
}

QpResult solve_qp(const QpProblem& pb, const RVector& start, const QpOptions& opt) {
  const Eigen::Index n = pb.hessian.rows();
  const Eigen::Index m = pb.constraints.rows();
  if (pb.hessian.cols() != n || start.size() != n || pb.linear.size() != n ||
      (m > 0 && pb.constraints.cols() != n) || pb.bounds.size() != m ||
      static_cast<Eigen::Index>(pb.equality.size()) != m)
    throw std::invalid_argument("solve_qp: inconsistent problem dimensions");

  Eigen::LLT<RMatrix> llt(pb.hessian);
  if (llt.info() != Eigen::Success) throw QpError("solve_qp: Hessian is not positive definite", 0);

  RVector x = start;
  const double scale = std::max(1.0, x.lpNorm<Eigen::Infinity>());

  std::vector<int> work;
  std::vector<RVector> basis;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double slack = pb.constraints.row(i).dot(x) - pb.bounds[i];
    if (pb.equality[i] ? std::abs(slack) > opt.tol * scale : slack > opt.tol * scale)
      throw QpError("solve_qp: start point violates constraint " + std::to_string(i), slack);
    if (std::abs(slack) <= opt.tol * scale || pb.equality[i]) {
      if (extend_basis(basis, pb.constraints.row(i).transpose())) {
        work.push_back(static_cast<int>(i));
      } else if (pb.equality[i]) {
        throw QpError("solve_qp: dependent equality constraints", 0);
      }
    }
  }

  std::vector<bool> in_work(m, false);
  for (int i : work) in_work[i] = true;

  QpResult result;
  RVector lambda_w;
  bool full_step = false;  // previous iterate minimized over the working set
  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    result.iterations = iter;
    const RVector g = pb.hessian * x + pb.linear;
    const RVector pg = llt.solve(g);

    RVector p;
    const auto w = static_cast<Eigen::Index>(work.size());
    if (w == 0) {
      p = -pg;
      lambda_w.resize(0);
    } else {
      RMatrix aw(w, n);
      for (Eigen::Index r = 0; r < w; ++r) aw.row(r) = pb.constraints.row(work[r]);
      const RMatrix y = llt.solve(aw.transpose());
      const RMatrix s = aw * y;
      lambda_w = -s.ldlt().solve(aw * pg);
      p = -pg - y * lambda_w;
    }

    if (full_step || p.lpNorm<Eigen::Infinity>() <= opt.tol * 1e-2 * scale) {
      full_step = false;
      // Stationary on the working set; drop the most negative multiplier.
      int drop = -1;
      double most_negative = -opt.tol;
      for (Eigen::Index r = 0; r < w; ++r) {
        if (pb.equality[work[r]]) continue;
        if (lambda_w[r] < most_negative) {
          most_negative = lambda_w[r];
          drop = static_cast<int>(r);
        }
      }
      if (drop < 0) {
        result.x = x;
        result.multipliers = RVector::Zero(m);
        for (Eigen::Index r = 0; r < w; ++r)
          result.multipliers[work[r]] = pb.equality[work[r]] ? lambda_w[r] : std::max(0.0, lambda_w[r]);
        result.active = work;
        std::sort(result.active.begin(), result.active.end());
        result.kkt_residual = kkt_residual(pb, x, result.multipliers);
        result.objective = 0.5 * x.dot(pb.hessian * x) + pb.linear.dot(x);
        return result;
      }
      in_work[work[drop]] = false;
      work.erase(work.begin() + drop);
      continue;
    }

    double alpha = 1.0;
    int blocking = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (in_work[i] || pb.equality[i]) continue;
      const double ap = pb.constraints.row(i).dot(p);
      if (ap <= 1e-14 * scale) continue;
      const double ratio = std::max(0.0, (pb.bounds[i] - pb.constraints.row(i).dot(x)) / ap);
      if (ratio < alpha) {
        alpha = ratio;
        blocking = static_cast<int>(i);
      }
    }
    x += alpha * p;
    full_step = blocking < 0;
    if (blocking >= 0) {
      work.push_back(blocking);
      in_work[blocking] = true;
    }
  }

  RVector mult = RVector::Zero(m);
  for (std::size_t r = 0; r < work.size() && static_cast<Eigen::Index>(r) < lambda_w.size(); ++r)
    mult[work[r]] = lambda_w[r];
  throw QpError("solve_qp: no convergence within " + std::to_string(opt.max_iter) + " iterations",
                kkt_residual(pb, x, mult));
}

}  // namespace slp
