#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "slp/types.hpp"

namespace slp {

template <typename Scalar>
struct GmmParamsT {
  std::vector<Scalar> weights;
  std::vector<Vector2<Scalar>> means;
  std::vector<Matrix2<Scalar>> covs;

  int components() const { return static_cast<int>(weights.size()); }
};

using GmmParams = GmmParamsT<double>;

// Throws std::invalid_argument naming the first violated invariant: weights
// non-negative and summing to one within weight_tol, finite means, symmetric
// covariances whose smallest eigenvalue is at least min_eigenvalue (> 0).
template <typename Scalar>
void validate_gmm(const GmmParamsT<Scalar>& p, Scalar weight_tol = Scalar(1e-6),
                  Scalar min_eigenvalue = Scalar(0));

template <typename Scalar>
Scalar min_eigenvalue(const Matrix2<Scalar>& s) {
  const Scalar mid = (s(0, 0) + s(1, 1)) / 2;
  const Scalar half_gap = std::hypot((s(0, 0) - s(1, 1)) / 2, s(0, 1));
  return mid - half_gap;
}

/// Precomputed per-component constants for repeated density evaluation.
template <typename Scalar>
class GmmDensity {
 public:
  explicit GmmDensity(const GmmParamsT<Scalar>& p) {
    const auto n = p.components();
    if (n == 0 || p.means.size() != p.weights.size() || p.covs.size() != p.weights.size())
      throw std::invalid_argument("GmmDensity: inconsistent component count");
    comps_.reserve(n);
    for (int i = 0; i < n; ++i) {
      const Matrix2<Scalar>& s = p.covs[i];
      const Scalar det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
      if (!(det > 0) || !(s(0, 0) > 0))
        throw std::invalid_argument("GmmDensity: covariance " + std::to_string(i) +
                                    " is not positive definite");
      Component c;
      c.mean = p.means[i];
      c.inv_a = s(1, 1) / det;
      c.inv_b = -(s(0, 1) + s(1, 0)) / (2 * det);
      c.inv_c = s(0, 0) / det;
      c.log_scale = std::log(p.weights[i]) - std::log(2 * std::numbers::pi_v<Scalar>) -
                    std::log(det) / 2;
      comps_.push_back(c);
    }
  }

  // log of sum_n a_n N(y; mu_n, Sigma_n), evaluated with log-sum-exp.
  Scalar log_pdf(const Vector2<Scalar>& y) const {
    Scalar terms[kMaxInline];
    std::vector<Scalar> heap;
    Scalar* t = terms;
    if (comps_.size() > kMaxInline) {
      heap.resize(comps_.size());
      t = heap.data();
    }
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      t[i] = component_log_pdf(i, y);
      if (t[i] > top) top = t[i];
    }
    if (top == -std::numeric_limits<Scalar>::infinity()) return top;
    Scalar sum = 0;
    for (std::size_t i = 0; i < comps_.size(); ++i) sum += std::exp(t[i] - top);
    return top + std::log(sum);
  }

  Scalar pdf(const Vector2<Scalar>& y) const { return std::exp(log_pdf(y)); }

  // log a_n + log N(y; mu_n, Sigma_n)
  Scalar component_log_pdf(std::size_t n, const Vector2<Scalar>& y) const {
    const Component& c = comps_[n];
    const Scalar dx = y.x() - c.mean.x();
    const Scalar dy = y.y() - c.mean.y();
    const Scalar maha = c.inv_a * dx * dx + 2 * c.inv_b * dx * dy + c.inv_c * dy * dy;
    return c.log_scale - maha / 2;
  }

  std::size_t components() const { return comps_.size(); }

 private:
  static constexpr std::size_t kMaxInline = 16;
  struct Component {
    Vector2<Scalar> mean;
    Scalar inv_a, inv_b, inv_c;
    Scalar log_scale;
  };
  std::vector<Component> comps_;
};

template <typename Scalar>
Scalar gmm_log_pdf(const Vector2<Scalar>& y, const GmmParamsT<Scalar>& p) {
  return GmmDensity<Scalar>(p).log_pdf(y);
}

template <typename Scalar>
Scalar gmm_pdf(const Vector2<Scalar>& y, const GmmParamsT<Scalar>& p) {
  return std::exp(gmm_log_pdf(y, p));
}

struct EmConfig {
  int components = 5;
  int max_iter = 200;
  double tol = 1e-6;          // relative change of the mean log-likelihood
  double floor_scale = 1e-6;  // eigenvalue floor, relative to sample variance
  std::uint64_t seed = 0;
};

struct EmFit {
  GmmParams params;
  // Mean per-sample log-likelihood of the initial parameters and after each
  // M-step; the last entry belongs to `params`.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  double covariance_floor = 0.0;
};

// Samples are put in lexicographic order before k-means++ seeding, so the
// fit depends only on the multiset of samples and the seed.
EmFit em_fit(const Points& samples, const EmConfig& config = {});

// Mean log-likelihood of samples under p.
double mean_log_likelihood(const Points& samples, const GmmParams& p);

extern template void validate_gmm<double>(const GmmParamsT<double>&, double, double);
extern template void validate_gmm<float>(const GmmParamsT<float>&, float, float);

}  // namespace slp
