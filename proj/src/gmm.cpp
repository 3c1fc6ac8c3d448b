#include "slp/gmm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <random>

namespace slp {

template <typename Scalar>
void validate_gmm(const GmmParamsT<Scalar>& p, Scalar weight_tol, Scalar min_eig) {
  const auto n = p.weights.size();
  if (n == 0) throw std::invalid_argument("gmm: no components");
  if (p.means.size() != n || p.covs.size() != n)
    throw std::invalid_argument("gmm: weights, means and covs differ in length");
  Scalar total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p.weights[i] >= 0) || !std::isfinite(p.weights[i]))
      throw std::invalid_argument("gmm: weight " + std::to_string(i) + " is negative or not finite");
    total += p.weights[i];
    if (!p.means[i].allFinite())
      throw std::invalid_argument("gmm: mean " + std::to_string(i) + " is not finite");
    const Matrix2<Scalar>& s = p.covs[i];
    if (!s.allFinite()) throw std::invalid_argument("gmm: cov " + std::to_string(i) + " is not finite");
    const Scalar asym = std::abs(s(0, 1) - s(1, 0));
    if (asym > Scalar(1e-9) * std::max(Scalar(1), s.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("gmm: cov " + std::to_string(i) + " is not symmetric");
    const Scalar eig = min_eigenvalue(s);
    if (!(eig > 0) || eig < min_eig)
      throw std::invalid_argument("gmm: cov " + std::to_string(i) + " is not positive definite");
  }
  if (std::abs(total - 1) > weight_tol)
    throw std::invalid_argument("gmm: weights sum to " + std::to_string(total) + ", not 1");
}

template void validate_gmm<double>(const GmmParamsT<double>&, double, double);
template void validate_gmm<float>(const GmmParamsT<float>&, float, float);

namespace {

// Closest covariance (in the constrained-likelihood sense) whose eigenvalues
// are all >= floor.
Mat2 clip_eigenvalues(const Mat2& s, double floor) {
  if (min_eigenvalue(s) >= floor) return s;
  Eigen::SelfAdjointEigenSolver<Mat2> es(s);
  const Vec2 lambda = es.eigenvalues().cwiseMax(floor);
  Mat2 out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  out(1, 0) = out(0, 1);
  return out;
}

Mat2 covariance(const Points& x, const Vec2& mean) {
  Mat2 s = Mat2::Zero();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec2 d = x.row(i).transpose() - mean;
    s += d * d.transpose();
  }
  return s / static_cast<double>(x.rows());
}

Points canonical_order(const Points& samples) {
  std::vector<Eigen::Index> idx(samples.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (samples(a, 0) != samples(b, 0)) return samples(a, 0) < samples(b, 0);
    return samples(a, 1) < samples(b, 1);
  });
  Points out(samples.rows(), 2);
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = samples.row(idx[i]);
  return out;
}

std::vector<Vec2> kmeans_pp(const Points& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Vec2> centers;
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.push_back(x.row(pick(rng)).transpose());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(i).transpose() - centers.back()).squaredNorm());
      total += d2[i];
    }
    if (!(total > 0)) {
      centers.push_back(x.row(pick(rng)).transpose());
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    Eigen::Index chosen = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2[i];
      if (target <= 0 && d2[i] > 0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(x.row(chosen).transpose());
  }

  // One Lloyd pass.
  std::vector<Vec2> sums(k, Vec2::Zero());
  std::vector<int> counts(k, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 p = x.row(i).transpose();
    int best = 0;
    double best_d = (p - centers[0]).squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double dc = (p - centers[c]).squaredNorm();
      if (dc < best_d) {
        best_d = dc;
        best = c;
      }
    }
    sums[best] += p;
    ++counts[best];
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] > 0) centers[c] = sums[c] / counts[c];
  return centers;
}

// E-step: fills responsibilities (n x k) and returns the mean log-likelihood.
double expectation(const Points& x, const GmmParams& p, RMatrix& resp) {
  const GmmDensity<double> dens(p);
  const auto k = static_cast<Eigen::Index>(dens.components());
  resp.resize(x.rows(), k);
  double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vec2 y = x.row(i).transpose();
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      resp(i, c) = dens.component_log_pdf(static_cast<std::size_t>(c), y);
      top = std::max(top, resp(i, c));
    }
    double sum = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      resp(i, c) = std::exp(resp(i, c) - top);
      sum += resp(i, c);
    }
    resp.row(i) /= sum;
    total += top + std::log(sum);
  }
  return total / static_cast<double>(x.rows());
}

void maximization(const Points& x, const RMatrix& resp, double floor, GmmParams& p) {
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index c = 0; c < resp.cols(); ++c) {
    const double nc = resp.col(c).sum();
    p.weights[c] = nc / n;
    if (nc < 1e-8) continue;  // vanished component keeps its shape
    Vec2 mean = Vec2::Zero();
    for (Eigen::Index i = 0; i < x.rows(); ++i) mean += resp(i, c) * x.row(i).transpose();
    mean /= nc;
    Mat2 s = Mat2::Zero();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vec2 d = x.row(i).transpose() - mean;
      s += resp(i, c) * (d * d.transpose());
    }
    s /= nc;
    s(1, 0) = s(0, 1);
    p.means[c] = mean;
    p.covs[c] = clip_eigenvalues(s, floor);
  }
  const double wsum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  for (auto& w : p.weights) w /= wsum;
}

}  // namespace

double mean_log_likelihood(const Points& samples, const GmmParams& p) {
  const GmmDensity<double> dens(p);
  double total = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) total += dens.log_pdf(samples.row(i).transpose());
  return total / static_cast<double>(samples.rows());
}

EmFit em_fit(const Points& samples, const EmConfig& cfg) {
  const int k = cfg.components;
  if (k < 1) throw std::invalid_argument("em_fit: need at least one component");
  if (samples.rows() < 4 * k)
    throw std::invalid_argument("em_fit: need at least " + std::to_string(4 * k) + " samples, got " +
                                std::to_string(samples.rows()));
  if (!samples.allFinite()) throw std::invalid_argument("em_fit: non-finite sample");

  const Points x = canonical_order(samples);
  const Vec2 mean = x.colwise().mean().transpose();
  const Mat2 global = covariance(x, mean);
  EmFit fit;
  // Absolute floor keeps identical-sample sets non-singular.
  fit.covariance_floor = std::max(cfg.floor_scale * global.trace() / 2, 1e-12);

  std::mt19937_64 rng(cfg.seed);
  GmmParams& p = fit.params;
  p.weights.assign(k, 1.0 / k);
  p.covs.assign(k, clip_eigenvalues(global, fit.covariance_floor));
  p.means = k == 1 ? std::vector<Vec2>{mean} : kmeans_pp(x, k, rng);

  RMatrix resp;
  double ll = expectation(x, p, resp);
  fit.log_likelihood.push_back(ll);
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    maximization(x, resp, fit.covariance_floor, p);
    const double next = expectation(x, p, resp);
    fit.log_likelihood.push_back(next);
    fit.iterations = iter;
    const bool done = std::abs(next - ll) <= cfg.tol * std::max(std::abs(ll), 1e-300);
    ll = next;
    if (done) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

}  // namespace slp
