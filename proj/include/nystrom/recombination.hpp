#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/linalg.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace nystrom {

/// Weighted subset of a host point set: `indices` point into the host rows.
struct DiscreteMeasure {
  std::vector<Eigen::Index> indices;
  std::vector<double> weights;

  std::size_t size() const { return indices.size(); }

  std::size_t support() const {
    return static_cast<std::size_t>(
        std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  }
};

struct RecombineStats {
  std::size_t eliminations = 0;
};

inline constexpr double kWeightSnap = 1e-14;

namespace detail {

struct StepLength {
  double t = std::numeric_limits<double>::infinity();
  std::size_t slot = 0;
  bool valid = false;
};

// Largest t with w - t c >= 0 on the window; ties go to the lowest host index.
inline StepLength max_step(const std::vector<Eigen::Index>& window, const std::vector<double>& w,
                           const Eigen::VectorXd& c, double sign) {
  StepLength best;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const double ck = sign * c(static_cast<Eigen::Index>(k));
    if (!(ck > 0.0)) continue;
    const double t = w[window[k]] / ck;
    if (!best.valid || t < best.t || (t == best.t && window[k] < window[best.slot])) {
      best = {t, k, true};
    }
  }
  return best;
}

// Null vector of a window that is too small for a guaranteed one, found only
// when the constraint rows are numerically rank-deficient on it.
inline bool deficient_null_vector(const Eigen::MatrixXd& A, Eigen::VectorXd& c) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::Index m = A.cols();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double smin = sv.size() == m ? sv(m - 1) : 0.0;
  if (smin > 1e-12 * smax) return false;
  c = svd.matrixV().col(m - 1);
  Eigen::Index arg = 0;
  c.cwiseAbs().maxCoeff(&arg);
  c /= c(arg);
  return (A * c).cwiseAbs().maxCoeff() <= 1e-13 * smax;
}

}  // namespace detail

/// Reduce the convex measure sum_i w_i delta_i (N points) to at most s+1
/// points while preserving sum_i w_i F(i, j) for every column j of F, the
/// total mass, and never increasing sum_i w_i g_i.
///
/// Windowed Caratheodory elimination: the active window holds s+2 points,
/// a null vector c of [1; F^T] restricted to the window is oriented so that
/// c . g >= 0, and the weights move along -c until one hits zero. Once the
/// input is exhausted, elimination continues while the remaining window is
/// rank-deficient, so the support can drop below s+1.
inline DiscreteMeasure recombine(const Eigen::VectorXd& w, const Eigen::MatrixXd& F,
                                 const Eigen::VectorXd& g, RecombineStats* stats = nullptr) {
  const Eigen::Index n = w.size();
  const Eigen::Index s = F.cols();
  if (n < 1) throw InvalidArgument("recombine: empty measure");
  if (F.rows() != n || g.size() != n) throw InvalidArgument("recombine: size mismatch");
  if (!w.allFinite() || !F.allFinite() || !g.allFinite()) {
    throw InvalidArgument("recombine: non-finite input");
  }
  if (w.minCoeff() < 0.0) throw InvalidArgument("recombine: negative weight");
  if (std::abs(w.sum() - 1.0) > 1e-9) throw InvalidArgument("recombine: weights must sum to 1");

  std::vector<double> weight(w.data(), w.data() + n);
  std::vector<Eigen::Index> pending;
  pending.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weight[i] > 0.0) pending.push_back(i);
  }

  const auto width = static_cast<std::size_t>(s + 2);
  // Inputs already within the support bound are returned as given.
  const bool reducible = pending.size() >= width;
  std::vector<Eigen::Index> window;
  std::size_t next = 0;
  RecombineStats local;

  // Per-column scaling leaves the null space unchanged and balances rows.
  Eigen::VectorXd inv_scale(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const double m = F.col(j).cwiseAbs().maxCoeff();
    inv_scale(j) = m > 0.0 ? 1.0 / m : 1.0;
  }
  auto fill = [&](Eigen::MatrixXd& A) {
    A.resize(s + 1, static_cast<Eigen::Index>(window.size()));
    for (std::size_t k = 0; k < window.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      A(0, col) = 1.0;
      A.col(col).tail(s) = F.row(window[k]).transpose().cwiseProduct(inv_scale);
    }
  };
  Eigen::MatrixXd A;
  Eigen::VectorXd c;
  while (true) {
    while (window.size() < width && next < pending.size()) window.push_back(pending[next++]);
    fill(A);
    if (window.size() == width) {
      c = null_vector(A);
    } else if (!reducible || window.size() < 2 || !detail::deficient_null_vector(A, c)) {
      break;
    }
    const std::size_t m = window.size();
    double cg = 0.0;
    for (std::size_t k = 0; k < m; ++k) cg += c(static_cast<Eigen::Index>(k)) * g(window[k]);

    const auto plus = detail::max_step(window, weight, c, 1.0);
    const auto minus = detail::max_step(window, weight, c, -1.0);
    double sign = 1.0;
    if (cg < 0.0) {
      sign = -1.0;
    } else if (cg == 0.0 && minus.valid && (!plus.valid || minus.t > plus.t)) {
      sign = -1.0;
    }
    const auto step = sign > 0.0 ? plus : minus;
    if (!step.valid) {
      throw NumericalConsistencyError("recombine: null vector has no admissible direction");
    }

    for (std::size_t k = 0; k < m; ++k) {
      double& wk = weight[window[k]];
      wk -= step.t * sign * c(static_cast<Eigen::Index>(k));
      if (wk < kWeightSnap) wk = 0.0;
    }
    weight[window[step.slot]] = 0.0;
    std::erase_if(window, [&](Eigen::Index i) { return weight[i] == 0.0; });
    ++local.eliminations;
  }

  std::sort(window.begin(), window.end());
  DiscreteMeasure out;
  double total = 0.0;
  for (auto i : window) total += weight[i];
  for (auto i : window) {
    out.indices.push_back(i);
    out.weights.push_back(weight[i] / total);
  }
  if (stats != nullptr) *stats = local;
  return out;
}

}  // namespace nystrom
