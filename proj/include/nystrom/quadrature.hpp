#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/kernel.hpp>
#include <nystrom/lowrank.hpp>
#include <nystrom/points.hpp>
#include <nystrom/recombination.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace nystrom {

struct Provenance {
  std::string method;
  int n = 0;
  int s = 0;
  std::uint64_t seed = 0;
};

/// Convex quadrature rule Q(f) = sum_i w_i f(x_i) on actual domain points.
struct Quadrature {
  PointSet points;
  Eigen::VectorXd weights;
  Provenance provenance;
  /// Rows of the source point set the nodes were taken from (kquad only).
  std::vector<Eigen::Index> source_indices;

  Eigen::Index size() const { return weights.size(); }

  template <class F>
  double apply(F&& f) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i) acc += weights(i) * f(point(points, i));
    return acc;
  }
};

/// Equal weights 1/n on every row of X.
inline Quadrature uniform_rule(PointSet X, Provenance provenance = {}) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw InvalidArgument("uniform_rule: empty point set");
  Quadrature q;
  q.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  q.points = std::move(X);
  q.provenance = std::move(provenance);
  return q;
}

namespace detail {

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr double kNegativeSlack = 1e-10;

inline double clamp_square(double v, const char* what) {
  if (v >= 0.0) return v;
  if (v >= -kNegativeSlack) return 0.0;
  throw NumericalConsistencyError(std::string(what) + ": squared norm " + std::to_string(v) +
                                  " is negative beyond roundoff");
}

// sum_ij v_i v_j k(x_i, x_j), symmetric pairs visited once.
inline void add_quadratic_form(const Kernel& k, const PointSet& X, const Eigen::VectorXd& v,
                               CompensatedSum& acc) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto xi = point(X, i);
    acc.add(v(i) * v(i) * k(xi, xi));
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) acc.add(2.0 * v(i) * v(j) * k(xi, point(X, j)));
  }
}

}  // namespace detail

/// KQuad: recombine the uniform measure on Y into at most s+1 of its points
/// so that Q(phi_i) = mu_Y(phi_i) for the test functions of `lrk`. With
/// `enforce_inequality`, also Q(sqrt(k - k_app)) <= mu_Y(sqrt(k - k_app)).
inline Quadrature kquad(const LowRankKernel& lrk, const PointSet& Y, bool enforce_inequality,
                        Provenance provenance = {}, RecombineStats* stats = nullptr) {
  const Eigen::Index n = Y.rows();
  if (n < 1) throw InvalidArgument("kquad: empty sample");
  const Eigen::MatrixXd F = lrk.features(Y);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  if (enforce_inequality) g = residual_diag(lrk, Y, F).cwiseSqrt();
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const DiscreteMeasure dm = recombine(w, F, g, stats);

  Quadrature q;
  q.points.resize(static_cast<Eigen::Index>(dm.size()), Y.cols());
  q.weights.resize(static_cast<Eigen::Index>(dm.size()));
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    q.points.row(row) = Y.row(dm.indices[i]);
    q.weights(row) = dm.weights[i];
  }
  q.source_indices = dm.indices;
  if (provenance.s == 0) provenance.s = static_cast<int>(lrk.rank());
  q.provenance = std::move(provenance);
  return q;
}

/// Squared worst-case error of Q in the RKHS of k against uniform mu:
/// sum_ij w_i w_j k(x_i,x_j) - 2 sum_i w_i m(x_i) + iint k.
inline double wce_sq_exact(const Quadrature& q, const Kernel& k) {
  require_analytic(k, "mean embedding");
  detail::CompensatedSum acc;
  detail::add_quadratic_form(k, q.points, q.weights, acc);
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    acc.add(-2.0 * q.weights(i) * mean_embedding(k, point(q.points, i)));
  }
  acc.add(double_integral(k));
  return detail::clamp_square(acc.value(), "wce");
}

inline double wce_exact(const Quadrature& q, const Kernel& k) {
  return std::sqrt(wce_sq_exact(q, k));
}

/// MMD between two discrete measures: sqrt((w1 - w2)^T K (w1 - w2)) over the
/// union support. The support is sorted lexicographically so the result does
/// not depend on argument order.
inline double mmd_discrete(const Quadrature& a, const Quadrature& b, const Kernel& k) {
  struct Atom {
    std::vector<double> x;
    double w;
  };
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(a.size() + b.size()));
  auto push = [&](const Quadrature& q, double sign) {
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const auto p = point(q.points, i);
      atoms.push_back({std::vector<double>(p.begin(), p.end()), sign * q.weights(i)});
    }
  };
  push(a, 1.0);
  push(b, -1.0);
  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) {
    if (l.x != r.x) return l.x < r.x;
    return std::abs(l.w) < std::abs(r.w) || (std::abs(l.w) == std::abs(r.w) && l.w < r.w);
  });
  // Merge coincident atoms; accumulate the weights of each group in sorted order.
  std::vector<Atom> merged;
  for (auto& at : atoms) {
    if (!merged.empty() && merged.back().x == at.x) {
      merged.back().w += at.w;
    } else {
      merged.push_back(std::move(at));
    }
  }
  const Eigen::Index m = static_cast<Eigen::Index>(merged.size());
  const int d = m > 0 ? static_cast<int>(merged.front().x.size()) : 0;
  PointSet X(m, d);
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int c = 0; c < d; ++c) X(i, c) = merged[i].x[c];
    v(i) = merged[i].w;
  }
  detail::CompensatedSum acc;
  detail::add_quadratic_form(k, X, v, acc);
  return std::sqrt(detail::clamp_square(acc.value(), "mmd"));
}

/// c_{k,mu} = mu(k) - iint k dmu dmu.
inline double c_k_mu(const Kernel& k) {
  require_analytic(k, "c_{k,mu}");
  return trace(k) - double_integral(k);
}

/// mu_Y(sqrt(k - k_app)): mean of the power function over the rows of Y.
inline double mean_sqrt_residual(const LowRankKernel& lrk, const PointSet& Y) {
  return residual_diag(lrk, Y).cwiseSqrt().mean();
}

}  // namespace nystrom
