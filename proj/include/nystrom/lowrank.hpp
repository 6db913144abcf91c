#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/kernel.hpp>
#include <nystrom/linalg.hpp>
#include <nystrom/points.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nystrom {

enum class LowRankKind { nystrom_full, nystrom_svd, mercer_mu, mercer_empirical };

inline std::string to_string(LowRankKind kind) {
  switch (kind) {
    case LowRankKind::nystrom_full: return "nystrom-full";
    case LowRankKind::nystrom_svd: return "nystrom-svd";
    case LowRankKind::mercer_mu: return "mercer-mu";
    case LowRankKind::mercer_empirical: return "mercer-empirical";
  }
  return "unknown";
}

/// Landmarks Z together with k(Z,Z) and its eigendecomposition, so that the
/// several approximations built on one Z share a single factorization.
struct LandmarkGram {
  Kernel kernel;
  PointSet landmarks;
  Eigen::MatrixXd gram;
  SymEig eig;
  double rtol = kDefaultRtol;

  Eigen::Index size() const { return landmarks.rows(); }
};

inline LandmarkGram prepare_landmarks(const Kernel& kernel, const PointSet& Z,
                                      double rtol = kDefaultRtol) {
  if (Z.rows() == 0) throw InvalidArgument("landmark set must be nonempty");
  if (Z.cols() != kernel.dim()) throw InvalidArgument("landmark dimension does not match kernel");
  LandmarkGram lg{kernel, Z, gram(kernel, Z), {}, rtol};
  lg.eig = sym_eig(lg.gram);
  return lg;
}

/// Finite-rank kernel k_app(x,y) = (B^T k(Z,x)) . (B^T k(Z,y)).
///
/// The s test functions phi_i(x) = (B^T k(Z,x))_i satisfy
/// k_app(x,y) = sum_i phi_i(x) phi_i(y). `eigenvalues()` holds the spectrum
/// attached to the construction: lambda_i / ell for the Nystrom kinds (the
/// mu_Z-Mercer eigenvalues) and kappa_i for the Mercer kinds.
class LowRankKernel {
 public:
  LowRankKernel(Kernel kernel, PointSet landmarks, Eigen::MatrixXd factor, LowRankKind kind,
                Eigen::VectorXd eigenvalues)
      : kernel_(std::move(kernel)),
        landmarks_(std::move(landmarks)),
        factor_(std::move(factor)),
        kind_(kind),
        eigenvalues_(std::move(eigenvalues)) {}

  const Kernel& kernel() const { return kernel_; }
  const PointSet& landmarks() const { return landmarks_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  LowRankKind kind() const { return kind_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  Eigen::Index rank() const { return factor_.cols(); }

  /// Test-function matrix: row i is (phi_1(x_i), ..., phi_s(x_i)).
  Eigen::MatrixXd features(const PointSet& X) const {
    if (rank() == 0) return Eigen::MatrixXd::Zero(X.rows(), 0);
    return gram(kernel_, X, landmarks_) * factor_;
  }

  Eigen::VectorXd features(std::span<const double> x) const {
    Eigen::VectorXd kz(landmarks_.rows());
    for (Eigen::Index i = 0; i < landmarks_.rows(); ++i) kz(i) = kernel_(point(landmarks_, i), x);
    return factor_.transpose() * kz;
  }

  double operator()(std::span<const double> x, std::span<const double> y) const {
    return features(x).dot(features(y));
  }

  /// k_app(x_i, x_i) for every row of X.
  Eigen::VectorXd diagonal(const PointSet& X) const {
    return features(X).rowwise().squaredNorm();
  }

  /// Gram matrix of the approximation, k_app(X, Y).
  Eigen::MatrixXd gram_matrix(const PointSet& X, const PointSet& Y) const {
    return features(X) * features(Y).transpose();
  }

 private:
  Kernel kernel_;
  PointSet landmarks_;
  Eigen::MatrixXd factor_;
  LowRankKind kind_;
  Eigen::VectorXd eigenvalues_;
};

namespace detail {

inline LowRankKernel nystrom_from_eig(const LandmarkGram& lg, Eigen::Index count,
                                      LowRankKind kind) {
  const Eigen::Index ell = lg.size();
  Eigen::MatrixXd B = lg.eig.vectors.leftCols(count);
  Eigen::VectorXd kappa(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    B.col(i) /= std::sqrt(lg.eig.values(i));
    kappa(i) = lg.eig.values(i) / static_cast<double>(ell);
  }
  return {lg.kernel, lg.landmarks, std::move(B), kind, std::move(kappa)};
}

inline void check_rank(Eigen::Index s, Eigen::Index ell) {
  if (s < 1 || s > ell) {
    throw InvalidRank("rank s=" + std::to_string(s) + " must lie in [1, " + std::to_string(ell) +
                      "]");
  }
}

// Mercer decomposition of k^Z with respect to the measure behind `h`
// (h = h_mu(Z,Z) or h_X(Z,Z)): H = h^{1/2}, H k(Z,Z)^+ H = V diag(kappa) V^T,
// phi_i = sqrt(kappa_i) (H^+ v_i)^T k(Z, .).
//
// Worked in the range of h. With h = Vh diag(mu) Vh^T over the retained
// pairs and C = Vh^T k(Z,Z)^+ Vh, H k(Z,Z)^+ H = Vh D C D Vh^T for
// D = diag(sqrt mu), so v_i = Vh p_i where D C D = P diag(kappa) P^T. Since
// C D p_i = kappa_i D^{-1} p_i, the factor column H^+ v_i sqrt(kappa_i)
// equals Vh C D p_i / sqrt(kappa_i), which never divides by a small mu.
inline LowRankKernel mercer_from_h(const LandmarkGram& lg, const Eigen::MatrixXd& h,
                                   Eigen::Index s, LowRankKind kind) {
  check_rank(s, lg.size());
  const SymEig heig = sym_eig(h);
  // The pseudo-inverted matrix is H = h^{1/2}, so rtol applies to sqrt(mu):
  // keep mu_i > rtol^2 mu_1, but never below the eigensolver's noise floor.
  const double eps = std::numeric_limits<double>::epsilon();
  const double hcut = std::max(lg.rtol * lg.rtol, static_cast<double>(h.rows()) * eps);
  const Eigen::Index hr = heig.rank(hcut);
  const Eigen::Index kr = lg.eig.rank(lg.rtol);
  const auto Vh = heig.vectors.leftCols(hr);
  const Eigen::ArrayXd root = heig.values.head(hr).array().sqrt();

  // T = Vh^T U_r diag(lambda_r^{-1/2}), C = T T^T.
  Eigen::MatrixXd T = Vh.transpose() * lg.eig.vectors.leftCols(kr);
  T.array().rowwise() /= lg.eig.values.head(kr).array().sqrt().transpose();
  Eigen::MatrixXd C(hr, hr);
  C.setZero();
  C.selfadjointView<Eigen::Lower>().rankUpdate(T);
  C = C.selfadjointView<Eigen::Lower>();

  Eigen::MatrixXd DCD = C;
  DCD.array().colwise() *= root;
  DCD.array().rowwise() *= root.transpose();
  const SymEig meig = sym_eig(DCD);
  const Eigen::Index count = std::min(s, meig.rank(lg.rtol));

  Eigen::MatrixXd P = meig.vectors.leftCols(count);
  P.array().colwise() *= root;
  for (Eigen::Index i = 0; i < count; ++i) P.col(i) /= std::sqrt(meig.values(i));
  Eigen::MatrixXd B = Vh * (C * P);
  Eigen::VectorXd kappa = meig.values.head(count);
  return {lg.kernel, lg.landmarks, std::move(B), kind, std::move(kappa)};
}

}  // namespace detail

/// k^Z(x,y) = k(x,Z) k(Z,Z)^+ k(Z,y); rank is the numerical rank of k(Z,Z).
inline LowRankKernel build_nystrom(const LandmarkGram& lg) {
  return detail::nystrom_from_eig(lg, lg.eig.rank(lg.rtol), LowRankKind::nystrom_full);
}

inline LowRankKernel build_nystrom(const Kernel& kernel, const PointSet& Z,
                                   double rtol = kDefaultRtol) {
  return build_nystrom(prepare_landmarks(kernel, Z, rtol));
}

/// k_s^Z(x,y) = k(x,Z) k(Z,Z)_s^+ k(Z,y), the truncated mu_Z-Mercer expansion.
inline LowRankKernel build_nystrom_svd(const LandmarkGram& lg, Eigen::Index s) {
  detail::check_rank(s, lg.size());
  return detail::nystrom_from_eig(lg, std::min(s, lg.eig.rank(lg.rtol)),
                                  LowRankKind::nystrom_svd);
}

inline LowRankKernel build_nystrom_svd(const Kernel& kernel, const PointSet& Z, Eigen::Index s,
                                       double rtol = kDefaultRtol) {
  detail::check_rank(s, Z.rows());
  return build_nystrom_svd(prepare_landmarks(kernel, Z, rtol), s);
}

/// k_{s,mu}^Z: truncated Mercer decomposition of k^Z with respect to the
/// uniform measure, using the closed-form h_mu.
inline LowRankKernel build_mercer_mu(const LandmarkGram& lg, Eigen::Index s) {
  const Kernel h = squared_kernel(lg.kernel);
  return detail::mercer_from_h(lg, gram(h, lg.landmarks), s, LowRankKind::mercer_mu);
}

inline LowRankKernel build_mercer_mu(const Kernel& kernel, const PointSet& Z, Eigen::Index s,
                                     double rtol = kDefaultRtol) {
  squared_kernel(kernel);  // fail before any factorization
  detail::check_rank(s, Z.rows());
  return build_mercer_mu(prepare_landmarks(kernel, Z, rtol), s);
}

/// h_X(Z,Z) = (1/M) k(Z,X) k(X,Z).
inline Eigen::MatrixXd empirical_squared_gram(const Kernel& kernel, const PointSet& Z,
                                              const PointSet& X) {
  if (X.rows() == 0) throw InvalidArgument("empirical measure X must be nonempty");
  const Eigen::MatrixXd kzx = gram(kernel, Z, X);
  Eigen::MatrixXd h(Z.rows(), Z.rows());
  h.setZero();
  h.selfadjointView<Eigen::Lower>().rankUpdate(kzx, 1.0 / static_cast<double>(X.rows()));
  return h.selfadjointView<Eigen::Lower>();
}

/// k_{s,X}^Z: as build_mercer_mu with mu replaced by the empirical measure on X.
inline LowRankKernel build_mercer_empirical(const LandmarkGram& lg, const PointSet& X,
                                            Eigen::Index s) {
  return detail::mercer_from_h(lg, empirical_squared_gram(lg.kernel, lg.landmarks, X), s,
                               LowRankKind::mercer_empirical);
}

inline LowRankKernel build_mercer_empirical(const Kernel& kernel, const PointSet& Z,
                                            const PointSet& X, Eigen::Index s,
                                            double rtol = kDefaultRtol) {
  detail::check_rank(s, Z.rows());
  if (X.rows() == 0) throw InvalidArgument("empirical measure X must be nonempty");
  return build_mercer_empirical(prepare_landmarks(kernel, Z, rtol), X, s);
}

/// max(0, k(x,x) - k_app(x,x)).
inline double residual_diag(const LowRankKernel& lrk, std::span<const double> x) {
  const double full = lrk.kernel()(x, x);
  if (lrk.rank() == 0) return full;
  return std::max(0.0, full - lrk.features(x).squaredNorm());
}

/// Vectorized residual_diag over the rows of X.
/// Same, reusing precomputed features(X).
inline Eigen::VectorXd residual_diag(const LowRankKernel& lrk, const PointSet& X,
                                     const Eigen::MatrixXd& features) {
  Eigen::VectorXd r(X.rows());
  const Eigen::VectorXd app = features.rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto x = point(X, i);
    r(i) = std::max(0.0, lrk.kernel()(x, x) - app(i));
  }
  return r;
}

inline Eigen::VectorXd residual_diag(const LowRankKernel& lrk, const PointSet& X) {
  return residual_diag(lrk, X, lrk.features(X));
}

/// mu(k - k^Z) = mu(k) - tr(k(Z,Z)^+ h_mu(Z,Z)).
inline double mu_residual_exact(const LandmarkGram& lg) {
  const Kernel h = squared_kernel(lg.kernel);
  const Eigen::MatrixXd kpinv = pinv(lg.eig, lg.rtol);
  const Eigen::MatrixXd hz = gram(h, lg.landmarks);
  const double tr = kpinv.cwiseProduct(hz).sum();
  const double value = trace(lg.kernel) - tr;
  const double scale = trace(lg.kernel);
  if (value < -1e-8 * scale) {
    throw NumericalConsistencyError("mu(k - k^Z) came out negative: " + std::to_string(value));
  }
  return std::max(0.0, value);
}

inline double mu_residual_exact(const Kernel& kernel, const PointSet& Z,
                                double rtol = kDefaultRtol) {
  squared_kernel(kernel);
  return mu_residual_exact(prepare_landmarks(kernel, Z, rtol));
}

}  // namespace nystrom
