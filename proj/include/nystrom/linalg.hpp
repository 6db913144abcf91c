#pragma once

#include <nystrom/errors.hpp>

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace nystrom {

/// Relative cutoff for every numerical-rank decision: eigenvalues at or below
/// rtol * lambda_1 are treated as zero.
inline constexpr double kDefaultRtol = 1e-10;

/// A = U diag(lambda) U^T with lambda sorted descending.
struct SymEig {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }

  /// Number of eigenvalues strictly above rtol * lambda_1 (0 if lambda_1 <= 0).
  Eigen::Index rank(double rtol = kDefaultRtol) const {
    if (values.size() == 0 || !(values(0) > 0.0)) return 0;
    const double cut = rtol * values(0);
    Eigen::Index r = 0;
    while (r < values.size() && values(r) > cut) ++r;
    return r;
  }
};

inline void require_finite(const Eigen::MatrixXd& A, const char* what) {
  if (!A.allFinite()) throw InvalidMatrix(std::string(what) + ": matrix has non-finite entries");
}

/// Symmetric eigendecomposition via LAPACK dsyevd; the input is symmetrized
/// as (A + A^T)/2 first.
inline SymEig sym_eig(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw InvalidMatrix("sym_eig: matrix is not square");
  require_finite(A, "sym_eig");
  const Eigen::Index n = A.rows();
  SymEig out;
  if (n == 0) {
    out.vectors.resize(0, 0);
    out.values.resize(0);
    return out;
  }
  Eigen::MatrixXd work = 0.5 * (A + A.transpose());
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                         work.data(), static_cast<lapack_int>(n), w.data());
  if (info != 0) {
    throw InvalidMatrix("sym_eig: dsyevd failed with info=" + std::to_string(info));
  }
  // dsyevd returns ascending order.
  out.values = w.reverse();
  out.vectors = work.rowwise().reverse();
  return out;
}

/// sum over the first `count` eigenpairs of f(lambda_i) u_i u_i^T.
template <class F>
Eigen::MatrixXd spectral_function(const SymEig& eig, Eigen::Index count, F f) {
  const Eigen::Index n = eig.size();
  if (count == 0) return Eigen::MatrixXd::Zero(n, n);
  const auto U = eig.vectors.leftCols(count);
  Eigen::VectorXd fv(count);
  for (Eigen::Index i = 0; i < count; ++i) fv(i) = f(eig.values(i));
  Eigen::MatrixXd scaled = U * fv.asDiagonal();
  Eigen::MatrixXd out = scaled * U.transpose();
  // Exact symmetry.
  out = (0.5 * (out + out.transpose())).eval();
  return out;
}

inline Eigen::MatrixXd pinv(const SymEig& eig, double rtol = kDefaultRtol) {
  return spectral_function(eig, eig.rank(rtol), [](double l) { return 1.0 / l; });
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix.
inline Eigen::MatrixXd pinv(const Eigen::MatrixXd& A, double rtol = kDefaultRtol) {
  return pinv(sym_eig(A), rtol);
}

inline Eigen::MatrixXd pinv_rank(const SymEig& eig, Eigen::Index s, double rtol = kDefaultRtol) {
  if (s < 1) throw InvalidRank("pinv_rank: rank cap must be >= 1");
  return spectral_function(eig, std::min<Eigen::Index>(s, eig.rank(rtol)),
                           [](double l) { return 1.0 / l; });
}

/// Pseudo-inverse of the best rank-s approximation of A.
inline Eigen::MatrixXd pinv_rank(const Eigen::MatrixXd& A, Eigen::Index s,
                                 double rtol = kDefaultRtol) {
  if (s < 1) throw InvalidRank("pinv_rank: rank cap must be >= 1");
  return pinv_rank(sym_eig(A), s, rtol);
}

/// Symmetric PSD square root H (H*H = A) together with its pseudo-inverse,
/// both built on the same retained eigenpairs.
struct PsdRoot {
  Eigen::MatrixXd root;
  Eigen::MatrixXd root_pinv;
  Eigen::Index rank = 0;
};

inline PsdRoot psd_root(const SymEig& eig, double rtol = kDefaultRtol) {
  PsdRoot out;
  out.rank = eig.rank(rtol);
  out.root = spectral_function(eig, out.rank, [](double l) { return std::sqrt(l); });
  out.root_pinv = spectral_function(eig, out.rank, [](double l) { return 1.0 / std::sqrt(l); });
  return out;
}

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& A, double rtol = kDefaultRtol) {
  return psd_root(sym_eig(A), rtol).root;
}

/// Nonzero c with Phi c = 0 for a wide matrix (cols > rows), normalized to
/// unit max-norm with its largest-magnitude entry positive.
///
/// Taken from the trailing column of Q in a Householder QR of Phi^T, which
/// is orthogonal to every row of Phi regardless of rank. The zero matrix maps
/// to the first basis vector.
inline Eigen::VectorXd null_vector(const Eigen::MatrixXd& Phi) {
  const Eigen::Index n = Phi.cols();
  if (n <= Phi.rows()) {
    throw InvalidMatrix("null_vector: need more columns than rows");
  }
  require_finite(Phi, "null_vector");
  if (Phi.cwiseAbs().maxCoeff() == 0.0) return Eigen::VectorXd::Unit(n, 0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Phi.transpose());
  Eigen::VectorXd c = qr.householderQ() * Eigen::VectorXd::Unit(n, n - 1);
  Eigen::Index imax = 0;
  c.cwiseAbs().maxCoeff(&imax);
  c /= c(imax);
  return c;
}

}  // namespace nystrom
