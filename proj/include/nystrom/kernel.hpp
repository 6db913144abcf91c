#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/points.hpp>

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace nystrom {

inline constexpr int kMaxBernoulliDegree = 12;

namespace detail {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

constexpr std::int64_t gcd(std::int64_t a, std::int64_t b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b != 0) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr Rational reduce(Rational q) {
  if (q.den < 0) {
    q.num = -q.num;
    q.den = -q.den;
  }
  const std::int64_t g = gcd(q.num, q.den);
  if (g > 1) {
    q.num /= g;
    q.den /= g;
  }
  return q;
}

constexpr Rational add(Rational a, Rational b) {
  const std::int64_t g = gcd(a.den, b.den);
  return reduce({a.num * (b.den / g) + b.num * (a.den / g), a.den / g * b.den});
}

constexpr Rational mul(Rational a, Rational b) {
  const Rational x = reduce({a.num, b.den});
  const Rational y = reduce({b.num, a.den});
  return reduce({x.num * y.num, x.den * y.den});
}

constexpr std::int64_t binomial(int n, int k) {
  std::int64_t c = 1;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Bernoulli numbers B_0..B_12 (B_1 = -1/2) from
// sum_{k<=m} C(m+1,k) B_k = 0.
constexpr std::array<Rational, kMaxBernoulliDegree + 1> bernoulli_numbers() {
  std::array<Rational, kMaxBernoulliDegree + 1> b{};
  b[0] = {1, 1};
  for (int m = 1; m <= kMaxBernoulliDegree; ++m) {
    Rational acc{0, 1};
    for (int k = 0; k < m; ++k) acc = add(acc, mul({binomial(m + 1, k), 1}, b[k]));
    b[m] = reduce(mul(acc, {-1, m + 1}));
  }
  return b;
}

inline constexpr auto kBernoulliNumbers = bernoulli_numbers();

// Coefficient table: row n holds B_n(t) = sum_j c[n][j] t^j, exact rationals.
constexpr std::array<std::array<Rational, kMaxBernoulliDegree + 1>, kMaxBernoulliDegree + 1>
bernoulli_polynomial_table() {
  std::array<std::array<Rational, kMaxBernoulliDegree + 1>, kMaxBernoulliDegree + 1> c{};
  for (int n = 0; n <= kMaxBernoulliDegree; ++n) {
    for (int k = 0; k <= n; ++k) c[n][n - k] = mul({binomial(n, k), 1}, kBernoulliNumbers[k]);
  }
  return c;
}

inline constexpr auto kBernoulliPolynomials = bernoulli_polynomial_table();

inline double to_double(Rational q) {
  return static_cast<double>(q.num) / static_cast<double>(q.den);
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

/// Exact rational Bernoulli number B_n, 0 <= n <= 12.
inline double bernoulli_number(int n) {
  if (n < 0 || n > kMaxBernoulliDegree) {
    throw UnsupportedDegree("Bernoulli number of degree " + std::to_string(n) + " not tabulated");
  }
  return detail::to_double(detail::kBernoulliNumbers[n]);
}

/// B_n(t) for even n in [0, 12] and t in [0, 1].
inline double bernoulli_polynomial(int n, double t) {
  if (n < 0 || n > kMaxBernoulliDegree || n % 2 != 0) {
    throw UnsupportedDegree("Bernoulli polynomial degree " + std::to_string(n) +
                            " unsupported (even degrees 0..12 only)");
  }
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("Bernoulli polynomial argument outside [0,1]");
  const auto& c = detail::kBernoulliPolynomials[n];
  double v = detail::to_double(c[n]);
  for (int j = n - 1; j >= 0; --j) v = v * t + detail::to_double(c[j]);
  return v;
}

/// zeta(2r) in closed form, (-1)^{r+1} B_{2r} (2 pi)^{2r} / (2 (2r)!).
inline double zeta_even(int r) {
  if (r < 1 || 2 * r > kMaxBernoulliDegree) {
    throw UnsupportedDegree("zeta(" + std::to_string(2 * r) + ") not tabulated");
  }
  const double sign = (r % 2 == 1) ? 1.0 : -1.0;
  return sign * bernoulli_number(2 * r) * std::pow(2.0 * std::numbers::pi, 2 * r) /
         (2.0 * detail::factorial(2 * r));
}

enum class KernelKind { korobov, gaussian, constant };

/// Symmetric positive-definite kernel on [0,1]^d.
///
/// - korobov: k_r^{(x)d}(x,y) = prod_i [1 + (-1)^{r-1} (2pi)^{2r}/(2r)! B_{2r}(|x_i - y_i|)]
///   (the periodic Sobolev kernel; "korobov-product" when d > 1);
/// - gaussian: exp(-|x-y|^2 / (2 lengthscale^2)), with no analytic mu-quantities;
/// - constant: k == 1, the degenerate member of the korobov family used in tests.
class Kernel {
 public:
  static Kernel korobov(int r, int d = 1) {
    if (r < 1 || 2 * r > kMaxBernoulliDegree) {
      throw UnsupportedDegree("korobov smoothness r=" + std::to_string(r) + " needs B_" +
                              std::to_string(2 * r));
    }
    if (d < 1) throw InvalidArgument("kernel dimension must be >= 1");
    Kernel k(KernelKind::korobov, r, d, 0.0);
    const double sign = (r % 2 == 1) ? 1.0 : -1.0;
    k.scale_ = sign * std::pow(2.0 * std::numbers::pi, 2 * r) / detail::factorial(2 * r);
    const auto& c = detail::kBernoulliPolynomials[2 * r];
    k.poly_.resize(2 * r + 1);
    for (int j = 0; j <= 2 * r; ++j) k.poly_[j] = detail::to_double(c[j]);
    return k;
  }

  static Kernel gaussian(double lengthscale, int d = 1) {
    if (!(lengthscale > 0.0)) throw InvalidArgument("gaussian lengthscale must be positive");
    if (d < 1) throw InvalidArgument("kernel dimension must be >= 1");
    return Kernel(KernelKind::gaussian, 0, d, lengthscale);
  }

  static Kernel constant(int d = 1) {
    if (d < 1) throw InvalidArgument("kernel dimension must be >= 1");
    return Kernel(KernelKind::constant, 0, d, 0.0);
  }

  KernelKind kind() const { return kind_; }
  int r() const { return r_; }
  int dim() const { return d_; }
  double lengthscale() const { return lengthscale_; }

  /// True for the korobov family (including the constant kernel), where the
  /// spectrum, mean embedding and squared kernel are known in closed form.
  bool has_analytic_forms() const { return kind_ != KernelKind::gaussian; }

  std::string name() const {
    switch (kind_) {
      case KernelKind::korobov:
        return (d_ == 1 ? "korobov" : "korobov-product") + std::string("(r=") + std::to_string(r_) +
               ",d=" + std::to_string(d_) + ")";
      case KernelKind::gaussian:
        return "gaussian(d=" + std::to_string(d_) + ")";
      case KernelKind::constant:
        return "constant";
    }
    return "unknown";
  }

  /// One-dimensional korobov factor k_r(x, y).
  double korobov_1d(double x, double y) const {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
      throw DomainError("korobov kernel evaluated outside [0,1]");
    }
    const double t = std::abs(x - y);
    double b = poly_.back();
    for (int j = static_cast<int>(poly_.size()) - 2; j >= 0; --j) b = b * t + poly_[j];
    return 1.0 + scale_ * b;
  }

  double operator()(std::span<const double> x, std::span<const double> y) const {
    switch (kind_) {
      case KernelKind::korobov: {
        double v = 1.0;
        for (int i = 0; i < d_; ++i) v *= korobov_1d(x[i], y[i]);
        return v;
      }
      case KernelKind::gaussian: {
        double sq = 0.0;
        for (int i = 0; i < d_; ++i) {
          const double diff = x[i] - y[i];
          sq += diff * diff;
        }
        return std::exp(-sq / (2.0 * lengthscale_ * lengthscale_));
      }
      case KernelKind::constant:
        return 1.0;
    }
    return 0.0;
  }

  /// sup_x k(x, x).
  double max_diagonal() const {
    switch (kind_) {
      case KernelKind::korobov:
        return std::pow(1.0 + 2.0 * zeta_even(r_), d_);
      case KernelKind::gaussian:
      case KernelKind::constant:
        return 1.0;
    }
    return 0.0;
  }

 private:
  Kernel(KernelKind kind, int r, int d, double lengthscale)
      : kind_(kind), r_(r), d_(d), lengthscale_(lengthscale) {}

  KernelKind kind_;
  int r_ = 0;
  int d_ = 1;
  double lengthscale_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> poly_;
};

inline double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) {
  return k(x, y);
}

/// Gram matrix k(X, Y).
inline Eigen::MatrixXd gram(const Kernel& k, const PointSet& X, const PointSet& Y) {
  Eigen::MatrixXd G(X.rows(), Y.rows());
  for (Eigen::Index j = 0; j < Y.rows(); ++j) {
    const auto y = point(Y, j);
    for (Eigen::Index i = 0; i < X.rows(); ++i) G(i, j) = k(point(X, i), y);
  }
  return G;
}

/// Gram matrix k(X, X); the lower triangle mirrors the upper one bit-exactly.
inline Eigen::MatrixXd gram(const Kernel& k, const PointSet& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto y = point(X, j);
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = k(point(X, i), y);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

inline void require_analytic(const Kernel& k, const char* what) {
  if (!k.has_analytic_forms()) {
    throw NoAnalyticForm(std::string(what) + " is not available in closed form for " + k.name());
  }
}

/// h_mu(x,y) = int k(x,t) k(t,y) dmu(t) for uniform mu. For k_r^{(x)d} this is
/// k_{2r}^{(x)d}, since squaring the operator squares every eigenvalue.
inline Kernel squared_kernel(const Kernel& k) {
  switch (k.kind()) {
    case KernelKind::korobov:
      if (4 * k.r() > kMaxBernoulliDegree) {
        throw UnsupportedDegree("squared kernel of k_" + std::to_string(k.r()) + " needs B_" +
                                std::to_string(4 * k.r()));
      }
      return Kernel::korobov(2 * k.r(), k.dim());
    case KernelKind::constant:
      return k;
    case KernelKind::gaussian:
      break;
  }
  throw NoAnalyticForm("no analytic h_mu for " + k.name() + "; use the empirical h_X path");
}

// --- spectrum --------------------------------------------------------------

/// j-th eigenvalue (0-based) of the one-dimensional factor of `k`:
/// 1, then m^{-2r} twice for m = 1, 2, ...
inline double eigenvalue_1d(const Kernel& k, std::int64_t j) {
  if (k.kind() == KernelKind::constant) return j == 0 ? 1.0 : 0.0;
  if (j == 0) return 1.0;
  const double m = static_cast<double>((j + 1) / 2);
  return std::pow(m, -2.0 * k.r());
}

/// Trace of the integral operator, mu(k).
inline double trace(const Kernel& k) {
  require_analytic(k, "trace");
  return k.max_diagonal();
}

namespace detail {

// Best-first enumeration of products prod_i eigenvalue_1d(j_i) over
// multi-indices. Ties are resolved by lexicographic multi-index order.
inline std::vector<double> product_spectrum_top(const Kernel& k, std::int64_t m) {
  using Index = std::vector<std::int64_t>;
  struct Node {
    double value;
    Index idx;
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.value != b.value) return a.value < b.value;
      return a.idx > b.idx;
    }
  };
  const int d = k.dim();
  auto value_of = [&](const Index& idx) {
    double v = 1.0;
    for (auto j : idx) v *= eigenvalue_1d(k, j);
    return v;
  };
  std::priority_queue<Node, std::vector<Node>, Worse> frontier;
  std::set<Index> seen;
  Index start(d, 0);
  frontier.push({value_of(start), start});
  seen.insert(start);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m));
  while (static_cast<std::int64_t>(out.size()) < m && !frontier.empty()) {
    Node top = frontier.top();
    frontier.pop();
    out.push_back(top.value);
    for (int i = 0; i < d; ++i) {
      Index next = top.idx;
      ++next[i];
      if (seen.insert(next).second) frontier.push({value_of(next), std::move(next)});
    }
  }
  return out;
}

}  // namespace detail

/// The m largest eigenvalues of the integral operator, descending.
inline std::vector<double> spectrum_top(const Kernel& k, std::int64_t m) {
  require_analytic(k, "spectrum");
  if (m < 1) throw InvalidArgument("spectrum_top needs m >= 1");
  if (k.kind() == KernelKind::constant) {
    std::vector<double> out(static_cast<std::size_t>(m), 0.0);
    out[0] = 1.0;
    return out;
  }
  if (k.dim() == 1) {
    std::vector<double> out(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) out[j] = eigenvalue_1d(k, j);
    return out;
  }
  return detail::product_spectrum_top(k, m);
}

/// sum_{i>s} sigma_i.
inline double spectral_tail(const Kernel& k, std::int64_t s) {
  require_analytic(k, "spectral tail");
  if (s < 0) throw InvalidArgument("spectral_tail needs s >= 0");
  if (s == 0) return trace(k);
  if (k.kind() == KernelKind::constant) return 0.0;
  if (k.dim() == 1) {
    // s = 1 + 2M + rem: M full pairs consumed, rem copies of pair M+1.
    const std::int64_t M = (s - 1) / 2;
    const std::int64_t rem = (s - 1) % 2;
    const double p = -2.0 * k.r();
    double head = 0.0;
    for (std::int64_t m = 1; m <= M + 1; ++m) head += std::pow(static_cast<double>(m), p);
    const double beyond = 2.0 * (zeta_even(k.r()) - head);
    return std::max(0.0, static_cast<double>(2 - rem) * std::pow(static_cast<double>(M + 1), p) +
                             beyond);
  }
  const auto top = detail::product_spectrum_top(k, s);
  double acc = 0.0;
  for (double v : top) acc += v;
  return std::max(0.0, trace(k) - acc);
}

/// i-th L2(mu)-orthonormal eigenfunction (0-based, matching spectrum_top
/// order) of the one-dimensional korobov kernel: 1, sqrt2 cos(2 pi m x),
/// sqrt2 sin(2 pi m x).
inline double eigenfunction(const Kernel& k, std::int64_t i, double x) {
  if (k.kind() != KernelKind::korobov || k.dim() != 1) {
    throw NoAnalyticForm("eigenfunctions are only available for the 1-d korobov kernel");
  }
  if (i == 0) return 1.0;
  const double m = static_cast<double>((i + 1) / 2);
  const double arg = 2.0 * std::numbers::pi * m * x;
  return std::numbers::sqrt2 * ((i % 2 == 1) ? std::cos(arg) : std::sin(arg));
}

/// int k(x, t) dmu(t); identically 1 since every non-constant eigenfunction
/// integrates to zero.
inline double mean_embedding(const Kernel& k, std::span<const double> /*x*/) {
  require_analytic(k, "mean embedding");
  return 1.0;
}

/// iint k(x, y) dmu(x) dmu(y).
inline double double_integral(const Kernel& k) {
  require_analytic(k, "double integral");
  return 1.0;
}

/// Closed-form bound on E[mu(sqrt(k - k_s^Z))] for an i.i.d. landmark sample
/// of size ell, valid for every integer m >= 1 (natural logarithm).
inline double bound_wce_iid(const Kernel& k, std::int64_t ell, std::int64_t s, std::int64_t m) {
  if (ell < 1 || m < 1) throw InvalidArgument("bound_wce_iid needs ell >= 1 and m >= 1");
  const double l = static_cast<double>(ell);
  const double md = static_cast<double>(m);
  return 2.0 * std::sqrt(spectral_tail(k, s)) + 4.0 * std::sqrt(spectral_tail(k, m)) +
         std::sqrt(k.max_diagonal()) / l * (80.0 * md * md * std::log(1.0 + 2.0 * l) / 9.0 + 69.0);
}

}  // namespace nystrom
