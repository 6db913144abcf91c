#include <nystrom/quadrature.hpp>
#include <nystrom/samplers.hpp>

#include "contracts.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

using namespace nystrom;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

Quadrature dirac(double x) {
  PointSet X(1, 1);
  X(0, 0) = x;
  return uniform_rule(X);
}

// Squared wce of an equal-weight 1-d rule for k_1 via the eigen-expansion:
// sum_{m != 0} m^{-2} |(1/n) sum_i exp(2 pi i m x_i)|^2, truncated at `terms`.
double wce_sq_series(const std::vector<double>& x, long terms) {
  double acc = 0.0;
  for (long m = terms; m >= 1; --m) {
    std::complex<double> s = 0.0;
    for (double xi : x) s += std::polar(1.0, 2.0 * std::numbers::pi * m * xi);
    s /= static_cast<double>(x.size());
    acc += 2.0 * std::norm(s) / (static_cast<double>(m) * m);
  }
  return acc;
}

struct Variants {
  std::vector<LowRankKernel> lrks;
};

// The four low-rank surrogates of the experiments at rank s = n-1.
Variants four_variants(const Kernel& k, int n, const PointSet& Y, std::uint64_t seed) {
  const auto H = generate(SampleKind::grid, n, 1, {});
  const auto Z = landmark_mix(H, n, {seed, 5});
  const auto lg = prepare_landmarks(k, Z);
  const Eigen::Index s = n - 1;
  return {{build_nystrom_svd(k, H, s), build_nystrom_svd(lg, s), build_mercer_empirical(lg, Y, s),
           build_mercer_mu(lg, s)}};
}

}  // namespace

TEST(Kquad, ContractsForAllVariants) {
  const auto k = Kernel::korobov(1);
  for (int n : {4, 8, 16}) {
    const auto Y = generate(SampleKind::iid_uniform, n * n, 1, {11, static_cast<std::uint64_t>(n)});
    const auto v = four_variants(k, n, Y, 11);
    for (const auto& lrk : v.lrks) {
      for (bool enforce : {true, false}) {
        const auto q = kquad(lrk, Y, enforce);
        EXPECT_EQ(contracts::check_kquad(lrk, Y, q, enforce), "")
            << "n=" << n << " kind=" << to_string(lrk.kind()) << " enforce=" << enforce;
        EXPECT_LE(q.size(), n);
        EXPECT_EQ(q.provenance.s, n - 1);
      }
    }
  }
}

TEST(Kquad, ConstantFeatureGivesSinglePoint) {
  const auto k = Kernel::korobov(1);
  PointSet Z(1, 1);
  Z(0, 0) = 0.5;
  const LowRankKernel lrk(k, Z, Eigen::MatrixXd::Zero(1, 1), LowRankKind::nystrom_svd,
                          Eigen::VectorXd::Ones(1));
  std::mt19937_64 rng(3);
  const auto Y = oracle::uniform_points(rng, 20, 1);
  for (bool enforce : {true, false}) {
    const auto q = kquad(lrk, Y, enforce);
    ASSERT_EQ(q.size(), 1);
    EXPECT_EQ(q.weights(0), 1.0);
    EXPECT_EQ(contracts::check_kquad(lrk, Y, q, enforce), "");
  }
}

TEST(Kquad, SmallSampleKeptWhole) {
  const auto k = Kernel::korobov(1);
  std::mt19937_64 rng(4);
  const auto Z = oracle::uniform_points(rng, 10, 1);
  const auto Y = oracle::uniform_points(rng, 5, 1);
  const auto q = kquad(build_nystrom_svd(k, Z, 8), Y, true);
  EXPECT_EQ(q.size(), 5);
  EXPECT_THROW(kquad(build_nystrom_svd(k, Z, 8), PointSet(0, 1), true), InvalidArgument);
}

TEST(WceExact, Dirac) {
  const auto k = Kernel::korobov(1);
  for (double x : {0.0, 0.13, 0.5, 1.0}) {
    EXPECT_NEAR(wce_exact(dirac(x), k), std::sqrt(kPi2 / 3.0), 1e-13);
  }
  const std::vector<double> x{0.37};
  const double series = wce_sq_series(x, 200000) + 2.0 * oracle::power_tail(2.0, 200001, 400000);
  EXPECT_NEAR(wce_sq_exact(dirac(0.37), k), series, 1e-9);
}

TEST(WceExact, UniformGrid) {
  const auto k = Kernel::korobov(1);
  const auto grid = uniform_rule(generate(SampleKind::grid, 16, 1, {}));
  std::vector<double> x;
  for (int i = 1; i <= 16; ++i) x.push_back(i / 16.0);
  // Only multiples of 16 survive; the truncated part is the tail sum over them.
  const long terms = 16L * 20000;
  const double series =
      wce_sq_series(x, terms) + 2.0 / 256.0 * oracle::power_tail(2.0, 20001, 400000);
  EXPECT_NEAR(series, kPi2 / 768.0, 1e-10);
  EXPECT_NEAR(wce_sq_exact(grid, k), series, 1e-10);

  for (int r = 1; r <= 3; ++r) {
    const auto kr = Kernel::korobov(r);
    for (int n : {4, 16, 64}) {
      const auto g = uniform_rule(generate(SampleKind::grid, n, 1, {}));
      const double expected = 2.0 * zeta_even(r) / std::pow(n, 2.0 * r);
      EXPECT_NEAR(wce_sq_exact(g, kr), expected, 1e-12 + 1e-9 * expected) << r << ' ' << n;
    }
  }
}

TEST(WceExact, NonNegativeAndRejectsGaussian) {
  std::mt19937_64 rng(5);
  const auto k = Kernel::korobov(2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto X = oracle::uniform_points(rng, 1 + rep, 2);
    EXPECT_GE(wce_sq_exact(uniform_rule(X), k), 0.0);
  }
  EXPECT_THROW(wce_exact(dirac(0.2), Kernel::gaussian(0.3)), NoAnalyticForm);
}

TEST(WceExact, IidMeanMatchesCkMuOverN) {
  const auto k = Kernel::korobov(1);
  const int n = 32;
  std::vector<double> vals;
  for (std::uint64_t t = 0; t < 400; ++t) {
    vals.push_back(wce_sq_exact(uniform_rule(generate(SampleKind::iid_uniform, n, 1, {t, 9})), k));
  }
  const auto st = oracle::mean_and_stderr(vals);
  EXPECT_NEAR(st.mean, c_k_mu(k) / n, 3.0 * st.stderr_);
}

TEST(MmdDiscrete, Properties) {
  const auto k = Kernel::korobov(1);
  std::mt19937_64 rng(6);
  const auto a = uniform_rule(oracle::uniform_points(rng, 7, 1));
  const auto b = uniform_rule(oracle::uniform_points(rng, 5, 1));
  EXPECT_EQ(mmd_discrete(a, a, k), 0.0);
  EXPECT_EQ(mmd_discrete(a, b, k), mmd_discrete(b, a, k));
  EXPECT_GT(mmd_discrete(a, b, k), 0.0);

  const std::vector<double> x{0.2};
  const std::vector<double> y{0.7};
  EXPECT_NEAR(mmd_discrete(dirac(0.2), dirac(0.7), k),
              std::sqrt(k(x, x) - 2.0 * k(x, y) + k(y, y)), 1e-13);

  // Triangle inequality against mu via exact wce.
  EXPECT_LE(wce_exact(a, k), mmd_discrete(a, b, k) + wce_exact(b, k) + 1e-12);
}

TEST(MmdDiscrete, MergesCoincidentAtoms) {
  const auto k = Kernel::gaussian(0.5);
  PointSet X(2, 1);
  X << 0.3, 0.3;
  EXPECT_EQ(mmd_discrete(uniform_rule(X), dirac(0.3), k), 0.0);
}

TEST(CkMu, Values) {
  EXPECT_NEAR(c_k_mu(Kernel::korobov(1)), kPi2 / 3.0, 1e-13);
  EXPECT_NEAR(c_k_mu(Kernel::korobov(1, 2)), std::pow(1.0 + kPi2 / 3.0, 2) - 1.0, 1e-12);
  EXPECT_EQ(c_k_mu(Kernel::constant(1)), 0.0);
  EXPECT_EQ(c_k_mu(Kernel::constant(3)), 0.0);
  EXPECT_THROW(c_k_mu(Kernel::gaussian(0.1)), NoAnalyticForm);
}

TEST(Chain, EstimateEmpiricalPerRun) {
  const auto k = Kernel::korobov(1);
  for (int n : {4, 8, 16}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto Y = generate(SampleKind::iid_uniform, n * n, 1, {seed, 21});
      const double wce_Y = wce_exact(uniform_rule(Y), k);
      for (const auto& lrk : four_variants(k, n, Y, seed).lrks) {
        const auto q = kquad(lrk, Y, true);
        EXPECT_LE(wce_exact(q, k), 2.0 * mean_sqrt_residual(lrk, Y) + wce_Y + 1e-6);
      }
    }
  }
}

TEST(Chain, ExpectedWceBound) {
  const auto k = Kernel::korobov(1);
  const int ell = 20;
  const Eigen::Index s = 5;
  const int N = 1024;
  const auto Z = generate(SampleKind::iid_uniform, ell, 1, {77, 0});
  const auto lg = prepare_landmarks(k, Z);
  const auto full = build_nystrom(lg);

  const auto R = generate(SampleKind::iid_uniform, 100000, 1, {77, 1});
  std::vector<double> root;
  const Eigen::VectorXd res = residual_diag(full, R);
  for (Eigen::Index i = 0; i < res.size(); ++i) root.push_back(std::sqrt(res(i)));
  const auto mc = oracle::mean_and_stderr(root);

  std::vector<double> wce;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto Y = generate(SampleKind::iid_uniform, N, 1, {77, 100 + t});
    wce.push_back(wce_exact(kquad(build_mercer_empirical(lg, Y, s), Y, true), k));
  }
  const auto st = oracle::mean_and_stderr(wce);
  const double bound =
      2.0 * mc.mean + 2.0 * std::sqrt(spectral_tail(k, s)) + std::sqrt(c_k_mu(k) / N);
  const double se = std::sqrt(st.stderr_ * st.stderr_ + 4.0 * mc.stderr_ * mc.stderr_);
  EXPECT_LE(st.mean, bound + 3.0 * se);
}

TEST(Oracle, PairSumMatchesBruteForce) {
  const auto k = Kernel::korobov(1);
  std::mt19937_64 rng(8);
  for (int n : {1, 2, 17, 300}) {
    const auto X = oracle::uniform_points(rng, n, 1);
    std::vector<double> x(X.data(), X.data() + n);
    double brute = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) brute += k(point(X, i), point(X, j));
    EXPECT_NEAR(oracle::korobov1_pair_sum(x), brute, 1e-9 * brute);
  }
}

TEST(Chain, ExactAgreesWithEmpiricalReference) {
  // wce(Q)^2 = mmd(Q, mu_ref)^2 + wce(mu_ref)^2 + cross term of order sqrt(c/M).
  const auto k = Kernel::korobov(1);
  const int M = 100000;
  const auto ref = generate(SampleKind::iid_uniform, M, 1, {31, 0});
  std::vector<double> r(ref.data(), ref.data() + M);
  const double pair = oracle::korobov1_pair_sum(r) / (static_cast<double>(M) * M);
  const double wce_ref_sq = pair - 1.0;
  const double c = c_k_mu(k);

  const int n = 8;
  const auto Y = generate(SampleKind::iid_uniform, n * n, 1, {31, 1});
  for (const auto& lrk : four_variants(k, n, Y, 31).lrks) {
    const auto q = kquad(lrk, Y, true);
    double qq = 0.0;
    double cross = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      for (Eigen::Index j = 0; j < q.size(); ++j) {
        qq += q.weights(i) * q.weights(j) * k(point(q.points, i), point(q.points, j));
      }
      double row = 0.0;
      for (int j = 0; j < M; ++j) row += k(point(q.points, i), point(ref, j));
      cross += q.weights(i) * row / M;
    }
    const double mmd_sq = qq - 2.0 * cross + pair;
    const double w = wce_exact(q, k);
    const double tol = 8.0 * w * std::sqrt(c / M) + 4.0 * c / M;
    EXPECT_NEAR(w * w, mmd_sq + wce_ref_sq, tol) << to_string(lrk.kind());
  }
}
