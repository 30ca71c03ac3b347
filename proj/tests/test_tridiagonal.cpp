#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "bhwg/tridiagonal.hpp"

using namespace bhwg;

namespace {

SymTridiagonal random_tridiagonal(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymTridiagonal t;
  for (std::size_t i = 0; i < n; ++i) t.diag.push_back(u(rng));
  for (std::size_t i = 0; i + 1 < n; ++i) t.off.push_back(u(rng));
  return t;
}

Eigen::MatrixXd dense(const SymTridiagonal& t) {
  const auto n = Eigen::Index(t.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = t.diag[std::size_t(i)];
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = t.off[std::size_t(i)];
  return m;
}

}  // namespace

TEST(EigenQL, MatchesDenseSolver) {
  std::mt19937_64 rng(7);
  for (std::size_t n : {1u, 2u, 3u, 10u, 57u}) {
    const auto t = random_tridiagonal(rng, n);
    const auto e = eigen_ql(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(dense(t));
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(e.values[k], ref.eigenvalues()(Eigen::Index(k)), 1e-12);
  }
}

TEST(EigenQL, VectorsAreOrthonormalEigenvectors) {
  std::mt19937_64 rng(11);
  const auto t = random_tridiagonal(rng, 30);
  const auto e = eigen_ql(t);
  Eigen::MatrixXd Q(30, 30);
  for (Eigen::Index r = 0; r < 30; ++r)
    for (Eigen::Index k = 0; k < 30; ++k) Q(r, k) = e.vec(std::size_t(r), std::size_t(k));
  EXPECT_LT((Q.transpose() * Q - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(e.values.data(), 30);
  EXPECT_LT((dense(t) * Q - Q * d.asDiagonal()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EigenQL, RejectsMalformedInput) {
  SymTridiagonal t{{1.0, 2.0}, {}};
  EXPECT_THROW(eigen_ql(t), std::invalid_argument);
  EXPECT_THROW(eigen_ql(SymTridiagonal{}), std::invalid_argument);
}

TEST(Sturm, CountsEigenvaluesBelowShift) {
  std::mt19937_64 rng(3);
  const auto t = random_tridiagonal(rng, 40);
  const auto e = eigen_ql(t);
  for (std::size_t k = 0; k + 1 < 40; ++k) {
    const double mid = 0.5 * (e.values[k] + e.values[k + 1]);
    EXPECT_EQ(sturm_count(t, mid), k + 1);
  }
}

TEST(Bisection, FindsEveryEigenvalue) {
  std::mt19937_64 rng(5);
  const auto t = random_tridiagonal(rng, 25);
  const auto e = eigen_ql(t);
  for (std::size_t k = 0; k < 25; ++k) EXPECT_NEAR(bisect_eigenvalue(t, k), e.values[k], 1e-13);
  EXPECT_THROW(bisect_eigenvalue(t, 25), std::out_of_range);
}

namespace {

SymTridiagonal double_well(std::size_t n, std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
  SymTridiagonal t;
  for (std::size_t i = 0; i < n; ++i) {
    const bool well = (i >= a0 && i < a1) || (i >= b0 && i < b1);
    t.diag.push_back(2.0 - (well ? 0.5 : 0.0));
  }
  t.off.assign(n - 1, -1.0);
  return t;
}

}  // namespace

TEST(LowestEigenpairs, MatchesFullDecompositionForResolvedPair) {
  const auto t = double_well(400, 150, 190, 196, 236);
  const auto pairs = lowest_eigenpairs(t, 3);
  const auto ref = eigen_ql(t);
  ASSERT_GT(ref.values[1] - ref.values[0], 1e-8);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(pairs[k].value, ref.values[k], 1e-12);
    double dot = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) dot += pairs[k].vector[i] * ref.vec(i, k);
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-9);
  }
}

TEST(LowestEigenpairs, OrthonormalInsideNumericallyDegenerateCluster) {
  // Wells far apart: the tunnelling splitting is below double precision.
  const auto t = double_well(400, 101, 140, 261, 300);
  const auto pairs = lowest_eigenpairs(t, 4);
  const auto n = t.size();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    std::vector<double> tv(n);
    t.apply<double>(pairs[k].vector, tv);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(tv[i] - pairs[k].value * pairs[k].vector[i]));
    EXPECT_LT(res, 1e-10);
    for (std::size_t j = 0; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += pairs[k].vector[i] * pairs[j].vector[i];
      EXPECT_NEAR(dot, 0.0, 1e-10);
    }
  }
}
