#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "bhwg/fock_core.hpp"

using namespace bhwg;

namespace {

constexpr double kJ = 0.0781;

// exp(-i H z) by scaling and squaring of a Taylor series.
Eigen::MatrixXcd taylor_propagator(const Eigen::MatrixXd& H, double z) {
  const Eigen::MatrixXcd A = complex(0.0, -z) * H.cast<complex>();
  const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (nrm / std::pow(2.0, s) > 0.25) ++s;
  const Eigen::MatrixXcd B = A / std::pow(2.0, s);
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(H.rows(), H.cols());
  Eigen::MatrixXcd sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * B / double(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

Eigen::MatrixXd dense(const SymTridiagonal& h) {
  const auto n = Eigen::Index(h.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = h.diag[std::size_t(i)];
  for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = h.off[std::size_t(i)];
  return m;
}

FockState random_state(std::mt19937_64& rng, int N) {
  std::normal_distribution<double> g;
  FockState s;
  double nrm = 0.0;
  for (int l = 0; l <= N; ++l) {
    s.c.emplace_back(g(rng), g(rng));
    nrm += std::norm(s.c.back());
  }
  for (auto& c : s.c) c /= std::sqrt(nrm);
  return s;
}

}  // namespace

TEST(BuildCoefficients, NineBosonsWithoutInteraction) {
  const auto c = build_coefficients({9, kJ, 0.0});
  ASSERT_EQ(c.kappa.size(), 9u);
  ASSERT_EQ(c.V.size(), 10u);
  EXPECT_NEAR(c.kappa[0], 3 * kJ, 1e-15);
  EXPECT_NEAR(c.kappa[0], 0.2343, 1e-12);
  EXPECT_NEAR(c.kappa[4], 0.3905, 1e-12);
  for (double v : c.V) EXPECT_EQ(v, 0.0);
}

TEST(BuildCoefficients, TwoBosonsMatchThreeSiteSystem) {
  const double U = 0.3;
  const auto c = build_coefficients({2, kJ, U});
  EXPECT_NEAR(c.kappa[0], std::sqrt(2.0) * kJ, 1e-15);
  EXPECT_NEAR(c.kappa[1], std::sqrt(2.0) * kJ, 1e-15);
  EXPECT_DOUBLE_EQ(c.V[0], U);
  EXPECT_DOUBLE_EQ(c.V[1], 0.0);
  EXPECT_DOUBLE_EQ(c.V[2], U);
}

TEST(BuildCoefficients, InteractionDetuningsForNine) {
  const auto c = build_coefficients({9, kJ, 0.0174});
  EXPECT_NEAR(c.V[0], 36 * 0.0174, 1e-14);
  EXPECT_NEAR(c.V[9], 0.6264, 1e-12);
  EXPECT_NEAR(c.V[4], 16 * 0.0174, 1e-14);
  EXPECT_NEAR(c.V[5], 0.2784, 1e-12);
}

TEST(BuildCoefficients, MirrorSymmetricAndEdgeMaximal) {
  const auto c = build_coefficients({12, 0.5, 0.2});
  for (std::size_t l = 0; l < c.kappa.size(); ++l) EXPECT_DOUBLE_EQ(c.kappa[l], c.kappa[c.kappa.size() - 1 - l]);
  for (std::size_t l = 0; l < c.V.size(); ++l) {
    EXPECT_DOUBLE_EQ(c.V[l], c.V[c.V.size() - 1 - l]);
    EXPECT_LE(c.V[l], c.V[0]);
  }
}

TEST(BuildCoefficients, RejectsInvalidParameters) {
  EXPECT_THROW(build_coefficients({0, kJ, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_coefficients({-1, kJ, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_coefficients({3, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_coefficients({3, kJ, std::nan("")}), std::invalid_argument);
}

TEST(BuildHamiltonian, TwoBosonMatrix) {
  const double U = 0.11;
  const auto h = dense(build_hamiltonian(build_coefficients({2, kJ, U})));
  const double k = std::sqrt(2.0) * kJ;
  Eigen::Matrix3d ref;
  ref << U, -k, 0, -k, 0, -k, 0, -k, U;
  EXPECT_LT((h - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BuildHamiltonian, TwoLevelWithoutInteraction) {
  const auto h = build_hamiltonian(build_coefficients({1, kJ, 0.0}));
  EXPECT_EQ(h.diag, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(h.off, (std::vector<double>{-kJ}));
}

TEST(Spectrum, SmallCases) {
  const auto s1 = spectrum(build_coefficients({1, kJ, 0.0}));
  EXPECT_NEAR(s1[0], -kJ, 1e-15);
  EXPECT_NEAR(s1[1], kJ, 1e-15);
  const auto s2 = spectrum(build_coefficients({2, kJ, 0.0}));
  EXPECT_NEAR(s2[0], -2 * kJ, 1e-15);
  EXPECT_NEAR(s2[1], 0.0, 1e-15);
  EXPECT_NEAR(s2[2], 2 * kJ, 1e-15);
}

TEST(Spectrum, EquispacedWithoutInteraction) {
  for (int N : {1, 2, 5, 9, 40}) {
    const auto c = build_coefficients({N, kJ, 0.0});
    const auto s = spectrum(c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(dense(build_hamiltonian(c)));
    for (int k = 0; k <= N; ++k) {
      EXPECT_NEAR(s[std::size_t(k)], ref.eigenvalues()(k), 1e-13);
      EXPECT_NEAR(s[std::size_t(k)] + s[std::size_t(N - k)], 0.0, 1e-12);
    }
    for (int k = 0; k < N; ++k) EXPECT_LE(std::abs(s[std::size_t(k + 1)] - s[std::size_t(k)] - 2 * kJ), 1e-10 * kJ) << N;
  }
}

TEST(PopulationImbalance, Anchors) {
  EXPECT_DOUBLE_EQ(population_imbalance(FockState::localized(9, 0)), 1.0);
  EXPECT_DOUBLE_EQ(population_imbalance(FockState::localized(9, 9)), -1.0);
  std::vector<double> uniform(10, 0.1);
  EXPECT_NEAR(population_imbalance(std::span<const double>(uniform)), 0.0, 1e-15);
  std::vector<double> zero(4, 0.0);
  EXPECT_THROW(population_imbalance(std::span<const double>(zero)), std::invalid_argument);
}

TEST(OccupationProbabilities, OneHotAndUniform) {
  const auto p = occupation_probabilities(FockState::localized(4, 2));
  EXPECT_EQ(p, (std::vector<double>{0, 0, 1, 0, 0}));
  FockState s;
  for (int l = 0; l < 5; ++l) s.c.emplace_back(std::polar(1.0 / std::sqrt(5.0), 0.3 * l));
  for (double v : occupation_probabilities(s)) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Evolve, IdentityOnSingletonGrid) {
  std::mt19937_64 rng(1);
  auto s = random_state(rng, 6);
  s.z = 3.0;
  const std::vector<double> z{3.0};
  const auto tr = evolve(s, build_coefficients({6, kJ, 0.05}), z);
  ASSERT_EQ(tr.amplitudes.size(), 1u);
  EXPECT_EQ(tr.amplitudes[0].c, s.c);
}

TEST(Evolve, FullRevivalAndTransfer) {
  const auto c = build_coefficients({9, kJ, 0.0});
  const double zR = std::numbers::pi / kJ;
  const std::vector<double> z{0.0, zR / 2, zR};
  const auto tr = evolve(FockState::localized(9, 0), c, z);
  for (int l = 0; l <= 9; ++l) {
    EXPECT_NEAR(std::abs(tr.amplitudes[1].c[std::size_t(l)]), l == 9 ? 1.0 : 0.0, 1e-8);
    EXPECT_NEAR(std::abs(tr.amplitudes[2].c[std::size_t(l)]), l == 0 ? 1.0 : 0.0, 1e-8);
  }
  EXPECT_NEAR(tr.imbalance[1], -1.0, 1e-8);
  EXPECT_NEAR(tr.imbalance[2], 1.0, 1e-8);
}

TEST(Evolve, RevivalAndMirrorForArbitraryStates) {
  std::mt19937_64 rng(2);
  const double zR = std::numbers::pi / kJ;
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 1 + int(rng() % 12);
    const auto s = random_state(rng, N);
    const std::vector<double> z{0.0, zR / 2, zR};
    const auto tr = evolve(s, build_coefficients({N, kJ, 0.0}), z);
    for (int l = 0; l <= N; ++l) {
      EXPECT_NEAR(std::abs(tr.amplitudes[2].c[std::size_t(l)]), std::abs(s.c[std::size_t(l)]), 1e-8);
      EXPECT_NEAR(std::abs(tr.amplitudes[1].c[std::size_t(l)]), std::abs(s.c[std::size_t(N - l)]), 1e-8);
    }
  }
}

TEST(Evolve, NormConserved) {
  std::mt19937_64 rng(4);
  const auto s = random_state(rng, 30);
  const auto z = uniform_grid(0.0, 500.0, 0.7);
  const auto tr = evolve(s, build_coefficients({30, kJ, 0.1043}), z);
  for (const auto& a : tr.amplitudes) EXPECT_LE(std::abs(a.norm2() - 1.0), 1e-10);
}

TEST(Evolve, GaugeShiftLeavesPopulationsUnchanged) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 2 + int(rng() % 8);
    auto c = build_coefficients({N, 0.05 + 0.1 * std::abs(u(rng)), 0.2 * u(rng)});
    const auto s = random_state(rng, N);
    auto shifted = c;
    const double shift = 5.0 * u(rng);
    for (double& v : shifted.V) v += shift;
    const auto z = uniform_grid(0.0, 80.0, 4.0);
    const auto a = evolve(s, c, z), b = evolve(s, shifted, z);
    for (std::size_t k = 0; k < z.size(); ++k)
      for (int l = 0; l <= N; ++l)
        EXPECT_NEAR(std::abs(a.amplitudes[k].c[std::size_t(l)]), std::abs(b.amplitudes[k].c[std::size_t(l)]), 1e-9);
  }
}

TEST(Evolve, MatchesTaylorExponential) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int N = 1; N <= 4; ++N)
    for (int trial = 0; trial < 5; ++trial) {
      const auto c = build_coefficients({N, 0.02 + 0.2 * u(rng), 0.4 * (u(rng) - 0.5)});
      const auto s = random_state(rng, N);
      const double z = 60.0 * u(rng);
      const std::vector<double> zg{0.0, z};
      const auto tr = evolve(s, c, zg);
      const Eigen::MatrixXcd Uz = taylor_propagator(dense(build_hamiltonian(c)), z);
      const Eigen::VectorXcd ref = Uz * Eigen::Map<const Eigen::VectorXcd>(s.c.data(), N + 1);
      for (int l = 0; l <= N; ++l) EXPECT_LE(std::abs(tr.amplitudes[1].c[std::size_t(l)] - ref(l)), 1e-9);
    }
}

TEST(Evolve, RejectsBadInput) {
  const auto c = build_coefficients({3, kJ, 0.0});
  FockState s = FockState::localized(3, 0);
  const std::vector<double> ok{0.0, 1.0};
  s.c[0] = 1.1;
  EXPECT_THROW(evolve(s, c, ok), std::invalid_argument);
  s = FockState::localized(3, 0);
  const std::vector<double> bad{0.0, 2.0, 1.0};
  EXPECT_THROW(evolve(s, c, bad), std::invalid_argument);
  const std::vector<double> late{1.0, 2.0};
  EXPECT_THROW(evolve(s, c, late), std::invalid_argument);
  EXPECT_THROW(evolve(FockState::localized(2, 0), c, ok), std::invalid_argument);
}
