#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "bhwg/experiments.hpp"

using namespace bhwg;

TEST(TraceAnalysis, ZeroCrossingsOfSampledCosine) {
  std::vector<double> z, P;
  for (int i = 0; i <= 1000; ++i) {
    z.push_back(0.1 * i);
    P.push_back(std::cos(0.2 * z.back()));
  }
  const auto c = zero_crossings(z, P);
  ASSERT_EQ(c.size(), 6u);
  EXPECT_NEAR(c[0], std::numbers::pi / 0.4, 1e-3);
  const auto per = period_from_crossings(c);
  ASSERT_TRUE(per.has_value());
  EXPECT_NEAR(*per, 2 * std::numbers::pi / 0.2, 1e-3);
  EXPECT_FALSE(period_from_crossings(std::vector<double>{1.0}).has_value());
}

TEST(TraceAnalysis, PositiveLobeMaxima) {
  const std::vector<double> P{1.0, 0.5, -0.2, 0.3, 0.6, 0.2, -0.1, 0.4, 0.1};
  EXPECT_EQ(positive_lobe_maxima(P), (std::vector<double>{1.0, 0.6, 0.4}));
}

TEST(TraceAnalysis, TightBindingPeriodExact) {
  const double J = 0.0781;
  const auto c = tight_binding_crossings(build_coefficients({9, J, 0.0}), 0, 100.0);
  ASSERT_GE(c.size(), 4u);
  EXPECT_NEAR(c[0], std::numbers::pi / (4 * J), 1e-9);
  EXPECT_NEAR(*period_from_crossings(c) * J / std::numbers::pi, 1.0, 1e-10);
  EXPECT_TRUE(tight_binding_crossings(build_coefficients({9, J, 0.1043}), 0, 100.0).empty());
}

TEST(ExperimentConfig, DefaultsAndValidation) {
  const auto e = ExperimentConfig::from(Config{});
  EXPECT_EQ(e.N, 9);
  EXPECT_EQ(e.U_list, (std::vector<double>{0.0, 0.0174, 0.1043}));
  EXPECT_EQ(e.design.refinement, DesignRefinement::automatic);
  EXPECT_EQ(e.hash, Config{}.hash());
  Config c;
  c.set("launch_site", "12");
  EXPECT_THROW(ExperimentConfig::from(c), std::invalid_argument);
  c = Config{};
  c.set("design_refinement", "perfect");
  EXPECT_THROW(ExperimentConfig::from(c), std::invalid_argument);
  c = Config{};
  c.set("bpm_margin_um", "10");
  EXPECT_THROW(ExperimentConfig::from(c), std::invalid_argument);
}

TEST(TwoBosonStage, QualitativeFeatures) {
  const auto e = ExperimentConfig::from(Config{});
  const auto s = two_boson_curves(e);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s[0].p2_min, 0.5, 1e-6);
  EXPECT_NEAR(s[2].p2_floor, 0.9, 1e-12);
  EXPECT_LT(s[0].half_transfer_mm, s[1].half_transfer_mm);
  EXPECT_LT(s[1].half_transfer_mm, s[2].half_transfer_mm);
  for (const auto& x : s) EXPECT_LE(x.oracle_error, 1e-9);
}

TEST(CompareStage, RequiresUpstreamOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "bhwg_compare_missing";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto e = ExperimentConfig::from(Config{});
  EXPECT_THROW(cmd_compare(e, dir), std::runtime_error);
}

TEST(CompareStage, RejectsOutputsFromAnotherConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "bhwg_compare_hash";
  std::filesystem::remove_all(dir);
  Config c;
  c.set("U_per_mm", "0.1043");
  c.set("N", "2");
  Workbench wb(ExperimentConfig::from(c));
  cmd_evolve(wb, dir);
  c.set("z_end_mm", "50");
  const auto other = ExperimentConfig::from(c);
  try {
    cmd_compare(other, dir);
    FAIL() << "expected a config mismatch";
  } catch (const std::runtime_error& err) {
    EXPECT_NE(std::string(err.what()).find("different config"), std::string::npos);
  }
}
