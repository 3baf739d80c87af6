#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "geomask/efficiency.hpp"
#include "geomask/mask.hpp"
#include "geomask/synth.hpp"

using namespace geomask;

namespace {

ChoiceDataset csr_dataset(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return simulate_choices(generate_csr(n, StudyArea::unit_square(), rng), {0, 0}, {1, -2}, rng);
}

}  // namespace

TEST(MaskedMoment, Examples) {
  for (double d : {0.0, 0.3, 2.0}) {
    EXPECT_EQ(expected_sq_masked_distance(d, 0.0, MomentFormula::derived), d * d);
    EXPECT_EQ(expected_sq_masked_distance(d, 0.0, MomentFormula::as_printed), d * d);
  }
  EXPECT_NEAR(expected_sq_masked_distance(0.5, 0.3, MomentFormula::derived), 0.28, 1e-15);
  EXPECT_NEAR(expected_sq_masked_distance(0.5, 0.3, MomentFormula::as_printed), 0.35, 1e-15);
  EXPECT_EQ(kDefaultMomentFormula, MomentFormula::derived);
  EXPECT_THROW(expected_sq_masked_distance(-1, 0.1), InvalidArgument);
}

TEST(MaskedMoment, MonteCarloPicksDerived) {
  const MaskSpec spec{Mechanism::uniform, 0.3, BoundaryPolicy::unconstrained()};
  const Point p{0.5, 0.0};
  RngStream rng(12, 0);
  const std::size_t draws = 1000000;
  double s = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto q = mask_point(p, spec, StudyArea::unit_square(), rng);
    s += q.x * q.x + q.y * q.y;
  }
  const double mean = s / draws;
  EXPECT_NEAR(mean, expected_sq_masked_distance(0.5, 0.3, MomentFormula::derived), 1e-3);
  EXPECT_GT(std::abs(mean - expected_sq_masked_distance(0.5, 0.3, MomentFormula::as_printed)), 1e-3);
}

TEST(InformationBeta, Examples) {
  ChoiceDataset at_facility({{0, 0}, {0, 0}}, {{0, 0}}, {1, 0});
  EXPECT_EQ(information_beta(at_facility, {0, 1}), 0.0);

  ChoiceDataset single({{2, 0}}, {{0, 0}}, {1}, StudyArea::rectangle(-3, 3, -3, 3));
  EXPECT_DOUBLE_EQ(information_beta(single, {0, 0}), 1.0);

  const auto ds = csr_dataset(500, 1);
  EXPECT_EQ(information_beta(ds, {1, -2}, MaskedMoment{0.0, MomentFormula::derived}), information_beta(ds, {1, -2}));
}

TEST(InformationBeta, MatchesObservedInformationWithoutIntercept) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = csr_dataset(300, seed);
    const LogitParams p{0.0, -1.7};
    const double info = information_beta(ds, p, std::nullopt, InterceptMode::no_intercept);
    const auto m = observed_information(ds.distances_to(0), p, InterceptMode::no_intercept);
    EXPECT_NEAR(info, m.bb, 1e-12 * std::max(1.0, m.bb));
  }
}

TEST(InformationBeta, LambdaAtMaskedDistances) {
  const auto ds = csr_dataset(400, 3);
  RngStream rng(3, 1);
  const auto masked = mask_dataset(ds, {Mechanism::uniform, 0.2, BoundaryPolicy::redraw()}, rng);
  const double at_true = information_beta(masked, {1, -2}, MaskedMoment{0.2});
  EXPECT_EQ(at_true, information_beta(ds, {1, -2}, MaskedMoment{0.2}));
  const double at_active =
      information_beta(masked, {1, -2}, MaskedMoment{0.2}, InterceptMode::with_intercept, LambdaAt::active_distances);
  EXPECT_NE(at_true, at_active);
  EXPECT_GT(at_active, 0.0);
}

TEST(EfficiencyLoss, Examples) {
  ChoiceDataset single({{1, 0}}, {{0, 0}}, {1}, StudyArea::rectangle(-2, 2, -2, 2));
  EXPECT_NEAR(efficiency_loss(single, {0, 0}, 1.0, MomentFormula::derived), 0.75, 1e-15);
  EXPECT_NEAR(efficiency_loss(single, {0, 0}, 1.0, MomentFormula::as_printed), 0.75, 1e-15);
  EXPECT_EQ(efficiency_loss(single, {0, 0}, 0.0), 1.0);

  ChoiceDataset degenerate({{0, 0}}, {{0, 0}}, {1});
  EXPECT_THROW(efficiency_loss(degenerate, {0, 0}, 0.1), DegenerateInformation);
}

TEST(EfficiencyLoss, MonotoneAndBounded) {
  const auto ds = csr_dataset(2000, 4);
  for (auto variant : {MomentFormula::derived, MomentFormula::as_printed}) {
    EXPECT_EQ(efficiency_loss(ds, {1, -2}, 0.0, variant), 1.0);
    double prev = 1.0;
    for (int i = 1; i <= 40; ++i) {
      const double el = efficiency_loss(ds, {1, -2}, 0.05 * i, variant);
      EXPECT_LT(el, prev);
      EXPECT_GT(el, 0.0);
      prev = el;
    }
  }
}

TEST(EfficiencyReport, Fields) {
  const auto ds = csr_dataset(800, 5);
  const auto r = efficiency_report(ds, {1, -2}, 0.3);
  EXPECT_GT(r.info_true, 0.0);
  EXPECT_GT(r.info_masked_analytic, r.info_true);
  EXPECT_DOUBLE_EQ(r.el_analytic, r.info_true / r.info_masked_analytic);
  EXPECT_DOUBLE_EQ(r.asymptotic_var_true(), 1.0 / r.info_true);
  EXPECT_FALSE(r.el_empirical.has_value());
  EXPECT_EQ(to_string(r.moment_formula), "derived");
}

TEST(VarianceRatio, IdenticalSamplesGiveOne) {
  RngStream rng(6, 6);
  std::vector<double> b(100);
  for (auto& x : b) x = rng.normal();
  EXPECT_DOUBLE_EQ(empirical_variance_ratio(b, b), 1.0);
  const auto ci = bootstrap_variance_ratio_ci(b, b, RngStream(6, 7));
  EXPECT_LT(ci.lo, 1.0);
  EXPECT_GT(ci.hi, 1.0);
}

TEST(VarianceRatio, FitsSkipNonConverged) {
  std::vector<LogitFit> fits(40);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    fits[i].params.beta = static_cast<double>(i % 7);
    fits[i].converged = true;
  }
  EXPECT_DOUBLE_EQ(empirical_variance_ratio(fits, fits), 1.0);
  for (std::size_t i = 0; i < 15; ++i) fits[i].converged = false;
  EXPECT_THROW(empirical_variance_ratio(fits, fits), InsufficientData);
}

TEST(VarianceRatio, ScaledSample) {
  RngStream rng(7, 7);
  std::vector<double> a(5000), b(5000);
  for (auto& x : a) x = rng.normal();
  for (auto& x : b) x = 2.0 * rng.normal();
  const double r = empirical_variance_ratio(a, b);
  EXPECT_NEAR(r, 0.25, 0.02);
  const auto ci = bootstrap_variance_ratio_ci(a, b, RngStream(7, 8), 0.95, 500);
  EXPECT_TRUE(ci.contains(0.25));
  EXPECT_FALSE(ci.contains(1.0));
}

TEST(VarianceRatio, InsufficientData) {
  std::vector<double> few(29, 1.0);
  std::vector<double> many(40);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<double>(i);
  EXPECT_THROW(empirical_variance_ratio(few, many), InsufficientData);
  EXPECT_THROW(bootstrap_variance_ratio_ci(many, few, RngStream(1, 1)), InsufficientData);
  EXPECT_THROW(sample_variance(std::vector<double>{1.0}), InsufficientData);
  std::vector<double> flat(40, 3.0);
  EXPECT_THROW(empirical_variance_ratio(many, flat), InsufficientData);
}
