#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nnm/error.hpp"
#include "nnm/eval.hpp"
#include "planted.hpp"

namespace {

TEST(Metrics, HandArithmetic) {
  const std::vector<double> t{3.0, 4.0};
  EXPECT_DOUBLE_EQ(nnm::mae(t, t), 0.0);
  EXPECT_DOUBLE_EQ(nnm::rmse(t, t), 0.0);
  EXPECT_DOUBLE_EQ(nnm::mae(std::vector<double>{4.0, 3.0}, t), 1.0);
  EXPECT_DOUBLE_EQ(nnm::rmse(std::vector<double>{4.0, 3.0}, t), 1.0);
  EXPECT_DOUBLE_EQ(nnm::mae(std::vector<double>{3.0, 6.0}, t), 1.0);
  EXPECT_DOUBLE_EQ(nnm::rmse(std::vector<double>{3.0, 6.0}, t), std::sqrt(2.0));
  EXPECT_THROW(nnm::mae(std::vector<double>{}, std::vector<double>{}), nnm::PreconditionError);
  EXPECT_THROW(nnm::rmse(std::vector<double>{1.0}, t), nnm::PreconditionError);
}

TEST(Metrics, MaeBoundedByRmseAndOrderFree) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(1 + rng() % 30), y(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = n(rng);
      y[k] = n(rng);
    }
    const double a = nnm::mae(p, y), r = nnm::rmse(p, y);
    EXPECT_LE(a, r + 1e-12);
    std::vector<std::size_t> perm(p.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pp, yy;
    for (const auto k : perm) {
      pp.push_back(p[k]);
      yy.push_back(y[k]);
    }
    EXPECT_NEAR(nnm::mae(pp, yy), a, 1e-12);
    EXPECT_NEAR(nnm::rmse(pp, yy), r, 1e-12);
  }
}

TEST(PredictTest, FallbackAndRounding) {
  nnm::NnmModel m(nnm::Mode::binary, 1, 5, nnm::IdIndex({1}), nnm::IdIndex({1}));
  m.item(0)[0] = 0.73;  // 3.65 stars
  const std::vector<nnm::Rating> test{{1, 1, 4}, {2, 1, 3}, {1, 2, 3}};
  std::size_t fallbacks = 0;
  const auto c = nnm::predict_test(m, test, 3.4, nnm::StarMapping::continuous, &fallbacks);
  EXPECT_EQ(fallbacks, 2u);
  EXPECT_NEAR(c[0], 3.65, 1e-12);
  EXPECT_DOUBLE_EQ(c[1], 3.4);
  const auto r = nnm::predict_test(m, test, 3.4, nnm::StarMapping::rounded);
  EXPECT_EQ(r, (std::vector<double>{4.0, 3.0, 3.0}));
}

TEST(CrossValidate, ToyDatasetGivesOneRowPerFold) {
  std::vector<nnm::Rating> r;
  for (int k = 0; k < 10; ++k) r.push_back({1 + k % 3, 1 + k % 4 + 4 * (k / 8), 1 + k % 5});
  const nnm::RatingDataset d(r, 5);
  nnm::EvalConfig c;
  c.fit.dimension = 2;
  const auto report = nnm::cross_validate(d, c);
  EXPECT_EQ(report.folds.size(), 5u);
  for (const auto& f : report.folds) EXPECT_LE(f.mae, f.rmse + 1e-12);
  const auto csv = report.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(report.to_json().find("\"fold_count\": 5"), std::string::npos);
}

TEST(CrossValidate, RecoversPlantedModel) {
  // Noise-free targets from a rank-2 model; only the rounding of the stars
  // separates the data from the model class.
  const auto d = planted::generate(60, 50, 2, 0.7, 5);
  nnm::EvalConfig c;
  c.fit.dimension = 2;
  c.fit.seed = 1;
  const auto report = nnm::cross_validate(d, c);
  EXPECT_EQ(report.fallbacks, 0u);
  EXPECT_LT(report.mean_mae, 0.35);
}

TEST(CrossValidate, ReportsAreReproducible) {
  const auto d = planted::generate(30, 25, 3, 0.5, 8);
  nnm::EvalConfig c;
  c.split_seed = 4;
  c.fit.seed = 4;
  const auto a = nnm::cross_validate(d, c), b = nnm::cross_validate(d, c);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.to_csv(), b.to_csv());
  c.split_seed = 5;
  EXPECT_NE(nnm::cross_validate(d, c).to_json(), a.to_json());
}

TEST(CrossValidate, NeedsTwoFolds) {
  const auto d = planted::generate(10, 10, 2, 0.5, 1);
  nnm::EvalConfig c;
  c.folds = 1;
  EXPECT_THROW(nnm::cross_validate(d, c), nnm::ConfigError);
  EXPECT_THROW(nnm::parse_star_mapping("floor"), nnm::ConfigError);
}

TEST(Curves, DimensionCurveRowsAndRankOneRecovery) {
  const auto d = planted::generate(40, 30, 1, 0.6, 2);
  nnm::EvalConfig c;
  const std::vector<int> dims{1, 2};
  const auto curve = nnm::curve_vs_dimension(d, dims, c);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].dimension, 1);
  EXPECT_LT(curve[0].mae, 0.1);
  EXPECT_EQ(nnm::to_csv(curve).rfind("D,mae,rmse\n1,", 0), 0u);
}

TEST(Curves, IterationCurveHasOneRowPerIteration) {
  const auto d = planted::generate(40, 30, 2, 0.5, 3);
  nnm::EvalConfig c;
  c.fit.max_outer_iters = 9;
  const auto curve = nnm::curve_vs_iteration(d, c);
  ASSERT_EQ(curve.size(), 9u);
  for (std::size_t k = 3; k < curve.size(); ++k) EXPECT_LE(curve[k].objective, curve[k - 1].objective * (1 + 1e-12));
  EXPECT_EQ(curve.back().iter, 9);
}

}  // namespace
