#include <gtest/gtest.h>

#include <random>

#include "nnm/error.hpp"
#include "nnm/solver.hpp"
#include "oracles.hpp"

namespace {

using nnm::Constraint;
using nnm::SubproblemLS;

SubproblemLS random_problem(std::mt19937_64& rng, int d, int rows, Constraint c) {
  std::uniform_real_distribution<double> coef(0.0, 1.0), target(0.0, 1.0);
  SubproblemLS p;
  p.constraint = c;
  for (int r = 0; r < rows; ++r) {
    std::vector<double> a(static_cast<std::size_t>(d));
    if (c == Constraint::simplex) {
      for (double& v : a) v = coef(rng);  // item like-vectors
    } else {
      a = oracle::random_simplex(rng, d);  // user distributions
    }
    p.rows.push_back({a, target(rng)});
  }
  return p;
}

oracle::Quadratic as_quadratic(const SubproblemLS& p) {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (const auto& r : p.rows) {
    a.push_back(r.coefficients);
    b.push_back(r.target);
  }
  return oracle::from_rows(a, b);
}

TEST(ProjectSimplex, KnownPoints) {
  EXPECT_EQ(nnm::project_simplex(std::vector<double>{0.2, 0.8}).entries, (std::vector<double>{0.2, 0.8}));
  const auto p = nnm::project_simplex(std::vector<double>{2.0, 0.0});
  EXPECT_DOUBLE_EQ(p.entries[0], 1.0);
  EXPECT_DOUBLE_EQ(p.entries[1], 0.0);
  const auto q = nnm::project_simplex(std::vector<double>{0.0, 0.0, 0.0});
  for (const double v : q.entries) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  const auto r = nnm::project_simplex(std::vector<double>{1.0, 1.0, -5.0});
  EXPECT_NEAR(r.entries[0], 0.5, 1e-15);
  EXPECT_NEAR(r.entries[2], 0.0, 1e-15);
}

TEST(ProjectSimplex, MatchesGridProjection) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + trial % 3;
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = n(rng);
    const auto dist = [&](const Eigen::VectorXd& x) { return (x - v).squaredNorm(); };
    const auto best = oracle::grid_simplex(dist, d);
    std::vector<double> vv(v.data(), v.data() + d);
    const auto p = nnm::project_simplex(vv);
    const Eigen::Map<const Eigen::VectorXd> pm(p.entries.data(), d);
    EXPECT_LE(dist(pm), best.value + 1e-9);
    EXPECT_TRUE(nnm::check_simplex(p.entries, "p").empty());
  }
}

TEST(ProjectSimplex, IsIdempotent) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(5);
    for (double& x : v) x = n(rng);
    const auto once = nnm::project_simplex(v);
    const auto twice = nnm::project_simplex(once.entries);
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_NEAR(once.entries[k], twice.entries[k], 1e-15);
  }
}

class SubsolverOracle : public ::testing::TestWithParam<Constraint> {};

TEST_P(SubsolverOracle, MatchesGridAndFaceEnumeration) {
  const Constraint c = GetParam();
  std::mt19937_64 rng(c == Constraint::simplex ? 101 : 202);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 3;
    const int rows = 1 + static_cast<int>(rng() % 10);
    const auto problem = random_problem(rng, d, rows, c);
    const auto q = as_quadratic(problem);
    const auto f = [&](const Eigen::VectorXd& x) { return q(x); };
    const auto grid = c == Constraint::simplex ? oracle::grid_simplex(f, d) : oracle::grid_box(f, d);
    std::vector<std::vector<int>> groups;
    if (c == Constraint::simplex) {
      groups.emplace_back();
      for (int j = 0; j < d; ++j) groups.back().push_back(j);
    }
    const auto exact = oracle::enumerate_faces(q, c == Constraint::box, groups);

    std::vector<double> x;
    if (c == Constraint::simplex) {
      x = nnm::solve_simplex_ls(problem, nnm::SimplexVector{std::vector<double>(d, 1.0 / d)}).entries;
      EXPECT_TRUE(nnm::check_simplex(x, "x").empty());
    } else {
      x = nnm::solve_box_ls(problem, nnm::LikeVector{std::vector<double>(d, 0.5)}).entries;
      EXPECT_TRUE(nnm::check_unit_box(x, "x").empty());
    }
    const double value = nnm::subproblem_objective(problem, x);
    EXPECT_LE(value, grid.value + 1e-6) << "trial " << trial;
    EXPECT_NEAR(value, exact.value, 1e-9 * (1.0 + exact.value)) << "trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(Constraints, SubsolverOracle, ::testing::Values(Constraint::simplex, Constraint::box));

TEST(Subsolver, OneRowSimplexPicksTheBestVertex) {
  SubproblemLS p{{{{1.0, 0.0}, 1.0}}, Constraint::simplex};
  const auto x = nnm::solve_simplex_ls(p, nnm::SimplexVector{{0.5, 0.5}});
  EXPECT_NEAR(x.entries[0], 1.0, 1e-12);
  EXPECT_NEAR(x.entries[1], 0.0, 1e-12);
}

TEST(Subsolver, FlatDirectionKeepsWarmStart) {
  SubproblemLS p{{{{1.0, 0.0}, 1.0}}, Constraint::box};
  const auto x = nnm::solve_box_ls(p, nnm::LikeVector{{0.5, 0.5}});
  EXPECT_NEAR(x.entries[0], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(x.entries[1], 0.5);
}

TEST(Subsolver, ZeroTargetsDriveBoxToFloor) {
  SubproblemLS p{{{{0.3, 0.7}, 0.0}, {{0.9, 0.1}, 0.0}, {{0.5, 0.5}, 0.0}}, Constraint::box};
  const auto x = nnm::solve_box_ls(p, nnm::LikeVector{{0.5, 0.5}});
  EXPECT_NEAR(x.entries[0], 0.0, 1e-12);
  EXPECT_NEAR(x.entries[1], 0.0, 1e-12);
}

TEST(Subsolver, NeverIncreasesFromWarmStart) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 5;
    const auto problem = random_problem(rng, d, 1 + static_cast<int>(rng() % 12), Constraint::simplex);
    const auto warm = oracle::random_simplex(rng, d);
    const auto eq = nnm::normal_equations(problem);
    std::vector<double> x = warm;
    const auto r = nnm::minimize_on_simplex(eq, x, {1e-8, 3});
    EXPECT_LE(eq.value(x), eq.value(warm) * (1.0 + 1e-14) + 1e-15);
    EXPECT_NEAR(r.objective, eq.value(x), 1e-12 * (1.0 + r.objective));
  }
}

TEST(Subsolver, NormalEquationsReproduceRowObjective) {
  std::mt19937_64 rng(9);
  const auto problem = random_problem(rng, 3, 7, Constraint::box);
  const auto eq = nnm::normal_equations(problem);
  const std::vector<double> x{0.1, 0.6, 0.3};
  EXPECT_NEAR(eq.value(x), nnm::subproblem_objective(problem, x), 1e-12);
}

TEST(Subsolver, EmptyProblemIsDegenerate) {
  EXPECT_THROW(nnm::normal_equations(SubproblemLS{{}, Constraint::simplex}), nnm::DegenerateProblemError);
}

TEST(Subsolver, BundleMatchesFaceEnumeration) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 2;
    const int z = 2 + trial % 2;
    nnm::BundleEquations eq(d, z);
    const int rows = 1 + static_cast<int>(rng() % 8);
    for (int r = 0; r < rows; ++r) {
      const auto p = oracle::random_simplex(rng, d);
      const Eigen::Map<const Eigen::VectorXd> v(p.data(), d);
      const int stars = 1 + static_cast<int>(rng() % static_cast<unsigned>(z));
      eq.gram += v * v.transpose();
      eq.rhs.col(stars - 1) += v;
      eq.target_sq += 1.0;
      ++eq.rows;
    }
    // Stack the outcome blocks into one quadratic with one group per component.
    const int n = d * z;
    oracle::Quadratic q{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n), eq.target_sq};
    for (int o = 0; o < z; ++o) {
      q.gram.block(o * d, o * d, d, d) = eq.gram;
      q.rhs.segment(o * d, d) = eq.rhs.col(o);
    }
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
      for (int o = 0; o < z; ++o) groups[static_cast<std::size_t>(j)].push_back(o * d + j);
    const auto exact = oracle::enumerate_faces(q, false, groups);

    std::vector<double> x(static_cast<std::size_t>(n), 1.0 / z);
    nnm::minimize_on_bundle(eq, x);
    EXPECT_TRUE(nnm::check_bundle(x, d, z, "x").empty());
    const Eigen::Map<const Eigen::VectorXd> xm(x.data(), n);
    EXPECT_NEAR(q(xm), exact.value, 1e-9 * (1.0 + exact.value));
    EXPECT_NEAR(eq.value(x), q(xm), 1e-12 * (1.0 + q(xm)));
  }
}

}  // namespace
