#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "nnm/error.hpp"
#include "nnm/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using nnm::IdIndex;
using nnm::Mode;
using nnm::NnmModel;

NnmModel one_by_one(Mode mode, int d, int z, const std::vector<double>& p, const std::vector<double>& e) {
  NnmModel m(mode, d, z, IdIndex({1}), IdIndex({10}));
  std::copy(p.begin(), p.end(), m.user(0).begin());
  std::copy(e.begin(), e.end(), m.item(0).begin());
  return m;
}

TEST(Prediction, BasisUserSelectsComponent) {
  const auto m = one_by_one(Mode::binary, 2, 5, {1.0, 0.0}, {0.8, 0.3});
  EXPECT_DOUBLE_EQ(nnm::predict_score_binary(m, 1, 10), 0.8);
  EXPECT_DOUBLE_EQ(nnm::predict_stars(m, 1, 10), 4.0);
}

TEST(Prediction, FairCoin) {
  // One state, two outcomes with probability 1/2 each.
  const auto m = one_by_one(Mode::categorical, 1, 2, {1.0}, {0.5, 0.5});
  const auto dist = nnm::predict_distribution(m, 1, 10);
  EXPECT_DOUBLE_EQ(dist[0], 0.5);
  EXPECT_DOUBLE_EQ(dist[1], 0.5);
  EXPECT_EQ(nnm::predict_rating_argmax(m, 1, 10), 1);  // tie -> smallest outcome
}

TEST(Prediction, FourSidedCoinAsMixture) {
  // Each sample point splits evenly over two faces; a 50/50 state gives a
  // uniform die.
  const auto m = one_by_one(Mode::categorical, 2, 4, {0.5, 0.5},
                            {0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5});
  const auto dist = nnm::predict_distribution(m, 1, 10);
  for (const double v : dist) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_DOUBLE_EQ(nnm::predict_stars(m, 1, 10), 2.5);
}

TEST(Prediction, StarClamping) {
  EXPECT_DOUBLE_EQ(nnm::stars_from_score(0.0, 5), 1.0);
  EXPECT_DOUBLE_EQ(nnm::stars_from_score(1.0, 5), 5.0);
  EXPECT_DOUBLE_EQ(nnm::stars_from_score(0.5, 5), 2.5);
}

TEST(Prediction, UnknownIdsThrow) {
  const auto m = one_by_one(Mode::binary, 2, 5, {1.0, 0.0}, {0.8, 0.3});
  EXPECT_THROW(nnm::predict_stars(m, 2, 10), nnm::LookupError);
  EXPECT_THROW(nnm::predict_distribution(m, 1, 11), nnm::LookupError);
}

TEST(Prediction, ScoreNeedsBinaryModel) {
  const auto m = one_by_one(Mode::categorical, 1, 2, {1.0}, {0.5, 0.5});
  EXPECT_THROW(nnm::predict_score_binary(m, 1, 10), nnm::ConfigError);
}

NnmModel random_categorical(std::mt19937_64& rng, int d, int z, int users, int items) {
  std::vector<nnm::Id> u(static_cast<std::size_t>(users)), i(static_cast<std::size_t>(items));
  for (int k = 0; k < users; ++k) u[static_cast<std::size_t>(k)] = k + 1;
  for (int k = 0; k < items; ++k) i[static_cast<std::size_t>(k)] = 100 + k;
  NnmModel m(Mode::categorical, d, z, IdIndex(u), IdIndex(i));
  for (int k = 0; k < users; ++k) {
    const auto p = oracle::random_simplex(rng, d);
    std::copy(p.begin(), p.end(), m.user(static_cast<std::size_t>(k)).begin());
  }
  for (int k = 0; k < items; ++k) {
    auto row = m.item(static_cast<std::size_t>(k));
    for (int j = 0; j < d; ++j) {
      const auto col = oracle::random_simplex(rng, z);
      for (int o = 0; o < z; ++o) row[static_cast<std::size_t>(o * d + j)] = col[static_cast<std::size_t>(o)];
    }
  }
  return m;
}

TEST(Prediction, CategoricalDistributionsSumToOne) {
  std::mt19937_64 rng(1);
  const auto m = random_categorical(rng, 3, 5, 6, 7);
  EXPECT_TRUE(nnm::validate(m).empty());
  for (nnm::Id u = 1; u <= 6; ++u) {
    for (nnm::Id i = 100; i < 107; ++i) {
      const auto dist = nnm::predict_distribution(m, u, i);
      double s = 0.0;
      for (const double v : dist) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Prediction, ArgmaxInvariantUnderScaling) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> c(0.01, 100.0);
  for (int t = 0; t < 200; ++t) {
    auto dist = oracle::random_simplex(rng, 5);
    const int before = nnm::argmax_outcome(dist);
    const double s = c(rng);
    for (double& v : dist) v *= s;
    EXPECT_EQ(nnm::argmax_outcome(dist), before);
  }
}

TEST(Prediction, BinaryEqualsTwoOutcomeCategorical) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto p = oracle::random_simplex(rng, 3);
    std::vector<double> e(3), bundle(6);
    for (int j = 0; j < 3; ++j) {
      e[static_cast<std::size_t>(j)] = u01(rng);
      bundle[static_cast<std::size_t>(j)] = e[static_cast<std::size_t>(j)];
      bundle[static_cast<std::size_t>(3 + j)] = 1.0 - e[static_cast<std::size_t>(j)];
    }
    const auto bin = nnm::predict_distribution(one_by_one(Mode::binary, 3, 5, p, e), 1, 10);
    const auto cat = nnm::predict_distribution(one_by_one(Mode::categorical, 3, 2, p, bundle), 1, 10);
    ASSERT_EQ(bin.size(), 2u);
    EXPECT_NEAR(bin[0], cat[0], 1e-15);
    EXPECT_NEAR(bin[1], cat[1], 1e-15);
  }
}

TEST(Model, InitialStateIsValid) {
  NnmModel bin(Mode::binary, 4, 5, IdIndex({3, 1, 2}), IdIndex({7}));
  EXPECT_TRUE(nnm::validate(bin).empty());
  EXPECT_EQ(bin.users().id(0), 1);
  NnmModel cat(Mode::categorical, 4, 5, IdIndex({1}), IdIndex({7, 8}));
  EXPECT_TRUE(nnm::validate(cat).empty());
  EXPECT_EQ(cat.item_width(), 20u);
}

TEST(Model, BadConstructionArguments) {
  EXPECT_THROW(NnmModel(Mode::binary, 0, 5, IdIndex({1}), IdIndex({1})), nnm::ConfigError);
}

TEST(Validation, ReportsEachKindOfViolation) {
  auto m = one_by_one(Mode::binary, 2, 5, {0.7, 0.4}, {1.2, -0.1});
  const auto v = nnm::validate(m);
  std::vector<std::string> kinds;
  for (const auto& x : v) kinds.push_back(x.constraint);
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), "simplex sum != 1"), kinds.end());
  EXPECT_EQ(std::count(kinds.begin(), kinds.end(), "entry outside [0,1]"), 2);
  EXPECT_EQ(v.front().subject, "user 1");

  auto c = one_by_one(Mode::categorical, 1, 2, {1.0}, {0.7, 0.4});
  const auto w = nnm::validate(c);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].constraint, "bundle component sum != 1");
  EXPECT_EQ(nnm::check_simplex(std::vector<double>{1.5, -0.5}, "p").front().constraint, "entry < 0");
}

TEST(Persistence, RoundTripIsBitExact) {
  std::mt19937_64 rng(8);
  for (const Mode mode : {Mode::binary, Mode::categorical}) {
    NnmModel m = mode == Mode::binary ? NnmModel(Mode::binary, 3, 5, IdIndex({5, 9, 2}), IdIndex({1, 4}))
                                      : random_categorical(rng, 3, 4, 3, 2);
    if (mode == Mode::binary) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (std::size_t u = 0; u < 3; ++u) {
        const auto p = oracle::random_simplex(rng, 3);
        std::copy(p.begin(), p.end(), m.user(u).begin());
      }
      for (std::size_t i = 0; i < 2; ++i)
        for (double& v : m.item(i)) v = u01(rng);
    }
    testutil::TempDir dir;
    nnm::save_model(dir.path() / "m.json", m);
    const auto back = nnm::load_model(dir.path() / "m.json");
    EXPECT_EQ(back.mode(), m.mode());
    EXPECT_EQ(back.dimension(), m.dimension());
    EXPECT_EQ(back.levels(), m.levels());
    ASSERT_EQ(back.users().size(), m.users().size());
    for (std::size_t u = 0; u < m.users().size(); ++u) {
      EXPECT_EQ(back.users().id(u), m.users().id(u));
      EXPECT_EQ(0, std::memcmp(back.user(u).data(), m.user(u).data(), m.user(u).size_bytes()));
    }
    for (std::size_t i = 0; i < m.items().size(); ++i) {
      EXPECT_EQ(0, std::memcmp(back.item(i).data(), m.item(i).data(), m.item(i).size_bytes()));
    }
    EXPECT_EQ(nnm::model_to_json(back), nnm::model_to_json(m));
  }
}

TEST(Persistence, MalformedDocumentsAreUserErrors) {
  EXPECT_THROW(nnm::model_from_json("{"), nnm::UserError);
  EXPECT_THROW(nnm::model_from_json(R"({"version": 99})"), nnm::UserError);
  EXPECT_THROW(nnm::model_from_json(
                   R"({"version":1,"mode":"binary","D":2,"Z":5,"users":{"1":[1.0]},"items":{}})"),
               nnm::UserError);
  EXPECT_THROW(nnm::load_model("/nonexistent/model.json"), nnm::UserError);
}

}  // namespace
