#include <gtest/gtest.h>

#include <random>

#include "nnm/error.hpp"
#include "nnm/online.hpp"
#include "planted.hpp"

namespace {

using nnm::FoldInRating;

nnm::NnmModel two_items() {
  nnm::NnmModel m(nnm::Mode::binary, 2, 5, nnm::IdIndex({1}), nnm::IdIndex({10, 20}));
  m.item(0)[0] = 1.0;
  m.item(0)[1] = 0.0;
  m.item(1)[0] = 0.3;
  m.item(1)[1] = 0.6;
  m.user(0)[0] = 1.0;
  m.user(0)[1] = 0.0;
  return m;
}

TEST(Anchors, TopCountsWithIdTieBreak) {
  // Users 1 and 2 rate three items, user 3 two, user 4 one.
  const nnm::RatingDataset d({{1, 1, 5}, {1, 2, 4}, {1, 3, 3}, {2, 1, 2}, {2, 2, 5}, {2, 4, 1}, {3, 1, 4}, {3, 2, 2}, {4, 1, 1}}, 5);
  const auto a = nnm::select_anchors(d, 2, 2);
  EXPECT_EQ(a.users, (std::vector<nnm::Id>{1, 2}));
  EXPECT_EQ(a.items, (std::vector<nnm::Id>{1, 2}));
  const auto b = nnm::select_anchors(d, 3, 3);
  EXPECT_EQ(b.users, (std::vector<nnm::Id>{1, 2, 3}));
  EXPECT_EQ(b.items, (std::vector<nnm::Id>{1, 2, 3}));  // items 3 and 4 tie
  const auto all = nnm::select_anchors(d, 100, 100);
  EXPECT_EQ(all.users.size(), 4u);
  EXPECT_EQ(all.items.size(), 4u);
  EXPECT_THROW(nnm::select_anchors(d, 0, 2), nnm::ConfigError);
}

TEST(FoldIn, SingleFiveStarRatingPicksThatComponent) {
  const auto m = two_items();
  const std::vector<FoldInRating> r{{10, 5}};
  const auto p = nnm::fold_in_user(m, r);
  EXPECT_NEAR(p.entries[0], 1.0, 1e-12);
  EXPECT_NEAR(p.entries[1], 0.0, 1e-12);
}

TEST(FoldIn, OneDimensionHasOnlyOneState) {
  nnm::NnmModel m(nnm::Mode::binary, 1, 5, nnm::IdIndex({1}), nnm::IdIndex({1}));
  const std::vector<FoldInRating> r{{1, 2}};
  EXPECT_EQ(nnm::fold_in_user(m, r).entries, (std::vector<double>{1.0}));
}

TEST(FoldIn, ItemFlatDirectionKeepsPrior) {
  const auto m = two_items();
  const std::vector<FoldInRating> r{{1, 5}};
  const auto e = nnm::fold_in_item(m, r);
  EXPECT_NEAR(e.entries[0], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(e.entries[1], 0.5);
}

TEST(FoldIn, UnusableRatingsAreErrors) {
  const auto m = two_items();
  EXPECT_THROW(nnm::fold_in_user(m, std::vector<FoldInRating>{}), nnm::PreconditionError);
  EXPECT_THROW(nnm::fold_in_user(m, std::vector<FoldInRating>{{99, 3}}), nnm::PreconditionError);
  EXPECT_THROW(nnm::fold_in_user(m, std::vector<FoldInRating>{{10, 6}}), nnm::UserError);
  EXPECT_THROW(nnm::fold_in_item(m, std::vector<FoldInRating>{{2, 3}}), nnm::PreconditionError);
}

TEST(FoldIn, DoesNotTouchTheModel) {
  const auto m = two_items();
  const auto before = nnm::model_to_json(m);
  nnm::fold_in_user(m, std::vector<FoldInRating>{{10, 3}, {20, 1}});
  nnm::fold_in_item(m, std::vector<FoldInRating>{{1, 2}});
  EXPECT_EQ(nnm::model_to_json(m), before);
}

TEST(FoldIn, ReproducesFittedVectors) {
  const auto d = planted::generate(60, 40, 3, 0.5, 11);
  nnm::FitConfig c;
  c.max_outer_iters = 30;
  for (const auto mode : {nnm::Mode::binary, nnm::Mode::categorical}) {
    c.mode = mode;
    const auto fitted = nnm::fit(d, c);
    for (std::size_t u = 0; u < d.num_users(); u += 7) {
      std::vector<FoldInRating> r;
      for (const auto& e : d.user_ratings(u)) r.emplace_back(d.items().id(e.index), e.stars);
      const auto p = nnm::fold_in_user(fitted.model, r);
      const auto expected = fitted.model.user(u);
      for (std::size_t k = 0; k < p.entries.size(); ++k) EXPECT_NEAR(p.entries[k], expected[k], 1e-6);
    }
  }
}

TEST(FoldIn, ItemFoldInIsOptimalForFinalUsers) {
  const auto d = planted::generate(50, 30, 2, 0.6, 12);
  nnm::FitConfig c;
  c.max_outer_iters = 30;
  const auto fitted = nnm::fit(d, c);
  for (std::size_t i = 0; i < d.num_items(); i += 5) {
    std::vector<FoldInRating> r;
    for (const auto& e : d.item_ratings(i)) r.emplace_back(d.users().id(e.index), e.stars);
    const auto e = nnm::fold_in_item(fitted.model, r);
    for (double v : e.entries) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // Fitted items are optimal for the users of the previous half-step, so
    // compare objectives rather than vectors.
    double folded = 0.0, kept = 0.0;
    for (const auto& [user, stars] : r) {
      const auto p = fitted.model.user_vector(user);
      const double t = stars / 5.0;
      folded += std::pow(nnm::dot(e.entries, p) - t, 2);
      kept += std::pow(nnm::dot(fitted.model.item(i), p) - t, 2);
    }
    EXPECT_LE(folded, kept + 1e-9);
  }
}

TEST(Anchored, FoldsInEveryoneElse) {
  const auto d = planted::generate(80, 60, 2, 0.4, 13);
  const auto anchors = nnm::select_anchors(d, 40, 30);
  nnm::FitConfig c;
  c.dimension = 2;
  const auto r = nnm::fit_anchored(d, anchors, c);
  EXPECT_EQ(r.model.users().size(), d.num_users());
  EXPECT_EQ(r.model.items().size(), d.num_items());
  EXPECT_EQ(r.unresolved, 0u);
  EXPECT_GE(r.folded_users, 40u);
  EXPECT_GE(r.folded_items, 30u);
  EXPECT_TRUE(nnm::validate(r.model).empty());
}

}  // namespace
