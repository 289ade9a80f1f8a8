#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nnm/data.hpp"
#include "nnm/fit.hpp"
#include "nnm/model.hpp"
#include "nnm/solver.hpp"

namespace nnm {

/// Users and items fitted offline; everyone else is folded in.
struct AnchorSet {
  std::vector<Id> users;  // ascending
  std::vector<Id> items;  // ascending
};

/// The `n_users` most active users and `n_items` most rated items, ties by
/// id. Counts above the available number select everything.
AnchorSet select_anchors(const RatingDataset& dataset, std::size_t n_users, std::size_t n_items);

/// (other id, stars): item ids for a user fold-in, user ids for an item
/// fold-in.
using FoldInRating = std::pair<Id, int>;

/// Solves the user subproblem against the model's fixed items, starting from
/// the uniform distribution. Ratings on unknown items are ignored; none left
/// is a PreconditionError.
SimplexVector fold_in_user(const NnmModel& model, std::span<const FoldInRating> ratings,
                           const InnerOptions& options = {});

/// Mirror image for a new item against fixed users; binary mode starts every
/// component at 0.5 and categorical mode at 1/Z. Returns the item row (D, or
/// D*Z outcome-major).
LikeVector fold_in_item(const NnmModel& model, std::span<const FoldInRating> ratings,
                        const InnerOptions& options = {});

struct AnchoredFit {
  NnmModel model;
  FitReport anchor_report;
  std::size_t folded_users = 0;
  std::size_t folded_items = 0;
  /// Users or items without a rating against the anchor model; they keep
  /// their warm start.
  std::size_t unresolved = 0;
};

/// Fits on the ratings among anchors only, then folds in every remaining
/// user and item of `dataset`.
AnchoredFit fit_anchored(const RatingDataset& dataset, const AnchorSet& anchors, const FitConfig& config);

}  // namespace nnm
