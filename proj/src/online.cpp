#include "nnm/online.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "nnm/error.hpp"

namespace nnm {

namespace {

std::vector<Id> top_by_count(const IdIndex& ids, std::size_t n,
                             const std::function<std::size_t(std::size_t)>& count) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  // Indices ascend with ids, so a stable sort breaks ties by id.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return count(a) > count(b); });
  order.resize(std::min(n, order.size()));
  std::vector<Id> out;
  for (const auto k : order) out.push_back(ids.id(k));
  std::sort(out.begin(), out.end());
  return out;
}

void check_stars(const NnmModel& model, int stars) {
  if (stars < 1 || stars > model.levels()) {
    throw UserError("rating " + std::to_string(stars) + " outside 1.." + std::to_string(model.levels()));
  }
}

}  // namespace

AnchorSet select_anchors(const RatingDataset& dataset, std::size_t n_users, std::size_t n_items) {
  if (n_users == 0 || n_items == 0) throw ConfigError("anchor sets must be nonempty");
  return {top_by_count(dataset.users(), n_users, [&](std::size_t u) { return dataset.user_ratings(u).size(); }),
          top_by_count(dataset.items(), n_items, [&](std::size_t i) { return dataset.item_ratings(i).size(); })};
}

SimplexVector fold_in_user(const NnmModel& model, std::span<const FoldInRating> ratings,
                           const InnerOptions& options) {
  const int d = model.dimension();
  const int z_levels = model.levels();
  NormalEquations eq(d);
  for (const auto& [item, stars] : ratings) {
    check_stars(model, stars);
    const auto i = model.items().find(item);
    if (!i) continue;
    const auto row = model.item(*i);
    if (model.mode() == Mode::binary) {
      eq.add_row(row, static_cast<double>(stars) / z_levels);
    } else {
      for (int z = 1; z <= z_levels; ++z) {
        eq.add_row(row.subspan(static_cast<std::size_t>((z - 1) * d), static_cast<std::size_t>(d)),
                   z == stars ? 1.0 : 0.0);
      }
    }
  }
  if (eq.rows == 0) throw PreconditionError("fold-in: no ratings on items of the model");
  SimplexVector p{std::vector<double>(static_cast<std::size_t>(d), 1.0 / d)};
  minimize_on_simplex(eq, p.entries, options);
  return p;
}

LikeVector fold_in_item(const NnmModel& model, std::span<const FoldInRating> ratings,
                        const InnerOptions& options) {
  const int d = model.dimension();
  const int z_levels = model.levels();
  if (model.mode() == Mode::binary) {
    NormalEquations eq(d);
    for (const auto& [user, stars] : ratings) {
      check_stars(model, stars);
      if (const auto u = model.users().find(user)) eq.add_row(model.user(*u), static_cast<double>(stars) / z_levels);
    }
    if (eq.rows == 0) throw PreconditionError("fold-in: no ratings by users of the model");
    LikeVector e{std::vector<double>(static_cast<std::size_t>(d), 0.5)};
    minimize_on_box(eq, e.entries, options);
    return e;
  }
  BundleEquations eq(d, z_levels);
  for (const auto& [user, stars] : ratings) {
    check_stars(model, stars);
    const auto u = model.users().find(user);
    if (!u) continue;
    const auto p = model.user(*u);
    const Eigen::Map<const Eigen::VectorXd> v(p.data(), d);
    eq.gram.noalias() += v * v.transpose();
    eq.rhs.col(stars - 1) += v;
    eq.target_sq += 1.0;
    ++eq.rows;
  }
  if (eq.rows == 0) throw PreconditionError("fold-in: no ratings by users of the model");
  LikeVector e{std::vector<double>(model.item_width(), 1.0 / z_levels)};
  minimize_on_bundle(eq, e.entries, options);
  return e;
}

AnchoredFit fit_anchored(const RatingDataset& dataset, const AnchorSet& anchors, const FitConfig& config) {
  const std::unordered_set<Id> anchor_users(anchors.users.begin(), anchors.users.end());
  const std::unordered_set<Id> anchor_items(anchors.items.begin(), anchors.items.end());
  std::vector<Rating> core;
  for (const auto& r : dataset.ratings()) {
    if (anchor_users.contains(r.user) && anchor_items.contains(r.item)) core.push_back(r);
  }
  if (core.empty()) throw PreconditionError("anchors share no ratings");
  const RatingDataset core_data(std::move(core), dataset.levels());
  spdlog::info("anchored fit: {} users x {} items, {} ratings", core_data.num_users(), core_data.num_items(),
               core_data.size());
  FitResult anchor = fit(core_data, config);

  AnchoredFit out{NnmModel(config.mode, config.dimension, dataset.levels(), dataset.users(), dataset.items()),
                  std::move(anchor.report)};
  const NnmModel& core_model = anchor.model;
  for (std::size_t u = 0; u < dataset.num_users(); ++u) {
    const Id id = dataset.users().id(u);
    auto dst = out.model.user(u);
    if (const auto k = core_model.users().find(id)) {
      std::ranges::copy(core_model.user(*k), dst.begin());
      continue;
    }
    std::vector<FoldInRating> rs;
    for (const auto& e : dataset.user_ratings(u)) rs.emplace_back(dataset.items().id(e.index), e.stars);
    try {
      std::ranges::copy(fold_in_user(core_model, rs, config.inner).entries, dst.begin());
      ++out.folded_users;
    } catch (const PreconditionError&) {
      ++out.unresolved;
    }
  }
  for (std::size_t i = 0; i < dataset.num_items(); ++i) {
    const Id id = dataset.items().id(i);
    auto dst = out.model.item(i);
    if (const auto k = core_model.items().find(id)) {
      std::ranges::copy(core_model.item(*k), dst.begin());
      continue;
    }
    std::vector<FoldInRating> rs;
    for (const auto& e : dataset.item_ratings(i)) rs.emplace_back(dataset.users().id(e.index), e.stars);
    try {
      std::ranges::copy(fold_in_item(core_model, rs, config.inner).entries, dst.begin());
      ++out.folded_items;
    } catch (const PreconditionError&) {
      ++out.unresolved;
    }
  }
  if (out.unresolved > 0) {
    spdlog::warn("anchored fit: {} users or items have no ratings against the anchors", out.unresolved);
  }
  return out;
}

}  // namespace nnm
