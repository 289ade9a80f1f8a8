#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nnm/data.hpp"
#include "nnm/model.hpp"

namespace nnm {

/// Mean like-vector over the items carrying a tag. p^T entries is the
/// probability that a user with state p likes a random item of the tag.
struct TagVector {
  std::string tag;
  std::vector<double> entries;
};

/// Throws PreconditionError on an empty item list, LookupError on an unknown
/// item and ConfigError for categorical models.
TagVector tag_vector(const NnmModel& model, std::span<const Id> items, std::string tag = {});

/// Like-probabilities E(g, omega) of every stereotype omega for a random item
/// of tag g. Stereotypes are numbered 1..D.
struct StereotypeProfile {
  int dimension = 0;
  std::vector<std::string> tags;
  std::vector<double> values;  // tags.size() x dimension, row-major
  /// Tags without any modeled item; they have no row.
  std::vector<std::string> skipped;

  double value(std::size_t tag, int omega) const;
  /// The guess of someone who only knows the profile: like iff value >= 1/2.
  bool guess_like(std::size_t tag, int omega) const;
  /// `tag,omega,value,guess` with guess in {like, dislike}.
  std::string to_csv() const;
};

StereotypeProfile stereotype_profiles(const NnmModel& model, const TagIndex& tags);

struct RankedItem {
  Id item;
  std::size_t ratings;  // popularity in the dataset
  double like;          // like-probability of the stereotype
};

/// Items whose like-vector component `omega` (1-based) is at least
/// `like_threshold`, most rated first (ties by id), truncated to `top`.
std::vector<RankedItem> stereotype_item_lists(const NnmModel& model, const RatingDataset& dataset,
                                              int omega, double like_threshold = 0.9,
                                              std::size_t top = 10);

struct HierarchyEdge {
  std::size_t from;
  std::size_t to;

  friend bool operator==(const HierarchyEdge&, const HierarchyEdge&) = default;
  friend auto operator<=>(const HierarchyEdge&, const HierarchyEdge&) = default;
};

/// Edge from -> to iff tag `to` is epsilon-contained in tag `from`.
struct HierarchyGraph {
  std::vector<std::string> vertices;
  std::vector<HierarchyEdge> edges;  // sorted
  double epsilon = 0.0;
  /// Vertices whose tag vector is zero; they are contained in every tag.
  std::vector<std::size_t> zero_norm;

  bool has_edge(std::size_t from, std::size_t to) const;
  bool has_edge(const std::string& from, const std::string& to) const;
};

/// E_from^T E_to >= (1 - epsilon) * ||E_to||_1 for every ordered pair of
/// distinct tags.
bool epsilon_contained(std::span<const double> inner, std::span<const double> outer, double epsilon);

HierarchyGraph hierarchy_edges(std::span<const TagVector> tags, double epsilon);

struct DotOptions {
  std::set<std::string> exclude;
  /// Drop edges implied by longer paths. Cycles are kept intact and reduced
  /// as a unit.
  bool transitive_reduction = false;
};

HierarchyGraph without_tags(const HierarchyGraph& graph, const std::set<std::string>& exclude);
HierarchyGraph transitive_reduction(const HierarchyGraph& graph);

std::string export_dot(const HierarchyGraph& graph, const DotOptions& options = {});

}  // namespace nnm
