#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nnm {

/// Opaque user or item identifier as it appears in the input files.
using Id = std::int64_t;

struct Rating {
  Id user;
  Id item;
  int stars;

  friend bool operator==(const Rating&, const Rating&) = default;
};

/// Bidirectional map between opaque ids and contiguous indices. Indices are
/// assigned in ascending id order, so two datasets with the same id set agree.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::vector<Id> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(Id id) const { return index_.contains(id); }
  std::optional<std::size_t> find(Id id) const;
  /// Throws LookupError naming `what` when the id is unknown.
  std::size_t at(Id id, std::string_view what = "id") const;
  Id id(std::size_t index) const { return ids_[index]; }
  std::span<const Id> ids() const noexcept { return ids_; }

 private:
  std::vector<Id> ids_;
  std::unordered_map<Id, std::size_t> index_;
};

/// Observed ratings with user-major and item-major adjacency. Immutable.
class RatingDataset {
 public:
  struct Entry {
    std::uint32_t index;  // item index in user lists, user index in item lists
    int stars;
  };

  RatingDataset() = default;
  /// Validates ratings against [1, levels] and rejects duplicate pairs.
  RatingDataset(std::vector<Rating> ratings, int levels);

  int levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return ratings_.size(); }
  bool empty() const noexcept { return ratings_.empty(); }
  std::span<const Rating> ratings() const noexcept { return ratings_; }

  const IdIndex& users() const noexcept { return users_; }
  const IdIndex& items() const noexcept { return items_; }
  std::size_t num_users() const noexcept { return users_.size(); }
  std::size_t num_items() const noexcept { return items_.size(); }

  std::span<const Entry> user_ratings(std::size_t user) const;
  std::span<const Entry> item_ratings(std::size_t item) const;

  double mean_stars() const;

 private:
  std::vector<Rating> ratings_;
  int levels_ = 0;
  IdIndex users_;
  IdIndex items_;
  std::vector<std::size_t> user_offsets_;
  std::vector<Entry> user_entries_;
  std::vector<std::size_t> item_offsets_;
  std::vector<Entry> item_entries_;
};

enum class RatingFormat { ml100k, ml1m, csv };
enum class TagFormat { ml100k_genres, ml1m_genres };

RatingFormat parse_rating_format(std::string_view name);
TagFormat parse_tag_format(std::string_view name);

/// Reads a ratings file. `levels` overrides the inferred rating scale (the
/// maximum star value); it is mandatory for empty inputs.
RatingDataset load_ratings(const std::filesystem::path& path, RatingFormat format,
                           std::optional<int> levels = std::nullopt);

/// Writes `user<sep>item<sep>stars` lines in the given format (timestamps 0).
void save_ratings(const std::filesystem::path& path, const RatingDataset& dataset,
                  RatingFormat format);

struct Tag {
  std::string name;
  std::vector<Id> items;  // ascending
};

/// Tag name -> tagged items, in the order tags are declared by the source.
class TagIndex {
 public:
  TagIndex() = default;
  explicit TagIndex(std::vector<Tag> tags);

  std::span<const Tag> tags() const noexcept { return tags_; }
  std::size_t size() const noexcept { return tags_.size(); }
  const Tag* find(std::string_view name) const;

  /// Removes items absent from `items`; returns how many references were dropped.
  std::size_t drop_orphans(const IdIndex& items);

 private:
  std::vector<Tag> tags_;
};

/// Genre list of the ml-100k `u.item` flag columns, in file order.
std::span<const std::string_view> ml100k_genres();

TagIndex load_tags(const std::filesystem::path& path, TagFormat format);

/// Titles from `u.item` / `movies.dat`, converted from Latin-1 to UTF-8.
std::unordered_map<Id, std::string> load_item_titles(const std::filesystem::path& path,
                                                     TagFormat format);

struct FoldSplit {
  RatingDataset train;
  std::vector<Rating> test;
};

/// Shuffles the ratings with a seeded RNG and cuts them into `n_folds`
/// near-equal blocks; fold k tests on block k and trains on the rest.
std::vector<FoldSplit> split_folds(const RatingDataset& dataset, int n_folds,
                                   std::uint64_t seed);

/// Keeps the ratings of a uniformly sampled `fraction` of the users.
RatingDataset sample_users(const RatingDataset& dataset, double fraction, std::uint64_t seed);

}  // namespace nnm
