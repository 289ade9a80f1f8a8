#include "nnm/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "nnm/error.hpp"

namespace nnm {

namespace {

std::vector<std::string_view> split(std::string_view line, std::string_view delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + delimiter.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  return in;
}

std::string latin1_to_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (const char ch : in) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

constexpr std::array<std::string_view, 19> kMl100kGenres = {
    "unknown", "Action",    "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy",   "Film-Noir", "Horror",     "Musical", "Mystery",
    "Romance", "Sci-Fi",    "Thriller",  "War",       "Western"};

}  // namespace

// ---------------------------------------------------------------------------
// IdIndex

IdIndex::IdIndex(std::vector<Id> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
}

std::optional<std::size_t> IdIndex::find(Id id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t IdIndex::at(Id id, std::string_view what) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("unknown " + std::string(what) + " " + std::to_string(id));
  return it->second;
}

// ---------------------------------------------------------------------------
// RatingDataset

RatingDataset::RatingDataset(std::vector<Rating> ratings, int levels)
    : ratings_(std::move(ratings)), levels_(levels) {
  if (levels_ < 1) throw ConfigError("rating scale Z must be >= 1");
  std::vector<Id> user_ids, item_ids;
  user_ids.reserve(ratings_.size());
  item_ids.reserve(ratings_.size());
  for (const auto& r : ratings_) {
    if (r.stars < 1 || r.stars > levels_) {
      throw UserError("rating " + std::to_string(r.stars) + " of (" + std::to_string(r.user) +
                      ", " + std::to_string(r.item) + ") outside [1, " +
                      std::to_string(levels_) + "]");
    }
    user_ids.push_back(r.user);
    item_ids.push_back(r.item);
  }
  users_ = IdIndex(std::move(user_ids));
  items_ = IdIndex(std::move(item_ids));

  const auto build = [&](bool by_user, std::vector<std::size_t>& offsets, std::vector<Entry>& entries) {
    const std::size_t n = by_user ? users_.size() : items_.size();
    offsets.assign(n + 1, 0);
    for (const auto& r : ratings_) {
      ++offsets[(by_user ? users_.at(r.user) : items_.at(r.item)) + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    entries.resize(ratings_.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& r : ratings_) {
      const auto row = by_user ? users_.at(r.user) : items_.at(r.item);
      const auto col = by_user ? items_.at(r.item) : users_.at(r.user);
      entries[cursor[row]++] = Entry{static_cast<std::uint32_t>(col), r.stars};
    }
    for (std::size_t row = 0; row < n; ++row) {
      auto first = entries.begin() + static_cast<std::ptrdiff_t>(offsets[row]);
      auto last = entries.begin() + static_cast<std::ptrdiff_t>(offsets[row + 1]);
      std::sort(first, last, [](const Entry& a, const Entry& b) { return a.index < b.index; });
      const auto dup = std::adjacent_find(
          first, last, [](const Entry& a, const Entry& b) { return a.index == b.index; });
      if (dup != last) {
        const Id u = by_user ? users_.id(row) : users_.id(dup->index);
        const Id i = by_user ? items_.id(dup->index) : items_.id(row);
        throw DuplicateError("duplicate rating for (user " + std::to_string(u) + ", item " +
                             std::to_string(i) + ")");
      }
    }
  };
  build(true, user_offsets_, user_entries_);
  build(false, item_offsets_, item_entries_);
}

std::span<const RatingDataset::Entry> RatingDataset::user_ratings(std::size_t user) const {
  return std::span(user_entries_).subspan(user_offsets_[user],
                                          user_offsets_[user + 1] - user_offsets_[user]);
}

std::span<const RatingDataset::Entry> RatingDataset::item_ratings(std::size_t item) const {
  return std::span(item_entries_).subspan(item_offsets_[item],
                                          item_offsets_[item + 1] - item_offsets_[item]);
}

double RatingDataset::mean_stars() const {
  if (ratings_.empty()) throw UserError("mean rating of an empty dataset");
  double sum = 0.0;
  for (const auto& r : ratings_) sum += r.stars;
  return sum / static_cast<double>(ratings_.size());
}

// ---------------------------------------------------------------------------
// Formats

RatingFormat parse_rating_format(std::string_view name) {
  if (name == "ml-100k") return RatingFormat::ml100k;
  if (name == "ml-1m") return RatingFormat::ml1m;
  if (name == "csv") return RatingFormat::csv;
  throw ConfigError("unknown ratings format '" + std::string(name) +
                    "' (expected ml-100k, ml-1m or csv)");
}

TagFormat parse_tag_format(std::string_view name) {
  if (name == "ml-100k-genres" || name == "ml-100k") return TagFormat::ml100k_genres;
  if (name == "ml-1m-genres" || name == "ml-1m") return TagFormat::ml1m_genres;
  throw ConfigError("unknown tag format '" + std::string(name) + "'");
}

RatingDataset load_ratings(const std::filesystem::path& path, RatingFormat format,
                           std::optional<int> levels) {
  auto in = open_input(path);
  std::vector<Rating> ratings;
  std::string line;
  std::size_t line_no = 0;
  int max_stars = 0;
  const std::string_view delimiter = format == RatingFormat::ml100k ? "\t"
                                     : format == RatingFormat::ml1m ? "::"
                                                                    : ",";
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, delimiter);
    const std::size_t expected = format == RatingFormat::csv ? 3 : 4;
    if (fields.size() != expected && !(format == RatingFormat::csv && fields.size() == 4)) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()));
    }
    Rating r{};
    if (!parse_number(fields[0], r.user) || !parse_number(fields[1], r.item)) {
      // A csv header line is tolerated on the first line only.
      if (format == RatingFormat::csv && line_no == 1) continue;
      throw ParseError(path.string(), line_no, "malformed user or item id");
    }
    double stars = 0.0;
    if (!parse_number(fields[2], stars) || stars != static_cast<int>(stars)) {
      throw ParseError(path.string(), line_no, "malformed rating '" + std::string(fields[2]) + "'");
    }
    r.stars = static_cast<int>(stars);
    if (r.stars < 1) throw ParseError(path.string(), line_no, "rating below 1");
    max_stars = std::max(max_stars, r.stars);
    ratings.push_back(r);
  }
  if (ratings.empty() && !levels) {
    throw UserError(path.string() + ": no ratings; the rating scale cannot be inferred, pass Z explicitly");
  }
  const int z = levels.value_or(max_stars);
  if (max_stars > z) {
    throw UserError(path.string() + ": rating " + std::to_string(max_stars) +
                    " exceeds the declared scale Z=" + std::to_string(z));
  }
  return RatingDataset(std::move(ratings), z);
}

void save_ratings(const std::filesystem::path& path, const RatingDataset& dataset,
                  RatingFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  for (const auto& r : dataset.ratings()) {
    switch (format) {
      case RatingFormat::ml100k:
        out << r.user << '\t' << r.item << '\t' << r.stars << "\t0\n";
        break;
      case RatingFormat::ml1m:
        out << r.user << "::" << r.item << "::" << r.stars << "::0\n";
        break;
      case RatingFormat::csv:
        out << r.user << ',' << r.item << ',' << r.stars << '\n';
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Tags

TagIndex::TagIndex(std::vector<Tag> tags) : tags_(std::move(tags)) {
  for (auto& tag : tags_) {
    std::sort(tag.items.begin(), tag.items.end());
    tag.items.erase(std::unique(tag.items.begin(), tag.items.end()), tag.items.end());
  }
}

const Tag* TagIndex::find(std::string_view name) const {
  const auto it = std::find_if(tags_.begin(), tags_.end(),
                               [&](const Tag& t) { return t.name == name; });
  return it == tags_.end() ? nullptr : &*it;
}

std::size_t TagIndex::drop_orphans(const IdIndex& items) {
  std::size_t dropped = 0;
  for (auto& tag : tags_) {
    const auto before = tag.items.size();
    std::erase_if(tag.items, [&](Id id) { return !items.contains(id); });
    dropped += before - tag.items.size();
  }
  if (dropped > 0) spdlog::warn("dropped {} tag references to items without ratings", dropped);
  return dropped;
}

std::span<const std::string_view> ml100k_genres() { return kMl100kGenres; }

TagIndex load_tags(const std::filesystem::path& path, TagFormat format) {
  auto in = open_input(path);
  std::vector<Tag> tags;
  if (format == TagFormat::ml100k_genres) {
    for (const auto g : kMl100kGenres) tags.push_back(Tag{std::string(g), {}});
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    Id item = 0;
    if (format == TagFormat::ml100k_genres) {
      const auto fields = split(text, "|");
      if (fields.size() < 1 + kMl100kGenres.size() || !parse_number(fields[0], item)) {
        throw ParseError(path.string(), line_no, "malformed u.item row");
      }
      const auto flags_begin = fields.size() - kMl100kGenres.size();
      for (std::size_t g = 0; g < kMl100kGenres.size(); ++g) {
        const auto flag = trim(fields[flags_begin + g]);
        if (flag == "1") {
          tags[g].items.push_back(item);
        } else if (flag != "0") {
          throw ParseError(path.string(), line_no, "genre flag must be 0 or 1");
        }
      }
    } else {
      const auto fields = split(text, "::");
      if (fields.size() != 3 || !parse_number(fields[0], item)) {
        throw ParseError(path.string(), line_no, "malformed movies.dat row");
      }
      for (const auto genre_raw : split(fields[2], "|")) {
        const auto genre = trim(genre_raw);
        if (genre.empty()) throw ParseError(path.string(), line_no, "empty genre");
        auto it = std::find_if(tags.begin(), tags.end(), [&](const Tag& t) { return t.name == genre; });
        if (it == tags.end()) {
          tags.push_back(Tag{std::string(genre), {}});
          it = tags.end() - 1;
        }
        it->items.push_back(item);
      }
    }
  }
  return TagIndex(std::move(tags));
}

std::unordered_map<Id, std::string> load_item_titles(const std::filesystem::path& path,
                                                     TagFormat format) {
  auto in = open_input(path);
  std::unordered_map<Id, std::string> titles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, format == TagFormat::ml100k_genres ? "|" : "::");
    Id item = 0;
    if (fields.size() < 2 || !parse_number(fields[0], item)) {
      throw ParseError(path.string(), line_no, "malformed item row");
    }
    titles.emplace(item, latin1_to_utf8(fields[1]));
  }
  return titles;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<FoldSplit> split_folds(const RatingDataset& dataset, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("cross validation needs at least 2 folds");
  if (dataset.size() < static_cast<std::size_t>(n_folds)) {
    throw UserError("cannot split " + std::to_string(dataset.size()) + " ratings into " +
                    std::to_string(n_folds) + " folds");
  }
  std::vector<Rating> shuffled(dataset.ratings().begin(), dataset.ratings().end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  const std::size_t n = shuffled.size();
  const auto k = static_cast<std::size_t>(n_folds);
  std::vector<std::size_t> bounds(k + 1);
  for (std::size_t f = 0; f <= k; ++f) bounds[f] = f * n / k;

  std::vector<FoldSplit> folds;
  folds.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Rating> train;
    train.reserve(n - (bounds[f + 1] - bounds[f]));
    train.insert(train.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(bounds[f]));
    train.insert(train.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(bounds[f + 1]), shuffled.end());
    std::vector<Rating> test(shuffled.begin() + static_cast<std::ptrdiff_t>(bounds[f]),
                             shuffled.begin() + static_cast<std::ptrdiff_t>(bounds[f + 1]));
    folds.push_back(FoldSplit{RatingDataset(std::move(train), dataset.levels()), std::move(test)});

    std::size_t cold = 0;
    const auto& tr = folds.back().train;
    for (const auto& r : folds.back().test) {
      if (!tr.users().contains(r.user) || !tr.items().contains(r.item)) ++cold;
    }
    if (cold > 0) {
      spdlog::info("fold {}: {} test ratings involve users or items absent from training", f + 1, cold);
    }
  }
  return folds;
}

RatingDataset sample_users(const RatingDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("user fraction must be in (0, 1]");
  std::vector<Id> users(dataset.users().ids().begin(), dataset.users().ids().end());
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(users.size())));
  const std::unordered_set<Id> kept(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(keep));
  std::vector<Rating> ratings;
  for (const auto& r : dataset.ratings()) {
    if (kept.contains(r.user)) ratings.push_back(r);
  }
  return RatingDataset(std::move(ratings), dataset.levels());
}

}  // namespace nnm
