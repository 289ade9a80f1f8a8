#include "nnm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nnm/error.hpp"

namespace nnm {

std::string_view to_string(Mode mode) {
  return mode == Mode::binary ? "binary" : "categorical";
}

Mode parse_mode(std::string_view name) {
  if (name == "binary") return Mode::binary;
  if (name == "categorical") return Mode::categorical;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

MeasurementBundle::MeasurementBundle(int dimension, int outcomes, std::vector<double> entries)
    : dimension_(dimension), outcomes_(outcomes), entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(dimension_) * static_cast<std::size_t>(outcomes_)) {
    throw InvariantError("bundle has " + std::to_string(entries_.size()) + " entries, expected D*Z");
  }
}

std::span<const double> MeasurementBundle::outcome(int z) const {
  if (z < 1 || z > outcomes_) throw LookupError("outcome " + std::to_string(z) + " out of range");
  return std::span(entries_).subspan(static_cast<std::size_t>(z - 1) * dimension_, dimension_);
}

NnmModel::NnmModel(Mode mode, int dimension, int levels, IdIndex users, IdIndex items)
    : mode_(mode), dimension_(dimension), levels_(levels), users_(std::move(users)),
      items_(std::move(items)) {
  if (dimension_ < 1) throw ConfigError("model dimension must be >= 1");
  if (levels_ < 1) throw ConfigError("rating scale must be >= 1");
  const auto d = static_cast<std::size_t>(dimension_);
  item_width_ = mode_ == Mode::binary ? d : d * static_cast<std::size_t>(levels_);
  user_data_.assign(users_.size() * d, 1.0 / dimension_);
  item_data_.assign(items_.size() * item_width_, mode_ == Mode::binary ? 0.5 : 1.0 / levels_);
}

std::span<const double> NnmModel::user(std::size_t index) const {
  return std::span(user_data_).subspan(index * dimension_, dimension_);
}

std::span<double> NnmModel::user(std::size_t index) {
  return std::span(user_data_).subspan(index * dimension_, dimension_);
}

std::span<const double> NnmModel::item(std::size_t index) const {
  return std::span(item_data_).subspan(index * item_width_, item_width_);
}

std::span<double> NnmModel::item(std::size_t index) {
  return std::span(item_data_).subspan(index * item_width_, item_width_);
}

MeasurementBundle NnmModel::bundle(std::size_t item_index) const {
  const auto row = item(item_index);
  if (mode_ == Mode::categorical) {
    return MeasurementBundle(dimension_, levels_, {row.begin(), row.end()});
  }
  // Binary items: outcome 1 = like, outcome 2 = dislike (the complement).
  std::vector<double> entries(row.begin(), row.end());
  for (const double e : row) entries.push_back(1.0 - e);
  return MeasurementBundle(dimension_, 2, std::move(entries));
}

// ---------------------------------------------------------------------------
// Predictions

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvariantError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

namespace {

std::vector<double> distribution_at(const NnmModel& model, std::size_t u, std::size_t i) {
  const auto p = model.user(u);
  const auto row = model.item(i);
  if (model.mode() == Mode::binary) {
    const double score = dot(row, p);
    return {score, 1.0 - score};
  }
  const auto d = static_cast<std::size_t>(model.dimension());
  std::vector<double> dist(static_cast<std::size_t>(model.levels()));
  for (std::size_t z = 0; z < dist.size(); ++z) dist[z] = dot(row.subspan(z * d, d), p);
  return dist;
}

}  // namespace

std::vector<double> predict_distribution(const NnmModel& model, Id user, Id item) {
  return distribution_at(model, model.users().at(user, "user"), model.items().at(item, "item"));
}

int argmax_outcome(std::span<const double> distribution) {
  if (distribution.empty()) throw InvariantError("argmax of an empty distribution");
  const auto it = std::max_element(distribution.begin(), distribution.end());
  return static_cast<int>(it - distribution.begin()) + 1;
}

int predict_rating_argmax(const NnmModel& model, Id user, Id item) {
  return argmax_outcome(predict_distribution(model, user, item));
}

double predict_score_binary(const NnmModel& model, Id user, Id item) {
  if (model.mode() != Mode::binary) throw ConfigError("like-scores require a binary-mode model");
  return dot(model.item_vector(item), model.user_vector(user));
}

double stars_from_score(double score, int levels) {
  return std::clamp(levels * score, 1.0, static_cast<double>(levels));
}

double predict_stars_at(const NnmModel& model, std::size_t user, std::size_t item) {
  if (model.mode() == Mode::binary) {
    return stars_from_score(dot(model.item(item), model.user(user)), model.levels());
  }
  const auto dist = distribution_at(model, user, item);
  double expected = 0.0;
  for (std::size_t z = 0; z < dist.size(); ++z) expected += static_cast<double>(z + 1) * dist[z];
  return expected;
}

double predict_stars(const NnmModel& model, Id user, Id item) {
  return predict_stars_at(model, model.users().at(user, "user"), model.items().at(item, "item"));
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<Violation> check_simplex(std::span<const double> v, std::string_view subject, double tol) {
  std::vector<Violation> out;
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k]) || v[k] < -tol) {
      out.push_back({std::string(subject), "entry < 0",
                     "component " + std::to_string(k) + " = " + fmt_double(v[k])});
    }
    sum += v[k];
  }
  if (!(std::abs(sum - 1.0) <= tol)) {
    out.push_back({std::string(subject), "simplex sum != 1", "sum = " + fmt_double(sum)});
  }
  return out;
}

std::vector<Violation> check_unit_box(std::span<const double> v, std::string_view subject, double tol) {
  std::vector<Violation> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!(v[k] >= -tol && v[k] <= 1.0 + tol)) {
      out.push_back({std::string(subject), "entry outside [0,1]",
                     "component " + std::to_string(k) + " = " + fmt_double(v[k])});
    }
  }
  return out;
}

std::vector<Violation> check_bundle(std::span<const double> v, int dimension, int outcomes,
                                    std::string_view subject, double tol) {
  std::vector<Violation> out;
  const auto d = static_cast<std::size_t>(dimension);
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t z = 0; z < static_cast<std::size_t>(outcomes); ++z) {
      const double e = v[z * d + j];
      if (!std::isfinite(e) || e < -tol) {
        out.push_back({std::string(subject), "entry < 0",
                       "outcome " + std::to_string(z + 1) + " component " + std::to_string(j) +
                           " = " + fmt_double(e)});
      }
      sum += e;
    }
    if (!(std::abs(sum - 1.0) <= tol)) {
      out.push_back({std::string(subject), "bundle component sum != 1",
                     "component " + std::to_string(j) + " sums to " + fmt_double(sum)});
    }
  }
  return out;
}

std::vector<Violation> validate(const NnmModel& model) {
  std::vector<Violation> out;
  const auto append = [&out](std::vector<Violation> v) {
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  };
  for (std::size_t u = 0; u < model.users().size(); ++u) {
    append(check_simplex(model.user(u), "user " + std::to_string(model.users().id(u))));
  }
  for (std::size_t i = 0; i < model.items().size(); ++i) {
    const auto subject = "item " + std::to_string(model.items().id(i));
    if (model.mode() == Mode::binary) {
      append(check_unit_box(model.item(i), subject));
    } else {
      append(check_bundle(model.item(i), model.dimension(), model.levels(), subject));
    }
  }
  return out;
}

}  // namespace nnm
