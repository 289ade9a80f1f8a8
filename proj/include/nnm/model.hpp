#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnm/data.hpp"

namespace nnm {

/// Feasibility tolerance shared by every simplex / box invariant.
inline constexpr double kFeasibilityTol = 1e-9;

/// Binary mode stores one like-vector per item and reads a z-star rating as
/// the target z/Z. Categorical mode stores a full D x Z measurement bundle.
enum class Mode { binary, categorical };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

/// A user state: a probability distribution over the D stereotypes.
struct SimplexVector {
  std::vector<double> entries;
};

/// Per-stereotype probability of liking an item.
struct LikeVector {
  std::vector<double> entries;
};

/// Outcome vectors E_1..E_Z of one item, stored outcome-major.
class MeasurementBundle {
 public:
  MeasurementBundle(int dimension, int outcomes, std::vector<double> entries);

  int dimension() const noexcept { return dimension_; }
  int outcomes() const noexcept { return outcomes_; }
  /// Effect vector of outcome `z` (1-based).
  std::span<const double> outcome(int z) const;
  std::span<const double> entries() const noexcept { return entries_; }

 private:
  int dimension_;
  int outcomes_;
  std::vector<double> entries_;
};

/// Normalized nonnegative model: user simplex vectors plus item measurement
/// vectors, stored densely and addressed through id maps.
///
/// Item rows hold D like-probabilities in binary mode and D*Z bundle entries
/// (outcome-major) in categorical mode. The public prediction functions only
/// read the model; mutable row access exists for the fitting loop.
class NnmModel {
 public:
  NnmModel() = default;
  /// Users start at the uniform distribution and items at 1/2 (binary) or
  /// 1/Z (categorical).
  NnmModel(Mode mode, int dimension, int levels, IdIndex users, IdIndex items);

  Mode mode() const noexcept { return mode_; }
  int dimension() const noexcept { return dimension_; }
  /// Rating scale Z (binary) or outcome count Z (categorical).
  int levels() const noexcept { return levels_; }
  std::size_t item_width() const noexcept { return item_width_; }

  const IdIndex& users() const noexcept { return users_; }
  const IdIndex& items() const noexcept { return items_; }

  std::span<const double> user(std::size_t index) const;
  std::span<double> user(std::size_t index);
  std::span<const double> item(std::size_t index) const;
  std::span<double> item(std::size_t index);

  std::span<const double> user_vector(Id id) const { return user(users_.at(id, "user")); }
  std::span<const double> item_vector(Id id) const { return item(items_.at(id, "item")); }

  MeasurementBundle bundle(std::size_t item_index) const;

 private:
  Mode mode_ = Mode::binary;
  int dimension_ = 0;
  int levels_ = 0;
  std::size_t item_width_ = 0;
  IdIndex users_;
  IdIndex items_;
  std::vector<double> user_data_;
  std::vector<double> item_data_;
};

// Predictions. All of them throw LookupError on unknown ids.

/// P_u[outcome = z] for z = 1..Z. In binary mode the outcomes are
/// (like, dislike) = (score, 1 - score).
std::vector<double> predict_distribution(const NnmModel& model, Id user, Id item);

/// The outcome maximizing the predicted distribution; ties go to the smallest z.
int predict_rating_argmax(const NnmModel& model, Id user, Id item);

/// e_i^T p_u, the probability that the user likes the item. Binary mode only.
double predict_score_binary(const NnmModel& model, Id user, Id item);

/// Star prediction used by the error metrics: clamp(Z * score, 1, Z) in binary
/// mode, the expected outcome sum_z z P[z] in categorical mode.
double predict_stars(const NnmModel& model, Id user, Id item);
double predict_stars_at(const NnmModel& model, std::size_t user, std::size_t item);

double stars_from_score(double score, int levels);
/// 1-based index of the first maximal entry.
int argmax_outcome(std::span<const double> distribution);
double dot(std::span<const double> a, std::span<const double> b);

struct Violation {
  std::string subject;     // e.g. "user 17"
  std::string constraint;  // e.g. "simplex sum != 1"
  std::string detail;
};

std::vector<Violation> check_simplex(std::span<const double> v, std::string_view subject,
                                     double tol = kFeasibilityTol);
std::vector<Violation> check_unit_box(std::span<const double> v, std::string_view subject,
                                      double tol = kFeasibilityTol);
std::vector<Violation> check_bundle(std::span<const double> v, int dimension, int outcomes,
                                    std::string_view subject, double tol = kFeasibilityTol);

/// Every invariant violation of the model; empty iff the model is valid.
std::vector<Violation> validate(const NnmModel& model);

// Persistence: a versioned JSON document
// {version, mode, D, Z, users: {id: [..]}, items: {id: [..] | [[..], ..]}}.

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const NnmModel& model);
NnmModel model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const NnmModel& model);
NnmModel load_model(const std::filesystem::path& path);

}  // namespace nnm
