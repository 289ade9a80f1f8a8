#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nnm/data.hpp"
#include "nnm/model.hpp"
#include "nnm/solver.hpp"

namespace nnm {

/// How unknown entries are treated during the first `preprocessing_iters`
/// outer iterations. `automatic` picks dense zero-fill up to
/// kDenseFillLimit matrix entries and negative sampling beyond.
enum class Preprocessing { automatic, dense_zero_fill, negative_sampling };

inline constexpr double kDenseFillLimit = 1e7;

std::string_view to_string(Preprocessing p);
Preprocessing parse_preprocessing(std::string_view name);

struct FitConfig {
  int dimension = 3;
  int max_outer_iters = 16;
  int preprocessing_iters = 2;
  Preprocessing preprocessing = Preprocessing::automatic;
  int negatives_per_rating = 1;
  InnerOptions inner;
  std::uint64_t seed = 0;
  Mode mode = Mode::binary;
  /// Worker threads per half-step; results do not depend on this.
  int threads = 1;

  /// Throws ConfigError on D < 1, preprocessing_iters > max_outer_iters, ...
  void validate() const;
};

Preprocessing resolve_preprocessing(const FitConfig& config, const RatingDataset& dataset);

enum class HalfStep { items, users };

struct HalfStepRecord {
  int iter;            // 1-based outer iteration
  HalfStep step;
  bool preprocessing;  // evaluated on the augmented index set
  double objective;        // on the observed entries
  double phase_objective;  // on the index set of the current phase
  double wall_ms;
  /// Largest KKT residual and count of subproblems that hit max_iterations.
  double max_kkt_residual;
  std::size_t unconverged;
};

struct FitReport {
  std::vector<HalfStepRecord> steps;
  Preprocessing preprocessing = Preprocessing::dense_zero_fill;
  std::size_t sampled_negatives = 0;

  /// `iter,phase,objective,wall_ms`, one row per half-step.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct FitResult {
  NnmModel model;
  FitReport report;
};

/// Called after every outer iteration with the current model.
using IterationObserver = std::function<void(int iter, const NnmModel& model)>;

/// Alternating constrained least squares: every outer iteration solves all
/// item subproblems (box / bundle) and then all user subproblems (simplex).
/// Users start at uniformly drawn basis vectors.
FitResult fit(const RatingDataset& dataset, const FitConfig& config,
              const IterationObserver& observer = {});

/// Squared-error objective over the observed entries of `dataset`.
double objective(const NnmModel& model, const RatingDataset& dataset);

/// Objective over an explicit index set; pairs that are not observed in
/// `dataset` contribute with target 0.
double objective(const NnmModel& model, const RatingDataset& dataset,
                 std::span<const std::pair<Id, Id>> gamma);

/// Unobserved (user, item) pairs: for every user, k * (#ratings of the user)
/// items drawn uniformly without replacement from the items they did not
/// rate (the whole pool when it is smaller). Sorted by (user, item) index.
/// These are the pairs `fit` zero-fills when sampling with the same seed.
std::vector<std::pair<Id, Id>> sample_negatives(const RatingDataset& dataset, int k,
                                                std::uint64_t seed);

}  // namespace nnm
