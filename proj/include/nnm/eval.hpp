#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnm/data.hpp"
#include "nnm/fit.hpp"

namespace nnm {

double mae(std::span<const double> predictions, std::span<const double> truths);
double rmse(std::span<const double> predictions, std::span<const double> truths);

/// How a predicted star value enters the error metrics. `rounded` snaps it
/// to the nearest star (halves away from zero).
enum class StarMapping { rounded, continuous };

std::string_view to_string(StarMapping m);
StarMapping parse_star_mapping(std::string_view name);

struct EvalConfig {
  FitConfig fit;
  int folds = 5;
  /// Seeds the fold split; the fit uses fit.seed.
  std::uint64_t split_seed = 0;
  StarMapping mapping = StarMapping::rounded;

  void validate() const;
};

struct FoldMetrics {
  int fold;  // 1-based
  double mae;
  double rmse;
  std::size_t test_size;
  std::size_t fallbacks;
};

struct MetricReport {
  EvalConfig config;
  std::vector<FoldMetrics> folds;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  /// Sample standard deviations across folds (0 for a single fold).
  double std_mae = 0.0;
  double std_rmse = 0.0;
  std::size_t fallbacks = 0;

  std::string to_json() const;
  /// `fold,mae,rmse,test_size,fallbacks`, then a `mean` row.
  std::string to_csv() const;
};

/// Star predictions for test pairs; pairs with a user or item unknown to the
/// model get `fallback`, and `fallbacks` (if non-null) counts them.
std::vector<double> predict_test(const NnmModel& model, std::span<const Rating> test, double fallback,
                                 StarMapping mapping, std::size_t* fallbacks = nullptr);

MetricReport cross_validate(const RatingDataset& dataset, const EvalConfig& config);

struct DimensionPoint {
  int dimension;
  double mae;
  double rmse;
};

std::vector<DimensionPoint> curve_vs_dimension(const RatingDataset& dataset, std::span<const int> dims,
                                               const EvalConfig& base);
std::string to_csv(std::span<const DimensionPoint> curve);

struct IterationPoint {
  int iter;
  double objective;  // training objective on the observed entries
  double mae;
  double rmse;
};

/// Held-out error on fold 1 after every outer iteration of one fit.
std::vector<IterationPoint> curve_vs_iteration(const RatingDataset& dataset, const EvalConfig& config);
std::string to_csv(std::span<const IterationPoint> curve);

}  // namespace nnm
