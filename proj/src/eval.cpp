#include "nnm/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"

#include "nnm/error.hpp"

namespace nnm {

namespace {

void check_pairs(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty()) throw PreconditionError("metrics need at least one prediction");
  if (predictions.size() != truths.size()) {
    throw PreconditionError("predictions and truths differ in length");
  }
}

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (const double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> truths) {
  check_pairs(predictions, truths);
  double s = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) s += std::abs(predictions[k] - truths[k]);
  return s / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> truths) {
  check_pairs(predictions, truths);
  double s = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double r = predictions[k] - truths[k];
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

std::string_view to_string(StarMapping m) { return m == StarMapping::rounded ? "rounded" : "continuous"; }

StarMapping parse_star_mapping(std::string_view name) {
  if (name == "rounded") return StarMapping::rounded;
  if (name == "continuous") return StarMapping::continuous;
  throw ConfigError("unknown star mapping '" + std::string(name) + "' (expected rounded or continuous)");
}

void EvalConfig::validate() const {
  fit.validate();
  if (folds < 2) throw ConfigError("cross validation needs at least 2 folds");
}

std::vector<double> predict_test(const NnmModel& model, std::span<const Rating> test, double fallback,
                                 StarMapping mapping, std::size_t* fallbacks) {
  std::vector<double> out;
  out.reserve(test.size());
  std::size_t missing = 0;
  for (const auto& r : test) {
    const auto u = model.users().find(r.user);
    const auto i = model.items().find(r.item);
    double stars = fallback;
    if (u && i) {
      stars = predict_stars_at(model, *u, *i);
    } else {
      ++missing;
    }
    out.push_back(mapping == StarMapping::rounded ? std::round(stars) : stars);
  }
  if (fallbacks) *fallbacks = missing;
  return out;
}

namespace {

std::vector<double> truths_of(std::span<const Rating> test) {
  std::vector<double> t;
  t.reserve(test.size());
  for (const auto& r : test) t.push_back(r.stars);
  return t;
}

}  // namespace

MetricReport cross_validate(const RatingDataset& dataset, const EvalConfig& config) {
  config.validate();
  MetricReport report;
  report.config = config;
  const auto splits = split_folds(dataset, config.folds, config.split_seed);
  std::vector<double> maes, rmses;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto& split = splits[f];
    FitResult fitted = [&] {
      try {
        return fit(split.train, config.fit);
      } catch (const Error& e) {
        spdlog::error("fold {}: fit failed: {}", f + 1, e.what());
        throw;
      }
    }();
    std::size_t fallbacks = 0;
    const auto predictions =
        predict_test(fitted.model, split.test, split.train.mean_stars(), config.mapping, &fallbacks);
    const auto truths = truths_of(split.test);
    FoldMetrics m{static_cast<int>(f + 1), mae(predictions, truths), rmse(predictions, truths),
                  split.test.size(), fallbacks};
    spdlog::info("fold {}/{}: MAE {:.4f} RMSE {:.4f} ({} fallbacks)", m.fold, splits.size(), m.mae, m.rmse,
                 m.fallbacks);
    maes.push_back(m.mae);
    rmses.push_back(m.rmse);
    report.fallbacks += fallbacks;
    report.folds.push_back(m);
  }
  const double n = static_cast<double>(maes.size());
  report.mean_mae = std::accumulate(maes.begin(), maes.end(), 0.0) / n;
  report.mean_rmse = std::accumulate(rmses.begin(), rmses.end(), 0.0) / n;
  report.std_mae = sample_std(maes, report.mean_mae);
  report.std_rmse = sample_std(rmses, report.mean_rmse);
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json doc;
  const auto& fc = config.fit;
  doc["config"] = {
      {"mode", std::string(to_string(fc.mode))},
      {"D", fc.dimension},
      {"max_outer_iters", fc.max_outer_iters},
      {"preprocessing_iters", fc.preprocessing_iters},
      {"preprocessing", std::string(to_string(fc.preprocessing))},
      {"negatives_per_rating", fc.negatives_per_rating},
      {"inner_tolerance", fc.inner.tolerance},
      {"inner_max_iterations", fc.inner.max_iterations},
      {"fit_seed", fc.seed},
      {"split_seed", config.split_seed},
      {"folds", config.folds},
      {"star_mapping", std::string(to_string(config.mapping))},
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& f : folds) {
    rows.push_back({{"fold", f.fold}, {"mae", f.mae}, {"rmse", f.rmse}, {"test_size", f.test_size},
                    {"fallbacks", f.fallbacks}});
  }
  doc["folds"] = std::move(rows);
  doc["fold_count"] = folds.size();
  doc["mae"] = mean_mae;
  doc["rmse"] = mean_rmse;
  doc["mae_std"] = std_mae;
  doc["rmse_std"] = std_rmse;
  doc["fallbacks"] = fallbacks;
  return doc.dump(2) + "\n";
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "fold,mae,rmse,test_size,fallbacks\n";
  std::size_t tests = 0;
  for (const auto& f : folds) {
    os << f.fold << ',' << num(f.mae) << ',' << num(f.rmse) << ',' << f.test_size << ',' << f.fallbacks << '\n';
    tests += f.test_size;
  }
  os << "mean," << num(mean_mae) << ',' << num(mean_rmse) << ',' << tests << ',' << fallbacks << '\n';
  return os.str();
}

std::vector<DimensionPoint> curve_vs_dimension(const RatingDataset& dataset, std::span<const int> dims,
                                               const EvalConfig& base) {
  std::vector<DimensionPoint> out;
  for (const int d : dims) {
    EvalConfig config = base;
    config.fit.dimension = d;
    const auto report = cross_validate(dataset, config);
    out.push_back({d, report.mean_mae, report.mean_rmse});
  }
  return out;
}

std::string to_csv(std::span<const DimensionPoint> curve) {
  std::ostringstream os;
  os << "D,mae,rmse\n";
  for (const auto& p : curve) os << p.dimension << ',' << num(p.mae) << ',' << num(p.rmse) << '\n';
  return os.str();
}

std::vector<IterationPoint> curve_vs_iteration(const RatingDataset& dataset, const EvalConfig& config) {
  config.validate();
  const auto splits = split_folds(dataset, config.folds, config.split_seed);
  const auto& split = splits.front();
  const auto truths = truths_of(split.test);
  const double fallback = split.train.mean_stars();
  std::vector<IterationPoint> out;
  fit(split.train, config.fit, [&](int iter, const NnmModel& model) {
    const auto predictions = predict_test(model, split.test, fallback, config.mapping);
    out.push_back({iter, objective(model, split.train), mae(predictions, truths), rmse(predictions, truths)});
  });
  return out;
}

std::string to_csv(std::span<const IterationPoint> curve) {
  std::ostringstream os;
  os << "iter,objective,mae,rmse\n";
  for (const auto& p : curve) {
    os << p.iter << ',' << num(p.objective) << ',' << num(p.mae) << ',' << num(p.rmse) << '\n';
  }
  return os.str();
}

}  // namespace nnm
