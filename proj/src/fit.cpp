#include "nnm/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "nnm/error.hpp"
#include "parallel.hpp"

namespace nnm {

std::string_view to_string(Preprocessing p) {
  switch (p) {
    case Preprocessing::automatic: return "auto";
    case Preprocessing::dense_zero_fill: return "dense-zero-fill";
    case Preprocessing::negative_sampling: return "negative-sampling";
  }
  return "?";
}

Preprocessing parse_preprocessing(std::string_view name) {
  if (name == "auto") return Preprocessing::automatic;
  if (name == "dense-zero-fill" || name == "dense") return Preprocessing::dense_zero_fill;
  if (name == "negative-sampling" || name == "sampling") return Preprocessing::negative_sampling;
  throw ConfigError("unknown preprocessing strategy '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (dimension < 1) throw ConfigError("dimension D must be >= 1");
  if (preprocessing_iters < 0) throw ConfigError("preprocessing iterations must be >= 0");
  if (max_outer_iters < preprocessing_iters) {
    throw ConfigError("max outer iterations must be >= preprocessing iterations");
  }
  if (negatives_per_rating < 0) throw ConfigError("negatives per rating must be >= 0");
  if (!(inner.tolerance >= 0.0)) throw ConfigError("inner tolerance must be >= 0");
  if (inner.max_iterations < 1) throw ConfigError("inner iterations must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

Preprocessing resolve_preprocessing(const FitConfig& config, const RatingDataset& dataset) {
  if (config.preprocessing != Preprocessing::automatic) return config.preprocessing;
  const double entries =
      static_cast<double>(dataset.num_users()) * static_cast<double>(dataset.num_items());
  return entries <= kDenseFillLimit ? Preprocessing::dense_zero_fill
                                    : Preprocessing::negative_sampling;
}

// ---------------------------------------------------------------------------
// Report

std::string FitReport::to_csv() const {
  std::ostringstream os;
  os << "iter,phase,objective,wall_ms\n";
  char buffer[64];
  for (const auto& s : steps) {
    std::snprintf(buffer, sizeof buffer, "%.17g", s.objective);
    os << s.iter << ',' << (s.step == HalfStep::items ? "items" : "users")
       << (s.preprocessing ? "-pre" : "") << ',' << buffer << ',';
    std::snprintf(buffer, sizeof buffer, "%.3f", s.wall_ms);
    os << buffer << '\n';
  }
  return os.str();
}

void FitReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << to_csv();
}

// ---------------------------------------------------------------------------
// Negative sampling

namespace {

/// Per-user lists of sampled unrated item indices, ascending.
std::vector<std::vector<std::uint32_t>> sample_negative_indices(const RatingDataset& dataset, int k,
                                                                std::uint64_t seed) {
  std::vector<std::vector<std::uint32_t>> out(dataset.num_users());
  if (k <= 0) return out;
  std::mt19937_64 rng(seed);
  const auto n_items = dataset.num_items();
  std::vector<std::uint32_t> pool;
  for (std::size_t u = 0; u < dataset.num_users(); ++u) {
    const auto rated = dataset.user_ratings(u);
    pool.clear();
    std::size_t next = 0;
    for (std::uint32_t i = 0; i < n_items; ++i) {
      if (next < rated.size() && rated[next].index == i) {
        ++next;
      } else {
        pool.push_back(i);
      }
    }
    const std::size_t want = static_cast<std::size_t>(k) * rated.size();
    if (want < pool.size()) {
      for (std::size_t a = 0; a < want; ++a) {
        std::uniform_int_distribution<std::size_t> pick(a, pool.size() - 1);
        std::swap(pool[a], pool[pick(rng)]);
      }
      pool.resize(want);
      std::sort(pool.begin(), pool.end());
    }
    out[u] = pool;
  }
  return out;
}

std::uint64_t negatives_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

}  // namespace

std::vector<std::pair<Id, Id>> sample_negatives(const RatingDataset& dataset, int k,
                                                std::uint64_t seed) {
  if (k < 0) throw ConfigError("negatives per rating must be >= 0");
  const auto lists = sample_negative_indices(dataset, k, negatives_seed(seed));
  std::vector<std::pair<Id, Id>> out;
  for (std::size_t u = 0; u < lists.size(); ++u) {
    for (const auto i : lists[u]) out.emplace_back(dataset.users().id(u), dataset.items().id(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objectives

namespace {

double residual_sq(const NnmModel& model, std::size_t u, std::size_t i, int stars) {
  const auto p = model.user(u);
  const auto row = model.item(i);
  const int z_levels = model.levels();
  if (model.mode() == Mode::binary) {
    const double r = dot(row, p) - static_cast<double>(stars) / z_levels;
    return r * r;
  }
  const auto d = static_cast<std::size_t>(model.dimension());
  double f = 0.0;
  for (int z = 1; z <= z_levels; ++z) {
    const double r = dot(row.subspan(static_cast<std::size_t>(z - 1) * d, d), p) - (z == stars ? 1.0 : 0.0);
    f += r * r;
  }
  return f;
}

/// Sum over observed entries in user-major order; independent of thread count.
double observed_objective(const NnmModel& model, const RatingDataset& dataset) {
  double f = 0.0;
  for (std::size_t u = 0; u < dataset.num_users(); ++u) {
    for (const auto& e : dataset.user_ratings(u)) f += residual_sq(model, u, e.index, e.stars);
  }
  return f;
}

Eigen::MatrixXd sum_outer_products(std::size_t count, int d,
                                   const std::function<std::span<const double>(std::size_t)>& row) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < count; ++k) {
    const auto v = row(k);
    const Eigen::Map<const Eigen::VectorXd> m(v.data(), d);
    g.noalias() += m * m.transpose();
  }
  return g;
}

}  // namespace

double objective(const NnmModel& model, const RatingDataset& dataset) {
  double f = 0.0;
  for (const auto& r : dataset.ratings()) {
    f += residual_sq(model, model.users().at(r.user, "user"), model.items().at(r.item, "item"), r.stars);
  }
  return f;
}

double objective(const NnmModel& model, const RatingDataset& dataset,
                 std::span<const std::pair<Id, Id>> gamma) {
  double f = 0.0;
  for (const auto& [user, item] : gamma) {
    const auto u = model.users().at(user, "user");
    const auto i = model.items().at(item, "item");
    int stars = 0;
    if (const auto du = dataset.users().find(user); du) {
      if (const auto di = dataset.items().find(item); di) {
        const auto row = dataset.user_ratings(*du);
        const auto it = std::lower_bound(row.begin(), row.end(), *di,
                                         [](const RatingDataset::Entry& e, std::size_t v) { return e.index < v; });
        if (it != row.end() && it->index == *di) stars = it->stars;
      }
    }
    f += residual_sq(model, u, i, stars);  // stars == 0 means target 0
  }
  return f;
}

// ---------------------------------------------------------------------------
// Fitting loop

namespace {

class Fitter {
 public:
  Fitter(const RatingDataset& dataset, const FitConfig& config)
      : data_(dataset), config_(config), d_(config.dimension), z_(dataset.levels()),
        model_(config.mode, config.dimension, dataset.levels(), dataset.users(), dataset.items()) {}

  FitResult run(const IterationObserver& observer) {
    initialize_users();
    report_.preprocessing = resolve_preprocessing(config_, data_);
    // Preprocessing pretends unknown entries are zero, which only makes sense
    // for like-probabilities.
    const int pre_iters = config_.mode == Mode::binary ? config_.preprocessing_iters : 0;
    if (pre_iters > 0 && report_.preprocessing == Preprocessing::negative_sampling) {
      user_negatives_ = sample_negative_indices(data_, config_.negatives_per_rating,
                                                negatives_seed(config_.seed));
      item_negatives_.assign(data_.num_items(), {});
      for (std::size_t u = 0; u < user_negatives_.size(); ++u) {
        for (const auto i : user_negatives_[u]) item_negatives_[i].push_back(static_cast<std::uint32_t>(u));
        report_.sampled_negatives += user_negatives_[u].size();
      }
    }
    spdlog::debug("fit: U={} I={} |Gamma|={} D={} mode={} preprocessing={} ({} iters)",
                  data_.num_users(), data_.num_items(), data_.size(), d_, to_string(config_.mode),
                  to_string(report_.preprocessing), pre_iters);

    for (int iter = 1; iter <= config_.max_outer_iters; ++iter) {
      const bool pre = iter <= pre_iters;
      half_step(iter, HalfStep::items, pre);
      half_step(iter, HalfStep::users, pre);
      if (observer) observer(iter, model_);
    }
    return FitResult{std::move(model_), std::move(report_)};
  }

 private:
  void initialize_users() {
    std::mt19937_64 rng(config_.seed);
    std::uniform_int_distribution<int> pick(0, d_ - 1);
    for (std::size_t u = 0; u < model_.users().size(); ++u) {
      auto p = model_.user(u);
      std::fill(p.begin(), p.end(), 0.0);
      p[static_cast<std::size_t>(pick(rng))] = 1.0;
    }
  }

  bool dense(bool pre) const { return pre && report_.preprocessing == Preprocessing::dense_zero_fill; }
  bool sampled(bool pre) const { return pre && report_.preprocessing == Preprocessing::negative_sampling; }

  void half_step(int iter, HalfStep step, bool pre) {
    const auto start = std::chrono::steady_clock::now();
    const bool items = step == HalfStep::items;
    const std::size_t count = items ? data_.num_items() : data_.num_users();
    std::vector<double> kkt(count, 0.0);
    std::vector<char> converged(count, 1);

    // Under dense zero-fill every row of the opposite side enters every
    // subproblem; its Gram matrix is shared.
    Eigen::MatrixXd shared;
    if (dense(pre)) {
      shared = items ? sum_outer_products(data_.num_users(), d_, [&](std::size_t u) { return std::span<const double>(model_.user(u)); })
                     : sum_outer_products(data_.num_items(), d_, [&](std::size_t i) { return std::span<const double>(model_.item(i)); });
    }
    std::vector<Eigen::MatrixXd> bundle_grams;
    if (!items && config_.mode == Mode::categorical) bundle_grams = item_bundle_grams();

    detail::parallel_for(count, config_.threads, [&](std::size_t k) {
      const InnerResult r = items ? solve_item(k, pre, shared) : solve_user(k, pre, shared, bundle_grams);
      kkt[k] = r.kkt_residual;
      converged[k] = r.converged;
    });

    HalfStepRecord rec{};
    rec.iter = iter;
    rec.step = step;
    rec.preprocessing = pre;
    rec.objective = observed_objective(model_, data_);
    rec.phase_objective = pre ? augmented_objective(pre) : rec.objective;
    rec.max_kkt_residual = kkt.empty() ? 0.0 : *std::max_element(kkt.begin(), kkt.end());
    rec.unconverged = static_cast<std::size_t>(std::count(converged.begin(), converged.end(), 0));
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    spdlog::debug("iter {:2d} {}{}: objective {:.10g} phase {:.10g} max kkt {:.2e} unconverged {} ({:.1f} ms)",
                  iter, items ? "items" : "users", pre ? "-pre" : "", rec.objective,
                  rec.phase_objective, rec.max_kkt_residual, rec.unconverged, rec.wall_ms);
    report_.steps.push_back(rec);
  }

  InnerResult solve_item(std::size_t i, bool pre, const Eigen::MatrixXd& shared) {
    const auto ratings = data_.item_ratings(i);
    if (config_.mode == Mode::categorical) {
      BundleEquations eq(d_, z_);
      for (const auto& e : ratings) {
        const auto p = model_.user(e.index);
        const Eigen::Map<const Eigen::VectorXd> v(p.data(), d_);
        eq.gram.noalias() += v * v.transpose();
        eq.rhs.col(e.stars - 1) += v;
        eq.target_sq += 1.0;
        ++eq.rows;
      }
      return minimize_on_bundle(eq, model_.item(i), config_.inner);
    }
    NormalEquations eq(d_);
    if (dense(pre)) {
      eq.gram = shared;
      eq.rows = data_.num_users();
    }
    for (const auto& e : ratings) {
      const auto p = model_.user(e.index);
      const double t = static_cast<double>(e.stars) / z_;
      if (dense(pre)) {
        for (int a = 0; a < d_; ++a) eq.rhs[a] += t * p[static_cast<std::size_t>(a)];
        eq.target_sq += t * t;
      } else {
        eq.add_row(p, t);
      }
    }
    if (sampled(pre)) {
      for (const auto u : item_negatives_[i]) eq.add_zero_target_row(model_.user(u));
    }
    return minimize_on_box(eq, model_.item(i), config_.inner);
  }

  InnerResult solve_user(std::size_t u, bool pre, const Eigen::MatrixXd& shared,
                         const std::vector<Eigen::MatrixXd>& bundle_grams) {
    const auto ratings = data_.user_ratings(u);
    NormalEquations eq(d_);
    if (config_.mode == Mode::categorical) {
      const auto d = static_cast<std::size_t>(d_);
      for (const auto& e : ratings) {
        const auto row = model_.item(e.index);
        eq.gram += bundle_grams[e.index];
        const auto hit = row.subspan(static_cast<std::size_t>(e.stars - 1) * d, d);
        for (std::size_t a = 0; a < d; ++a) eq.rhs[static_cast<Eigen::Index>(a)] += hit[a];
        eq.target_sq += 1.0;
        eq.rows += static_cast<std::size_t>(z_);
      }
      return minimize_on_simplex(eq, model_.user(u), config_.inner);
    }
    if (dense(pre)) {
      eq.gram = shared;
      eq.rows = data_.num_items();
    }
    for (const auto& e : ratings) {
      const auto v = model_.item(e.index);
      const double t = static_cast<double>(e.stars) / z_;
      if (dense(pre)) {
        for (int a = 0; a < d_; ++a) eq.rhs[a] += t * v[static_cast<std::size_t>(a)];
        eq.target_sq += t * t;
      } else {
        eq.add_row(v, t);
      }
    }
    if (sampled(pre)) {
      for (const auto i : user_negatives_[u]) eq.add_zero_target_row(model_.item(i));
    }
    return minimize_on_simplex(eq, model_.user(u), config_.inner);
  }

  std::vector<Eigen::MatrixXd> item_bundle_grams() const {
    std::vector<Eigen::MatrixXd> grams(data_.num_items());
    const auto d = static_cast<std::size_t>(d_);
    for (std::size_t i = 0; i < grams.size(); ++i) {
      const auto row = model_.item(i);
      grams[i] = sum_outer_products(static_cast<std::size_t>(z_), d_,
                                    [&](std::size_t z) { return row.subspan(z * d, d); });
    }
    return grams;
  }

  /// Objective on the augmented index set of the preprocessing phase, with
  /// target 0 on the added entries.
  double augmented_objective(bool pre) const {
    if (dense(pre)) {
      // sum over all (u, i) of (e.p)^2, corrected on the observed entries.
      const Eigen::MatrixXd g_items = sum_outer_products(
          data_.num_items(), d_, [&](std::size_t i) { return std::span<const double>(model_.item(i)); });
      double f = 0.0;
      for (std::size_t u = 0; u < data_.num_users(); ++u) {
        const auto p = model_.user(u);
        const Eigen::Map<const Eigen::VectorXd> v(p.data(), d_);
        f += v.dot(g_items * v);
        for (const auto& e : data_.user_ratings(u)) {
          const double t = static_cast<double>(e.stars) / z_;
          f += t * t - 2.0 * t * dot(model_.item(e.index), p);
        }
      }
      return f;
    }
    double f = observed_objective(model_, data_);
    for (std::size_t u = 0; u < user_negatives_.size(); ++u) {
      for (const auto i : user_negatives_[u]) {
        const double s = dot(model_.item(i), model_.user(u));
        f += s * s;
      }
    }
    return f;
  }

  const RatingDataset& data_;
  FitConfig config_;
  int d_;
  int z_;
  NnmModel model_;
  FitReport report_;
  std::vector<std::vector<std::uint32_t>> user_negatives_;
  std::vector<std::vector<std::uint32_t>> item_negatives_;
};

}  // namespace

FitResult fit(const RatingDataset& dataset, const FitConfig& config, const IterationObserver& observer) {
  config.validate();
  if (dataset.empty()) throw PreconditionError("cannot fit an empty dataset");
  std::vector<std::string> offenders;
  for (std::size_t u = 0; u < dataset.num_users(); ++u)
    if (dataset.user_ratings(u).empty()) offenders.push_back("user " + std::to_string(dataset.users().id(u)));
  for (std::size_t i = 0; i < dataset.num_items(); ++i)
    if (dataset.item_ratings(i).empty()) offenders.push_back("item " + std::to_string(dataset.items().id(i)));
  if (!offenders.empty()) {
    std::string list;
    for (const auto& o : offenders) list += (list.empty() ? "" : ", ") + o;
    throw PreconditionError("without training ratings: " + list);
  }
  return Fitter(dataset, config).run(observer);
}

}  // namespace nnm
