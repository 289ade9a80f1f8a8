#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "nnm/error.hpp"
#include "nnm/solver.hpp"

namespace nnm {

// ---------------------------------------------------------------------------
// Simplex projection

void project_simplex_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (n == 0) return;
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  for (auto& x : v) x = std::max(x - theta, 0.0);
}

SimplexVector project_simplex(std::span<const double> v) {
  SimplexVector out{{v.begin(), v.end()}};
  project_simplex_inplace(out.entries);
  return out;
}

// ---------------------------------------------------------------------------
// Normal equations

NormalEquations::NormalEquations(int dimension)
    : gram(Eigen::MatrixXd::Zero(dimension, dimension)), rhs(Eigen::VectorXd::Zero(dimension)) {}

void NormalEquations::add_row(std::span<const double> a, double b) {
  const auto d = static_cast<std::size_t>(dimension());
  if (a.size() != d) throw InvariantError("design row length does not match the dimension");
  for (std::size_t r = 0; r < d; ++r) {
    rhs[r] += b * a[r];
    for (std::size_t c = 0; c <= r; ++c) gram(r, c) += a[r] * a[c];
  }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = r + 1; c < d; ++c) gram(r, c) = gram(c, r);
  target_sq += b * b;
  ++rows;
}

void NormalEquations::add_zero_target_row(std::span<const double> a) {
  const auto d = static_cast<std::size_t>(dimension());
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) gram(r, c) += a[r] * a[c];
  ++rows;
}

double NormalEquations::value(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return v.dot(gram * v) - 2.0 * rhs.dot(v) + target_sq;
}

BundleEquations::BundleEquations(int dimension, int outcomes)
    : gram(Eigen::MatrixXd::Zero(dimension, dimension)),
      rhs(Eigen::MatrixXd::Zero(dimension, outcomes)) {}

double BundleEquations::value(std::span<const double> x) const {
  const auto d = gram.rows();
  double f = target_sq;
  for (Eigen::Index z = 0; z < rhs.cols(); ++z) {
    const Eigen::Map<const Eigen::VectorXd> col(x.data() + z * d, d);
    f += col.dot(gram * col) - 2.0 * rhs.col(z).dot(col);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Projected gradient with active-face Newton refinement

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kStationaryResidual = 1e-12;
constexpr double kLooseResidual = 1e-6;

/// Nonnegative orthant intersected with either the unit box or a family of
/// disjoint "sums to one" groups.
struct FeasibleSet {
  bool upper_bounded = false;
  std::vector<std::vector<Eigen::Index>> groups;

  void project(Eigen::VectorXd& x) const {
    if (upper_bounded) {
      x = x.cwiseMax(0.0).cwiseMin(1.0);
      return;
    }
    std::vector<double> buffer;
    for (const auto& group : groups) {
      buffer.resize(group.size());
      for (std::size_t k = 0; k < group.size(); ++k) buffer[k] = x[group[k]];
      project_simplex_inplace(buffer);
      for (std::size_t k = 0; k < group.size(); ++k) x[group[k]] = buffer[k];
    }
  }

  bool feasible(const Eigen::VectorXd& x, double tol) const {
    if (upper_bounded) return x.minCoeff() >= -tol && x.maxCoeff() <= 1.0 + tol;
    for (const auto& group : groups) {
      double sum = 0.0;
      for (const auto k : group) {
        if (!(x[k] >= -tol)) return false;
        sum += x[k];
      }
      if (!(std::abs(sum - 1.0) <= tol)) return false;
    }
    return true;
  }
};

/// f(x) = x^T H x - 2 h^T x + s
struct Quadratic {
  const Eigen::MatrixXd& hessian;
  const Eigen::VectorXd& linear;
  double constant;

  double value(const Eigen::VectorXd& x) const {
    return x.dot(hessian * x) - 2.0 * linear.dot(x) + constant;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    return 2.0 * (hessian * x - linear);
  }
};

double residual(const FeasibleSet& set, const Eigen::VectorXd& x,
                const Eigen::VectorXd& g, double scale) {
  Eigen::VectorXd y = x - g / scale;
  set.project(y);
  return (y - x).cwiseAbs().maxCoeff();
}

/// Minimizes the quadratic over the face of the feasible set on which `x`
/// currently lies (bound-active variables frozen), then moves as far as the
/// remaining bounds allow. Returns true if `x` was updated.
bool face_step(const Quadratic& q, const FeasibleSet& set, Eigen::VectorXd& x, double& f,
               const Eigen::VectorXd& g) {
  const auto n = x.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (x[k] > 0.0 && (!set.upper_bounded || x[k] < 1.0)) free.push_back(k);
  }
  if (free.empty()) return false;
  std::vector<Eigen::Index> position(static_cast<std::size_t>(n), -1);
  for (std::size_t a = 0; a < free.size(); ++a) position[static_cast<std::size_t>(free[a])] = static_cast<Eigen::Index>(a);

  std::vector<std::vector<Eigen::Index>> rows;
  for (const auto& group : set.groups) {
    std::vector<Eigen::Index> members;
    for (const auto k : group)
      if (position[static_cast<std::size_t>(k)] >= 0) members.push_back(position[static_cast<std::size_t>(k)]);
    if (!members.empty()) rows.push_back(std::move(members));
  }

  const auto m = static_cast<Eigen::Index>(free.size());
  const auto c = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + c, m + c);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + c);
  for (Eigen::Index a = 0; a < m; ++a) {
    rhs[a] = -g[free[a]];
    for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = 2.0 * q.hessian(free[a], free[b]);
  }
  for (Eigen::Index r = 0; r < c; ++r) {
    for (const auto a : rows[static_cast<std::size_t>(r)]) {
      kkt(m + r, a) = 1.0;
      kkt(a, m + r) = 1.0;
    }
  }
  const Eigen::VectorXd solution = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!solution.allFinite()) return false;
  const Eigen::VectorXd d = solution.head(m);
  if (d.cwiseAbs().maxCoeff() == 0.0) return false;

  // Ratio test against the bounds of the free variables.
  double step = 1.0;
  Eigen::Index blocking = -1;
  double blocking_value = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    const double xa = x[free[a]];
    if (d[a] < 0.0 && xa + d[a] < 0.0) {
      const double t = xa / -d[a];
      if (t < step) step = t, blocking = a, blocking_value = 0.0;
    } else if (set.upper_bounded && d[a] > 0.0 && xa + d[a] > 1.0) {
      const double t = (1.0 - xa) / d[a];
      if (t < step) step = t, blocking = a, blocking_value = 1.0;
    }
  }
  if (step <= 0.0) return false;

  Eigen::VectorXd candidate = x;
  for (Eigen::Index a = 0; a < m; ++a) candidate[free[a]] += step * d[a];
  if (blocking >= 0) candidate[free[blocking]] = blocking_value;
  candidate = candidate.cwiseMax(0.0);
  if (set.upper_bounded) candidate = candidate.cwiseMin(1.0);

  const double fc = q.value(candidate);
  if (!(fc <= f)) return false;
  if ((candidate.array() == x.array()).all()) return false;
  x = std::move(candidate);
  f = fc;
  return true;
}

InnerResult minimize(const Quadratic& q, const FeasibleSet& set, std::span<double> io,
                     const InnerOptions& options) {
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(io.data(), static_cast<Eigen::Index>(io.size()));
  if (!x.allFinite()) throw InvariantError("warm start holds non-finite values");
  if (!set.feasible(x, 1e-12)) set.project(x);

  InnerResult result;
  double f = q.value(x);
  // Row-sum norm bounds the largest eigenvalue of H.
  const double scale = q.hessian.cwiseAbs().rowwise().sum().maxCoeff();
  if (!(scale > 0.0)) {
    // Zero Hessian: the objective is linear in x, and only possible without rows.
    result.objective = f;
    result.converged = true;
    std::copy(x.data(), x.data() + x.size(), io.begin());
    return result;
  }
  const double initial_step = 1.0 / scale;

  Eigen::VectorXd g = q.gradient(x);
  result.kkt_residual = residual(set, x, g, scale);
  if (result.kkt_residual <= kStationaryResidual) result.converged = true;

  for (int it = 0; it < options.max_iterations && !result.converged; ++it) {
    const double f_start = f;

    // Projected gradient step with Armijo backtracking.
    double alpha = initial_step;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      Eigen::VectorXd y = x - alpha * g;
      set.project(y);
      const Eigen::VectorXd d = y - x;
      if (d.cwiseAbs().maxCoeff() == 0.0) break;
      const double fy = q.value(y);
      if (fy <= f + kArmijo * g.dot(d)) {
        x = std::move(y);
        f = fy;
        break;
      }
      alpha *= 0.5;
    }

    g = q.gradient(x);
    if (face_step(q, set, x, f, g)) g = q.gradient(x);

    result.iterations = it + 1;
    result.kkt_residual = residual(set, x, g, scale);
    const double decrease = f_start - f;
    if (result.kkt_residual <= kStationaryResidual) {
      result.converged = true;
    } else if (decrease <= options.tolerance * std::max(std::abs(f_start), 1e-300) &&
               result.kkt_residual <= kLooseResidual) {
      result.converged = true;
    }
  }
  result.objective = f;
  std::copy(x.data(), x.data() + x.size(), io.begin());
  return result;
}

void check_width(std::span<const double> x, std::size_t expected) {
  if (x.size() != expected) {
    throw InvariantError("vector of length " + std::to_string(x.size()) + " where " +
                         std::to_string(expected) + " was expected");
  }
}

}  // namespace

InnerResult minimize_on_simplex(const NormalEquations& eq, std::span<double> x,
                                const InnerOptions& options) {
  check_width(x, static_cast<std::size_t>(eq.dimension()));
  FeasibleSet set;
  set.groups.emplace_back(static_cast<std::size_t>(eq.dimension()));
  std::iota(set.groups[0].begin(), set.groups[0].end(), Eigen::Index{0});
  return minimize(Quadratic{eq.gram, eq.rhs, eq.target_sq}, set, x, options);
}

InnerResult minimize_on_box(const NormalEquations& eq, std::span<double> x,
                            const InnerOptions& options) {
  check_width(x, static_cast<std::size_t>(eq.dimension()));
  FeasibleSet set;
  set.upper_bounded = true;
  return minimize(Quadratic{eq.gram, eq.rhs, eq.target_sq}, set, x, options);
}

InnerResult minimize_on_bundle(const BundleEquations& eq, std::span<double> x,
                               const InnerOptions& options) {
  const auto d = eq.gram.rows();
  const auto outcomes = eq.rhs.cols();
  check_width(x, static_cast<std::size_t>(d * outcomes));
  const auto n = d * outcomes;
  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd linear(n);
  for (Eigen::Index z = 0; z < outcomes; ++z) {
    hessian.block(z * d, z * d, d, d) = eq.gram;
    linear.segment(z * d, d) = eq.rhs.col(z);
  }
  FeasibleSet set;
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<Eigen::Index> group;
    for (Eigen::Index z = 0; z < outcomes; ++z) group.push_back(z * d + j);
    set.groups.push_back(std::move(group));
  }
  return minimize(Quadratic{hessian, linear, eq.target_sq}, set, x, options);
}

// ---------------------------------------------------------------------------
// Row-based subproblems

NormalEquations normal_equations(const SubproblemLS& problem) {
  if (problem.rows.empty()) throw DegenerateProblemError("least-squares subproblem without rows");
  const auto d = problem.rows.front().coefficients.size();
  if (d == 0) throw InvariantError("design rows must have length >= 1");
  NormalEquations eq(static_cast<int>(d));
  for (const auto& row : problem.rows) {
    if (row.coefficients.size() != d) throw InvariantError("design rows differ in length");
    if (!std::isfinite(row.target)) throw InvariantError("non-finite target");
    eq.add_row(row.coefficients, row.target);
  }
  return eq;
}

double subproblem_objective(const SubproblemLS& problem, std::span<const double> x) {
  double f = 0.0;
  for (const auto& row : problem.rows) {
    const double r = dot(row.coefficients, x) - row.target;
    f += r * r;
  }
  return f;
}

SimplexVector solve_simplex_ls(const SubproblemLS& problem, const SimplexVector& warm_start,
                               const InnerOptions& options) {
  if (problem.constraint != Constraint::simplex) throw InvariantError("expected a simplex subproblem");
  const auto eq = normal_equations(problem);
  SimplexVector x = warm_start;
  minimize_on_simplex(eq, x.entries, options);
  return x;
}

LikeVector solve_box_ls(const SubproblemLS& problem, const LikeVector& warm_start,
                        const InnerOptions& options) {
  if (problem.constraint != Constraint::box) throw InvariantError("expected a box subproblem");
  const auto eq = normal_equations(problem);
  LikeVector x = warm_start;
  minimize_on_box(eq, x.entries, options);
  return x;
}

}  // namespace nnm
