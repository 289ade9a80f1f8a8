#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nnm/model.hpp"

namespace nnm {

enum class Constraint { simplex, box };

struct DesignRow {
  std::vector<double> coefficients;
  double target;
};

/// min_x sum_r (a_r^T x - b_r)^2 over the simplex or the unit box.
struct SubproblemLS {
  std::vector<DesignRow> rows;
  Constraint constraint = Constraint::simplex;
};

/// A sum of squares in normal-equation form:
///   f(x) = x^T G x - 2 h^T x + s,  G = sum a a^T,  h = sum b a,  s = sum b^2.
/// The fitting loop accumulates these directly instead of materializing rows.
struct NormalEquations {
  explicit NormalEquations(int dimension);

  void add_row(std::span<const double> coefficients, double target);
  /// Adds a a^T only (a row whose target is zero).
  void add_zero_target_row(std::span<const double> coefficients);
  double value(std::span<const double> x) const;

  int dimension() const noexcept { return static_cast<int>(rhs.size()); }

  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  double target_sq = 0.0;
  std::size_t rows = 0;
};

/// Shared-design objective for a measurement bundle X = (E_1..E_Z):
///   f(X) = sum_z (E_z^T G E_z - 2 h_z^T E_z) + s.
struct BundleEquations {
  BundleEquations(int dimension, int outcomes);

  double value(std::span<const double> x) const;

  Eigen::MatrixXd gram;  // D x D
  Eigen::MatrixXd rhs;   // D x Z, column z-1 belongs to outcome z
  double target_sq = 0.0;
  std::size_t rows = 0;
};

struct InnerOptions {
  /// Relative objective decrease below which iteration stops.
  double tolerance = 1e-8;
  int max_iterations = 500;
};

struct InnerResult {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
  /// ||x - P(x - grad f / ||G||_inf)||_inf at the returned point.
  double kkt_residual = 0.0;
};

/// Euclidean projection onto the probability simplex (sort-based).
SimplexVector project_simplex(std::span<const double> v);
void project_simplex_inplace(std::span<double> v);

// Projected-gradient solvers. `x` holds the warm start on entry and the
// solution on exit; the objective never increases from the warm start.

InnerResult minimize_on_simplex(const NormalEquations& eq, std::span<double> x,
                                const InnerOptions& options = {});
InnerResult minimize_on_box(const NormalEquations& eq, std::span<double> x,
                            const InnerOptions& options = {});
/// `x` is outcome-major (x[(z-1)*D + j]); each component j is kept on the
/// simplex across outcomes.
InnerResult minimize_on_bundle(const BundleEquations& eq, std::span<double> x,
                               const InnerOptions& options = {});

NormalEquations normal_equations(const SubproblemLS& problem);
double subproblem_objective(const SubproblemLS& problem, std::span<const double> x);

SimplexVector solve_simplex_ls(const SubproblemLS& problem, const SimplexVector& warm_start,
                               const InnerOptions& options = {});
LikeVector solve_box_ls(const SubproblemLS& problem, const LikeVector& warm_start,
                        const InnerOptions& options = {});

}  // namespace nnm
