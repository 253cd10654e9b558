#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "fcit/errors.hpp"
#include "fcit/gram.hpp"

namespace fcit {

/// One subject's discrete observations of a single channel: strictly
/// increasing times in [0, 1] and the matching values.
struct FunctionalSample {
  std::string subject_id;
  std::vector<double> times;
  std::vector<double> values;
};

/// Throws std::invalid_argument when a sample violates its invariants.
void validate_sample(const FunctionalSample& sample);

/// Coordinates of a reconstructed curve with respect to the kernel
/// sections at the observation times.
struct SmoothedCurve {
  Eigen::VectorXd coords;
  std::vector<double> times;
  double gamma_t = 0.0;
  double delta_n = 0.0;
};

/// Composite Simpson rule: l+1 equally spaced points and the weight
/// pattern (h/3)(1, 4, 2, 4, ..., 2, 4, 1).
struct QuadratureRule {
  Eigen::VectorXd grid;
  Eigen::VectorXd weights;
};

/// Gaussian kernel cross matrix exp(-gamma_t (a_r - b_s)^2).
Eigen::MatrixXd kernel_cross(const std::vector<double>& times_a,
                             const std::vector<double>& times_b,
                             double gamma_t);

/// Ridge-regularized RKHS fit: coords = (K + delta_n lambda_max(K) I)^{-1} v.
/// With delta_n = 0 the kernel matrix must be numerically invertible.
SmoothedCurve smooth_curve(const FunctionalSample& sample, double gamma_t,
                           double delta_n);

QuadratureRule simpson_rule(int l, double u0, double ul);

/// Reconstructed curve evaluated on a grid:
/// result[s] = sum_r coords[r] exp(-gamma_t (grid[s] - t_r)^2).
Eigen::VectorXd eval_curve(const SmoothedCurve& curve,
                           const std::vector<double>& grid);

/// L2 inner product of two reconstructions via quadrature on the rule's
/// grid. Both curves must share the first-layer bandwidth.
double inner_product_unbalanced(const SmoothedCurve& curve_i,
                                const SmoothedCurve& curve_j,
                                const QuadratureRule& rule);

/// L2 inner product of two curves sampled on the rule's own grid.
double inner_product_balanced(const Eigen::VectorXd& values_i,
                              const Eigen::VectorXd& values_j,
                              const QuadratureRule& rule);

/// Squared pairwise distances ip_ii - 2 ip_ij + ip_jj (clipped at zero)
/// and the mean distance over distinct pairs.
struct PairwiseGeometry {
  Eigen::MatrixXd sq_dists;
  double mean_dist = 0.0;
};
PairwiseGeometry pairwise_geometry(const Eigen::MatrixXd& inner_products);

/// Result of a GCV scan: first grid value attaining the minimum score,
/// plus one score per candidate (NaN marks a skipped candidate).
struct GcvResult {
  double selected = 0.0;
  std::vector<double> scores;
};

/// Selects the smoothing constant delta by generalized cross-validation
/// summed over the X, Y, Z channels, with delta rescaled per sample by
/// lambda_max of its kernel matrix.
GcvResult gcv_smoothing(
    const std::array<std::vector<FunctionalSample>, 3>& channels,
    double gamma_t, const std::vector<double>& delta_grid);

}  // namespace fcit
