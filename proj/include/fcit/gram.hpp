#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "fcit/errors.hpp"

namespace fcit {

enum class KernelTag { gaussian, brownian, product };

/// Symmetric kernel matrix with provenance. All constructors symmetrize
/// the entries as (M + M^T)/2 before storage to remove floating-point
/// accumulation drift.
struct GramMatrix {
  Eigen::MatrixXd entries;
  KernelTag tag = KernelTag::gaussian;
  std::optional<double> bandwidth;  // gamma of a Gaussian kernel, if any
  bool centered = false;

  Eigen::Index size() const { return entries.rows(); }
};

/// Eigendecomposition of a symmetric matrix, eigenvalues descending,
/// eigenvector columns in matching order.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Gaussian Gram matrix exp(-gamma * d2) from a matrix of squared
/// pairwise distances (symmetric, zero diagonal, nonnegative).
GramMatrix rbf_gram(const Eigen::MatrixXd& sq_dists, double gamma);

/// Brownian-motion Gram matrix min(t_r, t_s) over times in [0, 1].
GramMatrix brownian_gram(const std::vector<double>& times);

/// Double centering H K H with H = I - (1/n) 11^T.
GramMatrix center_gram(const GramMatrix& k);

/// Entrywise (Schur) product; PSD is preserved.
GramMatrix hadamard(const GramMatrix& a, const GramMatrix& b);

/// Bandwidth heuristic: gamma such that 1/sqrt(gamma) equals the mean of
/// the given pairwise distances, with count_basis = C(p,2) pairs.
/// Throws degenerate_data_error when every distance is zero.
double bandwidth_from_distances(const std::vector<double>& dists,
                                long count_basis);

/// Eigendecomposition of a symmetric matrix (tolerating 1e-10 relative
/// asymmetry), eigenvalues sorted descending.
EigenSystem sym_eig(const Eigen::MatrixXd& s);

/// Symmetric PSD square root V diag(max(vals,0))^{1/2} V^T. Eigenvalues
/// below -1e-10 * lambda_max fail with numerical_error.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s);

/// Tikhonov-regularized solve (S + rho I)^{-1} B for symmetric PSD S.
Eigen::MatrixXd reg_solve(const Eigen::MatrixXd& s, double rho,
                          const Eigen::MatrixXd& b);

}  // namespace fcit
