#include "fcit/gram.hpp"

#include <cmath>

namespace fcit {

namespace {

void symmetrize(Eigen::MatrixXd& m) {
  m = ((m + m.transpose()) * 0.5).eval();
}

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) +
                                ": expected a nonempty square matrix");
  }
}

void require_symmetric(const Eigen::MatrixXd& m, double rel_tol,
                       const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double gap = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (gap > rel_tol * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix not symmetric");
  }
}

}  // namespace

GramMatrix rbf_gram(const Eigen::MatrixXd& sq_dists, double gamma) {
  require_square(sq_dists, "rbf_gram");
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("rbf_gram: gamma must be positive");
  }
  require_symmetric(sq_dists, 1e-12, "rbf_gram");
  if (sq_dists.diagonal().cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("rbf_gram: squared distances need a zero diagonal");
  }
  if (sq_dists.minCoeff() < 0.0) {
    throw std::invalid_argument("rbf_gram: negative squared distance");
  }

  GramMatrix g;
  g.entries = (-gamma * sq_dists.array()).exp().matrix();
  g.entries.diagonal().setOnes();
  symmetrize(g.entries);
  g.tag = KernelTag::gaussian;
  g.bandwidth = gamma;
  g.centered = false;
  return g;
}

GramMatrix brownian_gram(const std::vector<double>& times) {
  if (times.empty()) {
    throw std::invalid_argument("brownian_gram: empty time vector");
  }
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
      throw std::invalid_argument("brownian_gram: times must lie in [0, 1]");
    }
  }
  const Eigen::Index m = static_cast<Eigen::Index>(times.size());
  GramMatrix g;
  g.entries.resize(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index s = 0; s <= r; ++s) {
      const double v = std::min(times[static_cast<size_t>(r)],
                                times[static_cast<size_t>(s)]);
      g.entries(r, s) = v;
      g.entries(s, r) = v;
    }
  }
  g.tag = KernelTag::brownian;
  g.bandwidth = std::nullopt;
  g.centered = false;
  return g;
}

GramMatrix center_gram(const GramMatrix& k) {
  if (k.centered) {
    throw std::invalid_argument("center_gram: matrix is already centered");
  }
  require_square(k.entries, "center_gram");
  const Eigen::Index n = k.entries.rows();

  // H K H expanded entrywise: K_ij - rowmean_i - colmean_j + grandmean.
  const Eigen::VectorXd row_means = k.entries.rowwise().mean();
  const Eigen::VectorXd col_means = k.entries.colwise().mean();
  const double grand = row_means.mean();

  GramMatrix out;
  out.entries = k.entries;
  out.entries.colwise() -= row_means;
  out.entries.rowwise() -= col_means.transpose();
  out.entries.array() += grand;
  if (n == 1) out.entries(0, 0) = 0.0;
  symmetrize(out.entries);
  out.tag = k.tag;
  out.bandwidth = k.bandwidth;
  out.centered = true;
  return out;
}

GramMatrix hadamard(const GramMatrix& a, const GramMatrix& b) {
  if (a.entries.rows() != b.entries.rows() ||
      a.entries.cols() != b.entries.cols()) {
    throw std::invalid_argument("hadamard: dimension mismatch");
  }
  GramMatrix out;
  out.entries = a.entries.cwiseProduct(b.entries);
  symmetrize(out.entries);
  out.tag = KernelTag::product;
  out.bandwidth = std::nullopt;
  out.centered = false;
  return out;
}

double bandwidth_from_distances(const std::vector<double>& dists,
                                long count_basis) {
  if (dists.empty() || count_basis < 1) {
    throw std::invalid_argument("bandwidth_from_distances: empty input");
  }
  double sum = 0.0;
  for (double d : dists) {
    if (!std::isfinite(d) || d < 0.0) {
      throw std::invalid_argument("bandwidth_from_distances: invalid distance");
    }
    sum += d;
  }
  const double mean = sum / static_cast<double>(count_basis);
  if (!(mean > 0.0)) {
    throw degenerate_data_error(
        "bandwidth_from_distances: all pairwise distances are zero");
  }
  return 1.0 / (mean * mean);
}

EigenSystem sym_eig(const Eigen::MatrixXd& s) {
  require_square(s, "sym_eig");
  require_symmetric(s, 1e-10, "sym_eig");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      (s + s.transpose()) * 0.5);
  if (solver.info() != Eigen::Success) {
    throw numerical_error("sym_eig: eigendecomposition failed to converge");
  }

  // Eigen returns ascending order; flip to descending.
  EigenSystem out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  EigenSystem eig = sym_eig(s);
  const double largest = eig.values(0);
  const double smallest = eig.values(eig.values.size() - 1);
  if (smallest < -1e-10 * std::max(largest, 0.0)) {
    throw numerical_error("psd_sqrt: matrix is not positive semidefinite");
  }
  const Eigen::VectorXd roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd out =
      eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  symmetrize(out);
  return out;
}

Eigen::MatrixXd reg_solve(const Eigen::MatrixXd& s, double rho,
                          const Eigen::MatrixXd& b) {
  require_square(s, "reg_solve");
  if (!(rho > 0.0)) {
    throw std::invalid_argument("reg_solve: rho must be positive");
  }
  if (s.rows() != b.rows()) {
    throw std::invalid_argument("reg_solve: dimension mismatch");
  }
  require_symmetric(s, 1e-8, "reg_solve");

  Eigen::MatrixXd shifted = (s + s.transpose()) * 0.5;
  shifted.diagonal().array() += rho;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) {
    throw numerical_error("reg_solve: factorization failed");
  }
  return ldlt.solve(b);
}

}  // namespace fcit
