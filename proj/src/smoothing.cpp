#include "fcit/smoothing.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace fcit {

void validate_sample(const FunctionalSample& sample) {
  if (sample.times.empty() || sample.times.size() != sample.values.size()) {
    throw std::invalid_argument("sample '" + sample.subject_id +
                                "': times and values must be nonempty and equal length");
  }
  double prev = -1.0;
  for (double t : sample.times) {
    if (!std::isfinite(t) || t < 0.0 || t > 1.0) {
      throw std::invalid_argument("sample '" + sample.subject_id +
                                  "': times must lie in [0, 1]");
    }
    if (t <= prev) {
      throw std::invalid_argument("sample '" + sample.subject_id +
                                  "': times must be strictly increasing");
    }
    prev = t;
  }
  for (double v : sample.values) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("sample '" + sample.subject_id +
                                  "': values must be finite");
    }
  }
}

Eigen::MatrixXd kernel_cross(const std::vector<double>& times_a,
                             const std::vector<double>& times_b,
                             double gamma_t) {
  if (!(gamma_t > 0.0)) {
    throw std::invalid_argument("kernel_cross: gamma_t must be positive");
  }
  Eigen::MatrixXd out(times_a.size(), times_b.size());
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index s = 0; s < out.cols(); ++s) {
      const double d = times_a[static_cast<size_t>(r)] -
                       times_b[static_cast<size_t>(s)];
      out(r, s) = std::exp(-gamma_t * d * d);
    }
  }
  return out;
}

SmoothedCurve smooth_curve(const FunctionalSample& sample, double gamma_t,
                           double delta_n) {
  validate_sample(sample);
  if (delta_n < 0.0) {
    throw std::invalid_argument("smooth_curve: delta_n must be nonnegative");
  }

  const Eigen::MatrixXd k = kernel_cross(sample.times, sample.times, gamma_t);
  const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
      sample.values.data(), static_cast<Eigen::Index>(sample.values.size()));

  Eigen::MatrixXd system = k;
  if (delta_n > 0.0) {
    // delta is rescaled by lambda_max(K) so the grid is scale-free.
    const double lambda_max = sym_eig(k).values(0);
    system.diagonal().array() += delta_n * lambda_max;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
  SmoothedCurve curve;
  curve.coords = ldlt.solve(v);
  if (delta_n == 0.0) {
    const double residual = (k * curve.coords - v).norm();
    if (!(residual <= 1e-8 * std::max(1.0, v.norm())) ||
        !curve.coords.allFinite()) {
      throw numerical_error("smooth_curve: kernel system is singular; use delta_n > 0");
    }
  }
  if (!curve.coords.allFinite()) {
    throw numerical_error("smooth_curve: solve produced non-finite coordinates");
  }
  curve.times = sample.times;
  curve.gamma_t = gamma_t;
  curve.delta_n = delta_n;
  return curve;
}

QuadratureRule simpson_rule(int l, double u0, double ul) {
  if (l < 2 || l % 2 != 0) {
    throw std::invalid_argument("simpson_rule: l must be an even integer >= 2");
  }
  if (!(ul > u0)) {
    throw std::invalid_argument("simpson_rule: need ul > u0");
  }
  const double h = (ul - u0) / l;
  QuadratureRule rule;
  rule.grid.resize(l + 1);
  rule.weights.resize(l + 1);
  for (int j = 0; j <= l; ++j) {
    rule.grid(j) = u0 + h * j;
    rule.weights(j) = (j == 0 || j == l) ? h / 3.0
                      : (j % 2 == 1)     ? 4.0 * h / 3.0
                                         : 2.0 * h / 3.0;
  }
  rule.grid(l) = ul;
  return rule;
}

Eigen::VectorXd eval_curve(const SmoothedCurve& curve,
                           const std::vector<double>& grid) {
  return kernel_cross(grid, curve.times, curve.gamma_t) * curve.coords;
}

double inner_product_unbalanced(const SmoothedCurve& curve_i,
                                const SmoothedCurve& curve_j,
                                const QuadratureRule& rule) {
  if (curve_i.gamma_t != curve_j.gamma_t) {
    throw std::invalid_argument(
        "inner_product_unbalanced: first-layer bandwidth mismatch");
  }
  const std::vector<double> grid(rule.grid.data(),
                                 rule.grid.data() + rule.grid.size());
  const Eigen::VectorXd ei = eval_curve(curve_i, grid);
  const Eigen::VectorXd ej = eval_curve(curve_j, grid);
  return ei.dot(rule.weights.cwiseProduct(ej));
}

double inner_product_balanced(const Eigen::VectorXd& values_i,
                              const Eigen::VectorXd& values_j,
                              const QuadratureRule& rule) {
  if (values_i.size() != rule.grid.size() ||
      values_j.size() != rule.grid.size()) {
    throw std::invalid_argument("inner_product_balanced: length mismatch");
  }
  return values_i.dot(rule.weights.cwiseProduct(values_j));
}

PairwiseGeometry pairwise_geometry(const Eigen::MatrixXd& inner_products) {
  const Eigen::Index n = inner_products.rows();
  if (n == 0 || inner_products.cols() != n) {
    throw std::invalid_argument("pairwise_geometry: square matrix required");
  }
  const double scale =
      std::max(1.0, inner_products.cwiseAbs().maxCoeff());
  if ((inner_products - inner_products.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * scale) {
    throw std::invalid_argument("pairwise_geometry: matrix not symmetric");
  }

  PairwiseGeometry geo;
  geo.sq_dists.setZero(n, n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double sq = std::max(inner_products(i, i) -
                                     2.0 * inner_products(i, j) +
                                     inner_products(j, j),
                                 0.0);
      geo.sq_dists(i, j) = sq;
      geo.sq_dists(j, i) = sq;
      sum += std::sqrt(sq);
    }
  }
  geo.mean_dist = (n > 1) ? sum / (0.5 * n * (n - 1)) : 0.0;
  return geo;
}

GcvResult gcv_smoothing(
    const std::array<std::vector<FunctionalSample>, 3>& channels,
    double gamma_t, const std::vector<double>& delta_grid) {
  if (delta_grid.empty()) {
    throw std::invalid_argument("gcv_smoothing: empty candidate grid");
  }
  for (double d : delta_grid) {
    if (!(d > 0.0)) {
      throw std::invalid_argument("gcv_smoothing: candidates must be positive");
    }
  }
  const size_t n = channels[0].size();
  if (channels[1].size() != n || channels[2].size() != n) {
    throw std::invalid_argument("gcv_smoothing: channel lengths differ");
  }

  // One eigendecomposition per distinct observation schedule; samples on
  // the same times reuse it across subjects and channels.
  std::map<std::vector<double>, EigenSystem> eig_cache;
  struct Prepared {
    const EigenSystem* eig;
    Eigen::VectorXd w;  // V^T values
    Eigen::Index m;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(3 * n);
  for (const auto& channel : channels) {
    for (const auto& sample : channel) {
      validate_sample(sample);
      auto it = eig_cache.find(sample.times);
      if (it == eig_cache.end()) {
        const Eigen::MatrixXd k =
            kernel_cross(sample.times, sample.times, gamma_t);
        it = eig_cache.emplace(sample.times, sym_eig(k)).first;
      }
      const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(
          sample.values.data(),
          static_cast<Eigen::Index>(sample.values.size()));
      prepared.push_back({&it->second, it->second.vectors.transpose() * v,
                          v.size()});
    }
  }

  GcvResult result;
  result.scores.assign(delta_grid.size(),
                       std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index best_idx = -1;

  for (size_t c = 0; c < delta_grid.size(); ++c) {
    const double delta = delta_grid[c];
    double total = 0.0;
    bool usable = true;
    for (const Prepared& p : prepared) {
      const Eigen::VectorXd& lambda = p.eig->values;
      const double ridge = delta * lambda(0);
      // Residual of the ridge smoother and its effective degrees of
      // freedom, both in the eigenbasis of K.
      double rss = 0.0;
      double trace = 0.0;
      for (Eigen::Index j = 0; j < p.m; ++j) {
        const double shrink = ridge / (lambda(j) + ridge);
        rss += shrink * shrink * p.w(j) * p.w(j);
        trace += lambda(j) / (lambda(j) + ridge);
      }
      const double denom = 1.0 - trace / static_cast<double>(p.m);
      if (!(denom * denom > 1e-24) || !std::isfinite(rss)) {
        usable = false;
        break;
      }
      total += rss / (denom * denom);
    }
    if (!usable) continue;
    result.scores[c] = total;
    if (total < best) {
      best = total;
      best_idx = static_cast<Eigen::Index>(c);
    }
  }

  if (best_idx < 0) {
    throw tuning_error("gcv_smoothing: every candidate was skipped");
  }
  result.selected = delta_grid[static_cast<size_t>(best_idx)];
  return result;
}

}  // namespace fcit
