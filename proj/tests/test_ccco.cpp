#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "fcit/ccco_test.hpp"
#include "fcit/rng.hpp"

using fcit::GramMatrix;

namespace {

GramMatrix gaussian_gram(int n, std::uint64_t key, double gamma = 0.7) {
  fcit::Rng rng(key);
  std::vector<double> pts(static_cast<size_t>(n));
  for (double& p : pts) p = rng.normal();
  Eigen::MatrixXd sq(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = pts[static_cast<size_t>(i)] - pts[static_cast<size_t>(j)];
      sq(i, j) = d * d;
    }
  }
  sq.diagonal().setZero();
  return fcit::rbf_gram(sq, gamma);
}

GramMatrix centered_gaussian(int n, std::uint64_t key, double gamma = 0.7) {
  return fcit::center_gram(gaussian_gram(n, key, gamma));
}

GramMatrix synthetic_centered(const Eigen::MatrixXd& entries) {
  GramMatrix g;
  g.entries = entries;
  g.centered = true;
  return g;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::VectorXd kron_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

// Small synthetic dataset: smooth random curves on a shared grid, with Y
// optionally depending on X.
fcit::TripleDataset synthetic_dataset(int n, int m, std::uint64_t seed,
                                      bool dependent) {
  fcit::TripleDataset data;
  fcit::Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%04d", i);
    data.subject_ids.push_back(buf);

    std::vector<double> times(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
      times[static_cast<size_t>(j)] = static_cast<double>(j) / m;
    }
    const double az = rng.normal(), bz = rng.normal();
    const double ax = rng.normal(), bx = rng.normal();
    const double ay = rng.normal(), by = rng.normal();

    fcit::FunctionalSample fx{buf, times, {}};
    fcit::FunctionalSample fy{buf, times, {}};
    fcit::FunctionalSample fz{buf, times, {}};
    for (double t : times) {
      const double z = az + bz * std::sin(3.0 * t);
      const double x = 2.0 * z + ax + bx * t;
      double y = z + ay + by * std::cos(2.0 * t);
      if (dependent) y += x;
      fz.values.push_back(z);
      fx.values.push_back(x);
      fy.values.push_back(y);
    }
    data.channels[0].push_back(std::move(fx));
    data.channels[1].push_back(std::move(fy));
    data.channels[2].push_back(std::move(fz));
  }
  return data;
}

}  // namespace

TEST_CASE("conjoined_grams") {
  GramMatrix kx = gaussian_gram(5, 1);
  GramMatrix ky = gaussian_gram(5, 2);
  GramMatrix ones;
  ones.entries = Eigen::MatrixXd::Ones(5, 5);

  auto [ddx, ddy] = fcit::conjoined_grams(kx, ky, ones);
  CHECK(ddx.entries.isApprox(kx.entries));
  CHECK(ddy.entries.isApprox(ky.entries));

  GramMatrix kz = gaussian_gram(5, 3);
  auto [cx, cy] = fcit::conjoined_grams(kx, ky, kz);
  CHECK(cx.entries.diagonal().isApprox(Eigen::VectorXd::Ones(5)));
  CHECK(cy.entries.diagonal().isApprox(Eigen::VectorXd::Ones(5)));
  CHECK(cx.entries.isApprox(kx.entries.cwiseProduct(kz.entries)));

  GramMatrix centered = centered_gaussian(5, 4);
  CHECK_THROWS_AS(fcit::conjoined_grams(kx, ky, centered),
                  std::invalid_argument);
}

TEST_CASE("make_r_z closed forms") {
  const int n = 6;
  GramMatrix zero = synthetic_centered(Eigen::MatrixXd::Zero(n, n));
  CHECK(fcit::make_r_z(zero, 0.5, n).isApprox(Eigen::MatrixXd::Identity(n, n),
                                              1e-12));

  // K~ = I with n * eps = 1 gives R = I/2.
  GramMatrix eye = synthetic_centered(Eigen::MatrixXd::Identity(n, n));
  CHECK(fcit::make_r_z(eye, 1.0 / n, n)
            .isApprox(0.5 * Eigen::MatrixXd::Identity(n, n), 1e-12));

  // The two algebraic forms agree on random centered PSD input.
  GramMatrix kz = centered_gaussian(10, 77);
  const double eps = 0.03;
  const Eigen::MatrixXd r = fcit::make_r_z(kz, eps, 10);
  const Eigen::MatrixXd shifted =
      kz.entries + 10.0 * eps * Eigen::MatrixXd::Identity(10, 10);
  const Eigen::MatrixXd alt =
      Eigen::MatrixXd::Identity(10, 10) - kz.entries * shifted.inverse();
  CHECK((r - alt).norm() <= 1e-10 * std::max(1.0, alt.norm()));

  CHECK_THROWS_AS(fcit::make_r_z(kz, 0.0, 10), std::invalid_argument);
  GramMatrix raw = gaussian_gram(10, 78);
  CHECK_THROWS_AS(fcit::make_r_z(raw, 0.1, 10), std::invalid_argument);
}

TEST_CASE("r_z spectrum lies in (0, 1]") {
  for (std::uint64_t key = 1; key <= 4; ++key) {
    const int n = 9;
    GramMatrix kz = centered_gaussian(n, key * 13);
    const Eigen::MatrixXd r = fcit::make_r_z(kz, 0.01 * key, n);
    const fcit::EigenSystem eig = fcit::sym_eig(r);
    CHECK(eig.values(0) <= 1.0 + 1e-10);
    CHECK(eig.values(n - 1) > 0.0);
  }
}

TEST_CASE("conditional_grams") {
  const int n = 7;
  GramMatrix kddx = centered_gaussian(n, 21);
  GramMatrix kddy = centered_gaussian(n, 22);

  fcit::ConditionalGramSet ident = fcit::conditional_grams(
      kddx, kddy, Eigen::MatrixXd::Identity(n, n), 0.1);
  CHECK(ident.k_ddx_given_z.isApprox(kddx.entries, 1e-12));
  CHECK(ident.k_ddy_given_z.isApprox(kddy.entries, 1e-12));

  GramMatrix zero = synthetic_centered(Eigen::MatrixXd::Zero(n, n));
  GramMatrix kz = centered_gaussian(n, 23);
  const Eigen::MatrixXd r = fcit::make_r_z(kz, 0.05, n);
  fcit::ConditionalGramSet nil = fcit::conditional_grams(zero, kddy, r, 0.05);
  CHECK(nil.k_ddx_given_z.cwiseAbs().maxCoeff() < 1e-14);

  // Triple product oracle.
  fcit::ConditionalGramSet cgs = fcit::conditional_grams(kddx, kddy, r, 0.05);
  const Eigen::MatrixXd direct = r * kddx.entries * r;
  CHECK((cgs.k_ddx_given_z - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("test_statistic") {
  const int n = 6;
  fcit::ConditionalGramSet cgs;
  cgs.k_ddx_given_z = Eigen::MatrixXd::Zero(n, n);
  cgs.k_ddy_given_z = Eigen::MatrixXd::Identity(n, n);
  cgs.r_z = Eigen::MatrixXd::Identity(n, n);
  CHECK(fcit::test_statistic(cgs, n) == 0.0);

  cgs.k_ddx_given_z = Eigen::MatrixXd::Identity(n, n);
  CHECK(fcit::test_statistic(cgs, n) == doctest::Approx(1.0));

  CHECK_THROWS_AS(fcit::test_statistic(cgs, 1), std::invalid_argument);
}

TEST_CASE("trace form equals the Frobenius form") {
  for (int n : {5, 12, 50}) {
    GramMatrix kddx = centered_gaussian(n, 100 + static_cast<std::uint64_t>(n));
    GramMatrix kddy = centered_gaussian(n, 200 + static_cast<std::uint64_t>(n));
    GramMatrix kz = centered_gaussian(n, 300 + static_cast<std::uint64_t>(n));
    const Eigen::MatrixXd r = fcit::make_r_z(kz, 0.02, n);
    fcit::ConditionalGramSet cgs = fcit::conditional_grams(kddx, kddy, r, 0.02);
    const double t_trace = fcit::test_statistic(cgs, n);

    // n * || n^-1 K~x^{1/2} R^2 K~y^{1/2} ||_F^2.
    const Eigen::MatrixXd rx = fcit::psd_sqrt(kddx.entries);
    const Eigen::MatrixXd ry = fcit::psd_sqrt(kddy.entries);
    const Eigen::MatrixXd core = rx * r * r * ry / n;
    const double t_frob = n * core.squaredNorm();
    CHECK(t_trace == doctest::Approx(t_frob).epsilon(1e-8));
    CHECK(t_trace >= 0.0);
  }
}

TEST_CASE("null_eigenvalues against explicit constructions") {
  for (int n : {3, 5, 8}) {
    GramMatrix kddx = centered_gaussian(n, 400 + static_cast<std::uint64_t>(n));
    GramMatrix kddy = centered_gaussian(n, 500 + static_cast<std::uint64_t>(n));
    GramMatrix kz = centered_gaussian(n, 600 + static_cast<std::uint64_t>(n));
    const Eigen::MatrixXd r = fcit::make_r_z(kz, 0.05, n);

    const Eigen::VectorXd fast = fcit::null_eigenvalues(kddx, kddy, r, n);
    REQUIRE(fast.size() == n);

    // Oracle 1: explicit n^2 x n matrix L with columns
    // (Lx e_k) kron (Ly e_k) / sqrt(n).
    const Eigen::MatrixXd lx = fcit::psd_sqrt(kddx.entries) * r;
    const Eigen::MatrixXd ly = fcit::psd_sqrt(kddy.entries) * r;
    Eigen::MatrixXd l(n * n, n);
    for (int k = 0; k < n; ++k) {
      l.col(k) = kron_vec(lx.col(k), ly.col(k)) / std::sqrt(double(n));
    }
    const Eigen::VectorXd explicit_vals =
        fcit::sym_eig(l.transpose() * l).values.cwiseMax(0.0);
    for (int k = 0; k < n; ++k) {
      CHECK(fast(k) == doctest::Approx(explicit_vals(k))
                           .epsilon(1e-8)
                           .scale(std::max(1.0, fast(0))));
    }

    // Oracle 2: the raw n^2 x n^2 coordinate matrix
    // (1/n) sum_k [(R e_k) kron (R e_k)][...]^T (K~x kron K~y),
    // nonsymmetric but sharing its nonzero spectrum.
    Eigen::MatrixXd w(n * n, n);
    for (int k = 0; k < n; ++k) {
      w.col(k) = kron_vec(r.col(k), r.col(k));
    }
    const Eigen::MatrixXd raw = w * w.transpose() *
                                kron(kddx.entries, kddy.entries) /
                                static_cast<double>(n);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(raw);
    REQUIRE(solver.info() == Eigen::Success);
    std::vector<double> raw_vals(static_cast<size_t>(n * n));
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
      raw_vals[static_cast<size_t>(k)] = solver.eigenvalues()(k).real();
    }
    std::sort(raw_vals.rbegin(), raw_vals.rend());
    for (int k = 0; k < n; ++k) {
      CHECK(fast(k) == doctest::Approx(raw_vals[static_cast<size_t>(k)])
                           .epsilon(1e-8)
                           .scale(std::max(1.0, fast(0))));
    }

    // Trace identity of the Hadamard form.
    const Eigen::MatrixXd cx = r * kddx.entries * r;
    const Eigen::MatrixXd cy = r * kddy.entries * r;
    double diag_sum = 0.0;
    for (int k = 0; k < n; ++k) diag_sum += cx(k, k) * cy(k, k);
    diag_sum /= n;
    CHECK(fast.sum() == doctest::Approx(diag_sum).epsilon(1e-10));
  }
}

TEST_CASE("null_eigenvalues zero case") {
  const int n = 4;
  GramMatrix zero = synthetic_centered(Eigen::MatrixXd::Zero(n, n));
  GramMatrix kz = centered_gaussian(n, 9);
  const Eigen::MatrixXd r = fcit::make_r_z(kz, 0.1, n);
  const Eigen::VectorXd vals = fcit::null_eigenvalues(zero, zero, r, n);
  CHECK(vals.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gcv_epsilon") {
  const int n = 8;
  GramMatrix kx = gaussian_gram(n, 31);
  GramMatrix ky = gaussian_gram(n, 32);
  GramMatrix kz_c = centered_gaussian(n, 33);

  fcit::GcvResult single = fcit::gcv_epsilon(kx, ky, kz_c, {0.01});
  CHECK(single.selected == 0.01);

  // Large-epsilon plateau at ||K~_XY||_F^2.
  const Eigen::MatrixXd k_xy =
      fcit::center_gram(fcit::hadamard(kx, ky)).entries;
  fcit::GcvResult plateau = fcit::gcv_epsilon(kx, ky, kz_c, {1e9});
  CHECK(plateau.scores[0] ==
        doctest::Approx(k_xy.squaredNorm()).epsilon(1e-6));

  // Brute-force oracle over a small grid.
  const std::vector<double> grid = {1e-4, 1e-3, 1e-2, 1e-1};
  fcit::GcvResult result = fcit::gcv_epsilon(kx, ky, kz_c, grid);
  const double lmax = fcit::sym_eig(kz_c.entries).values(0);
  std::vector<double> oracle;
  for (double eps : grid) {
    const Eigen::MatrixXd shifted =
        kz_c.entries +
        n * eps * lmax * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd smoother = kz_c.entries * shifted.inverse();
    const double num = (k_xy - smoother * k_xy).squaredNorm();
    const double denom = 1.0 - smoother.trace() / n;
    oracle.push_back(num / (denom * denom));
  }
  size_t best = 0;
  for (size_t c = 1; c < grid.size(); ++c) {
    if (oracle[c] < oracle[best]) best = c;
  }
  CHECK(result.selected == grid[best]);
  for (size_t c = 0; c < grid.size(); ++c) {
    CHECK(result.scores[c] == doctest::Approx(oracle[c]).epsilon(1e-8));
  }

  CHECK_THROWS_AS(fcit::gcv_epsilon(kx, ky, kz_c, {}), std::invalid_argument);
  CHECK_THROWS_AS(fcit::gcv_epsilon(kx, ky, kz_c, {-0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fcit::gcv_epsilon(kx, ky, kx, {0.01}),
                  std::invalid_argument);  // uncentered K_Z
}

TEST_CASE("run_test on a balanced synthetic dataset") {
  fcit::TripleDataset data = synthetic_dataset(20, 20, 4242, false);
  fcit::PipelineConfig config;
  config.draws = 20000;
  config.seed = 7;

  fcit::TestResult result = fcit::run_test(data, config);
  CHECK(result.n == 20);
  CHECK(result.statistic >= 0.0);
  CHECK(result.p_value >= 0.0);
  CHECK(result.p_value <= 1.0);
  CHECK(result.diagnostics.at("balanced") == 1.0);
  CHECK(result.eigenvalues.size() == 20);
  CHECK(result.eigenvalues(0) >= result.eigenvalues(19));
  CHECK(result.eigenvalues.sum() ==
        doctest::Approx(result.diagnostics.at("eigen_sum")));

  // Determinism.
  fcit::TestResult again = fcit::run_test(data, config);
  CHECK(again.statistic == result.statistic);
  CHECK(again.p_value == result.p_value);
}

TEST_CASE("run_test is invariant to subject order and X/Y swap") {
  fcit::TripleDataset data = synthetic_dataset(15, 20, 99, true);
  fcit::PipelineConfig config;
  config.draws = 20000;
  config.seed = 3;
  const fcit::TestResult base = fcit::run_test(data, config);

  // Same permutation on ids and all channels.
  fcit::TripleDataset shuffled = data;
  std::vector<int> perm(15);
  for (int i = 0; i < 15; ++i) perm[static_cast<size_t>(i)] = (i * 7 + 3) % 15;
  for (int i = 0; i < 15; ++i) {
    const int src = perm[static_cast<size_t>(i)];
    shuffled.subject_ids[static_cast<size_t>(i)] =
        data.subject_ids[static_cast<size_t>(src)];
    for (int c = 0; c < 3; ++c) {
      shuffled.channels[static_cast<size_t>(c)][static_cast<size_t>(i)] =
          data.channels[static_cast<size_t>(c)][static_cast<size_t>(src)];
    }
  }
  const fcit::TestResult permuted = fcit::run_test(shuffled, config);
  CHECK(permuted.statistic ==
        doctest::Approx(base.statistic).epsilon(1e-8));
  CHECK((permuted.eigenvalues - base.eigenvalues).cwiseAbs().maxCoeff() <=
        1e-8 * std::max(1.0, base.eigenvalues(0)));
  CHECK(permuted.p_value == doctest::Approx(base.p_value).epsilon(1e-4));

  // Swapping the X and Y channels leaves the statistic unchanged.
  fcit::TripleDataset swapped = data;
  std::swap(swapped.channels[0], swapped.channels[1]);
  const fcit::TestResult mirror = fcit::run_test(swapped, config);
  CHECK(mirror.statistic == doctest::Approx(base.statistic).epsilon(1e-8));
  CHECK((mirror.eigenvalues - base.eigenvalues).cwiseAbs().maxCoeff() <=
        1e-8 * std::max(1.0, base.eigenvalues(0)));
}

TEST_CASE("run_test degenerate channel") {
  fcit::TripleDataset data = synthetic_dataset(8, 10, 5, false);
  // Make Z constant across subjects: identical curves have zero distances.
  for (auto& sample : data.channels[2]) {
    std::fill(sample.values.begin(), sample.values.end(), 1.0);
  }
  fcit::PipelineConfig config;
  config.draws = 2000;
  CHECK_THROWS_AS(fcit::run_test(data, config), fcit::degenerate_data_error);
}

TEST_CASE("singleton observation schedules are accepted and flagged") {
  fcit::TripleDataset data = synthetic_dataset(10, 12, 8, false);
  // One subject observed at a single time point in every channel.
  for (int c = 0; c < 3; ++c) {
    auto& sample = data.channels[static_cast<size_t>(c)][4];
    sample.times = {0.5};
    sample.values = {sample.values[6]};
  }
  fcit::PipelineConfig config;
  config.draws = 2000;
  const fcit::TestResult result = fcit::run_test(data, config);
  CHECK(result.diagnostics.at("balanced") == 0.0);
  CHECK(result.diagnostics.at("singleton_subjects") == 3.0);
  CHECK(result.p_value >= 0.0);
  CHECK(result.p_value <= 1.0);
}

TEST_CASE("run_test needs three subjects") {
  fcit::TripleDataset data = synthetic_dataset(2, 10, 5, false);
  fcit::PipelineConfig config;
  CHECK_THROWS_AS(fcit::run_test(data, config), std::invalid_argument);
}

TEST_CASE("forced balanced mode requires a shared grid") {
  fcit::TripleDataset data = synthetic_dataset(6, 10, 5, false);
  data.channels[0][0].times[3] += 1e-3;  // break the shared grid
  fcit::PipelineConfig config;
  config.balanced = fcit::BalancedMode::balanced;
  CHECK_THROWS_AS(fcit::run_test(data, config), std::invalid_argument);
}
