#pragma once

#include <cstdint>
#include <vector>

#include "fcit/errors.hpp"

namespace fcit {

/// Weighted chi-square law sum_k w_k Z_k^2 with independent standard
/// normal Z_k, evaluated by seeded Monte Carlo. Weights are positive and
/// sorted descending; draws >= 1000.
struct WeightedChiSquare {
  std::vector<double> weights;
  long draws = 100000;
  std::uint64_t seed = 12345;
};

/// Upper tail P(sum w_k Z_k^2 >= t_obs) estimated from `draws` indexed
/// Monte Carlo samples, with the (1 + count)/(draws + 1) correction so the
/// result is never exactly zero. Draw i is fully determined by (seed, i),
/// so batches may be evaluated in any order or concurrently.
double pvalue_mc(const WeightedChiSquare& dist, double t_obs);

/// Moment-matched a*chisq(d) tail with a = sum w^2 / sum w and
/// d = (sum w)^2 / sum w^2; exact for equal weights.
double pvalue_satterthwaite(const WeightedChiSquare& dist, double t_obs);

}  // namespace fcit
