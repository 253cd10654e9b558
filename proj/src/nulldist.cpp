#include "fcit/nulldist.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "fcit/rng.hpp"

namespace fcit {

namespace {

void validate(const WeightedChiSquare& dist) {
  if (dist.draws < 1000) {
    throw std::invalid_argument("WeightedChiSquare: draws must be >= 1000");
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double w : dist.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("WeightedChiSquare: weights must be positive");
    }
    if (w > prev) {
      throw std::invalid_argument("WeightedChiSquare: weights must be descending");
    }
    prev = w;
  }
}

}  // namespace

double pvalue_mc(const WeightedChiSquare& dist, double t_obs) {
  if (!(t_obs >= 0.0)) {
    throw std::invalid_argument("pvalue_mc: t_obs must be nonnegative");
  }
  validate(dist);
  if (dist.weights.empty()) {
    return t_obs == 0.0 ? 1.0 : 0.0;
  }

  long count = 0;
  for (long i = 0; i < dist.draws; ++i) {
    Rng rng(stream_key(dist.seed, static_cast<std::uint64_t>(i)));
    double sum = 0.0;
    for (double w : dist.weights) {
      const double z = rng.normal();
      sum += w * z * z;
    }
    if (sum >= t_obs) ++count;
  }
  return static_cast<double>(count + 1) / static_cast<double>(dist.draws + 1);
}

double pvalue_satterthwaite(const WeightedChiSquare& dist, double t_obs) {
  if (!(t_obs >= 0.0)) {
    throw std::invalid_argument("pvalue_satterthwaite: t_obs must be nonnegative");
  }
  validate(dist);
  if (dist.weights.empty()) {
    return t_obs == 0.0 ? 1.0 : 0.0;
  }

  double s1 = 0.0;
  double s2 = 0.0;
  for (double w : dist.weights) {
    s1 += w;
    s2 += w * w;
  }
  const double scale = s2 / s1;           // a
  const double dof = (s1 * s1) / s2;      // d
  return boost::math::gamma_q(dof / 2.0, t_obs / (2.0 * scale));
}

}  // namespace fcit
