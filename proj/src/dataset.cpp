#include "fcit/dataset.hpp"

#include <cmath>

namespace fcit {

void TripleDataset::validate() const {
  const size_t n_subjects = subject_ids.size();
  for (const auto& channel : channels) {
    if (channel.size() != n_subjects) {
      throw std::invalid_argument(
          "TripleDataset: channel length does not match subject count");
    }
  }
  for (size_t c = 0; c < channels.size(); ++c) {
    for (size_t i = 0; i < n_subjects; ++i) {
      const FunctionalSample& s = channels[c][i];
      if (s.subject_id != subject_ids[i]) {
        throw std::invalid_argument("TripleDataset: misaligned subject '" +
                                    s.subject_id + "'");
      }
      validate_sample(s);
    }
  }
}

bool TripleDataset::common_grid(std::vector<double>* grid_out) const {
  if (subject_ids.empty()) return false;
  const std::vector<double>& ref = channels[0][0].times;
  for (const auto& channel : channels) {
    for (const auto& sample : channel) {
      if (sample.times != ref) return false;
    }
  }
  if (grid_out) *grid_out = ref;
  return true;
}

bool equally_spaced(const std::vector<double>& times, double rel_tol) {
  if (times.size() < 2) return false;
  const double span = times.back() - times.front();
  if (!(span > 0.0)) return false;
  const double h = span / static_cast<double>(times.size() - 1);
  for (size_t j = 1; j < times.size(); ++j) {
    if (std::abs(times[j] - times[j - 1] - h) > rel_tol * span) return false;
  }
  return true;
}

}  // namespace fcit
