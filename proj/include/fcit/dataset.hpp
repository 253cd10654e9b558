#pragma once

#include <array>
#include <string>
#include <vector>

#include "fcit/smoothing.hpp"

namespace fcit {

enum class Channel { X = 0, Y = 1, Z = 2 };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::X: return "X";
    case Channel::Y: return "Y";
    default: return "Z";
  }
}

/// Aligned X/Y/Z functional samples over n subjects. channels[c][i]
/// belongs to subject_ids[i]; subjects are kept in lexicographic id order
/// so downstream Gram matrices have a pinned row order.
struct TripleDataset {
  std::vector<std::string> subject_ids;
  std::array<std::vector<FunctionalSample>, 3> channels;

  int n() const { return static_cast<int>(subject_ids.size()); }

  /// Throws std::invalid_argument when alignment or sample invariants fail.
  void validate() const;

  /// True when every sample of every channel shares one identical time
  /// grid; the grid is copied to *grid_out when given.
  bool common_grid(std::vector<double>* grid_out = nullptr) const;
};

/// True when the times are equally spaced within a relative tolerance.
bool equally_spaced(const std::vector<double>& times, double rel_tol = 1e-8);

}  // namespace fcit
