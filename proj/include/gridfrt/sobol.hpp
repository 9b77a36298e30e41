#pragma once

// Sobol low-discrepancy sequence (Gray-code ordering, Joe-Kuo direction
// numbers, unscrambled). Index 0 is the all-zeros point and is skipped by
// default, so the first returned 1-D point is 0.5.

#include <array>
#include <cstdint>
#include <vector>

namespace gridfrt::perturb {

class SobolSampler {
 public:
  static constexpr int kMaxDimension = 8;
  static constexpr int kBits = 32;

  /// Throws std::invalid_argument for dimension outside [1, kMaxDimension].
  explicit SobolSampler(int dimension, std::uint64_t first_index = 1);

  [[nodiscard]] int dimension() const { return dim_; }
  [[nodiscard]] std::uint64_t index() const { return index_; }
  void seek(std::uint64_t index) { index_ = index; }

  /// Point at the current index, then advances.
  std::vector<double> next();
  /// Random access: point with the given sequence index.
  [[nodiscard]] std::vector<double> point(std::uint64_t index) const;

 private:
  int dim_;
  std::uint64_t index_;
  std::vector<std::array<std::uint32_t, kBits>> v_;  // direction numbers per dimension
};

}  // namespace gridfrt::perturb
