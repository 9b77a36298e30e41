#include "gridfrt/sobol.hpp"

#include <stdexcept>
#include <string>

namespace gridfrt::perturb {

namespace {

struct DirectionInit {
  int s;
  std::uint32_t a;
  std::array<std::uint32_t, 5> m;
};

// new-joe-kuo-6.21201, dimensions 2..8.
constexpr std::array<DirectionInit, SobolSampler::kMaxDimension - 1> kTable{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

}  // namespace

SobolSampler::SobolSampler(int dimension, std::uint64_t first_index) : dim_(dimension), index_(first_index) {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw std::invalid_argument("Sobol dimension " + std::to_string(dimension) + " outside supported range 1.." +
                                std::to_string(kMaxDimension));
  }
  v_.resize(dim_);
  for (int k = 0; k < kBits; ++k) v_[0][k] = 1u << (kBits - 1 - k);
  for (int d = 1; d < dim_; ++d) {
    const auto& init = kTable[d - 1];
    std::array<std::uint32_t, kBits> m{};
    for (int k = 0; k < init.s; ++k) m[k] = init.m[k];
    for (int k = init.s; k < kBits; ++k) {
      std::uint32_t mk = m[k - init.s] ^ (m[k - init.s] << init.s);
      for (int j = 1; j < init.s; ++j) {
        if ((init.a >> (init.s - 1 - j)) & 1u) mk ^= m[k - j] << j;
      }
      m[k] = mk;
    }
    for (int k = 0; k < kBits; ++k) v_[d][k] = m[k] << (kBits - 1 - k);
  }
}

std::vector<double> SobolSampler::point(std::uint64_t index) const {
  if (index >> kBits) throw std::out_of_range("Sobol index exceeds 2^32");
  const std::uint64_t gray = index ^ (index >> 1);
  std::vector<double> out(dim_);
  for (int d = 0; d < dim_; ++d) {
    std::uint32_t x = 0;
    for (int k = 0; k < kBits; ++k) {
      if ((gray >> k) & 1u) x ^= v_[d][k];
    }
    out[d] = static_cast<double>(x) / 4294967296.0;
  }
  return out;
}

std::vector<double> SobolSampler::next() { return point(index_++); }

}  // namespace gridfrt::perturb
