#include "vip/vct.hpp"

#include <cmath>

namespace vip {

double VirtualMask::ones_fraction() const {
  if (m.size() == 0) {
    return 0.0;
  }
  return static_cast<double>((m != 0).count()) / static_cast<double>(m.size());
}

VirtualMask generate_mask(Index rows, Index cols, const MaskParams& params, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("generate_mask: dims must be >= 1, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  if (!std::isfinite(params.zeta) || !std::isfinite(params.mean) ||
      !std::isfinite(params.stddev) || params.stddev < 0.0) {
    throw ArgumentError("generate_mask: zeta, mean and stddev must be finite, stddev >= 0");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  VirtualMask mask;
  mask.zeta = params.zeta;
  mask.m.resize(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double x = params.mean + params.stddev * normal(rng);
      mask.m(r, c) = x <= params.zeta ? 1 : 0;
    }
  }
  return mask;
}

VirtualMask generate_mask(Index rows, Index cols, const MaskParams& params, std::uint64_t seed) {
  Rng rng(seed);
  VirtualMask mask = generate_mask(rows, cols, params, rng);
  mask.seed = seed;
  return mask;
}

}  // namespace vip
