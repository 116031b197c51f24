#pragma once

#include <cstdint>

#include "vip/random.hpp"
#include "vip/tensor.hpp"

namespace vip {

/// Binary exchange pattern between the high- and low-energy channels. An
/// entry of 1 keeps a channel's own value at that location, 0 swaps in the
/// other channel's value. Regenerating with the same (dims, zeta, mean,
/// stddev, seed) reproduces the mask bit for bit.
struct VirtualMask {
  Plane<std::uint8_t> m;
  double zeta = 0.0;
  std::uint64_t seed = 0;

  Index rows() const { return m.rows(); }
  Index cols() const { return m.cols(); }
  double ones_fraction() const;
};

/// Threshold parameters of the mask generator. Each entry is 1 iff a draw
/// from N(mean, stddev^2) is <= zeta.
struct MaskParams {
  double zeta = 2.81;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Entries are drawn in row-major order from rng.
VirtualMask generate_mask(Index rows, Index cols, const MaskParams& params, Rng& rng);

/// Seeds a private generator; the seed is recorded on the mask.
VirtualMask generate_mask(Index rows, Index cols, const MaskParams& params, std::uint64_t seed);

namespace detail {

template <typename Scalar, typename Domain>
void check_mask(const Tensor<Scalar, Domain>& x, const VirtualMask& mask, const char* what) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ShapeError(std::string(what) + ": mask is " + std::to_string(mask.rows()) + "x" +
                     std::to_string(mask.cols()) + ", tensor is " + x.shape_string());
  }
}

}  // namespace detail

/// Cross-energy transform of a [H, L] pair into the 6-channel stack
/// [H, L, HL, L, H, LH] with HL = H*M + L*(1-M) and LH = L*M + H*(1-M).
/// Implemented as pure selection, so no value is ever re-rounded.
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> vct(const Tensor<Scalar, Domain>& x2, const VirtualMask& mask) {
  if (x2.channels() != 2) {
    throw ShapeError("vct: expects 2 channels, got " + std::to_string(x2.channels()));
  }
  detail::check_mask(x2, mask, "vct");
  Tensor<Scalar, Domain> out(6, x2.rows(), x2.cols());
  const auto h = x2.channel(0);
  const auto l = x2.channel(1);
  const auto keep = mask.m != 0;
  out.channel(0) = h;
  out.channel(1) = l;
  out.channel(2) = keep.select(h, l);
  out.channel(3) = l;
  out.channel(4) = h;
  out.channel(5) = keep.select(l, h);
  return out;
}

/// Inverse of vct under the same mask, read from channels 2 (HL) and 5 (LH):
/// H' = LH*(1-M) + HL*M, L' = HL*(1-M) + LH*M.
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> ivct(const Tensor<Scalar, Domain>& x6, const VirtualMask& mask) {
  if (x6.channels() != 6) {
    throw ShapeError("ivct: expects 6 channels, got " + std::to_string(x6.channels()));
  }
  detail::check_mask(x6, mask, "ivct");
  Tensor<Scalar, Domain> out(2, x6.rows(), x6.cols());
  const auto hl = x6.channel(2);
  const auto lh = x6.channel(5);
  const auto keep = mask.m != 0;
  out.channel(0) = keep.select(hl, lh);
  out.channel(1) = keep.select(lh, hl);
  return out;
}

}  // namespace vip
