#pragma once

#include <array>
#include <cmath>
#include <random>

#include "vip/tensor.hpp"

namespace vip {

/// Subband order used everywhere: ll, lh (low along views, high along
/// detectors), hl (high along views, low along detectors), hh.
enum class Band { ll = 0, lh = 1, hl = 2, hh = 3 };

inline const char* band_name(Band b) {
  constexpr std::array<const char*, 4> names = {"ll", "lh", "hl", "hh"};
  return names[static_cast<std::size_t>(b)];
}

inline constexpr std::array<Band, 3> kHighBands = {Band::lh, Band::hl, Band::hh};

/// Single-level orthonormal Haar decomposition. Odd input dims are padded by
/// repeating the last row/column; the flags let idwt2 drop the pad again.
template <typename T>
struct WaveletBands {
  T ll, lh, hl, hh;
  bool padded_rows = false;
  bool padded_cols = false;

  T& band(Band b) {
    switch (b) {
      case Band::ll: return ll;
      case Band::lh: return lh;
      case Band::hl: return hl;
      default: return hh;
    }
  }
  const T& band(Band b) const { return const_cast<WaveletBands*>(this)->band(b); }
};

template <typename Scalar, typename Domain>
WaveletBands<Tensor<Scalar, Domain>> dwt2(const Tensor<Scalar, Domain>& x) {
  using T = Tensor<Scalar, Domain>;
  if (x.empty()) {
    throw ShapeError("dwt2: empty tensor");
  }
  const Index rows = x.rows();
  const Index cols = x.cols();
  const Index hr = (rows + 1) / 2;
  const Index hc = (cols + 1) / 2;
  WaveletBands<T> out{T(x.channels(), hr, hc), T(x.channels(), hr, hc), T(x.channels(), hr, hc),
                      T(x.channels(), hr, hc), rows % 2 != 0, cols % 2 != 0};
  const Scalar half(0.5);
  for (Index c = 0; c < x.channels(); ++c) {
    const auto in = x.channel(c);
    auto ll = out.ll.channel(c);
    auto lh = out.lh.channel(c);
    auto hl = out.hl.channel(c);
    auto hh = out.hh.channel(c);
    for (Index i = 0; i < hr; ++i) {
      const Index r0 = 2 * i;
      const Index r1 = std::min(r0 + 1, rows - 1);
      for (Index j = 0; j < hc; ++j) {
        const Index k0 = 2 * j;
        const Index k1 = std::min(k0 + 1, cols - 1);
        const Scalar a = in(r0, k0);
        const Scalar b = in(r0, k1);
        const Scalar cc = in(r1, k0);
        const Scalar d = in(r1, k1);
        ll(i, j) = half * ((a + b) + (cc + d));
        lh(i, j) = half * ((a - b) + (cc - d));
        hl(i, j) = half * ((a + b) - (cc + d));
        hh(i, j) = half * ((a - b) - (cc - d));
      }
    }
  }
  return out;
}

template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> idwt2(const WaveletBands<Tensor<Scalar, Domain>>& bands) {
  const auto& ll = bands.ll;
  for (Band b : kHighBands) {
    if (!bands.band(b).same_shape(ll)) {
      throw ShapeError(std::string("idwt2: band ") + band_name(b) + " is " +
                       bands.band(b).shape_string() + ", ll is " + ll.shape_string());
    }
  }
  const Index rows = 2 * ll.rows() - (bands.padded_rows ? 1 : 0);
  const Index cols = 2 * ll.cols() - (bands.padded_cols ? 1 : 0);
  if (rows < 1 || cols < 1) {
    throw ShapeError("idwt2: empty bands");
  }
  Tensor<Scalar, Domain> out(ll.channels(), rows, cols);
  const Scalar half(0.5);
  for (Index c = 0; c < ll.channels(); ++c) {
    const auto a_ll = bands.ll.channel(c);
    const auto a_lh = bands.lh.channel(c);
    const auto a_hl = bands.hl.channel(c);
    const auto a_hh = bands.hh.channel(c);
    auto o = out.channel(c);
    for (Index i = 0; i < ll.rows(); ++i) {
      for (Index j = 0; j < ll.cols(); ++j) {
        const Scalar s = a_ll(i, j);
        const Scalar t = a_lh(i, j);
        const Scalar u = a_hl(i, j);
        const Scalar v = a_hh(i, j);
        const Index r0 = 2 * i;
        const Index k0 = 2 * j;
        o(r0, k0) = half * ((s + t) + (u + v));
        if (k0 + 1 < cols) o(r0, k0 + 1) = half * ((s - t) + (u - v));
        if (r0 + 1 < rows) {
          o(r0 + 1, k0) = half * ((s + t) - (u + v));
          if (k0 + 1 < cols) o(r0 + 1, k0 + 1) = half * ((s - t) - (u - v));
        }
      }
    }
  }
  return out;
}

/// Draws one of {lh, hl, hh} uniformly and returns it together with the
/// matching [high-energy, low-energy] band pair as a 2-channel tensor.
template <typename Scalar, typename Domain, typename Rng>
std::pair<Band, Tensor<Scalar, Domain>> select_random_highfreq(
    const WaveletBands<Tensor<Scalar, Domain>>& bands_high,
    const WaveletBands<Tensor<Scalar, Domain>>& bands_low, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const Band b = kHighBands[static_cast<std::size_t>(pick(rng))];
  const auto& h = bands_high.band(b);
  const auto& l = bands_low.band(b);
  if (h.channels() != 1 || l.channels() != 1 || h.rows() != l.rows() || h.cols() != l.cols()) {
    throw ShapeError("select_random_highfreq: expects matching single-channel H and L bands");
  }
  return {b, stack_channels({h, l})};
}

/// Convenience overload for a 2-channel [H, L] decomposition.
template <typename Scalar, typename Domain, typename Rng>
std::pair<Band, Tensor<Scalar, Domain>> select_random_highfreq(
    const WaveletBands<Tensor<Scalar, Domain>>& bands_hl, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 2);
  const Band b = kHighBands[static_cast<std::size_t>(pick(rng))];
  if (bands_hl.ll.channels() != 2) {
    throw ShapeError("select_random_highfreq: expects a 2-channel decomposition");
  }
  return {b, bands_hl.band(b)};
}

}  // namespace vip
