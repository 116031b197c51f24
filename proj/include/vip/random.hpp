#pragma once

#include <random>

#include "vip/tensor.hpp"

namespace vip {

/// The single generator type used across the library. All randomness flows
/// through caller-owned instances so draw order alone fixes the results.
using Rng = std::mt19937_64;

/// Fills t with independent N(0, 1) draws in storage order.
template <typename Scalar, typename Domain>
void fill_normal(Tensor<Scalar, Domain>& t, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < t.size(); ++i) {
    t.values()[i] = static_cast<Scalar>(normal(rng));
  }
}

template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> normal_like(const Tensor<Scalar, Domain>& shape, Rng& rng) {
  auto z = Tensor<Scalar, Domain>::zeros_like(shape);
  fill_normal(z, rng);
  return z;
}

}  // namespace vip
