#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "vip/random.hpp"
#include "vip/tensor.hpp"

namespace vip::test {

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "vipdect_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

template <typename Scalar = float, typename Domain = SinogramDomain>
Tensor<Scalar, Domain> random_tensor(Index c, Index r, Index k, Rng& rng, double scale = 1.0) {
  Tensor<Scalar, Domain> t(c, r, k);
  fill_normal(t, rng);
  t.values() *= static_cast<Scalar>(scale);
  return t;
}

inline double rel_diff(double a, double b) {
  const double denom = std::max(std::abs(a), std::abs(b));
  return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
}

}  // namespace vip::test
