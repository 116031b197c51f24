#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "vip/vct.hpp"

using namespace vip;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

VirtualMask constant_mask(Index rows, Index cols, std::uint8_t v) {
  VirtualMask m;
  m.m = Plane<std::uint8_t>::Constant(rows, cols, v);
  return m;
}

}  // namespace

TEST_CASE("mask thresholds") {
  Rng rng(1);
  CHECK(generate_mask(40, 50, {10.0}, rng).ones_fraction() == 1.0);
  CHECK(generate_mask(40, 50, {-10.0}, rng).ones_fraction() == 0.0);
  const auto m = generate_mask(7, 9, {0.3}, rng);
  CHECK(((m.m == 0) || (m.m == 1)).all());
}

TEST_CASE("mask ones fraction matches the normal CDF") {
  const auto m = generate_mask(1000, 1000, MaskParams{}, std::uint64_t{2024});
  CHECK(std::abs(m.ones_fraction() - normal_cdf(2.81)) < 0.001);
  const auto half = generate_mask(500, 500, {0.0}, std::uint64_t{7});
  CHECK(std::abs(half.ones_fraction() - 0.5) < 0.005);
  // Shifted and scaled draws: P(mu + s z <= zeta) = Phi((zeta - mu) / s).
  const auto shifted = generate_mask(500, 500, {1.0, 0.5, 2.0}, std::uint64_t{8});
  CHECK(std::abs(shifted.ones_fraction() - normal_cdf(0.25)) < 0.005);
}

TEST_CASE("mask generation is reproducible") {
  const auto a = generate_mask(30, 20, {0.5}, std::uint64_t{42});
  const auto b = generate_mask(30, 20, {0.5}, std::uint64_t{42});
  CHECK((a.m == b.m).all());
  CHECK(a.seed == 42);
  const auto c = generate_mask(30, 20, {0.5}, std::uint64_t{43});
  CHECK(!(a.m == c.m).all());
  CHECK_THROWS_AS(generate_mask(0, 5, {}, std::uint64_t{1}), ShapeError);
  CHECK_THROWS_AS(generate_mask(5, 5, {std::nan("")}, std::uint64_t{1}), ArgumentError);
}

TEST_CASE("vct channel layout for constant masks") {
  Rng rng(3);
  const auto x = test::random_tensor(2, 5, 4, rng);
  const auto h = slice_channels(x, 0, 1);
  const auto l = slice_channels(x, 1, 1);
  CHECK(vct(x, constant_mask(5, 4, 1)) == stack_channels({h, l, h, l, h, l}));
  CHECK(vct(x, constant_mask(5, 4, 0)) == stack_channels({h, l, l, l, h, h}));
  const auto ones = ivct(vct(x, constant_mask(5, 4, 1)), constant_mask(5, 4, 1));
  CHECK(ones == x);
}

TEST_CASE("vct exchanges values and never mixes them") {
  Rng rng(4);
  const auto x = test::random_tensor(2, 12, 10, rng);
  const auto m = generate_mask(12, 10, {0.0}, rng);
  const auto x6 = vct(x, m);
  for (Index r = 0; r < 12; ++r) {
    for (Index c = 0; c < 10; ++c) {
      const float h = x(0, r, c);
      const float l = x(1, r, c);
      const float hl = x6(2, r, c);
      const float lh = x6(5, r, c);
      CHECK((hl == h || hl == l));
      CHECK(((hl == h && lh == l) || (hl == l && lh == h)));
      CHECK(hl == (m.m(r, c) ? h : l));
    }
  }
}

TEST_CASE("ivct inverts vct bit-exactly") {
  Rng rng(5);
  std::uniform_real_distribution<double> zeta(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = test::random_tensor(2, 9, 7, rng, 100.0);
    const auto m = generate_mask(9, 7, {zeta(rng)}, rng);
    CHECK(ivct(vct(x, m), m) == x);
  }
}

TEST_CASE("ivct with the complement mask swaps where masks disagree") {
  Rng rng(6);
  const auto x = test::random_tensor(2, 8, 8, rng);
  const auto m = generate_mask(8, 8, {0.0}, rng);
  VirtualMask comp = m;
  comp.m = 1 - m.m;
  const auto wrong = ivct(vct(x, m), comp);
  for (Index r = 0; r < 8; ++r) {
    for (Index c = 0; c < 8; ++c) {
      CHECK(wrong(0, r, c) == x(1, r, c));
      CHECK(wrong(1, r, c) == x(0, r, c));
    }
  }
}

TEST_CASE("vct shape errors") {
  const auto m = constant_mask(4, 4, 1);
  CHECK_THROWS_AS(vct(SinogramTensor(3, 4, 4), m), ShapeError);
  CHECK_THROWS_AS(vct(SinogramTensor(2, 4, 5), m), ShapeError);
  CHECK_THROWS_AS(ivct(SinogramTensor(2, 4, 4), m), ShapeError);
  CHECK_THROWS_AS(ivct(SinogramTensor(6, 5, 4), m), ShapeError);
}
