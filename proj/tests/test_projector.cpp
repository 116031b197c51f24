#include "doctest.h"

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "vip/metrics.hpp"
#include "vip/phantom.hpp"
#include "vip/projector.hpp"

using namespace vip;

namespace {

// Dense sampling of the line integral: walk the ray from source to detector
// in steps of step_fraction * pixel and sum value * step.
double march(const ImageTensor& img, Index channel, const FanGeometry& g, Index view, Index bin,
             double step_fraction = 0.01) {
  const double beta = 2.0 * std::numbers::pi * view / g.n_views;
  const double u = (bin - 0.5 * (g.n_detectors - 1)) * g.detector_width / g.n_detectors;
  const double sx = g.src_to_center * std::cos(beta);
  const double sy = g.src_to_center * std::sin(beta);
  const double tx = -g.det_to_center * std::cos(beta) - u * std::sin(beta);
  const double ty = -g.det_to_center * std::sin(beta) + u * std::cos(beta);
  const double len = std::hypot(tx - sx, ty - sy);
  const double step = step_fraction * g.pixel_size;
  const auto n_steps = static_cast<Index>(std::ceil(len / step));
  const double h = 0.5 * g.image_size * g.pixel_size;
  double sum = 0.0;
  for (Index k = 0; k < n_steps; ++k) {
    const double a = (k + 0.5) / n_steps;
    const double x = sx + a * (tx - sx);
    const double y = sy + a * (ty - sy);
    if (std::abs(x) >= h || std::abs(y) >= h) continue;
    const auto col = static_cast<Index>((x + h) / g.pixel_size);
    const auto row = static_cast<Index>((h - y) / g.pixel_size);
    sum += img(channel, row, col) * (len / n_steps);
  }
  return sum;
}

FanGeometry small_geometry() {
  FanGeometry g;
  g.image_size = 32;
  g.pixel_size = 0.6;
  g.n_views = 60;
  return g;
}

}  // namespace

TEST_CASE("default geometry is valid and covers the image") {
  FanGeometry g;
  CHECK_NOTHROW(g.validate());
  CHECK(g.fan_coverage_radius() >= g.image_half_width());
  FanGeometry narrow = g;
  narrow.detector_width = 20.0;
  CHECK_THROWS_AS(narrow.validate(), GeometryError);
  FanGeometry negative = g;
  negative.det_to_center = -1.0;
  CHECK_THROWS_AS(negative.validate(), GeometryError);
}

TEST_CASE("forward projection is linear") {
  const FanGeometry g = small_geometry();
  CHECK(squared_norm(forward_project(ImageTensor(2, 32, 32), g)) == 0.0);
  Rng rng(3);
  const auto a = test::random_tensor<float, ImageDomain>(2, 32, 32, rng);
  const auto b = test::random_tensor<float, ImageDomain>(2, 32, 32, rng);
  ImageTensor sum = a;
  sum.values() += b.values();
  const auto pa = forward_project(a, g);
  const auto pb = forward_project(b, g);
  const auto ps = forward_project(sum, g);
  const double scale = ps.values().abs().maxCoeff();
  const double err = (ps.values() - pa.values() - pb.values()).abs().maxCoeff();
  CHECK(err / scale < 1e-5);
}

TEST_CASE("unit center pixel projects to its chord length") {
  FanGeometry g;
  g.image_size = 33;
  g.n_detectors = 129;
  g.n_views = 24;
  ImageTensor img(1, 33, 33);
  img(0, 16, 16) = 1.0f;
  const auto sino = forward_project(img, g);
  for (Index v = 0; v < g.n_views; ++v) {
    const double beta = 2.0 * std::numbers::pi * v / g.n_views;
    const double chord = g.pixel_size / std::max(std::abs(std::cos(beta)), std::abs(std::sin(beta)));
    CHECK(sino(0, v, 64) == doctest::Approx(chord).epsilon(1e-6));
    CHECK(std::abs(march(img, 0, g, v, 64, 0.001) - chord) < 2e-3 * g.pixel_size);
  }
}

TEST_CASE("Siddon sums agree with dense ray marching") {
  const FanGeometry g = small_geometry();
  Rng rng(4);
  const auto img = test::random_tensor<float, ImageDomain>(1, 32, 32, rng);
  const auto sino = forward_project(img, g);
  std::uniform_int_distribution<Index> view(0, g.n_views - 1);
  std::uniform_int_distribution<Index> bin(0, g.n_detectors - 1);
  for (int k = 0; k < 40; ++k) {
    const Index v = view(rng);
    const Index d = bin(rng);
    const double oracle = march(img, 0, g, v, d);
    // Midpoint sampling misplaces at most one step per pixel boundary.
    CHECK(std::abs(sino(0, v, d) - oracle) < 0.02 * g.pixel_size * 2 * 32 * 4);
  }
}

TEST_CASE("back projection is the adjoint of forward projection") {
  const FanGeometry g = small_geometry();
  CHECK(squared_norm(back_project(SinogramTensor(1, 60, 128), g)) == 0.0);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = test::random_tensor<float, ImageDomain>(1, 32, 32, rng);
    const auto y = test::random_tensor<float, SinogramDomain>(1, 60, 128, rng);
    const double lhs = dot(forward_project(x, g), y);
    const double rhs = dot(x, back_project(y, g));
    CHECK(test::rel_diff(lhs, rhs) < 1e-3);
  }
}

TEST_CASE("back projection of one bin stays on that ray") {
  const FanGeometry g = small_geometry();
  SinogramTensor s(1, g.n_views, g.n_detectors);
  s(0, 7, 40) = 1.0f;
  const auto bp = back_project(s, g);
  ImageTensor probe(1, 32, 32);
  Index touched = 0;
  for (Index r = 0; r < 32; ++r) {
    for (Index c = 0; c < 32; ++c) {
      probe.values().setZero();
      probe(0, r, c) = 1.0f;
      const double through = march(probe, 0, g, 7, 40, 0.002);
      if (bp(0, r, c) != 0.0f) {
        ++touched;
        CHECK(through > 0.0);
        CHECK(bp(0, r, c) == doctest::Approx(through).epsilon(0.02).scale(g.pixel_size));
      } else {
        CHECK(through < 0.01 * g.pixel_size);
      }
    }
  }
  CHECK(touched > 10);
}

TEST_CASE("isotropic object gives view-independent profiles") {
  FanGeometry g = small_geometry();
  g.image_size = 64;
  g.pixel_size = 0.3;
  ImageTensor blob(1, 64, 64);
  for (Index r = 0; r < 64; ++r) {
    for (Index c = 0; c < 64; ++c) {
      const double x = c - 31.5;
      const double y = 31.5 - r;
      blob(0, r, c) = static_cast<float>(std::exp(-(x * x + y * y) / (2.0 * 8.0 * 8.0)));
    }
  }
  const auto sino = forward_project(blob, g);
  const double peak = sino.channel(0).row(0).maxCoeff();
  for (Index v = 1; v < g.n_views; ++v) {
    const double diff = (sino.channel(0).row(v) - sino.channel(0).row(0)).abs().maxCoeff();
    // Only the pixelization of the blob breaks the symmetry.
    CHECK(diff / peak < 3e-2);
  }
}

TEST_CASE("channels are projected independently") {
  const FanGeometry g = small_geometry();
  Rng rng(6);
  const auto h = test::random_tensor<float, ImageDomain>(1, 32, 32, rng);
  const auto l = test::random_tensor<float, ImageDomain>(1, 32, 32, rng);
  const auto both = forward_project(stack_channels({h, l}), g);
  CHECK(both == stack_channels({forward_project(h, g), forward_project(l, g)}));
}

TEST_CASE("projector shape checks") {
  const FanGeometry g = small_geometry();
  CHECK_THROWS_AS(forward_project(ImageTensor(1, 32, 30), g), ShapeError);
  CHECK_THROWS_AS(forward_project(ImageTensor(1, 30, 30), g), ShapeError);
  CHECK_THROWS_AS(back_project(SinogramTensor(1, 59, 128), g), ShapeError);
  FanGeometry narrow = g;
  narrow.detector_width = 5.0;
  CHECK_THROWS_AS(forward_project(ImageTensor(1, 32, 32), narrow), GeometryError);
}

TEST_CASE("fbp basics") {
  FanGeometry g;
  CHECK(squared_norm(fbp(SinogramTensor(2, 180, 128), g)) == 0.0);
  FanGeometry one_bin = g;
  one_bin.n_detectors = 1;
  CHECK_THROWS_AS(fbp(SinogramTensor(1, 180, 1), one_bin), GeometryError);
  const auto ph = make_phantom_suite(1, 64, 8, default_spectrum()).front();
  const auto sino = forward_project(ph, g);
  CHECK(fbp(sino, g) == fbp(sino, g));
  const auto rec = fbp(sino, g);
  CHECK(fbp(slice_channels(sino, 1, 1), g) == slice_channels(rec, 1, 1));
}

TEST_CASE("fbp recovers a phantom and degrades with fewer views") {
  FanGeometry g;
  g.n_views = 360;
  const auto ph = make_phantom_suite(1, 64, 21, default_spectrum()).front();
  const auto sino = forward_project(ph, g);
  const auto full = evaluate(fbp(sino, g), ph);
  auto [sparse, mask] = subsample_views(sino, 30);
  const auto few = evaluate(fbp(sparse, g, &mask), ph);
  for (Index c = 0; c < 2; ++c) {
    CHECK(full.channels[c].psnr >= 28.0);
    CHECK(few.channels[c].psnr < full.channels[c].psnr);
  }
}

TEST_CASE("view subsampling") {
  Rng rng(7);
  const auto sino = test::random_tensor(2, 360, 16, rng);
  {
    auto [same, mask] = subsample_views(sino, 360);
    CHECK(same == sino);
    CHECK(mask.n_kept() == 360);
  }
  auto [sparse, mask] = subsample_views(sino, 30);
  CHECK(mask.n_kept() == 30);
  for (Index v = 0; v < 360; ++v) {
    CHECK(mask.kept[v] == (v % 12 == 0));
    const bool zero = (sparse.channel(0).row(v) == 0.0f).all() && (sparse.channel(1).row(v) == 0.0f).all();
    CHECK(zero == !mask.kept[v]);
  }
  SinogramTensor twice = sparse;
  apply_view_mask(twice, mask);
  CHECK(twice == sparse);
  CHECK_THROWS_AS(subsample_views(sino, 0), ArgumentError);
  CHECK_THROWS_AS(subsample_views(sino, 361), ArgumentError);
}

TEST_CASE("sparse fbp uses only kept views") {
  FanGeometry g;
  Rng rng(8);
  auto sino = test::random_tensor(1, 180, 128, rng);
  auto [sparse, mask] = subsample_views(sino, 45);
  SinogramTensor noisy = sparse;
  for (Index v = 0; v < 180; ++v) {
    if (!mask.kept[v]) noisy.channel(0).row(v).setConstant(100.0f);
  }
  CHECK(fbp(noisy, g, &mask) == fbp(sparse, g, &mask));
}
