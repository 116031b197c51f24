#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "vip/metrics.hpp"
#include "vip/phantom.hpp"

using namespace vip;

namespace {

Plane<float> pattern(Index n) {
  Plane<float> p(n, n);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      p(r, c) = static_cast<float>(0.5 + 0.4 * std::sin(0.7 * r) * std::cos(0.45 * c));
  return p;
}

}  // namespace

TEST_CASE("identical images") {
  ImageTensor a(2, 16, 16);
  a.channel(0) = pattern(16);
  a.channel(1) = 0.5f * pattern(16);
  const auto rep = evaluate(a, a);
  for (const auto& m : rep.channels) {
    CHECK(m.mse == 0.0);
    CHECK(std::isinf(m.psnr));
    CHECK(m.ssim == doctest::Approx(1.0));
  }
  CHECK(rep.row(0).rfind("inf/1.0000/0.000", 0) == 0);
}

TEST_CASE("constant offset has closed-form MSE and PSNR") {
  ImageTensor ref(1, 16, 16);
  ref.channel(0) = pattern(16);
  ref(0, 0, 0) = 1.0f;  // peak 1
  ImageTensor rec = ref;
  rec.values() += 0.1f;
  const auto m = evaluate(rec, ref).channels[0];
  CHECK(m.mse == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(m.psnr == doctest::Approx(20.0).epsilon(1e-4));
}

TEST_CASE("mse reporting uses 1e-3 units") {
  MetricReport r;
  r.channels.push_back({33.3, 0.9618, 0.000513});
  CHECK(r.row(0) == "33.30/0.9618/0.513");
}

TEST_CASE("psnr decreases with mse") {
  double prev = std::numeric_limits<double>::infinity();
  for (double m = 1e-6; m < 1.0; m *= 1.7) {
    const double p = psnr_from_mse(m, 1.3);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim properties") {
  const auto a = pattern(16);
  // Same mean, inverted structure.
  const Plane<float> flipped = 2.0f * a.mean() - a;
  CHECK(ssim(a, flipped, 1.0) < 0.0);

  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    Plane<float> b = a;
    for (Index i = 0; i < b.size(); ++i)
      b.data()[i] += static_cast<float>(0.1 * std::normal_distribution<double>()(rng));
    const double ab = ssim(a, b, 1.0);
    CHECK(std::abs(ab - ssim(b, a, 1.0)) < 1e-7);
    CHECK(ab <= 1.0);
    CHECK(ab >= -1.0);
    CHECK(ab < 1.0);
  }
  Plane<float> tiny = Plane<float>::Constant(5, 5, 0.3f);
  CHECK(ssim(tiny, tiny, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(ssim(a, pattern(15), 1.0), ShapeError);
}

TEST_CASE("ssim matches an explicit windowed computation") {
  const auto a = pattern(13);
  Plane<float> b = a;
  for (Index r = 0; r < 13; ++r) b(r, r) += 0.2f;
  // 13x13 images give 3x3 window placements; evaluate each directly.
  double g[11];
  double gs = 0.0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-(i - 5) * (i - 5) / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = 1e-4;
  const double c2 = 9e-4;
  double total = 0.0;
  for (int oy = 0; oy < 3; ++oy) {
    for (int ox = 0; ox < 3; ++ox) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int u = 0; u < 11; ++u)
        for (int v = 0; v < 11; ++v) {
          const double w = g[u] * g[v] / (gs * gs);
          mx += w * a(oy + u, ox + v);
          my += w * b(oy + u, ox + v);
        }
      for (int u = 0; u < 11; ++u)
        for (int v = 0; v < 11; ++v) {
          const double w = g[u] * g[v] / (gs * gs);
          const double dx = a(oy + u, ox + v) - mx;
          const double dy = b(oy + u, ox + v) - my;
          sxx += w * dx * dx;
          syy += w * dy * dy;
          sxy += w * dx * dy;
        }
      total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
  }
  CHECK(ssim(a, b, 1.0) == doctest::Approx(total / 9.0).epsilon(1e-6));
}

TEST_CASE("region ssim") {
  const auto a = pattern(16);
  const auto same = region_ssim(a, a, 4);
  CHECK(same.rows() == 4);
  CHECK(same.cols() == 4);
  CHECK((same - 1.0).abs().maxCoeff() < 1e-12);

  const Plane<float> flat = Plane<float>::Constant(16, 16, 0.25f);
  CHECK((region_ssim(flat, flat, 8) - 1.0).abs().maxCoeff() < 1e-12);
  const Plane<float> zero = Plane<float>::Zero(16, 16);
  CHECK((region_ssim(zero, zero, 8) - 1.0).abs().maxCoeff() < 1e-12);

  const auto padded = region_ssim(a, a, 5);
  CHECK(padded.rows() == 4);
  CHECK_THROWS_AS(region_ssim(a, a, 17), ArgumentError);
  CHECK_THROWS_AS(region_ssim(a, a, 0), ArgumentError);
}

TEST_CASE("reference images") {
  FanGeometry g;
  CHECK(squared_norm(make_reference(ImageTensor(2, 64, 64), g)) == 0.0);
  const auto ph = make_phantom_suite(1, 64, 5, default_spectrum()).front();
  const auto ref = make_reference(ph, g);
  CHECK(ref == make_reference(ph, g));
  const auto rep = evaluate(ref, ph);
  CHECK(rep.channels[0].psnr >= 28.0);
  CHECK(rep.channels[1].psnr >= 28.0);
  CHECK_THROWS_AS(evaluate(ImageTensor(2, 64, 64), ImageTensor(2, 32, 32)), ShapeError);
}
