#include "vip/phantom.hpp"

#include <cmath>
#include <numbers>

namespace vip {

namespace {

constexpr Index kWater = 0;
constexpr Index kBone = 1;
constexpr Index kSupersample = 4;

// Coordinates are normalized so the inscribed circle has radius 1.
struct Ellipse {
  double cx, cy, a, b, angle;
  Index material;
  double density;

  bool contains(double x, double y) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = (x - cx) * c + (y - cy) * s;
    const double v = -(x - cx) * s + (y - cy) * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  }
};

}  // namespace

void SpectrumModel::validate(Index materials) const {
  const auto n = energies_kev.size();
  if (n == 0 || high.size() != n || low.size() != n) {
    throw ArgumentError("spectrum: energies, high and low weights must have one entry per bin");
  }
  if (tau.rows() != materials || tau.cols() != static_cast<Index>(n)) {
    throw ArgumentError("spectrum: tau table must be materials x bins (" +
                        std::to_string(materials) + "x" + std::to_string(n) + ")");
  }
  for (const auto* w : {&high, &low}) {
    double sum = 0.0;
    for (double v : *w) {
      if (!(v >= 0.0)) {
        throw ArgumentError("spectrum: negative weight");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ArgumentError("spectrum: weights sum to " + std::to_string(sum) + ", expected 1");
    }
  }
}

SpectrumModel default_spectrum() {
  SpectrumModel s;
  s.energies_kev = {50.0, 90.0};
  s.high = {0.35, 0.65};
  s.low = {0.6, 0.4};
  s.tau.resize(2, 2);
  s.tau << 0.227, 0.184,  // water
      0.55, 0.35;         // bone
  return s;
}

MaterialMap make_material_map(Index size, Index n_ellipses, Rng& rng) {
  if (size < 16) {
    throw ArgumentError("phantom: size must be >= 16, got " + std::to_string(size));
  }
  if (n_ellipses < 1) {
    throw ArgumentError("phantom: need at least one inner ellipse");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Ellipse> shapes;
  const double body_a = uniform(0.72, 0.88);
  const double body_b = uniform(0.6, 0.8);
  shapes.push_back({uniform(-0.05, 0.05), uniform(-0.05, 0.05), body_a, body_b,
                    uniform(0.0, std::numbers::pi), kWater, uniform(0.9, 1.1)});
  for (Index k = 0; k < n_ellipses; ++k) {
    const bool bone = k == 0 || unit(rng) < 0.4;
    const double a = uniform(0.06, 0.22);
    const double b = uniform(0.06, 0.22);
    const double reach = 0.55 - std::max(a, b);
    const double r = reach * std::sqrt(unit(rng));
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    shapes.push_back({r * std::cos(phi), r * std::sin(phi), a, b,
                      uniform(0.0, std::numbers::pi), bone ? kBone : kWater,
                      bone ? uniform(0.8, 1.5) : uniform(0.2, 1.4)});
  }

  MaterialMap map{ImageTensor(2, size, size)};
  const double half = 0.5 * static_cast<double>(size);
  const double weight = 1.0 / static_cast<double>(kSupersample * kSupersample);
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      double acc[2] = {0.0, 0.0};
      for (Index si = 0; si < kSupersample; ++si) {
        for (Index sj = 0; sj < kSupersample; ++sj) {
          const double px = static_cast<double>(c) + (static_cast<double>(sj) + 0.5) / kSupersample;
          const double py = static_cast<double>(r) + (static_cast<double>(si) + 0.5) / kSupersample;
          const double x = (px - half) / half;
          const double y = (half - py) / half;
          const Ellipse* top = nullptr;
          for (const auto& e : shapes) {
            if (e.contains(x, y)) {
              top = &e;
            }
          }
          if (top != nullptr) {
            acc[top->material] += weight * top->density;
          }
        }
      }
      map.density(kWater, r, c) = static_cast<float>(acc[kWater]);
      map.density(kBone, r, c) = static_cast<float>(acc[kBone]);
    }
  }
  return map;
}

ImageTensor spectral_image(const MaterialMap& map, const SpectrumModel& spectrum) {
  spectrum.validate(map.materials());
  const Index bins = spectrum.bins();
  const Index n = map.density.plane_size();
  ImageTensor out(2, map.size(), map.size());
  for (Index p = 0; p < n; ++p) {
    double transmitted_h = 0.0;
    double transmitted_l = 0.0;
    for (Index e = 0; e < bins; ++e) {
      double path = 0.0;
      for (Index k = 0; k < map.materials(); ++k) {
        path += static_cast<double>(map.density.data()[k * n + p]) * spectrum.tau(k, e);
      }
      const double t = std::exp(-path);
      transmitted_h += spectrum.high[static_cast<std::size_t>(e)] * t;
      transmitted_l += spectrum.low[static_cast<std::size_t>(e)] * t;
    }
    // -log of a normalized sum of values <= 1 is >= 0 up to rounding.
    out.data()[p] = static_cast<float>(std::max(0.0, -std::log(transmitted_h)));
    out.data()[n + p] = static_cast<float>(std::max(0.0, -std::log(transmitted_l)));
  }
  return out;
}

std::vector<ImageTensor> make_phantom_suite(Index count, Index size, std::uint64_t seed,
                                            const SpectrumModel& spectrum) {
  Rng rng(seed);
  std::uniform_int_distribution<Index> pick(3, 6);
  std::vector<ImageTensor> suite;
  suite.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    const Index n_ellipses = pick(rng);
    suite.push_back(spectral_image(make_material_map(size, n_ellipses, rng), spectrum));
  }
  return suite;
}

}  // namespace vip
