#include "vip/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace vip {

namespace {

struct Vec2 {
  double x;
  double y;
};

struct Ray {
  Vec2 source;
  Vec2 target;
};

Ray ray_for(const FanGeometry& g, Index view, Index bin) {
  const double beta = g.view_angle(view);
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const double u = g.detector_offset(bin);
  return {{g.src_to_center * c, g.src_to_center * s},
          {-g.det_to_center * c - u * s, -g.det_to_center * s + u * c}};
}

// Walks the pixels crossed by the segment source->target in order and calls
// visit(flat_pixel_index, intersection_length). Pixel (r, c) covers
// x in [-h + c*p, -h + (c+1)*p] and y in [h - (r+1)*p, h - r*p].
template <typename Visit>
void trace_ray(const FanGeometry& g, const Ray& ray, Visit&& visit) {
  const Index n = g.image_size;
  const double p = g.pixel_size;
  const double h = g.image_half_width();
  const double dx = ray.target.x - ray.source.x;
  const double dy = ray.target.y - ray.source.y;
  const double length = std::hypot(dx, dy);
  constexpr double inf = std::numeric_limits<double>::infinity();

  double a_min = 0.0;
  double a_max = 1.0;
  auto clip = [&](double start, double delta) {
    if (delta == 0.0) {
      return start > -h && start < h;
    }
    const double a0 = (-h - start) / delta;
    const double a1 = (h - start) / delta;
    a_min = std::max(a_min, std::min(a0, a1));
    a_max = std::min(a_max, std::max(a0, a1));
    return true;
  };
  if (!clip(ray.source.x, dx) || !clip(ray.source.y, dy) || a_max <= a_min) {
    return;
  }

  // Next plane crossing along one axis, computed from the plane index so no
  // error accumulates along the ray.
  struct Axis {
    double start;
    double delta;
    Index plane;
    Index step;
    double next(double p, double h) const {
      return delta == 0.0 ? inf : ((-h + static_cast<double>(plane) * p) - start) / delta;
    }
  };
  auto make_axis = [&](double start, double delta) {
    Axis ax{start, delta, 0, 0};
    if (delta != 0.0) {
      const double entry = (start + a_min * delta + h) / p;
      ax.step = delta > 0.0 ? 1 : -1;
      ax.plane = delta > 0.0 ? static_cast<Index>(std::floor(entry)) + 1
                             : static_cast<Index>(std::ceil(entry)) - 1;
      while (ax.next(p, h) <= a_min) {
        ax.plane += ax.step;
      }
    }
    return ax;
  };
  Axis ax = make_axis(ray.source.x, dx);
  Axis ay = make_axis(ray.source.y, dy);

  double a = a_min;
  double ax_next = ax.next(p, h);
  double ay_next = ay.next(p, h);
  while (a < a_max) {
    const double a_next = std::min({ax_next, ay_next, a_max});
    if (a_next > a) {
      const double mid = 0.5 * (a + a_next);
      const double x = ray.source.x + mid * dx;
      const double y = ray.source.y + mid * dy;
      const Index col = std::clamp<Index>(static_cast<Index>(std::floor((x + h) / p)), 0, n - 1);
      const Index yi = std::clamp<Index>(static_cast<Index>(std::floor((y + h) / p)), 0, n - 1);
      visit((n - 1 - yi) * n + col, (a_next - a) * length);
    }
    if (ax_next <= a_next) {
      ax.plane += ax.step;
      ax_next = ax.next(p, h);
    }
    if (ay_next <= a_next) {
      ay.plane += ay.step;
      ay_next = ay.next(p, h);
    }
    a = a_next;
  }
}

void check_image(const FanGeometry& g, Index rows, Index cols, const char* what) {
  if (rows != cols) {
    throw ShapeError(std::string(what) + ": image must be square, got " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
  if (rows != g.image_size) {
    throw ShapeError(std::string(what) + ": image is " + std::to_string(rows) +
                     " pixels wide, geometry expects " + std::to_string(g.image_size));
  }
}

void check_sinogram(const FanGeometry& g, Index views, Index bins, const char* what) {
  if (views != g.n_views || bins != g.n_detectors) {
    throw ShapeError(std::string(what) + ": sinogram is " + std::to_string(views) + "x" +
                     std::to_string(bins) + ", geometry expects " + std::to_string(g.n_views) +
                     "x" + std::to_string(g.n_detectors));
  }
}

}  // namespace

void FanGeometry::validate() const {
  if (n_views < 1) {
    throw GeometryError("geometry: n_views must be >= 1");
  }
  if (n_detectors < 1) {
    throw GeometryError("geometry: n_detectors must be >= 1");
  }
  if (image_size < 1) {
    throw GeometryError("geometry: image_size must be >= 1");
  }
  if (!(src_to_center > 0.0) || !(det_to_center > 0.0) || !(detector_width > 0.0) ||
      !(pixel_size > 0.0)) {
    throw GeometryError("geometry: distances, detector width and pixel size must be positive");
  }
  const double needed = image_half_width();
  if (fan_coverage_radius() < needed * (1.0 - 1e-9)) {
    throw GeometryError("geometry: fan covers radius " + std::to_string(fan_coverage_radius()) +
                        " cm but the image circle has radius " + std::to_string(needed) + " cm");
  }
  if (needed >= src_to_center) {
    throw GeometryError("geometry: source orbit passes through the image");
  }
}

double FanGeometry::view_angle(Index view) const {
  return 2.0 * std::numbers::pi * static_cast<double>(view) / static_cast<double>(n_views);
}

double FanGeometry::detector_offset(Index bin) const {
  return (static_cast<double>(bin) - 0.5 * static_cast<double>(n_detectors - 1)) *
         detector_spacing();
}

double FanGeometry::fan_coverage_radius() const {
  const double half_fan = std::atan(0.5 * detector_width / (src_to_center + det_to_center));
  return src_to_center * std::sin(half_fan);
}

ViewMask ViewMask::all(Index n_views) {
  ViewMask m;
  m.kept = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_views, true);
  return m;
}

void ViewMask::validate() const {
  if (n_kept() < 1) {
    throw ArgumentError("view mask keeps no views");
  }
}

template <typename Scalar>
Tensor<Scalar, SinogramDomain> forward_project(const Tensor<Scalar, ImageDomain>& image,
                                               const FanGeometry& geom) {
  geom.validate();
  check_image(geom, image.rows(), image.cols(), "forward_project");
  const Index channels = image.channels();
  const Index plane = image.plane_size();
  Tensor<Scalar, SinogramDomain> sino(channels, geom.n_views, geom.n_detectors);

#pragma omp parallel for schedule(static)
  for (Index v = 0; v < geom.n_views; ++v) {
    std::vector<double> acc(static_cast<std::size_t>(channels));
    for (Index d = 0; d < geom.n_detectors; ++d) {
      std::fill(acc.begin(), acc.end(), 0.0);
      trace_ray(geom, ray_for(geom, v, d), [&](Index pixel, double len) {
        for (Index c = 0; c < channels; ++c) {
          acc[c] += len * static_cast<double>(image.data()[c * plane + pixel]);
        }
      });
      for (Index c = 0; c < channels; ++c) {
        sino(c, v, d) = static_cast<Scalar>(acc[c]);
      }
    }
  }
  return sino;
}

template <typename Scalar>
Tensor<Scalar, ImageDomain> back_project(const Tensor<Scalar, SinogramDomain>& sino,
                                         const FanGeometry& geom) {
  geom.validate();
  check_sinogram(geom, sino.rows(), sino.cols(), "back_project");
  const Index channels = sino.channels();
  const Index plane = geom.image_size * geom.image_size;
  // Scatter order is fixed (view, bin, pixel) so the result does not depend
  // on threading.
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(channels * plane);
  for (Index v = 0; v < geom.n_views; ++v) {
    for (Index d = 0; d < geom.n_detectors; ++d) {
      trace_ray(geom, ray_for(geom, v, d), [&](Index pixel, double len) {
        for (Index c = 0; c < channels; ++c) {
          acc[c * plane + pixel] += len * static_cast<double>(sino(c, v, d));
        }
      });
    }
  }
  return Tensor<Scalar, ImageDomain>(channels, geom.image_size, geom.image_size,
                                     acc.cast<Scalar>());
}

template <typename Scalar>
Tensor<Scalar, ImageDomain> fbp(const Tensor<Scalar, SinogramDomain>& sino,
                                const FanGeometry& geom, const ViewMask* mask) {
  geom.validate();
  if (geom.n_detectors < 2) {
    throw GeometryError("fbp: needs at least 2 detector bins");
  }
  check_sinogram(geom, sino.rows(), sino.cols(), "fbp");
  if (mask != nullptr) {
    if (mask->n_views() != geom.n_views) {
      throw ShapeError("fbp: view mask length does not match n_views");
    }
    mask->validate();
  }

  const Index channels = sino.channels();
  const Index n_det = geom.n_detectors;
  const double R = geom.src_to_center;
  // Rebin onto a virtual detector through the rotation center.
  const double a = geom.detector_spacing() / geom.magnification();
  const double center = 0.5 * static_cast<double>(n_det - 1);

  std::vector<Index> views;
  for (Index v = 0; v < geom.n_views; ++v) {
    if (mask == nullptr || mask->kept[v]) {
      views.push_back(v);
    }
  }
  const double d_beta = 2.0 * std::numbers::pi / static_cast<double>(views.size());

  // Ram-Lak kernel pre-multiplied by the sample spacing; taps cover every
  // lag that fits on the detector, which is the zero-padded linear
  // convolution.
  Eigen::ArrayXd kernel(2 * n_det - 1);
  for (Index k = -(n_det - 1); k <= n_det - 1; ++k) {
    double h = 0.0;
    if (k == 0) {
      h = 0.25;
    } else if (k % 2 != 0) {
      h = -1.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(k * k));
    }
    kernel[k + n_det - 1] = h / a;
  }
  Eigen::ArrayXd cos_weight(n_det);
  for (Index d = 0; d < n_det; ++d) {
    const double s = (static_cast<double>(d) - center) * a;
    cos_weight[d] = R / std::sqrt(R * R + s * s);
  }

  // filtered[(c * n_used + j) * n_det + d]
  const Index n_used = static_cast<Index>(views.size());
  Eigen::ArrayXd filtered(channels * n_used * n_det);
  Eigen::ArrayXd weighted(n_det);
  for (Index c = 0; c < channels; ++c) {
    for (Index j = 0; j < n_used; ++j) {
      for (Index d = 0; d < n_det; ++d) {
        weighted[d] = static_cast<double>(sino(c, views[j], d)) * cos_weight[d];
      }
      double* out = filtered.data() + (c * n_used + j) * n_det;
      for (Index d = 0; d < n_det; ++d) {
        double sum = 0.0;
        for (Index m = 0; m < n_det; ++m) {
          sum += weighted[m] * kernel[d - m + n_det - 1];
        }
        out[d] = sum;
      }
    }
  }

  std::vector<double> cos_b(n_used);
  std::vector<double> sin_b(n_used);
  for (Index j = 0; j < n_used; ++j) {
    cos_b[j] = std::cos(geom.view_angle(views[j]));
    sin_b[j] = std::sin(geom.view_angle(views[j]));
  }

  const Index n = geom.image_size;
  const double p = geom.pixel_size;
  Tensor<Scalar, ImageDomain> image(channels, n, n);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; ++r) {
    std::vector<double> acc(static_cast<std::size_t>(channels));
    const double y = (0.5 * static_cast<double>(n - 1) - static_cast<double>(r)) * p;
    for (Index col = 0; col < n; ++col) {
      const double x = (static_cast<double>(col) - 0.5 * static_cast<double>(n - 1)) * p;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (Index j = 0; j < n_used; ++j) {
        const double toward_source = x * cos_b[j] + y * sin_b[j];
        const double along_detector = -x * sin_b[j] + y * cos_b[j];
        const double L = R - toward_source;
        const double U = L / R;
        const double idx = along_detector * R / L / a + center;
        if (idx < 0.0 || idx > static_cast<double>(n_det - 1)) {
          continue;
        }
        const Index i0 = std::min<Index>(static_cast<Index>(idx), n_det - 2);
        const double w = idx - static_cast<double>(i0);
        const double scale = 0.5 * d_beta / (U * U);
        for (Index c = 0; c < channels; ++c) {
          const double* q = filtered.data() + (c * n_used + j) * n_det;
          acc[c] += scale * ((1.0 - w) * q[i0] + w * q[i0 + 1]);
        }
      }
      for (Index c = 0; c < channels; ++c) {
        image(c, r, col) = static_cast<Scalar>(acc[c]);
      }
    }
  }
  return image;
}

std::pair<SinogramTensor, ViewMask> subsample_views(const SinogramTensor& sino, Index n_keep) {
  const Index n_views = sino.rows();
  if (n_keep < 1 || n_keep > n_views) {
    throw ArgumentError("subsample_views: n_keep=" + std::to_string(n_keep) +
                        " outside [1, " + std::to_string(n_views) + "]");
  }
  ViewMask mask;
  mask.kept = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_views, false);
  for (Index i = 0; i < n_keep; ++i) {
    const auto v = static_cast<Index>(
        std::lround(static_cast<double>(i) * static_cast<double>(n_views) /
                    static_cast<double>(n_keep)));
    mask.kept[std::min(v, n_views - 1)] = true;
  }
  SinogramTensor out = sino;
  apply_view_mask(out, mask);
  return {std::move(out), std::move(mask)};
}

template <typename Scalar>
void apply_view_mask(Tensor<Scalar, SinogramDomain>& sino, const ViewMask& mask) {
  if (mask.n_views() != sino.rows()) {
    throw ShapeError("apply_view_mask: mask has " + std::to_string(mask.n_views()) +
                     " views, sinogram has " + std::to_string(sino.rows()));
  }
  for (Index c = 0; c < sino.channels(); ++c) {
    auto plane = sino.channel(c);
    for (Index v = 0; v < sino.rows(); ++v) {
      if (!mask.kept[v]) {
        plane.row(v).setZero();
      }
    }
  }
}

template Tensor<float, SinogramDomain> forward_project(const Tensor<float, ImageDomain>&,
                                                       const FanGeometry&);
template Tensor<double, SinogramDomain> forward_project(const Tensor<double, ImageDomain>&,
                                                        const FanGeometry&);
template Tensor<float, ImageDomain> back_project(const Tensor<float, SinogramDomain>&,
                                                 const FanGeometry&);
template Tensor<double, ImageDomain> back_project(const Tensor<double, SinogramDomain>&,
                                                  const FanGeometry&);
template Tensor<float, ImageDomain> fbp(const Tensor<float, SinogramDomain>&, const FanGeometry&,
                                        const ViewMask*);
template Tensor<double, ImageDomain> fbp(const Tensor<double, SinogramDomain>&,
                                         const FanGeometry&, const ViewMask*);
template void apply_view_mask(Tensor<float, SinogramDomain>&, const ViewMask&);
template void apply_view_mask(Tensor<double, SinogramDomain>&, const ViewMask&);

}  // namespace vip
