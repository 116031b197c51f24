#pragma once

#include <Eigen/Core>

#include <utility>

#include "vip/tensor.hpp"

namespace vip {

/// Fan-beam acquisition with a flat, equally spaced detector. View k sits at
/// angle 2*pi*k/n_views; the source orbits at src_to_center and the detector
/// plane faces it at det_to_center on the opposite side of the rotation
/// center. Lengths are in cm.
struct FanGeometry {
  Index n_views = 180;
  Index n_detectors = 128;
  double src_to_center = 40.0;
  double det_to_center = 40.0;
  double detector_width = 41.3;
  Index image_size = 64;
  double pixel_size = 0.3;

  /// Throws GeometryError unless every distance is positive and the fan
  /// covers the circle inscribed in the image square.
  void validate() const;

  double view_angle(Index view) const;
  double detector_spacing() const { return detector_width / static_cast<double>(n_detectors); }
  /// Signed offset of the bin center from the detector midpoint.
  double detector_offset(Index bin) const;
  double magnification() const { return (src_to_center + det_to_center) / src_to_center; }
  /// Radius of the largest centered circle every ray fan fully covers.
  double fan_coverage_radius() const;
  double image_half_width() const { return 0.5 * static_cast<double>(image_size) * pixel_size; }
};

/// Which views of a full acquisition were measured; the 0-1 diagonal
/// sampling operator applied row-wise to sinograms.
struct ViewMask {
  Eigen::Array<bool, Eigen::Dynamic, 1> kept;

  static ViewMask all(Index n_views);
  Index n_views() const { return kept.size(); }
  Index n_kept() const { return kept.count(); }
  void validate() const;
};

/// Siddon ray-driven line integrals through the pixel grid, one ray from the
/// source to each detector bin center. Channels are projected independently.
template <typename Scalar>
Tensor<Scalar, SinogramDomain> forward_project(const Tensor<Scalar, ImageDomain>& image,
                                               const FanGeometry& geom);

/// Exact adjoint of forward_project: every sinogram sample is spread over
/// its ray's pixels weighted by the intersection length.
template <typename Scalar>
Tensor<Scalar, ImageDomain> back_project(const Tensor<Scalar, SinogramDomain>& sino,
                                         const FanGeometry& geom);

/// Fan-beam filtered backprojection: cosine pre-weighting, Ram-Lak ramp
/// filtering along the detector, distance-weighted backprojection. With a
/// view mask only kept views contribute and the angular step is
/// 2*pi / n_kept.
template <typename Scalar>
Tensor<Scalar, ImageDomain> fbp(const Tensor<Scalar, SinogramDomain>& sino,
                                const FanGeometry& geom, const ViewMask* mask = nullptr);

/// Keeps n_keep evenly spaced views (indices round(i * n_views / n_keep))
/// and zeroes the rest.
std::pair<SinogramTensor, ViewMask> subsample_views(const SinogramTensor& sino, Index n_keep);

template <typename Scalar>
void apply_view_mask(Tensor<Scalar, SinogramDomain>& sino, const ViewMask& mask);

}  // namespace vip
