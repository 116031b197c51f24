#pragma once

#include <limits>
#include <string>
#include <vector>

#include "vip/projector.hpp"
#include "vip/tensor.hpp"

namespace vip {

struct ChannelMetrics {
  double psnr = 0.0;  // dB, +inf when the images are identical
  double ssim = 0.0;
  double mse = 0.0;
};

struct MetricReport {
  std::vector<ChannelMetrics> channels;

  /// "PSNR/SSIM/MSE(1e-3)" for one channel, e.g. "33.30/0.9618/0.513".
  std::string row(Index channel) const;
};

/// Mean squared difference of two planes.
double mse(const Plane<float>& a, const Plane<float>& b);

/// 10 log10(peak^2 / mse); +inf when mse == 0.
double psnr_from_mse(double mse, double peak);

/// Mean SSIM over every valid placement of an 11x11 Gaussian window
/// (sigma 1.5) with C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Images smaller
/// than the window use a single window the size of the image.
double ssim(const Plane<float>& a, const Plane<float>& b, double peak);

/// SSIM per non-overlapping block_size x block_size block, using each
/// block's own means, variances and covariance. Images are edge-padded to a
/// multiple of the block size. peak defaults to the maximum of a.
Plane<double> region_ssim(const Plane<float>& a, const Plane<float>& b, Index block_size,
                          double peak = std::numeric_limits<double>::quiet_NaN());

/// Evaluation reference: FBP of the full-view projection of the ground truth.
ImageTensor make_reference(const ImageTensor& ground_truth, const FanGeometry& geom);

/// Per-channel metrics of recon against reference, peak = per-channel
/// maximum of the reference.
MetricReport evaluate(const ImageTensor& recon, const ImageTensor& reference);

}  // namespace vip
