#pragma once

#include <vector>

#include "vip/random.hpp"
#include "vip/tensor.hpp"

namespace vip {

/// Relative material densities, one channel per material (channel 0 water,
/// channel 1 bone for the default two-material model).
struct MaterialMap {
  ImageTensor density;

  Index materials() const { return density.channels(); }
  Index size() const { return density.rows(); }
};

/// Discrete two-spectrum model. high[e] and low[e] are the normalized
/// weights of energy bin e for the high- and low-energy scans; tau(k, e) is
/// the attenuation of material k at bin e per unit density.
struct SpectrumModel {
  std::vector<double> energies_kev;
  std::vector<double> high;
  std::vector<double> low;
  Eigen::ArrayXXd tau;

  Index bins() const { return static_cast<Index>(energies_kev.size()); }
  /// Throws ArgumentError on negative or unnormalized weights or a tau table
  /// whose shape does not match.
  void validate(Index materials) const;
};

/// Two bins at 50 and 90 keV with water- and bone-like attenuation.
SpectrumModel default_spectrum();

/// A water body filling most of the inscribed circle with n_ellipses inner
/// features (at least one bone-like), densities in [0.2, 1.5], edges
/// antialiased by 4x4 supersampling. Later ellipses overwrite earlier ones.
MaterialMap make_material_map(Index size, Index n_ellipses, Rng& rng);

/// x_j = -ln sum_E S_j(E) exp(-sum_k eps_k tau_k(E)) per pixel, returned as
/// a 2-channel [H, L] image.
ImageTensor spectral_image(const MaterialMap& map, const SpectrumModel& spectrum);

/// count phantoms drawn from one seeded stream, ellipse count 3..6 each.
std::vector<ImageTensor> make_phantom_suite(Index count, Index size, std::uint64_t seed,
                                            const SpectrumModel& spectrum);

}  // namespace vip
