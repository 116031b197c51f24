#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vip/diffusion.hpp"
#include "vip/projector.hpp"
#include "vip/scorenet.hpp"
#include "vip/vct.hpp"
#include "vip/wavelet.hpp"

namespace vip {

/// full: projection update then a wavelet sweep every level.
/// ppm_only / wpm_only: one of the two updates; the wavelet-only sampler
/// never touches the ll band, so missing-view low frequencies stay at their
/// initial noise (kept for the ablation, not as a usable reconstruction).
/// baseline: projection update on the raw 2-channel state without VCT.
enum class ReconMode { full, ppm_only, wpm_only, baseline };

ReconMode parse_mode(const std::string& name);
std::string mode_name(ReconMode mode);

/// Representation a prior is trained on: VCT-stacked sinograms, VCT-stacked
/// high-frequency wavelet bands, or raw 2-channel sinograms (baseline).
enum class TrainDomain { projection, wavelet, plain };

TrainDomain parse_domain(const std::string& name);
std::string domain_name(TrainDomain domain);

/// Training tensors for one domain, each drawn with a fresh virtual mask.
/// The wavelet domain yields the lh, hl and hh bands of every sinogram.
std::vector<SinogramTensor> training_set(std::span<const SinogramTensor> sinograms,
                                         TrainDomain domain, const MaskParams& mask, Rng& rng);

enum class ReconStage { projection, wavelet };

/// Context handed to a prior with every score request.
struct ScoreQuery {
  ReconStage stage = ReconStage::projection;
  /// Meaningful for the wavelet stage only.
  Band band = Band::lh;
  /// The virtual mask of the current step; null when the state is not
  /// VCT-stacked.
  const VirtualMask* mask = nullptr;
};

class ScorePrior {
 public:
  virtual ~ScorePrior() = default;
  virtual SinogramTensor score(const SinogramTensor& x, double sigma,
                               const ScoreQuery& query) const = 0;
  virtual bool accepts(Index channels) const = 0;
};

/// Learned score s_theta(x, sigma) = net(x, sigma) / sigma.
class NetworkPrior : public ScorePrior {
 public:
  explicit NetworkPrior(ScoreNetParams<float> params) : params_(std::move(params)) {}
  SinogramTensor score(const SinogramTensor& x, double sigma, const ScoreQuery&) const override {
    return score_eval(params_, x, sigma);
  }
  bool accepts(Index channels) const override { return channels == params_.c_in(); }
  const ScoreNetParams<float>& params() const { return params_; }

 private:
  ScoreNetParams<float> params_;
};

/// Closed-form score of a point mass at the true full-view sinogram,
/// expressed in whatever representation the query asks for (raw, VCT-stacked,
/// or one wavelet band). Used to certify the sampler independently of any
/// training.
class OraclePrior : public ScorePrior {
 public:
  explicit OraclePrior(SinogramTensor full_sinogram);
  SinogramTensor score(const SinogramTensor& x, double sigma,
                       const ScoreQuery& query) const override;
  bool accepts(Index channels) const override { return channels == 2 || channels == 6; }

 private:
  SinogramTensor full_;
  WaveletBands<SinogramTensor> bands_;
};

struct ReconConfig {
  VESchedule schedule;
  SamplerConfig sampler;
  MaskParams mask;
  ReconMode mode = ReconMode::full;
  FanGeometry geometry;
  /// Abort when the state norm exceeds this multiple of the measurement norm.
  double divergence_factor = 1e3;
};

struct TraceEntry {
  Index level = 0;
  double sigma = 0.0;
  /// "projection" or the wavelet band name.
  std::string stage;
  bool corrector_applied = false;
  /// Per channel [H, L]; filled only when a reference image is supplied.
  std::optional<std::array<double, 2>> psnr;
  std::optional<std::array<double, 2>> ssim;
};

struct ReconResult {
  ImageTensor image;
  /// Final projection-domain state, the input of the closing FBP.
  SinogramTensor sinogram;
  std::vector<TraceEntry> trace;
};

/// Kept rows equal y; missing rows are sigma_max-scaled standard normals,
/// drawn in storage order over the missing entries only.
SinogramTensor initialize_state(const SinogramTensor& y, const ViewMask& mask,
                                const FanGeometry& geom, double sigma_max, Rng& rng);

/// Alternating projection / wavelet predictor-corrector reconstruction.
/// Levels run from N-1 down to 1; each level updates from sigma_i to
/// sigma_{i-1}, so N levels give N-1 updates. Random draws come from one
/// stream seeded by cfg.sampler.seed, in this order: the initial missing
/// rows, then per level the projection mask, predictor noise and corrector
/// noise, then per band in lh, hl, hh order the band mask, predictor noise
/// and corrector noise.
ReconResult reconstruct(const SinogramTensor& y, const ViewMask& mask, const ScorePrior* ppm,
                        const ScorePrior* wpm, const ReconConfig& cfg,
                        const ImageTensor* reference = nullptr);

}  // namespace vip
