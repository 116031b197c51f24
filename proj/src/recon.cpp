#include "vip/recon.hpp"

#include "vip/metrics.hpp"

namespace vip {

namespace {

using Sino = SinogramTensor;

struct PcOutcome {
  Sino x;
  bool corrected = false;
};

// One predictor step sigma_i -> sigma_{i-1} followed by the configured
// number of corrector steps at sigma_{i-1}.
PcOutcome predict_correct(const Sino& x, Index i, const ReconConfig& cfg,
                          const ScoreFn<Sino>& score, Rng& rng) {
  PcOutcome out{predictor_step(x, i, cfg.schedule, score, rng), false};
  for (Index k = 0; k < cfg.sampler.corrector_steps; ++k) {
    auto c = corrector_step(out.x, i - 1, cfg.schedule, score, cfg.sampler.snr, rng);
    out.corrected = out.corrected || c.applied;
    out.x = std::move(c.x);
  }
  return out;
}

void check_prior(const ScorePrior* prior, Index channels, const char* role, ReconMode mode) {
  if (prior == nullptr) {
    throw ConfigError("reconstruct: mode " + mode_name(mode) + " needs a " + role + " prior");
  }
  if (!prior->accepts(channels)) {
    throw ConfigError(std::string("reconstruct: ") + role + " prior does not accept " +
                      std::to_string(channels) + "-channel input (mode " + mode_name(mode) +
                      ")");
  }
}

}  // namespace

ReconMode parse_mode(const std::string& name) {
  if (name == "full") return ReconMode::full;
  if (name == "ppm" || name == "ppm_only") return ReconMode::ppm_only;
  if (name == "wpm" || name == "wpm_only") return ReconMode::wpm_only;
  if (name == "baseline") return ReconMode::baseline;
  throw ArgumentError("unknown reconstruction mode '" + name +
                      "' (expected full, ppm, wpm or baseline)");
}

std::string mode_name(ReconMode mode) {
  switch (mode) {
    case ReconMode::full: return "full";
    case ReconMode::ppm_only: return "ppm_only";
    case ReconMode::wpm_only: return "wpm_only";
    default: return "baseline";
  }
}

TrainDomain parse_domain(const std::string& name) {
  if (name == "projection") return TrainDomain::projection;
  if (name == "wavelet") return TrainDomain::wavelet;
  if (name == "plain") return TrainDomain::plain;
  throw ArgumentError("unknown training domain '" + name +
                      "' (expected projection, wavelet or plain)");
}

std::string domain_name(TrainDomain domain) {
  switch (domain) {
    case TrainDomain::projection: return "projection";
    case TrainDomain::wavelet: return "wavelet";
    default: return "plain";
  }
}

std::vector<Sino> training_set(std::span<const Sino> sinograms, TrainDomain domain,
                               const MaskParams& mask, Rng& rng) {
  std::vector<Sino> out;
  for (const Sino& s : sinograms) {
    if (s.channels() != 2) {
      throw ShapeError("training_set: expects 2-channel sinograms, got " + s.shape_string());
    }
    switch (domain) {
      case TrainDomain::projection:
        out.push_back(vct(s, generate_mask(s.rows(), s.cols(), mask, rng)));
        break;
      case TrainDomain::wavelet: {
        const auto bands = dwt2(s);
        for (Band b : kHighBands) {
          const Sino& w = bands.band(b);
          out.push_back(vct(w, generate_mask(w.rows(), w.cols(), mask, rng)));
        }
        break;
      }
      case TrainDomain::plain:
        out.push_back(s);
        break;
    }
  }
  return out;
}

OraclePrior::OraclePrior(Sino full_sinogram)
    : full_(std::move(full_sinogram)), bands_(dwt2(full_)) {
  if (full_.channels() != 2) {
    throw ShapeError("oracle prior: expects a 2-channel sinogram");
  }
}

Sino OraclePrior::score(const Sino& x, double sigma, const ScoreQuery& query) const {
  const Sino& base = query.stage == ReconStage::projection ? full_ : bands_.band(query.band);
  Sino ref;
  if (x.channels() == 6) {
    if (query.mask == nullptr) {
      throw ArgumentError("oracle prior: 6-channel query without its virtual mask");
    }
    ref = vct(base, *query.mask);
  } else {
    ref = base;
  }
  return analytic_score<float, SinogramDomain>(std::span<const Sino>(&ref, 1), x, sigma);
}

Sino initialize_state(const Sino& y, const ViewMask& mask, const FanGeometry& geom,
                      double sigma_max, Rng& rng) {
  if (y.channels() != 2 || y.rows() != geom.n_views || y.cols() != geom.n_detectors) {
    throw ShapeError("initialize_state: measurement " + y.shape_string() +
                     " does not match 2 x views x detectors of the geometry");
  }
  if (mask.n_views() != y.rows()) {
    throw ShapeError("initialize_state: view mask length does not match views");
  }
  mask.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  Sino x = y;
  for (Index c = 0; c < x.channels(); ++c) {
    for (Index v = 0; v < x.rows(); ++v) {
      if (mask.kept[v]) {
        continue;
      }
      for (Index d = 0; d < x.cols(); ++d) {
        x(c, v, d) = static_cast<float>(sigma_max * normal(rng));
      }
    }
  }
  return x;
}

ReconResult reconstruct(const Sino& y, const ViewMask& mask, const ScorePrior* ppm,
                        const ScorePrior* wpm, const ReconConfig& cfg,
                        const ImageTensor* reference) {
  cfg.schedule.validate();
  cfg.sampler.validate();
  cfg.geometry.validate();
  const ReconMode mode = cfg.mode;
  const bool use_projection = mode != ReconMode::wpm_only;
  const bool use_wavelet = mode == ReconMode::full || mode == ReconMode::wpm_only;
  const bool stacked = mode != ReconMode::baseline;
  if (use_projection) check_prior(ppm, stacked ? 6 : 2, "projection", mode);
  if (use_wavelet) check_prior(wpm, 6, "wavelet", mode);
  if (reference != nullptr && (reference->channels() != 2 ||
                               reference->rows() != cfg.geometry.image_size)) {
    throw ShapeError("reconstruct: reference image " + reference->shape_string() +
                     " does not match the geometry");
  }

  Rng rng(cfg.sampler.seed);
  Sino x = initialize_state(y, mask, cfg.geometry, cfg.schedule.sigma_max, rng);
  const double y_norm = std::sqrt(squared_norm(y));
  const double limit = cfg.divergence_factor * std::max(y_norm, 1e-12);

  ReconResult result;
  auto record = [&](Index level, const std::string& stage, bool corrected) {
    const double norm = std::sqrt(squared_norm(x));
    if (!std::isfinite(norm) || norm > limit) {
      throw DivergenceError("reconstruct: state norm " + std::to_string(norm) + " exceeds " +
                            std::to_string(cfg.divergence_factor) +
                            " x measurement norm at level " + std::to_string(level) + " (" +
                            stage + ")");
    }
    TraceEntry e;
    e.level = level;
    e.sigma = cfg.schedule.level(level - 1);
    e.stage = stage;
    e.corrector_applied = corrected;
    if (reference != nullptr) {
      const MetricReport m = evaluate(fbp(x, cfg.geometry), *reference);
      e.psnr = {m.channels[0].psnr, m.channels[1].psnr};
      e.ssim = {m.channels[0].ssim, m.channels[1].ssim};
    }
    result.trace.push_back(std::move(e));
  };

  for (Index i = cfg.schedule.n_levels - 1; i >= 1; --i) {
    if (use_projection) {
      if (stacked) {
        const VirtualMask vm = generate_mask(x.rows(), x.cols(), cfg.mask, rng);
        const ScoreQuery q{ReconStage::projection, Band::ll, &vm};
        const ScoreFn<Sino> score = [&](const Sino& s, double sigma) {
          return ppm->score(s, sigma, q);
        };
        PcOutcome pc = predict_correct(vct(x, vm), i, cfg, score, rng);
        x = ivct(data_consistency(pc.x, y, mask, &vm), vm);
        record(i, "projection", pc.corrected);
      } else {
        const ScoreQuery q{ReconStage::projection, Band::ll, nullptr};
        const ScoreFn<Sino> score = [&](const Sino& s, double sigma) {
          return ppm->score(s, sigma, q);
        };
        PcOutcome pc = predict_correct(x, i, cfg, score, rng);
        x = data_consistency(pc.x, y, mask);
        record(i, "projection", pc.corrected);
      }
    }
    if (use_wavelet) {
      for (Band b : kHighBands) {
        auto bands = dwt2(x);
        Sino& w = bands.band(b);
        const VirtualMask vm = generate_mask(w.rows(), w.cols(), cfg.mask, rng);
        const ScoreQuery q{ReconStage::wavelet, b, &vm};
        const ScoreFn<Sino> score = [&](const Sino& s, double sigma) {
          return wpm->score(s, sigma, q);
        };
        PcOutcome pc = predict_correct(vct(w, vm), i, cfg, score, rng);
        w = ivct(pc.x, vm);
        x = data_consistency(idwt2(bands), y, mask);
        record(i, band_name(b), pc.corrected);
      }
    }
  }

  result.sinogram = x;
  result.image = fbp(x, cfg.geometry);
  if (!result.image.all_finite()) {
    throw DivergenceError("reconstruct: non-finite values in the reconstruction");
  }
  return result;
}

}  // namespace vip
