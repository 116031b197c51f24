#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "vip/projector.hpp"
#include "vip/random.hpp"
#include "vip/tensor.hpp"
#include "vip/vct.hpp"

namespace vip {

/// Variance-exploding noise schedule sigma(t) = sigma_min *
/// (sigma_max / sigma_min)^t on t in [0, 1], discretized into n_levels
/// levels sigma_i = sigma(i / (n_levels - 1)).
struct VESchedule {
  double sigma_min = 0.01;
  double sigma_max = 378.0;
  Index n_levels = 200;

  void validate() const;
  double sigma(double t) const;
  double level(Index i) const;
};

inline void VESchedule::validate() const {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw ArgumentError("schedule: need 0 < sigma_min < sigma_max < inf");
  }
  if (n_levels < 2) {
    throw ArgumentError("schedule: n_levels must be >= 2");
  }
}

inline double VESchedule::sigma(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("schedule: t=" + std::to_string(t) + " outside [0, 1]");
  }
  return sigma_min * std::pow(sigma_max / sigma_min, t);
}

inline double VESchedule::level(Index i) const {
  if (i < 0 || i >= n_levels) {
    throw ArgumentError("schedule: level " + std::to_string(i) + " outside [0, " +
                        std::to_string(n_levels) + ")");
  }
  return sigma(static_cast<double>(i) / static_cast<double>(n_levels - 1));
}

struct SamplerConfig {
  double snr = 0.075;
  Index n_levels = 200;
  Index corrector_steps = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(snr > 0.0)) {
      throw ArgumentError("sampler: snr must be > 0");
    }
    if (n_levels < 2) {
      throw ArgumentError("sampler: n_levels must be >= 2");
    }
    if (corrector_steps < 0) {
      throw ArgumentError("sampler: corrector_steps must be >= 0");
    }
  }
};

/// s(x, sigma) -> tensor shaped like x.
template <typename T>
using ScoreFn = std::function<T(const T&, double)>;

/// x0 + sigma * z.
template <typename T>
T perturb_with(const T& x0, double sigma, const T& z) {
  require_same_shape(x0, z, "perturb");
  T out = x0;
  using S = typename T::scalar_type;
  out.values() += static_cast<S>(sigma) * z.values();
  return out;
}

/// Forward VE diffusion to time t: x0 + sigma(t) z with z ~ N(0, I).
template <typename T>
T perturb(const T& x0, double t, const VESchedule& schedule, Rng& rng) {
  const double sigma = schedule.sigma(t);
  return perturb_with(x0, sigma, normal_like(x0, rng));
}

/// A recorded draw for one batch item of the score-matching loss.
template <typename T>
struct DsmDraw {
  double t = 1.0;
  T z;
};

/// Mean over the batch of sigma^2 * || s(x_t, sigma) - (x0 - x_t) / sigma^2 ||^2
/// with x_t = x0 + sigma z and the given (t, z) per item.
template <typename T>
double dsm_loss_with(const ScoreFn<T>& score, std::span<const T> batch,
                     std::span<const DsmDraw<T>> draws, const VESchedule& schedule) {
  if (batch.empty()) {
    throw ArgumentError("dsm_loss: empty batch");
  }
  if (draws.size() != batch.size()) {
    throw ArgumentError("dsm_loss: one draw per batch item required");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double sigma = schedule.sigma(draws[k].t);
    const T xt = perturb_with(batch[k], sigma, draws[k].z);
    const T s = score(xt, sigma);
    require_same_shape(s, xt, "dsm_loss: score output");
    const auto target =
        (batch[k].values().template cast<double>() - xt.values().template cast<double>()) /
        (sigma * sigma);
    total += sigma * sigma * (s.values().template cast<double>() - target).square().sum();
  }
  return total / static_cast<double>(batch.size());
}

/// Draws t ~ U(0, 1] and z ~ N(0, I) per item (t first, then z, item by item).
template <typename T>
std::vector<DsmDraw<T>> draw_dsm(std::span<const T> batch, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<DsmDraw<T>> draws;
  draws.reserve(batch.size());
  for (const auto& x0 : batch) {
    DsmDraw<T> d;
    d.t = 1.0 - uniform(rng);
    d.z = normal_like(x0, rng);
    draws.push_back(std::move(d));
  }
  return draws;
}

template <typename T>
double dsm_loss(const ScoreFn<T>& score, std::span<const T> batch, const VESchedule& schedule,
                Rng& rng) {
  if (batch.empty()) {
    throw ArgumentError("dsm_loss: empty batch");
  }
  const auto draws = draw_dsm(batch, rng);
  return dsm_loss_with<T>(score, batch, draws, schedule);
}

/// Reverse-diffusion predictor from noise level sigma_hi down to sigma_lo:
/// x + (sigma_hi^2 - sigma_lo^2) s(x, sigma_hi) + sqrt(sigma_hi^2 - sigma_lo^2) z.
template <typename T>
T predictor_update(const T& x, double sigma_hi, double sigma_lo, const ScoreFn<T>& score,
                   const T& z) {
  using S = typename T::scalar_type;
  const double gap = sigma_hi * sigma_hi - sigma_lo * sigma_lo;
  if (gap == 0.0) {
    return x;
  }
  if (gap < 0.0) {
    throw ArgumentError("predictor: sigma_hi must be >= sigma_lo");
  }
  const T s = score(x, sigma_hi);
  require_same_shape(s, x, "predictor: score output");
  T out = x;
  out.values() += static_cast<S>(gap) * s.values() + static_cast<S>(std::sqrt(gap)) * z.values();
  return out;
}

/// Predictor step from level i to level i - 1; valid for 1 <= i <= N - 1.
template <typename T>
T predictor_step(const T& x, Index i, const VESchedule& schedule, const ScoreFn<T>& score,
                 const T& z) {
  if (i < 1 || i >= schedule.n_levels) {
    throw ArgumentError("predictor: level " + std::to_string(i) + " outside [1, " +
                        std::to_string(schedule.n_levels - 1) + "]");
  }
  return predictor_update(x, schedule.level(i), schedule.level(i - 1), score, z);
}

template <typename T>
T predictor_step(const T& x, Index i, const VESchedule& schedule, const ScoreFn<T>& score,
                 Rng& rng) {
  if (i < 1 || i >= schedule.n_levels) {
    throw ArgumentError("predictor: level " + std::to_string(i) + " outside [1, " +
                        std::to_string(schedule.n_levels - 1) + "]");
  }
  return predictor_step(x, i, schedule, score, normal_like(x, rng));
}

template <typename T>
struct CorrectorResult {
  T x;
  /// False when the score vanished and the step was skipped.
  bool applied = false;
  double step_size = 0.0;
};

/// Annealed Langevin corrector at noise level sigma with step size
/// eps = 2 (snr ||z|| / ||g||)^2 where g = s(x, sigma):
/// x + eps g + sqrt(2 eps) z. A zero score makes the step a no-op.
template <typename T>
CorrectorResult<T> corrector_update(const T& x, double sigma, const ScoreFn<T>& score,
                                    double snr, const T& z) {
  using S = typename T::scalar_type;
  const T g = score(x, sigma);
  require_same_shape(g, x, "corrector: score output");
  const double g_norm = std::sqrt(squared_norm(g));
  if (g_norm == 0.0) {
    return {x, false, 0.0};
  }
  const double z_norm = std::sqrt(squared_norm(z));
  const double ratio = snr * z_norm / g_norm;
  const double eps = 2.0 * ratio * ratio;
  T out = x;
  out.values() += static_cast<S>(eps) * g.values() + static_cast<S>(std::sqrt(2.0 * eps)) * z.values();
  return {std::move(out), true, eps};
}

template <typename T>
CorrectorResult<T> corrector_step(const T& x, Index i, const VESchedule& schedule,
                                  const ScoreFn<T>& score, double snr, const T& z) {
  if (!(snr > 0.0)) {
    throw ArgumentError("corrector: snr must be > 0");
  }
  return corrector_update(x, schedule.level(i), score, snr, z);
}

template <typename T>
CorrectorResult<T> corrector_step(const T& x, Index i, const VESchedule& schedule,
                                  const ScoreFn<T>& score, double snr, Rng& rng) {
  return corrector_step(x, i, schedule, score, snr, normal_like(x, rng));
}

/// Unconditional predictor-corrector sampling from x_init (typically
/// sigma_max-scaled noise) down to level 0: for i = N-1..1 a predictor step
/// to level i-1, then corrector_steps corrector steps at level i-1. Draws
/// predictor noise, then corrector noise, per level.
template <typename T>
T pc_sample(const T& x_init, const VESchedule& schedule, const SamplerConfig& sampler,
            const ScoreFn<T>& score, Rng& rng) {
  schedule.validate();
  sampler.validate();
  T x = x_init;
  for (Index i = schedule.n_levels - 1; i >= 1; --i) {
    x = predictor_step(x, i, schedule, score, rng);
    for (Index k = 0; k < sampler.corrector_steps; ++k) {
      x = corrector_step(x, i - 1, schedule, score, sampler.snr, rng).x;
    }
  }
  return x;
}

/// Replaces measured view rows of x_hat with the measurement. A 2-channel
/// x_hat takes y's rows directly. A 6-channel (cross-energy stacked) x_hat
/// takes the rows of vct(y, vmask), i.e. the measurement re-expressed
/// under the same virtual mask. Rows of unmeasured views are left untouched.
template <typename Scalar>
Tensor<Scalar, SinogramDomain> data_consistency(const Tensor<Scalar, SinogramDomain>& x_hat,
                                                const Tensor<Scalar, SinogramDomain>& y,
                                                const ViewMask& mask,
                                                const VirtualMask* vmask = nullptr) {
  if (y.channels() != 2) {
    throw ShapeError("data_consistency: measurement must have 2 channels");
  }
  if (x_hat.rows() != y.rows() || x_hat.cols() != y.cols()) {
    throw ShapeError("data_consistency: state " + x_hat.shape_string() + " vs measurement " +
                     y.shape_string());
  }
  if (mask.n_views() != y.rows()) {
    throw ShapeError("data_consistency: view mask length does not match views");
  }
  Tensor<Scalar, SinogramDomain> target;
  if (x_hat.channels() == 6) {
    if (vmask == nullptr) {
      throw ArgumentError("data_consistency: 6-channel state needs its virtual mask");
    }
    target = vct(y, *vmask);
  } else if (x_hat.channels() == 2) {
    target = y;
  } else {
    throw ShapeError("data_consistency: state must have 2 or 6 channels");
  }
  Tensor<Scalar, SinogramDomain> out = x_hat;
  for (Index c = 0; c < out.channels(); ++c) {
    auto dst = out.channel(c);
    const auto src = target.channel(c);
    for (Index v = 0; v < out.rows(); ++v) {
      if (mask.kept[v]) {
        dst.row(v) = src.row(v);
      }
    }
  }
  return out;
}

}  // namespace vip
