#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "vip/diffusion.hpp"
#include "vip/random.hpp"
#include "vip/tensor.hpp"

namespace vip {

inline constexpr Index kScoreNetStages = 4;
inline constexpr std::array<Index, 3> kScoreNetHidden = {32, 64, 32};
inline constexpr Index kTimeFeatures = 16;

/// Weights of the time-conditioned score network.
///
/// Four 3x3 "same" convolutions with widths c_in -> 32 -> 64 -> 32 -> c_in.
/// Every stage adds a per-channel bias computed linearly from 16 sinusoidal
/// features of log(sigma), then a per-channel affine (scale, shift); SiLU
/// follows the first three stages. The input is scaled by
/// 1 / sqrt(1 + sigma^2), a fixed skip term -sigma / sqrt(1 + sigma^2) times
/// the scaled input is added to the last stage (the optimal output for
/// unit-variance Gaussian data, so the convolutions only learn a residual),
/// and the result is divided by sigma to give the score.
///
/// All parameters live in one flat vector. Per stage the blocks are, in
/// order: conv weight [out][in][3][3], conv bias [out], scale [out],
/// shift [out], time weight [out][16], time bias [out]. That order is also
/// the on-disk order.
template <typename Scalar>
class ScoreNetParams {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  ScoreNetParams() = default;

  explicit ScoreNetParams(Index c_in) : c_in_(c_in) {
    if (c_in < 1) {
      throw ArgumentError("score net: c_in must be >= 1");
    }
    Index offset = 0;
    for (Index s = 0; s < kScoreNetStages; ++s) {
      const Index in = in_width(s);
      const Index out = out_width(s);
      auto& o = offsets_[static_cast<std::size_t>(s)];
      o.weight = offset;
      offset += out * in * 9;
      o.bias = offset;
      offset += out;
      o.scale = offset;
      offset += out;
      o.shift = offset;
      offset += out;
      o.time_weight = offset;
      offset += out * kTimeFeatures;
      o.time_bias = offset;
      offset += out;
    }
    values_ = Vector::Zero(offset);
    for (Index s = 0; s < kScoreNetStages; ++s) {
      scale(s).setOnes();
    }
  }

  Index c_in() const { return c_in_; }
  Index size() const { return values_.size(); }

  Index in_width(Index stage) const {
    return stage == 0 ? c_in_ : kScoreNetHidden[static_cast<std::size_t>(stage - 1)];
  }
  Index out_width(Index stage) const {
    return stage == kScoreNetStages - 1 ? c_in_ : kScoreNetHidden[static_cast<std::size_t>(stage)];
  }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }

  MatrixMap weight(Index s) { return matrix(at(s).weight, out_width(s), in_width(s) * 9); }
  ConstMatrixMap weight(Index s) const { return matrix(at(s).weight, out_width(s), in_width(s) * 9); }
  VectorMap bias(Index s) { return vector(at(s).bias, out_width(s)); }
  ConstVectorMap bias(Index s) const { return vector(at(s).bias, out_width(s)); }
  VectorMap scale(Index s) { return vector(at(s).scale, out_width(s)); }
  ConstVectorMap scale(Index s) const { return vector(at(s).scale, out_width(s)); }
  VectorMap shift(Index s) { return vector(at(s).shift, out_width(s)); }
  ConstVectorMap shift(Index s) const { return vector(at(s).shift, out_width(s)); }
  MatrixMap time_weight(Index s) { return matrix(at(s).time_weight, out_width(s), kTimeFeatures); }
  ConstMatrixMap time_weight(Index s) const {
    return matrix(at(s).time_weight, out_width(s), kTimeFeatures);
  }
  VectorMap time_bias(Index s) { return vector(at(s).time_bias, out_width(s)); }
  ConstVectorMap time_bias(Index s) const { return vector(at(s).time_bias, out_width(s)); }

  /// Same architecture, every value zero (gradient accumulator).
  ScoreNetParams zeros_like() const {
    ScoreNetParams z = *this;
    z.values_.setZero();
    return z;
  }

  template <typename NewScalar>
  ScoreNetParams<NewScalar> cast() const {
    ScoreNetParams<NewScalar> out(c_in_);
    out.values() = values_.template cast<NewScalar>();
    return out;
  }

 private:
  struct Offsets {
    Index weight = 0, bias = 0, scale = 0, shift = 0, time_weight = 0, time_bias = 0;
  };
  const Offsets& at(Index s) const { return offsets_[static_cast<std::size_t>(s)]; }

  MatrixMap matrix(Index off, Index r, Index c) { return MatrixMap(values_.data() + off, r, c); }
  ConstMatrixMap matrix(Index off, Index r, Index c) const {
    return ConstMatrixMap(values_.data() + off, r, c);
  }
  VectorMap vector(Index off, Index n) { return VectorMap(values_.data() + off, n); }
  ConstVectorMap vector(Index off, Index n) const { return ConstVectorMap(values_.data() + off, n); }

  Index c_in_ = 0;
  std::array<Offsets, kScoreNetStages> offsets_{};
  Vector values_;
};

namespace net {

template <typename Scalar>
using Matrix = typename ScoreNetParams<Scalar>::Matrix;
template <typename Scalar>
using Vector = typename ScoreNetParams<Scalar>::Vector;

/// sin/cos pairs of log(sigma) at frequencies 2^(k-3), k = 0..7.
template <typename Scalar>
Vector<Scalar> time_features(double sigma) {
  Vector<Scalar> e(kTimeFeatures);
  const double ls = std::log(sigma);
  for (Index k = 0; k < kTimeFeatures / 2; ++k) {
    const double w = std::ldexp(1.0, static_cast<int>(k) - 3);
    e[2 * k] = static_cast<Scalar>(std::sin(w * ls));
    e[2 * k + 1] = static_cast<Scalar>(std::cos(w * ls));
  }
  return e;
}

/// act is channels x (rows * cols); the result has one row per
/// (channel, ky, kx) tap in weight order and one column per pixel.
template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& act, Index rows, Index cols) {
  const Index channels = act.rows();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(channels * 9, rows * cols);
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        Scalar* dst = out.row(c * 9 + ky * 3 + kx).data();
        const Scalar* src = act.row(c).data();
        const Index dy = ky - 1;
        const Index dx = kx - 1;
        const Index x0 = std::max<Index>(0, -dx);
        const Index x1 = std::min<Index>(cols, cols - dx);
        for (Index r = std::max<Index>(0, -dy); r < std::min<Index>(rows, rows - dy); ++r) {
          const Scalar* s = src + (r + dy) * cols + dx;
          Scalar* d = dst + r * cols;
          for (Index x = x0; x < x1; ++x) {
            d[x] = s[x];
          }
        }
      }
    }
  }
  return out;
}

/// Adjoint of im2col.
template <typename Scalar>
Matrix<Scalar> col2im(const Matrix<Scalar>& col, Index channels, Index rows, Index cols) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(channels, rows * cols);
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < 3; ++ky) {
      for (Index kx = 0; kx < 3; ++kx) {
        const Scalar* src = col.row(c * 9 + ky * 3 + kx).data();
        Scalar* dst = out.row(c).data();
        const Index dy = ky - 1;
        const Index dx = kx - 1;
        const Index x0 = std::max<Index>(0, -dx);
        const Index x1 = std::min<Index>(cols, cols - dx);
        for (Index r = std::max<Index>(0, -dy); r < std::min<Index>(rows, rows - dy); ++r) {
          Scalar* d = dst + (r + dy) * cols + dx;
          const Scalar* s = src + r * cols;
          for (Index x = x0; x < x1; ++x) {
            d[x] += s[x];
          }
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Scalar sigmoid(Scalar v) {
  return Scalar(1) / (Scalar(1) + std::exp(-v));
}

/// Intermediates kept for the backward pass.
template <typename Scalar>
struct Cache {
  Index rows = 0;
  Index cols = 0;
  Vector<Scalar> features;
  std::array<Matrix<Scalar>, kScoreNetStages> im2col;
  std::array<Matrix<Scalar>, kScoreNetStages> conv;    // before the affine
  std::array<Matrix<Scalar>, kScoreNetStages> affine;  // after the affine, before SiLU
};

/// Raw network output (channels x pixels) for input x at noise level sigma,
/// skip term included, before the division by sigma. Fills cache when given.
template <typename Scalar, typename Domain>
Matrix<Scalar> forward(const ScoreNetParams<Scalar>& params, const Tensor<Scalar, Domain>& x,
                       double sigma, Cache<Scalar>* cache = nullptr) {
  if (x.channels() != params.c_in()) {
    throw ShapeError("score net: expects " + std::to_string(params.c_in()) +
                     " channels, got " + std::to_string(x.channels()));
  }
  if (!(sigma > 0.0)) {
    throw ArgumentError("score net: sigma must be > 0");
  }
  const Index rows = x.rows();
  const Index cols = x.cols();
  const Vector<Scalar> features = time_features<Scalar>(sigma);
  const auto input_scale = static_cast<Scalar>(1.0 / std::sqrt(1.0 + sigma * sigma));
  Matrix<Scalar> act = Eigen::Map<const Matrix<Scalar>>(x.data(), x.channels(), rows * cols);
  act *= input_scale;
  const Matrix<Scalar> skip = static_cast<Scalar>(-sigma) * input_scale * act;
  if (cache != nullptr) {
    cache->rows = rows;
    cache->cols = cols;
    cache->features = features;
  }
  for (Index s = 0; s < kScoreNetStages; ++s) {
    Matrix<Scalar> col = im2col<Scalar>(act, rows, cols);
    Matrix<Scalar> z = params.weight(s) * col;
    const Vector<Scalar> channel_bias =
        params.bias(s) + params.time_weight(s) * features + params.time_bias(s);
    z.array().colwise() += channel_bias.array();
    Matrix<Scalar> y =
        (z.array().colwise() * params.scale(s).array()).colwise() + params.shift(s).array();
    if (s + 1 < kScoreNetStages) {
      act = y.unaryExpr([](Scalar v) { return v * sigmoid(v); });
    } else {
      act = y;
    }
    if (cache != nullptr) {
      cache->im2col[s] = std::move(col);
      cache->conv[s] = std::move(z);
      cache->affine[s] = std::move(y);
    }
  }
  return act + skip;
}

/// Gradient of a scalar loss with respect to every parameter, given the
/// loss gradient with respect to the raw network output.
template <typename Scalar>
ScoreNetParams<Scalar> backward(const ScoreNetParams<Scalar>& params, const Cache<Scalar>& cache,
                                const Matrix<Scalar>& d_out) {
  ScoreNetParams<Scalar> grad = params.zeros_like();
  Matrix<Scalar> d_affine = d_out;
  for (Index s = kScoreNetStages - 1; s >= 0; --s) {
    const Matrix<Scalar>& z = cache.conv[s];
    grad.scale(s) = (d_affine.array() * z.array()).rowwise().sum().matrix();
    grad.shift(s) = d_affine.rowwise().sum();
    const Matrix<Scalar> d_conv = d_affine.array().colwise() * params.scale(s).array();
    const Vector<Scalar> d_bias = d_conv.rowwise().sum();
    grad.bias(s) = d_bias;
    grad.time_bias(s) = d_bias;
    grad.time_weight(s) = d_bias * cache.features.transpose();
    grad.weight(s).noalias() = d_conv * cache.im2col[s].transpose();
    if (s > 0) {
      const Matrix<Scalar> d_col = params.weight(s).transpose() * d_conv;
      const Matrix<Scalar> d_act =
          col2im<Scalar>(d_col, params.in_width(s), cache.rows, cache.cols);
      d_affine = d_act.binaryExpr(cache.affine[s - 1], [](Scalar g, Scalar v) {
        const Scalar sg = sigmoid(v);
        return g * sg * (Scalar(1) + v * (Scalar(1) - sg));
      });
    }
  }
  return grad;
}

}  // namespace net

/// Kaiming-normal conv and time weights (variance 2 / fan_in), zero biases
/// and shifts, unit scales. Draws stage by stage, conv weights first.
template <typename Scalar>
ScoreNetParams<Scalar> init_params(Index c_in, Rng& rng) {
  ScoreNetParams<Scalar> p(c_in);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index s = 0; s < kScoreNetStages; ++s) {
    const double conv_std = std::sqrt(2.0 / static_cast<double>(p.in_width(s) * 9));
    auto w = p.weight(s);
    for (Index i = 0; i < w.size(); ++i) {
      w.data()[i] = static_cast<Scalar>(conv_std * normal(rng));
    }
    const double time_std = std::sqrt(2.0 / static_cast<double>(kTimeFeatures));
    auto tw = p.time_weight(s);
    for (Index i = 0; i < tw.size(); ++i) {
      tw.data()[i] = static_cast<Scalar>(time_std * normal(rng));
    }
  }
  return p;
}

/// s_theta(x, sigma) = net(x, sigma) / sigma.
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> score_eval(const ScoreNetParams<Scalar>& params,
                                  const Tensor<Scalar, Domain>& x, double sigma) {
  net::Matrix<Scalar> out = net::forward(params, x, sigma);
  out /= static_cast<Scalar>(sigma);
  return Tensor<Scalar, Domain>(
      x.channels(), x.rows(), x.cols(),
      Eigen::Map<const typename Tensor<Scalar, Domain>::Flat>(out.data(), out.size()));
}

/// Score-matching objective of the network on a batch with recorded draws,
/// with gamma(sigma) = sigma^2 weighting; optionally accumulates the
/// gradient (mean over the batch). Equals dsm_loss_with on score_eval.
template <typename Scalar, typename Domain>
double dsm_objective(const ScoreNetParams<Scalar>& params,
                     std::span<const Tensor<Scalar, Domain>> batch,
                     std::span<const DsmDraw<Tensor<Scalar, Domain>>> draws,
                     const VESchedule& schedule, ScoreNetParams<Scalar>* grad = nullptr) {
  if (batch.empty()) {
    throw ArgumentError("dsm_loss: empty batch");
  }
  if (draws.size() != batch.size()) {
    throw ArgumentError("dsm_loss: one draw per batch item required");
  }
  if (grad != nullptr) {
    *grad = params.zeros_like();
  }
  const auto inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double sigma = schedule.sigma(draws[k].t);
    const auto xt = perturb_with(batch[k], sigma, draws[k].z);
    net::Cache<Scalar> cache;
    const net::Matrix<Scalar> out = net::forward(params, xt, sigma, grad ? &cache : nullptr);
    // sigma^2 || out / sigma + z / sigma ||^2 = || out + z ||^2
    const net::Matrix<Scalar> residual =
        out + Eigen::Map<const net::Matrix<Scalar>>(draws[k].z.data(), out.rows(), out.cols());
    total += residual.template cast<double>().squaredNorm();
    if (grad != nullptr) {
      const net::Matrix<Scalar> d_out = static_cast<Scalar>(2.0 * inv_batch) * residual;
      grad->values() += net::backward(params, cache, d_out).values();
    }
  }
  return total * inv_batch;
}

/// Closed-form score of the mixture (1/K) sum_k N(reference_k, sigma^2 I):
/// sum_k w_k (reference_k - x) / sigma^2 with softmax weights
/// w_k ~ exp(-||x - reference_k||^2 / (2 sigma^2)), evaluated with log-sum-exp.
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> analytic_score(std::span<const Tensor<Scalar, Domain>> references,
                                      const Tensor<Scalar, Domain>& x, double sigma) {
  if (references.empty()) {
    throw ArgumentError("analytic_score: no references");
  }
  const double inv_var = 1.0 / (sigma * sigma);
  if (references.size() == 1) {
    require_same_shape(references[0], x, "analytic_score");
    Tensor<Scalar, Domain> out = Tensor<Scalar, Domain>::zeros_like(x);
    out.values() = ((references[0].values().template cast<double>() -
                     x.values().template cast<double>()) *
                    inv_var)
                       .template cast<Scalar>();
    return out;
  }
  std::vector<double> logits;
  logits.reserve(references.size());
  for (const auto& r : references) {
    require_same_shape(r, x, "analytic_score");
    logits.push_back(-0.5 * inv_var *
                     (r.values().template cast<double>() - x.values().template cast<double>())
                         .square()
                         .sum());
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    norm += l;
  }
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(x.size());
  for (std::size_t k = 0; k < references.size(); ++k) {
    acc += (logits[k] / norm) * references[k].values().template cast<double>();
  }
  Tensor<Scalar, Domain> out = Tensor<Scalar, Domain>::zeros_like(x);
  out.values() = ((acc - x.values().template cast<double>()) * inv_var).template cast<Scalar>();
  return out;
}

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  Index batch_size = 4;
  Index n_iters = 2000;
  /// Square crop side for training samples; 0 trains on whole tensors.
  Index patch_size = 32;
  /// Fixed held-out draws used to measure the loss before and after.
  Index eval_samples = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  ScoreNetParams<float> params;
  /// (iteration, minibatch loss) per iteration.
  std::vector<double> loss_curve;
  double initial_eval_loss = 0.0;
  double final_eval_loss = 0.0;
};

using TrainProgress = std::function<void(Index iteration, double loss)>;

/// Adam on the score-matching objective over random crops of the dataset.
/// Starts from Kaiming init unless `start` is given.
TrainResult train(std::span<const SinogramTensor> dataset, const TrainConfig& config,
                  const VESchedule& schedule, const ScoreNetParams<float>* start = nullptr,
                  const TrainProgress& progress = {});

/// VIPN parameter file:
///   "VIPN", u16 version, u32 c_in, u32 stage count, u32 x 3 hidden widths,
///   u32 time features, u32 parameter count, then f32 little-endian values
///   in ScoreNetParams layout order.
void save_params(const std::filesystem::path& path, const ScoreNetParams<float>& params);

/// expected_c_in < 0 accepts any input width.
ScoreNetParams<float> load_params(const std::filesystem::path& path, Index expected_c_in = -1);

}  // namespace vip
