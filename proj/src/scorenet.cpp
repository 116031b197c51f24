#include "vip/scorenet.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace vip {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'I', 'P', 'N'};
constexpr std::uint16_t kVersion = 1;

void put_le(std::vector<char>& out, std::uint32_t v, int width) {
  for (int i = 0; i < width; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint32_t get_le(const std::vector<char>& in, std::size_t& pos, int width,
                     const std::filesystem::path& path) {
  if (pos + width > in.size()) {
    throw TruncationError(path.string() + ": parameter file ends early");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += width;
  return v;
}

SinogramTensor crop(const SinogramTensor& x, Index size, Rng& rng) {
  const Index h = std::min(size, x.rows());
  const Index w = std::min(size, x.cols());
  std::uniform_int_distribution<Index> pick_r(0, x.rows() - h);
  std::uniform_int_distribution<Index> pick_c(0, x.cols() - w);
  const Index r0 = pick_r(rng);
  const Index c0 = pick_c(rng);
  SinogramTensor out(x.channels(), h, w);
  for (Index c = 0; c < x.channels(); ++c) {
    out.channel(c) = x.channel(c).block(r0, c0, h, w);
  }
  return out;
}

struct Batch {
  std::vector<SinogramTensor> items;
  std::vector<DsmDraw<SinogramTensor>> draws;
};

Batch draw_batch(std::span<const SinogramTensor> dataset, Index count, Index patch, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  Batch b;
  for (Index k = 0; k < count; ++k) {
    const auto& src = dataset[pick(rng)];
    b.items.push_back(patch > 0 ? crop(src, patch, rng) : src);
  }
  b.draws = draw_dsm<SinogramTensor>(b.items, rng);
  return b;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("train: learning_rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    throw ArgumentError("train: need 0 <= beta1, beta2 < 1 and eps > 0");
  }
  if (batch_size < 1 || n_iters < 0 || patch_size < 0 || eval_samples < 1) {
    throw ArgumentError("train: batch_size >= 1, n_iters >= 0, patch_size >= 0, eval_samples >= 1");
  }
}

TrainResult train(std::span<const SinogramTensor> dataset, const TrainConfig& config,
                  const VESchedule& schedule, const ScoreNetParams<float>* start,
                  const TrainProgress& progress) {
  config.validate();
  schedule.validate();
  if (dataset.empty()) {
    throw ArgumentError("train: empty dataset");
  }
  const Index c_in = dataset.front().channels();
  for (const auto& x : dataset) {
    if (x.channels() != c_in) {
      throw ShapeError("train: dataset mixes channel counts");
    }
  }

  Rng rng(config.seed);
  Rng eval_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  TrainResult result;
  result.params = start != nullptr ? *start : init_params<float>(c_in, rng);
  if (result.params.c_in() != c_in) {
    throw ShapeError("train: starting parameters expect " + std::to_string(result.params.c_in()) +
                     " channels, dataset has " + std::to_string(c_in));
  }
  auto& params = result.params;

  const Batch eval = draw_batch(dataset, config.eval_samples, config.patch_size, eval_rng);
  auto eval_loss = [&] {
    return dsm_objective<float, SinogramDomain>(params, eval.items, eval.draws, schedule);
  };
  result.initial_eval_loss = eval_loss();

  Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
  Eigen::VectorXd theta = params.values().cast<double>();
  ScoreNetParams<float> grad = params.zeros_like();
  double b1t = 1.0;
  double b2t = 1.0;

  result.loss_curve.reserve(static_cast<std::size_t>(config.n_iters));
  for (Index it = 0; it < config.n_iters; ++it) {
    const Batch batch = draw_batch(dataset, config.batch_size, config.patch_size, rng);
    const double loss =
        dsm_objective<float, SinogramDomain>(params, batch.items, batch.draws, schedule, &grad);
    if (!std::isfinite(loss) || !grad.values().allFinite()) {
      double worst = 0.0;
      for (const auto& d : batch.draws) {
        worst = std::max(worst, schedule.sigma(d.t));
      }
      throw DivergenceError("train: non-finite loss at iteration " + std::to_string(it) +
                            " (largest sigma in batch " + std::to_string(worst) + ")");
    }
    result.loss_curve.push_back(loss);
    if (progress) {
      progress(it, loss);
    }

    const Eigen::VectorXd g = grad.values().cast<double>();
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    b1t *= config.beta1;
    b2t *= config.beta2;
    const double step = config.learning_rate / (1.0 - b1t);
    const double v_scale = 1.0 / (1.0 - b2t);
    theta.array() -=
        step * m.array() / ((v.array() * v_scale).sqrt() + config.adam_eps);
    params.values() = theta.cast<float>();
  }
  result.final_eval_loss = eval_loss();
  return result;
}

void save_params(const std::filesystem::path& path, const ScoreNetParams<float>& params) {
  if (params.size() == 0) {
    throw ArgumentError("save_params: empty parameter set");
  }
  std::vector<char> out(kMagic.begin(), kMagic.end());
  put_le(out, kVersion, 2);
  put_le(out, static_cast<std::uint32_t>(params.c_in()), 4);
  put_le(out, static_cast<std::uint32_t>(kScoreNetStages), 4);
  for (Index w : kScoreNetHidden) {
    put_le(out, static_cast<std::uint32_t>(w), 4);
  }
  put_le(out, static_cast<std::uint32_t>(kTimeFeatures), 4);
  put_le(out, static_cast<std::uint32_t>(params.size()), 4);
  for (Index i = 0; i < params.size(); ++i) {
    put_le(out, std::bit_cast<std::uint32_t>(params.values()[i]), 4);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) {
    throw Error("write to " + path.string() + " failed");
  }
}

ScoreNetParams<float> load_params(const std::filesystem::path& path, Index expected_c_in) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error("cannot open " + path.string() + " for reading");
  }
  const std::vector<char> in((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  if (in.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
    throw FormatError(path.string() + ": bad magic, not a VIPN file");
  }
  std::size_t pos = kMagic.size();
  const auto version = get_le(in, pos, 2, path);
  if (version != kVersion) {
    throw FormatError(path.string() + ": unsupported VIPN version " + std::to_string(version));
  }
  const auto c_in = static_cast<Index>(get_le(in, pos, 4, path));
  const auto stages = static_cast<Index>(get_le(in, pos, 4, path));
  if (stages != kScoreNetStages) {
    throw FormatError(path.string() + ": file has " + std::to_string(stages) +
                      " stages, expected " + std::to_string(kScoreNetStages));
  }
  for (Index w : kScoreNetHidden) {
    const auto got = static_cast<Index>(get_le(in, pos, 4, path));
    if (got != w) {
      throw FormatError(path.string() + ": hidden width " + std::to_string(got) +
                        " does not match " + std::to_string(w));
    }
  }
  const auto features = static_cast<Index>(get_le(in, pos, 4, path));
  if (features != kTimeFeatures) {
    throw FormatError(path.string() + ": time embedding size " + std::to_string(features) +
                      " does not match " + std::to_string(kTimeFeatures));
  }
  if (c_in < 1) {
    throw FormatError(path.string() + ": input width 0");
  }
  if (expected_c_in >= 0 && c_in != expected_c_in) {
    throw FormatError(path.string() + ": network expects " + std::to_string(c_in) +
                      " channels, caller needs " + std::to_string(expected_c_in));
  }
  ScoreNetParams<float> params(c_in);
  const auto count = static_cast<Index>(get_le(in, pos, 4, path));
  if (count != params.size()) {
    throw FormatError(path.string() + ": parameter count " + std::to_string(count) +
                      " does not match architecture (" + std::to_string(params.size()) + ")");
  }
  if (in.size() - pos != 4 * static_cast<std::size_t>(count)) {
    throw TruncationError(path.string() + ": payload size does not match parameter count");
  }
  for (Index i = 0; i < count; ++i) {
    params.values()[i] = std::bit_cast<float>(get_le(in, pos, 4, path));
  }
  return params;
}

}  // namespace vip
