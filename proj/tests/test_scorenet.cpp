#include "doctest.h"

#include <fstream>

#include "test_util.hpp"
#include "vip/scorenet.hpp"

using namespace vip;

namespace {

using Sino = SinogramTensor;
using SinoD = Tensor<double, SinogramDomain>;

double cosine(const Sino& a, const Sino& b) {
  return dot(a, b) / std::sqrt(squared_norm(a) * squared_norm(b));
}

}  // namespace

TEST_CASE("parameter layout") {
  const ScoreNetParams<float> p(6);
  const Index expected = (32 * 6 * 9 + 32 * 4 + 32 * 16) + (64 * 32 * 9 + 64 * 4 + 64 * 16) +
                         (32 * 64 * 9 + 32 * 4 + 32 * 16) + (6 * 32 * 9 + 6 * 4 + 6 * 16);
  CHECK(p.size() == expected);
  CHECK(p.scale(2).size() == 32);
  CHECK((p.scale(3).array() == 1.0f).all());
  CHECK(p.weight(1).rows() == 64);
  CHECK(p.weight(1).cols() == 32 * 9);
  CHECK_THROWS_AS(ScoreNetParams<float>(0), ArgumentError);
}

TEST_CASE("Kaiming initialization") {
  Rng a(1);
  Rng b(1);
  const auto pa = init_params<float>(6, a);
  CHECK(pa.values() == init_params<float>(6, b).values());

  for (Index stage = 0; stage < kScoreNetStages; ++stage) {
    CHECK((pa.bias(stage).array() == 0.0f).all());
    CHECK((pa.shift(stage).array() == 0.0f).all());
    CHECK((pa.scale(stage).array() == 1.0f).all());
  }

  // Pool several draws of stage 1 (fan-in 32 * 9) to reach 1e5 weights.
  Rng rng(2);
  std::vector<float> w;
  while (w.size() < 100000) {
    const auto p = init_params<float>(6, rng);
    const auto m = p.weight(1);
    w.insert(w.end(), m.data(), m.data() + m.size());
  }
  const Eigen::Map<const Eigen::ArrayXf> all(w.data(), static_cast<Index>(w.size()));
  const double mean = all.cast<double>().mean();
  const double var = (all.cast<double>() - mean).square().mean();
  CHECK(std::abs(var / (2.0 / (32 * 9)) - 1.0) < 0.1);
}

TEST_CASE("score evaluation") {
  Rng rng(3);
  const auto p = init_params<float>(6, rng);
  const Sino zero(6, 16, 16);
  CHECK(score_eval(p, zero, 1.0).all_finite());

  const auto x = test::random_tensor(6, 16, 16, rng);
  const auto s1 = score_eval(p, x, 0.7);
  CHECK(s1.same_shape(x));
  CHECK(score_eval(p, x, 0.7) == s1);

  auto dx = test::random_tensor(6, 16, 16, rng);
  dx.values() *= static_cast<float>(1e-4 / std::sqrt(squared_norm(dx)));
  Sino moved = x;
  moved.values() += dx.values();
  Sino change = score_eval(p, moved, 0.7);
  change.values() -= s1.values();
  CHECK(std::sqrt(squared_norm(change)) < 1.0);

  CHECK_THROWS_AS(score_eval(p, Sino(2, 16, 16), 1.0), ShapeError);
  CHECK_THROWS_AS(score_eval(p, x, 0.0), ArgumentError);
}

TEST_CASE("network objective matches the generic score-matching loss") {
  Rng rng(4);
  VESchedule s;
  const auto p = init_params<float>(2, rng);
  std::vector<Sino> batch{test::random_tensor(2, 8, 8, rng), test::random_tensor(2, 8, 8, rng)};
  const auto draws = draw_dsm<Sino>(batch, rng);
  const ScoreFn<Sino> f = [&](const Sino& x, double sigma) { return score_eval(p, x, sigma); };
  const double generic = dsm_loss_with<Sino>(f, batch, draws, s);
  const double net = dsm_objective<float, SinogramDomain>(p, batch, draws, s);
  CHECK(net == doctest::Approx(generic).epsilon(1e-4));
}

TEST_CASE("backpropagation matches central differences") {
  Rng rng(5);
  VESchedule s;
  auto p = init_params<double>(6, rng);
  // Non-trivial affine and time parameters so every gradient path is live.
  std::normal_distribution<double> normal(0.0, 0.1);
  for (Index st = 0; st < kScoreNetStages; ++st) {
    for (Index i = 0; i < p.bias(st).size(); ++i) {
      p.bias(st)[i] = normal(rng);
      p.shift(st)[i] = normal(rng);
      p.scale(st)[i] = 1.0 + normal(rng);
      p.time_bias(st)[i] = normal(rng);
    }
  }
  std::vector<SinoD> batch{test::random_tensor<double>(6, 8, 8, rng)};
  const auto draws = draw_dsm<SinoD>(batch, rng);
  ScoreNetParams<double> grad;
  dsm_objective<double, SinogramDomain>(p, batch, draws, s, &grad);

  std::uniform_int_distribution<Index> pick(0, p.size() - 1);
  const double floor = 1e-6 * grad.values().cwiseAbs().maxCoeff();
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    const Index i = pick(rng);
    const double h = 1e-3;
    auto up = p;
    auto down = p;
    up.values()[i] += h;
    down.values()[i] -= h;
    const double fd = (dsm_objective<double, SinogramDomain>(up, batch, draws, s) -
                       dsm_objective<double, SinogramDomain>(down, batch, draws, s)) /
                      (2.0 * h);
    const double an = grad.values()[i];
    const double denom = std::max({std::abs(fd), std::abs(an), floor});
    CHECK(std::abs(fd - an) / denom < 1e-2);
    ++checked;
  }
  CHECK(checked >= 50);
}

TEST_CASE("analytic mixture score") {
  Rng rng(6);
  const auto r1 = test::random_tensor(2, 4, 4, rng);
  std::vector<Sino> one{r1};
  CHECK(squared_norm(analytic_score<float, SinogramDomain>(one, r1, 0.3)) == 0.0);

  const auto x = test::random_tensor(2, 4, 4, rng);
  const auto s = analytic_score<float, SinogramDomain>(one, x, 0.3);
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(s.values()[i] ==
          doctest::Approx((r1.values()[i] - x.values()[i]) / 0.09).epsilon(1e-6));
  }

  Sino neg = r1;
  neg.values() = -r1.values();
  std::vector<Sino> pair{r1, neg};
  CHECK(std::sqrt(squared_norm(analytic_score<float, SinogramDomain>(pair, Sino(2, 4, 4), 0.5))) <
        1e-4);

  // Far from the midpoint the nearer reference dominates even when the raw
  // exponents underflow.
  const auto near = analytic_score<float, SinogramDomain>(pair, r1, 1e-3);
  CHECK(near.all_finite());
  CHECK(std::sqrt(squared_norm(near)) < 1e-3);
  const auto empty = [&] { analytic_score<float, SinogramDomain>(std::span<const Sino>(), x, 1.0); };
  CHECK_THROWS_AS(empty(), ArgumentError);
}

TEST_CASE("parameter files") {
  Rng rng(7);
  const auto p = init_params<float>(6, rng);
  const auto path = test::temp_path("net.vipn");
  save_params(path, p);
  const auto q = load_params(path, 6);
  CHECK(q.values() == p.values());
  const auto x = test::random_tensor(6, 8, 8, rng);
  CHECK(score_eval(p, x, 2.0) == score_eval(q, x, 2.0));
  CHECK_THROWS_AS(load_params(path, 2), FormatError);

  std::vector<char> bytes;
  {
    std::ifstream is(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(is), {});
  }
  auto corrupt = [&](std::size_t offset, char value) {
    auto b = bytes;
    b[offset] = value;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  corrupt(0, 'X');
  CHECK_THROWS_AS(load_params(path), FormatError);
  corrupt(10, 5);  // stage count
  CHECK_THROWS_AS(load_params(path), FormatError);
  corrupt(14, 33);  // first hidden width
  CHECK_THROWS_AS(load_params(path), FormatError);
  {
    auto b = bytes;
    b.resize(b.size() - 2);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(b.data(), static_cast<std::streamsize>(b.size()));
  }
  CHECK_THROWS_AS(load_params(path), TruncationError);
}

TEST_CASE("training") {
  Rng rng(8);
  Sino image(2, 16, 16);
  for (Index r = 0; r < 16; ++r)
    for (Index c = 0; c < 16; ++c) {
      image(0, r, c) = static_cast<float>(1.0 + std::sin(0.4 * r) * std::cos(0.3 * c));
      image(1, r, c) = 1.1f * image(0, r, c);
    }
  std::vector<Sino> data{image};
  VESchedule s;
  TrainConfig cfg;
  cfg.patch_size = 0;
  cfg.n_iters = 2000;
  cfg.seed = 3;

  SUBCASE("loss halves and the score points back to the data") {
    const auto a = train(data, cfg, s);
    CHECK(a.loss_curve.size() == 2000);
    CHECK(a.final_eval_loss < 0.5 * a.initial_eval_loss);
    const double sigma = 10.0 * s.sigma_min;
    double mean_cos = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto z = normal_like(image, rng);
      const auto sc = score_eval(a.params, perturb_with(image, sigma, z), sigma);
      Sino target = z;
      target.values() /= static_cast<float>(-sigma);
      mean_cos += cosine(sc, target) / 20.0;
    }
    CHECK(mean_cos > 0.5);
  }
  SUBCASE("deterministic and inert at zero learning rate") {
    cfg.n_iters = 20;
    const auto a = train(data, cfg, s);
    const auto b = train(data, cfg, s);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.params.values() == b.params.values());
    cfg.learning_rate = 0.0;
    const auto frozen = train(data, cfg, s, &a.params);
    CHECK(frozen.params.values() == a.params.values());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train(std::span<const Sino>(), cfg, s), ArgumentError);
    Sino bad = image;
    bad(0, 3, 3) = std::numeric_limits<float>::quiet_NaN();
    std::vector<Sino> nan_data{bad};
    cfg.n_iters = 3;
    cfg.eval_samples = 1;
    try {
      train(nan_data, cfg, s);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(train(data, cfg, s), ArgumentError);
  }
}
