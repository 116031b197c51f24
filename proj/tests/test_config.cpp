#include "doctest.h"

#include <fstream>

#include "test_util.hpp"
#include "vip/config.hpp"

using namespace vip;

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.sde.sigma_min == 0.01);
  CHECK(c.sde.sigma_max == 378.0);
  CHECK(c.sampler.snr == 0.075);
  CHECK(c.vct.zeta == 2.81);
  CHECK(c.train.learning_rate == 0.0002);
  CHECK(c.geom.detector_width == 41.3);
  CHECK(c.geom.src_to_center == 40.0);
}

TEST_CASE("parsing") {
  const auto c = parse_config(
      "# desk\n"
      "geom.n_views = 360\n"
      "\n"
      "sampler.n_levels=50   # short run\n"
      "vct.zeta=3.0\n"
      "seed=12345678901\n");
  CHECK(c.geom.n_views == 360);
  CHECK(c.sampler.n_levels == 50);
  CHECK(c.vct.zeta == 3.0);
  CHECK(c.seed == 12345678901ULL);
}

TEST_CASE("resolved text parses back to the same configuration") {
  RunConfig c;
  c.set("geom.pixel_size", "0.15");
  c.set("train.batch_size", "8");
  const auto back = parse_config(c.to_string());
  CHECK(back.to_string() == c.to_string());
  CHECK(back.geom.pixel_size == 0.15);
  for (const auto& key : config_keys()) {
    CHECK(c.to_string().find(key.name + "=") != std::string::npos);
  }
}

TEST_CASE("errors name the key") {
  try {
    parse_config("geom.n_views=180\nsampler.steps=3\n", "run.cfg");
    FAIL("expected error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sampler.steps") != std::string::npos);
    CHECK(msg.find("run.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("vct.zeta=abc"), ConfigError);
  CHECK_THROWS_AS(parse_config("geom.n_views=1.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("just text"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("finalize propagates shared settings and validates") {
  RunConfig c;
  c.set("seed", "9");
  c.set("sampler.n_levels", "30");
  c.finalize();
  CHECK(c.sde.n_levels == 30);
  CHECK(c.sampler.seed == 9);
  CHECK(c.train.seed == 9);
  c.set("geom.detector_width", "3");
  CHECK_THROWS_AS(c.finalize(), ConfigError);
}

TEST_CASE("config files") {
  const auto path = test::temp_path("run.cfg");
  {
    std::ofstream os(path);
    os << "geom.n_detectors=256\n";
  }
  CHECK(load_config(path).geom.n_detectors == 256);
}
