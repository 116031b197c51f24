#include "vip/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace vip {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

// Shortest text that parses back to the same double.
std::string format(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

struct Entry {
  const char* name;
  const char* description;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry integer(const char* name, const char* description, T RunConfig::*section,
              Index T::*field) {
  return {name, description,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*field = parse_number<Index>(k, v);
          },
          [=](const RunConfig& c) { return std::to_string((c.*section).*field); }};
}

template <typename T>
Entry real(const char* name, const char* description, T RunConfig::*section, double T::*field) {
  return {name, description,
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            (c.*section).*field = parse_number<double>(k, v);
          },
          [=](const RunConfig& c) { return format((c.*section).*field); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      integer("geom.n_views", "views over 360 degrees (180)", &RunConfig::geom,
              &FanGeometry::n_views),
      integer("geom.n_detectors", "flat detector bins (128)", &RunConfig::geom,
              &FanGeometry::n_detectors),
      real("geom.src_to_center", "source to rotation center, cm (40)", &RunConfig::geom,
           &FanGeometry::src_to_center),
      real("geom.det_to_center", "detector to rotation center, cm (40)", &RunConfig::geom,
           &FanGeometry::det_to_center),
      real("geom.detector_width", "total detector width, cm (41.3)", &RunConfig::geom,
           &FanGeometry::detector_width),
      integer("geom.image_size", "image side in pixels (64)", &RunConfig::geom,
              &FanGeometry::image_size),
      real("geom.pixel_size", "pixel side, cm (0.3)", &RunConfig::geom,
           &FanGeometry::pixel_size),
      real("sde.sigma_min", "smallest noise level (0.01)", &RunConfig::sde,
           &VESchedule::sigma_min),
      real("sde.sigma_max", "largest noise level (378)", &RunConfig::sde,
           &VESchedule::sigma_max),
      real("sampler.snr", "corrector signal-to-noise ratio (0.075)", &RunConfig::sampler,
           &SamplerConfig::snr),
      integer("sampler.n_levels", "noise levels N of the reverse process (200)",
              &RunConfig::sampler, &SamplerConfig::n_levels),
      integer("sampler.corrector_steps", "corrector steps per level (1)", &RunConfig::sampler,
              &SamplerConfig::corrector_steps),
      real("vct.zeta", "virtual mask threshold (2.81)", &RunConfig::vct, &MaskParams::zeta),
      real("vct.mu", "mean of the mask draws (0)", &RunConfig::vct, &MaskParams::mean),
      real("vct.sigma", "standard deviation of the mask draws (1)", &RunConfig::vct,
           &MaskParams::stddev),
      real("train.learning_rate", "Adam step size (0.0002)", &RunConfig::train,
           &TrainConfig::learning_rate),
      real("train.beta1", "Adam first-moment decay (0.9)", &RunConfig::train,
           &TrainConfig::beta1),
      real("train.beta2", "Adam second-moment decay (0.999)", &RunConfig::train,
           &TrainConfig::beta2),
      real("train.eps", "Adam denominator offset (1e-8)", &RunConfig::train,
           &TrainConfig::adam_eps),
      integer("train.batch_size", "samples per step (4)", &RunConfig::train,
              &TrainConfig::batch_size),
      integer("train.n_iters", "optimizer steps (2000)", &RunConfig::train,
              &TrainConfig::n_iters),
      integer("train.patch_size", "square crop side, 0 = whole tensors (32)", &RunConfig::train,
              &TrainConfig::patch_size),
      integer("train.eval_samples", "held-out draws for the before/after loss (16)",
              &RunConfig::train, &TrainConfig::eval_samples),
      {"recon.divergence_factor", "abort when |state| > factor * |measurement| (1000)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.divergence_factor = parse_number<double>(k, v);
       },
       [](const RunConfig& c) { return format(c.divergence_factor); }},
      {"seed", "master random seed (0)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_number<std::uint64_t>(k, v);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) {
      out.push_back({e.name, e.description});
    }
    return out;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& where) {
  for (const auto& e : entries()) {
    if (key == e.name) {
      try {
        e.set(*this, key, value);
      } catch (const ConfigError& err) {
        throw ConfigError(where + err.what());
      }
      return;
    }
  }
  throw ConfigError(where + "unknown key '" + key + "'");
}

std::string RunConfig::to_string() const {
  std::string out;
  for (const auto& e : entries()) {
    out += std::string(e.name) + "=" + e.get(*this) + "\n";
  }
  return out;
}

void RunConfig::finalize() {
  sde.n_levels = sampler.n_levels;
  sampler.seed = seed;
  train.seed = seed;
  try {
    geom.validate();
    sde.validate();
    sampler.validate();
    train.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  if (!(divergence_factor > 0.0)) {
    throw ConfigError("invalid configuration: recon.divergence_factor must be > 0");
  }
}

ReconConfig RunConfig::recon_config(ReconMode mode) const {
  ReconConfig rc;
  rc.schedule = sde;
  rc.schedule.n_levels = sampler.n_levels;
  rc.sampler = sampler;
  rc.mask = vct;
  rc.mode = mode;
  rc.geometry = geom;
  rc.divergence_factor = divergence_factor;
  return rc;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::string where = source + ":" + std::to_string(number) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + "expected key=value, got '" + line + "'");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace vip
