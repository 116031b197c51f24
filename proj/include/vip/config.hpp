#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vip/diffusion.hpp"
#include "vip/projector.hpp"
#include "vip/recon.hpp"
#include "vip/scorenet.hpp"
#include "vip/vct.hpp"

namespace vip {

/// Everything a CLI run can be configured with. Text form is one
/// `key=value` per line; `#` starts a comment; blank lines are ignored.
struct RunConfig {
  FanGeometry geom;
  VESchedule sde;
  SamplerConfig sampler;
  MaskParams vct;
  TrainConfig train;
  std::uint64_t seed = 0;
  double divergence_factor = 1e3;

  /// Applies one `key=value` assignment; unknown keys and malformed values
  /// throw ConfigError naming the key. `where` prefixes the message.
  void set(const std::string& key, const std::string& value, const std::string& where = "");

  /// Resolved configuration, one `key=value` per line, in documentation order.
  std::string to_string() const;

  /// Copies seed and level count into the sampler, schedule and trainer and
  /// validates every section.
  void finalize();

  /// Reconstruction settings drawn from the geometry, schedule, sampler and
  /// mask sections.
  ReconConfig recon_config(ReconMode mode) const;
};

struct ConfigKey {
  std::string name;
  std::string description;
};

/// Every accepted key with its meaning, in documentation order.
const std::vector<ConfigKey>& config_keys();

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace vip
