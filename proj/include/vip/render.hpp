#pragma once

#include <filesystem>
#include <optional>

#include "vip/tensor.hpp"

namespace vip {

/// Display window for 8-bit renders. Unset bounds fall back to the plane's
/// own minimum / maximum.
struct Window {
  std::optional<double> min;
  std::optional<double> max;
};

/// Maps a plane linearly onto 0..255 through the window, clamping outside.
Plane<std::uint8_t> to_gray8(const Plane<float>& plane, const Window& window = {});

/// Binary 8-bit PGM (P5).
void write_pgm(const std::filesystem::path& path, const Plane<std::uint8_t>& gray);

/// 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const Plane<std::uint8_t>& gray);

/// Picks PNG or PGM from the file extension.
void write_image(const std::filesystem::path& path, const Plane<float>& plane,
                 const Window& window = {});

}  // namespace vip
