#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vip/projector.hpp"
#include "vip/tensor.hpp"
#include "vip/vct.hpp"

namespace vip {

/// VIPT container, byte layout:
///
///   "VIPT"            4 bytes magic
///   version           u16 little-endian (currently 1)
///   rank              u8
///   kind              u8  (0 = image, 1 = sinogram, 2 = mask)
///   dims              rank x u32 little-endian
///   payload           prod(dims) x f32 little-endian IEEE-754, row-major
///
/// Images and sinograms are rank 3 [channels, rows, cols]. Masks are stored
/// as 0.0/1.0 floats with rank 2 [rows, cols] (virtual masks) or rank 1
/// [views] (view masks).
struct TensorFile {
  static constexpr std::uint16_t kVersion = 1;
  enum Kind : std::uint8_t { kImage = 0, kSinogram = 1, kMask = 2 };

  std::uint8_t kind = kImage;
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;

  std::size_t element_count() const;
};

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

template <typename Domain>
void write_tensor(const std::filesystem::path& path, const Tensor<float, Domain>& t) {
  TensorFile f;
  f.kind = Domain::kind;
  f.dims = {static_cast<std::uint32_t>(t.channels()), static_cast<std::uint32_t>(t.rows()),
            static_cast<std::uint32_t>(t.cols())};
  f.payload.assign(t.data(), t.data() + t.size());
  write_tensor_file(path, f);
}

template <typename Domain>
Tensor<float, Domain> read_tensor(const std::filesystem::path& path) {
  TensorFile f = read_tensor_file(path);
  if (f.kind != Domain::kind) {
    throw FormatError(path.string() + ": expected a " + Domain::name + " tensor (kind " +
                      std::to_string(Domain::kind) + "), found kind " +
                      std::to_string(f.kind));
  }
  if (f.dims.size() != 3) {
    throw FormatError(path.string() + ": expected rank 3, found rank " +
                      std::to_string(f.dims.size()));
  }
  using Flat = typename Tensor<float, Domain>::Flat;
  Flat values = Eigen::Map<const Flat>(f.payload.data(), static_cast<Index>(f.payload.size()));
  return Tensor<float, Domain>(f.dims[0], f.dims[1], f.dims[2], std::move(values));
}

/// View masks are rank-1 mask files of 0/1 floats, one per view.
void write_view_mask(const std::filesystem::path& path, const ViewMask& mask);
ViewMask read_view_mask(const std::filesystem::path& path);

/// Rank-2 mask file; zeta and seed are not stored.
void write_virtual_mask(const std::filesystem::path& path, const VirtualMask& mask);

}  // namespace vip
