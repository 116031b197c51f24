#include "vip/tensor_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <iterator>

namespace vip {

namespace {

constexpr std::array<char, 4> kMagic = {'V', 'I', 'P', 'T'};

void put_u16(std::vector<char>& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::vector<char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t take(int width, const char* what) {
    if (pos_ + width > bytes_.size()) {
      throw TruncationError(path_.string() + ": file ends inside " + what);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t TensorFile::element_count() const {
  std::size_t n = dims.empty() ? 0 : 1;
  for (auto d : dims) {
    n *= d;
  }
  return n;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  if (file.dims.empty() || file.dims.size() > 255) {
    throw ShapeError("write_tensor: rank must be in [1, 255]");
  }
  for (auto d : file.dims) {
    if (d < 1) {
      throw ShapeError("write_tensor: every dimension must be >= 1");
    }
  }
  if (file.payload.size() != file.element_count()) {
    throw ShapeError("write_tensor: payload length does not match dims");
  }

  std::vector<char> out(kMagic.begin(), kMagic.end());
  put_u16(out, TensorFile::kVersion);
  out.push_back(static_cast<char>(file.dims.size()));
  out.push_back(static_cast<char>(file.kind));
  for (auto d : file.dims) {
    put_u32(out, d);
  }
  out.reserve(out.size() + 4 * file.payload.size());
  for (float v : file.payload) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
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

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error("cannot open " + path.string() + " for reading");
  }
  const std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                                std::istreambuf_iterator<char>());

  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError(path.string() + ": bad magic, not a VIPT file");
  }
  Reader r(bytes, path);
  r.take(4, "magic");
  const auto version = r.take(2, "version");
  if (version != TensorFile::kVersion) {
    throw FormatError(path.string() + ": unsupported VIPT version " + std::to_string(version));
  }
  TensorFile f;
  const auto rank = r.take(1, "rank");
  f.kind = static_cast<std::uint8_t>(r.take(1, "kind"));
  if (rank == 0) {
    throw FormatError(path.string() + ": rank 0");
  }
  if (f.kind > TensorFile::kMask) {
    throw FormatError(path.string() + ": unknown kind " + std::to_string(f.kind));
  }
  for (std::uint32_t i = 0; i < rank; ++i) {
    f.dims.push_back(r.take(4, "dims"));
    if (f.dims.back() == 0) {
      throw FormatError(path.string() + ": zero-sized dimension");
    }
  }
  const std::size_t n = f.element_count();
  if (r.remaining() != 4 * n) {
    throw TruncationError(path.string() + ": header promises " + std::to_string(n) +
                          " floats, payload holds " + std::to_string(r.remaining()) + " bytes");
  }
  f.payload.resize(n);
  for (auto& v : f.payload) {
    v = std::bit_cast<float>(r.take(4, "payload"));
  }
  return f;
}

void write_view_mask(const std::filesystem::path& path, const ViewMask& mask) {
  TensorFile f;
  f.kind = TensorFile::kMask;
  f.dims = {static_cast<std::uint32_t>(mask.n_views())};
  for (Index v = 0; v < mask.n_views(); ++v) {
    f.payload.push_back(mask.kept[v] ? 1.0f : 0.0f);
  }
  write_tensor_file(path, f);
}

ViewMask read_view_mask(const std::filesystem::path& path) {
  const TensorFile f = read_tensor_file(path);
  if (f.kind != TensorFile::kMask || f.dims.size() != 1) {
    throw FormatError(path.string() + ": expected a rank-1 view mask");
  }
  ViewMask mask;
  mask.kept.resize(static_cast<Index>(f.dims[0]));
  for (Index v = 0; v < mask.n_views(); ++v) {
    const float x = f.payload[static_cast<std::size_t>(v)];
    if (x != 0.0f && x != 1.0f) {
      throw FormatError(path.string() + ": view mask entries must be 0 or 1");
    }
    mask.kept[v] = x == 1.0f;
  }
  mask.validate();
  return mask;
}

void write_virtual_mask(const std::filesystem::path& path, const VirtualMask& mask) {
  TensorFile f;
  f.kind = TensorFile::kMask;
  f.dims = {static_cast<std::uint32_t>(mask.rows()), static_cast<std::uint32_t>(mask.cols())};
  for (Index i = 0; i < mask.m.size(); ++i) {
    f.payload.push_back(static_cast<float>(mask.m.data()[i]));
  }
  write_tensor_file(path, f);
}

}  // namespace vip
