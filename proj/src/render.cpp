#include "vip/render.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace vip {

Plane<std::uint8_t> to_gray8(const Plane<float>& plane, const Window& window) {
  if (plane.size() == 0) {
    throw ShapeError("render: empty plane");
  }
  const double lo = window.min.value_or(plane.minCoeff());
  const double hi = window.max.value_or(plane.maxCoeff());
  const double span = hi > lo ? hi - lo : 1.0;
  Plane<std::uint8_t> out(plane.rows(), plane.cols());
  for (Index i = 0; i < plane.size(); ++i) {
    const double t = std::clamp((plane.data()[i] - lo) / span, 0.0, 1.0);
    out.data()[i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Plane<std::uint8_t>& gray) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  os << "P5\n" << gray.cols() << " " << gray.rows() << "\n255\n";
  os.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!os) {
    throw Error("write to " + path.string() + " failed");
  }
}

void write_png(const std::filesystem::path& path, const Plane<std::uint8_t>& gray) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding of " + path.string() + " failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(gray.cols()),
               static_cast<png_uint_32>(gray.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (Index r = 0; r < gray.rows(); ++r) {
    png_write_row(png, const_cast<png_bytep>(gray.data() + r * gray.cols()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_image(const std::filesystem::path& path, const Plane<float>& plane,
                 const Window& window) {
  const auto gray = to_gray8(plane, window);
  if (path.extension() == ".pgm") {
    write_pgm(path, gray);
  } else {
    write_png(path, gray);
  }
}

}  // namespace vip
