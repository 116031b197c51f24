#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vip/error.hpp"

namespace vip {

using Index = Eigen::Index;

/// Domain tags. They keep image-space and projection-space stacks from
/// being mixed up at compile time while sharing one implementation.
struct ImageDomain {
  static constexpr std::uint8_t kind = 0;
  static constexpr const char* name = "image";
};
struct SinogramDomain {
  static constexpr std::uint8_t kind = 1;
  static constexpr const char* name = "sinogram";
};

template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense channels x rows x cols stack, channel-major and row-major within a
/// channel. For images rows/cols are H/W; for sinograms they are views and
/// detector bins. Channel 0 is the high-energy scan and channel 1 the
/// low-energy scan whenever a tensor carries raw dual-energy data.
template <typename Scalar, typename Domain>
class Tensor {
 public:
  using scalar_type = Scalar;
  using domain_type = Domain;
  using Flat = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMap = Eigen::Map<Plane<Scalar>>;
  using ConstPlaneMap = Eigen::Map<const Plane<Scalar>>;

  Tensor() = default;

  Tensor(Index channels, Index rows, Index cols)
      : channels_(channels), rows_(rows), cols_(cols) {
    if (channels < 0 || rows < 0 || cols < 0) {
      throw ShapeError("negative tensor dimension");
    }
    values_ = Flat::Zero(channels * rows * cols);
  }

  Tensor(Index channels, Index rows, Index cols, Flat values)
      : channels_(channels), rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != channels * rows * cols) {
      throw ShapeError("tensor payload length " + std::to_string(values_.size()) +
                       " does not match " + shape_string());
    }
  }

  static Tensor zeros_like(const Tensor& other) {
    return Tensor(other.channels(), other.rows(), other.cols());
  }

  Index channels() const { return channels_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index plane_size() const { return rows_ * cols_; }
  Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  /// Flat view of every value; the natural handle for elementwise algebra.
  Flat& values() { return values_; }
  const Flat& values() const { return values_; }

  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }

  PlaneMap channel(Index c) {
    return PlaneMap(values_.data() + c * plane_size(), rows_, cols_);
  }
  ConstPlaneMap channel(Index c) const {
    return ConstPlaneMap(values_.data() + c * plane_size(), rows_, cols_);
  }

  Scalar& operator()(Index c, Index r, Index k) {
    return values_[(c * rows_ + r) * cols_ + k];
  }
  Scalar operator()(Index c, Index r, Index k) const {
    return values_[(c * rows_ + r) * cols_ + k];
  }

  bool same_shape(const Tensor& other) const {
    return channels_ == other.channels_ && rows_ == other.rows_ && cols_ == other.cols_;
  }

  std::string shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(rows_) + "x" +
           std::to_string(cols_);
  }

  template <typename NewScalar>
  Tensor<NewScalar, Domain> cast() const {
    return Tensor<NewScalar, Domain>(channels_, rows_, cols_,
                                     values_.template cast<NewScalar>());
  }

  bool all_finite() const { return values_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) && (a.values_ == b.values_).all();
  }

 private:
  Index channels_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
  Flat values_;
};

using ImageTensor = Tensor<float, ImageDomain>;
using SinogramTensor = Tensor<float, SinogramDomain>;

template <typename Scalar, typename Domain>
void require_same_shape(const Tensor<Scalar, Domain>& a, const Tensor<Scalar, Domain>& b,
                        const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

/// Concatenates channel stacks. Every part must share rows x cols.
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> stack_channels(std::span<const Tensor<Scalar, Domain>> parts) {
  if (parts.empty()) {
    throw ShapeError("stack_channels: no parts");
  }
  const Index rows = parts.front().rows();
  const Index cols = parts.front().cols();
  Index channels = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows || p.cols() != cols) {
      throw ShapeError("stack_channels: spatial dims " + p.shape_string() +
                       " do not match " + parts.front().shape_string());
    }
    channels += p.channels();
  }
  Tensor<Scalar, Domain> out(channels, rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    out.values().segment(offset, p.size()) = p.values();
    offset += p.size();
  }
  return out;
}

template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> stack_channels(std::initializer_list<Tensor<Scalar, Domain>> parts) {
  return stack_channels(std::span<const Tensor<Scalar, Domain>>(parts.begin(), parts.size()));
}

template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> stack_channels(const std::vector<Tensor<Scalar, Domain>>& parts) {
  return stack_channels(std::span<const Tensor<Scalar, Domain>>(parts));
}

/// Channels [first, first + count).
template <typename Scalar, typename Domain>
Tensor<Scalar, Domain> slice_channels(const Tensor<Scalar, Domain>& t, Index first, Index count) {
  if (first < 0 || count < 1 || first + count > t.channels()) {
    throw ShapeError("slice_channels: range [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") outside " +
                     std::to_string(t.channels()) + " channels");
  }
  const Index n = t.plane_size();
  return Tensor<Scalar, Domain>(count, t.rows(), t.cols(),
                                t.values().segment(first * n, count * n));
}

template <typename Scalar, typename Domain>
double squared_norm(const Tensor<Scalar, Domain>& t) {
  return t.values().template cast<double>().square().sum();
}

template <typename Scalar, typename Domain>
double dot(const Tensor<Scalar, Domain>& a, const Tensor<Scalar, Domain>& b) {
  require_same_shape(a, b, "dot");
  return (a.values().template cast<double>() * b.values().template cast<double>()).sum();
}

}  // namespace vip
