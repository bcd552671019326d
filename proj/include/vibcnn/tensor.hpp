#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vibcnn/errors.hpp"

namespace vibcnn {

// Dense rank-3 array, contiguous row-major in (batch, channel, length) order.
template <typename T>
struct Tensor3T {
  int batch = 0;
  int channels = 0;
  int length = 0;
  std::vector<T> data;

  Tensor3T() = default;

  Tensor3T(int b, int c, int l) : batch(b), channels(c), length(l) {
    if (b < 1 || c < 1 || l < 1)
      throw ShapeError("tensor dims must all be >= 1, got [" + std::to_string(b) +
                       "," + std::to_string(c) + "," + std::to_string(l) + "]");
    data.assign(static_cast<std::size_t>(b) * c * l, T(0));
  }

  T* row(int b, int c) {
    return data.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }
  const T* row(int b, int c) const {
    return data.data() + (static_cast<std::size_t>(b) * channels + c) * length;
  }

  T& at(int b, int c, int l) { return row(b, c)[l]; }
  T at(int b, int c, int l) const { return row(b, c)[l]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool same_shape(const Tensor3T& o) const {
    return batch == o.batch && channels == o.channels && length == o.length;
  }

  std::string shape_str() const {
    return "[" + std::to_string(batch) + "," + std::to_string(channels) + "," +
           std::to_string(length) + "]";
  }
};

// Dense rank-2 array, row-major.
template <typename T>
struct Mat2T {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat2T() = default;

  Mat2T(int r, int c) : rows(r), cols(c) {
    if (r < 1 || c < 1)
      throw ShapeError("matrix dims must be >= 1, got [" + std::to_string(r) +
                       "," + std::to_string(c) + "]");
    data.assign(static_cast<std::size_t>(r) * c, T(0));
  }

  T* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols;
  }

  T& at(int r, int c) { return row(r)[c]; }
  T at(int r, int c) const { return row(r)[c]; }

  std::size_t size() const { return data.size(); }
};

using Tensor3 = Tensor3T<float>;
using Mat2 = Mat2T<float>;

template <typename T>
bool all_finite(std::span<const T> v) {
  for (const T x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

#ifndef NDEBUG
template <typename T>
void debug_check_finite(const std::vector<T>& v, const char* where) {
  if (!all_finite(std::span<const T>(v)))
    throw NumericError(std::string("non-finite value after ") + where);
}
#define VIBCNN_DEBUG_FINITE(values, where) \
  ::vibcnn::debug_check_finite((values), (where))
#else
#define VIBCNN_DEBUG_FINITE(values, where) ((void)0)
#endif

}  // namespace vibcnn
