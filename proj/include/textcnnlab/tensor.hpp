#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace textcnn {

// Dense row-major buffer with a shape. Kept deliberately small: the layer
// kernels take raw spans for the hot loops, this type carries shape metadata
// between them.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("Tensor: shape does not match buffer length");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  // row pointer for a 2-D tensor [R, C]
  T* row(int r) { return data.data() + static_cast<size_t>(r) * shape[1]; }
  const T* row(int r) const { return data.data() + static_cast<size_t>(r) * shape[1]; }

  T& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
  T at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
};

// Every op is required to surface NaN/Inf instead of propagating it.
template <typename T>
inline void check_finite(const T* p, size_t n, const char* op_name) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(p[i])))
      throw std::runtime_error(std::string("non-finite value produced by ") + op_name);
  }
}

template <typename T>
inline void check_finite(const Tensor<T>& t, const char* op_name) {
  check_finite(t.ptr(), t.data.size(), op_name);
}

}  // namespace textcnn
