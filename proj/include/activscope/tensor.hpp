#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace activscope {

// (channels, height, width); flat vectors use (d, 1, 1).
struct Shape {
  int channels = 0;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  bool is_flat() const { return height == 1 && width == 1; }
  std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
  bool operator==(const Shape&) const = default;
};

// Channel-major, row-major dense tensor.
template <class T>
struct BasicTensor {
  Shape shape;
  std::vector<T> data;

  BasicTensor() = default;
  explicit BasicTensor(Shape s, T fill = T(0)) : shape(s), data(s.size(), fill) {}

  T& at(int c, int y, int x) { return data[offset(c, y, x)]; }
  const T& at(int c, int y, int x) const { return data[offset(c, y, x)]; }

  std::span<const T> channel(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * shape.plane(), shape.plane()};
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape.height + y) * shape.width + x;
  }
};

using Tensor = BasicTensor<float>;

}  // namespace activscope
