#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cnndc {

struct Shape3 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& shape);

// Dense 3-D tensor stored row-major in (h, w, c) order.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Shape3 shape, double fill = 0.0);
  Tensor3(Shape3 shape, std::vector<double> data);

  const Shape3& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t h, std::size_t w, std::size_t c) const {
    return (h * shape_.width + w) * shape_.channels + c;
  }
  double& at(std::size_t h, std::size_t w, std::size_t c) { return data_[index(h, w, c)]; }
  double at(std::size_t h, std::size_t w, std::size_t c) const { return data_[index(h, w, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Shape3 shape_{};
  std::vector<double> data_;
};

}  // namespace cnndc
