#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace akorn {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

// Dense row-major f64 tensor. Rank 0 is a scalar. Storage may be shared
// between tensors after reshaped(); treat tensors as immutable once they
// participate in any op, and use clone() when a private buffer is needed.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}) {}
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor full(Shape shape, double v);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

  const Shape& shape() const { return shape_; }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const { return numel_; }
  int64_t dim(int64_t i) const;  // negative indices count from the back

  double* data() { return buf_->data(); }
  const double* data() const { return buf_->data(); }
  double& operator[](int64_t i) { return (*buf_)[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return (*buf_)[static_cast<size_t>(i)]; }
  double& at(std::initializer_list<int64_t> idx);
  double at(std::initializer_list<int64_t> idx) const;

  // value of a single-element tensor
  double item() const;

  // same buffer, new shape (element count must match)
  Tensor reshaped(Shape s) const;
  Tensor clone() const;

  void fill(double v);
  bool all_finite() const;

 private:
  Shape shape_;
  int64_t numel_ = 0;
  std::shared_ptr<std::vector<double>> buf_;
};

namespace detail {
[[noreturn]] void fail(const std::string& msg);
void require(bool ok, const std::string& msg);
}  // namespace detail

}  // namespace akorn
