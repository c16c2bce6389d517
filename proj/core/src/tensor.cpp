#include "akorn/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace akorn {

namespace detail {

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

}  // namespace detail

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    detail::require(d >= 0, "negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)),
      numel_(shape_numel(shape_)),
      buf_(std::make_shared<std::vector<double>>(static_cast<size_t>(numel_), 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), numel_(shape_numel(shape_)) {
  detail::require(static_cast<int64_t>(values.size()) == numel_,
                  "value count " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape_));
  buf_ = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  t.fill(v);
  return t;
}

int64_t Tensor::dim(int64_t i) const {
  int64_t n = ndim();
  if (i < 0) i += n;
  detail::require(i >= 0 && i < n,
                  "axis " + std::to_string(i) + " out of range for " + shape_str(shape_));
  return shape_[static_cast<size_t>(i)];
}

namespace {
int64_t flat_index(const Shape& shape, std::initializer_list<int64_t> idx) {
  detail::require(idx.size() == shape.size(),
                  "index rank mismatch for " + shape_str(shape));
  int64_t flat = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    detail::require(i >= 0 && i < shape[k], "index out of range for " + shape_str(shape));
    flat = flat * shape[k] + i;
    ++k;
  }
  return flat;
}
}  // namespace

double& Tensor::at(std::initializer_list<int64_t> idx) {
  return (*buf_)[static_cast<size_t>(flat_index(shape_, idx))];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return (*buf_)[static_cast<size_t>(flat_index(shape_, idx))];
}

double Tensor::item() const {
  detail::require(numel_ == 1, "item() on tensor of shape " + shape_str(shape_));
  return (*buf_)[0];
}

Tensor Tensor::reshaped(Shape s) const {
  detail::require(shape_numel(s) == numel_,
                  "cannot reshape " + shape_str(shape_) + " to " + shape_str(s));
  Tensor out;
  out.shape_ = std::move(s);
  out.numel_ = numel_;
  out.buf_ = buf_;
  return out;
}

Tensor Tensor::clone() const {
  Tensor out;
  out.shape_ = shape_;
  out.numel_ = numel_;
  out.buf_ = std::make_shared<std::vector<double>>(*buf_);
  return out;
}

void Tensor::fill(double v) {
  for (auto& x : *buf_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : *buf_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace akorn
