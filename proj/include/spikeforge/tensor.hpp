#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spikeforge {

// Error hierarchy shared by every module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_numel(shape_) != data_.size())
      throw DimensionError("tensor shape " + shape_str(shape_) + " needs " +
                           std::to_string(shape_numel(shape_)) + " values, got " +
                           std::to_string(data_.size()));
  }

  static Tensor vector(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t last_dim() const { return shape_.empty() ? 0 : shape_.back(); }
  /// Number of rows when viewed as [rows, last_dim].
  std::size_t rows() const { return last_dim() == 0 ? 0 : data_.size() / last_dim(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  double at(std::size_t r, std::size_t c) const { return data_[r * last_dim() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * last_dim() + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * last_dim(), last_dim());
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  template <class F>
  Tensor map(F&& f) const {
    Tensor out(shape_);
    std::transform(data_.begin(), data_.end(), out.data_.begin(), std::forward<F>(f));
    return out;
  }

  bool operator==(const Tensor&) const = default;

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
    for (auto d : shape)
      if (d == 0) throw DimensionError("tensor shape " + shape_str(shape) + " has a zero extent");
  }

  Shape shape_;
  std::vector<double> data_;
};

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("add: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("sub: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Tensor operator*(double s, const Tensor& a) {
  return a.map([s](double v) { return s * v; });
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("compare: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// y = x · Wᵀ + b applied along the last axis. W is [out, in]; b is [out] or empty.
inline Tensor affine_last_axis(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (w.rank() != 2) throw DimensionError("weight must be 2-D, got " + shape_str(w.shape()));
  const std::size_t out = w.dim(0), in = w.dim(1);
  if (x.last_dim() != in)
    throw DimensionError("input last axis " + std::to_string(x.last_dim()) +
                         " does not match weight " + shape_str(w.shape()));
  if (b && (b->rank() != 1 || b->dim(0) != out))
    throw DimensionError("bias " + shape_str(b->shape()) + " does not match weight " +
                         shape_str(w.shape()));
  Shape oshape = x.shape();
  oshape.back() = out;
  Tensor y(oshape);
  const std::size_t rows = x.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = x.row(r);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b ? (*b)[o] : 0.0;
      const double* wr = w.data().data() + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      y.at(r, o) = acc;
    }
  }
  return y;
}

/// Row-wise softmax over the last axis, max-shifted.
inline Tensor softmax_last_axis(const Tensor& x) {
  Tensor y(x.shape());
  const std::size_t n = x.last_dim();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    const double mx = *std::max_element(xr.begin(), xr.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(xr[i] - mx);
      y.at(r, i) = e;
      sum += e;
    }
    for (std::size_t i = 0; i < n; ++i) y.at(r, i) /= sum;
  }
  return y;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace spikeforge
