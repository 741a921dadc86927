#ifndef PDEIMG_FIELD_HPP
#define PDEIMG_FIELD_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdeimg
{

/// 2D scalar grid stored row-major. Row index i runs along y (height),
/// column index j along x (width). Grid spacing is 1 in both directions.
class Field
{
public:
  Field() = default;

  Field(int width, int height, double value = 0.0)
    : width_(width), height_(height)
  {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Field: dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height, value);
  }

  Field(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data))
  {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Field: dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("Field: data length must equal width*height");
  }

  template <class F>
  static Field generate(int width, int height, F&& fn)
  {
    Field f(width, height);
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j)
        f(i, j) = fn(i, j);
    return f;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int i, int j) noexcept
  {
    assert(i >= 0 && i < height_ && j >= 0 && j < width_);
    return data_[static_cast<std::size_t>(i) * width_ + j];
  }
  double operator()(int i, int j) const noexcept
  {
    assert(i >= 0 && i < height_ && j >= 0 && j < width_);
    return data_[static_cast<std::size_t>(i) * width_ + j];
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Field& other) const noexcept
  {
    return width_ == other.width_ && height_ == other.height_;
  }

  Field& operator+=(const Field& rhs)
  {
    require_same_shape(rhs);
    for (std::size_t k = 0; k < data_.size(); ++k)
      data_[k] += rhs.data_[k];
    return *this;
  }
  Field& operator-=(const Field& rhs)
  {
    require_same_shape(rhs);
    for (std::size_t k = 0; k < data_.size(); ++k)
      data_[k] -= rhs.data_[k];
    return *this;
  }
  Field& operator*=(double s) noexcept
  {
    for (double& v : data_)
      v *= s;
    return *this;
  }
  Field& operator+=(double s) noexcept
  {
    for (double& v : data_)
      v += s;
    return *this;
  }

  /// this += s * x
  Field& axpy(double s, const Field& x)
  {
    require_same_shape(x);
    for (std::size_t k = 0; k < data_.size(); ++k)
      data_[k] += s * x.data_[k];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }

  friend bool operator==(const Field&, const Field&) = default;

  void require_same_shape(const Field& other) const
  {
    if (!same_shape(other))
      throw std::invalid_argument("Field: dimension mismatch");
  }

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct VectorField
{
  Field x;
  Field y;

  VectorField() = default;
  VectorField(Field xc, Field yc) : x(std::move(xc)), y(std::move(yc))
  {
    x.require_same_shape(y);
  }
  VectorField(int width, int height, double vx, double vy)
    : x(width, height, vx), y(width, height, vy)
  {
  }

  int width() const noexcept { return x.width(); }
  int height() const noexcept { return x.height(); }
};

enum class BcKind
{
  NeumannMirror,
  Periodic
};

struct BoundaryCondition
{
  BcKind kind = BcKind::NeumannMirror;
  int pad = 0;

  static constexpr BoundaryCondition neumann() { return {BcKind::NeumannMirror, 0}; }
  static constexpr BoundaryCondition periodic(int pad = 0) { return {BcKind::Periodic, pad}; }

  friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

/// Boolean region marker; true marks pixels where a PDE acts (or that are damaged).
class Mask
{
public:
  Mask() = default;
  Mask(int width, int height, bool value = false)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, value ? 1 : 0)
  {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("Mask: dimensions must be positive");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool operator()(int i, int j) const noexcept
  {
    return data_[static_cast<std::size_t>(i) * width_ + j] != 0;
  }
  void set(int i, int j, bool v) noexcept
  {
    data_[static_cast<std::size_t>(i) * width_ + j] = v ? 1 : 0;
  }
  bool at_index(std::size_t k) const noexcept { return data_[k] != 0; }

  std::size_t count() const noexcept
  {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
  }

  bool matches(const Field& f) const noexcept
  {
    return width_ == f.width() && height_ == f.height();
  }
  void require_matches(const Field& f) const
  {
    if (!matches(f))
      throw std::invalid_argument("Mask: dimensions do not match field");
  }

  friend bool operator==(const Mask&, const Mask&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<unsigned char> data_;
};

namespace detail
{

inline int wrap_index(int k, int n) noexcept
{
  int r = k % n;
  return r < 0 ? r + n : r;
}

inline int clamp_index(int k, int n) noexcept
{
  return k < 0 ? 0 : (k >= n ? n - 1 : k);
}

} // namespace detail

/// Boundary-aware read. Total over all integer indices.
inline double sample(const Field& field, int i, int j, const BoundaryCondition& bc) noexcept
{
  if (bc.kind == BcKind::Periodic)
    return field(detail::wrap_index(i, field.height()), detail::wrap_index(j, field.width()));
  return field(detail::clamp_index(i, field.height()), detail::clamp_index(j, field.width()));
}

inline Field extend_periodic(const Field& field, int pad)
{
  if (pad < 0)
    throw std::invalid_argument("extend_periodic: pad must be non-negative");
  const auto bc = BoundaryCondition::periodic();
  return Field::generate(field.width() + 2 * pad, field.height() + 2 * pad,
                         [&](int i, int j) { return sample(field, i - pad, j - pad, bc); });
}

inline Field crop_center(const Field& field, int pad)
{
  if (pad < 0)
    throw std::invalid_argument("crop_center: pad must be non-negative");
  if (field.width() <= 2 * pad || field.height() <= 2 * pad)
    throw std::invalid_argument("crop_center: pad too large for field");
  return Field::generate(field.width() - 2 * pad, field.height() - 2 * pad,
                         [&](int i, int j) { return field(i + pad, j + pad); });
}

inline double mean_intensity(const Field& field)
{
  if (field.empty())
    throw std::invalid_argument("mean_intensity: empty field");
  const auto v = field.values();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline Field clamp_unit(Field field) noexcept
{
  for (double& v : field.values())
    v = std::min(1.0, std::max(0.0, v));
  return field;
}

inline double max_abs(const Field& field) noexcept
{
  double m = 0.0;
  for (double v : field.values())
    m = std::max(m, std::abs(v));
  return m;
}

inline double min_value(const Field& field) noexcept
{
  const auto v = field.values();
  return *std::min_element(v.begin(), v.end());
}

inline double max_value(const Field& field) noexcept
{
  const auto v = field.values();
  return *std::max_element(v.begin(), v.end());
}

inline double max_abs_diff(const Field& a, const Field& b)
{
  a.require_same_shape(b);
  double m = 0.0;
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t k = 0; k < va.size(); ++k)
    m = std::max(m, std::abs(va[k] - vb[k]));
  return m;
}

/// Shifts by a constant t so that mean(clamp_unit(u + t)) equals target.
/// This is the Euclidean projection onto {v in [0,1]^N : mean(v) = target}.
inline Field recenter_mean_clamped(const Field& u, double target)
{
  if (!(target >= 0.0 && target <= 1.0))
    throw std::invalid_argument("recenter_mean_clamped: target mean outside [0,1]");
  auto shifted_mean = [&](double t) {
    double s = 0.0;
    for (double v : u.values())
      s += std::min(1.0, std::max(0.0, v + t));
    return s / static_cast<double>(u.size());
  };
  double lo = -1.0 - max_value(u);
  double hi = 1.0 - min_value(u);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it)
  {
    const double mid = 0.5 * (lo + hi);
    if (shifted_mean(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  Field out = u;
  out += 0.5 * (lo + hi);
  return clamp_unit(std::move(out));
}

} // namespace pdeimg

#endif
