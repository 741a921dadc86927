#ifndef PDEIMG_STENCIL_HPP
#define PDEIMG_STENCIL_HPP

#include "field.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pdeimg
{

enum class Axis
{
  X, // columns, increasing j
  Y  // rows, increasing i
};

/// Odd-sized correlation kernel anchored at its center.
class Kernel
{
public:
  Kernel(int rows, int cols, std::vector<double> weights)
    : rows_(rows), cols_(cols), weights_(std::move(weights))
  {
    if (rows <= 0 || cols <= 0 || rows % 2 == 0 || cols % 2 == 0)
      throw std::invalid_argument("Kernel: rows and cols must be odd and positive");
    if (weights_.size() != static_cast<std::size_t>(rows) * cols)
      throw std::invalid_argument("Kernel: weight count must equal rows*cols");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double operator()(int r, int c) const noexcept
  {
    return weights_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double sum() const noexcept
  {
    double s = 0.0;
    for (double w : weights_)
      s += w;
    return s;
  }

  /// Point-reflected kernel; correlation with it is the adjoint of correlation with *this
  /// under periodic boundaries.
  Kernel flipped() const
  {
    std::vector<double> w(weights_.rbegin(), weights_.rend());
    return Kernel(rows_, cols_, std::move(w));
  }

  static Kernel identity() { return Kernel(1, 1, {1.0}); }
  /// ½[-1 0 1]
  static Kernel central_x() { return Kernel(1, 3, {-0.5, 0.0, 0.5}); }
  static Kernel central_y() { return Kernel(3, 1, {-0.5, 0.0, 0.5}); }

private:
  int rows_;
  int cols_;
  std::vector<double> weights_;
};

namespace detail
{

inline int axis_di(Axis a) noexcept { return a == Axis::Y ? 1 : 0; }
inline int axis_dj(Axis a) noexcept { return a == Axis::X ? 1 : 0; }

/// Applies a 1D stencil with offsets [first, first + coeffs.size()) along an axis.
template <std::size_t N>
Field axis_stencil(const Field& u, Axis axis, int first, const double (&coeffs)[N],
                   const BoundaryCondition& bc)
{
  const int di = axis_di(axis), dj = axis_dj(axis);
  Field out(u.width(), u.height());
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      double s = 0.0;
      for (std::size_t k = 0; k < N; ++k)
      {
        const int o = first + static_cast<int>(k);
        s += coeffs[k] * sample(u, i + o * di, j + o * dj, bc);
      }
      out(i, j) = s;
    }
  return out;
}

} // namespace detail

/// Central first derivative along one axis: (u[+1] - u[-1]) / 2.
inline Field central_deriv(const Field& u, Axis axis, const BoundaryCondition& bc)
{
  static constexpr double c[] = {-0.5, 0.0, 0.5};
  return detail::axis_stencil(u, axis, -1, c, bc);
}

inline VectorField grad_central(const Field& u, const BoundaryCondition& bc)
{
  return {central_deriv(u, Axis::X, bc), central_deriv(u, Axis::Y, bc)};
}

inline Field laplacian5(const Field& u, const BoundaryCondition& bc)
{
  Field out(u.width(), u.height());
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
      out(i, j) = sample(u, i - 1, j, bc) + sample(u, i + 1, j, bc) + sample(u, i, j - 1, bc) +
                  sample(u, i, j + 1, bc) - 4.0 * u(i, j);
  return out;
}

/// Composite 13-point operator: laplacian5 applied twice.
inline Field biharmonic(const Field& u, const BoundaryCondition& bc)
{
  return laplacian5(laplacian5(u, bc), bc);
}

inline Field divergence(const VectorField& v, const BoundaryCondition& bc)
{
  v.x.require_same_shape(v.y);
  return central_deriv(v.x, Axis::X, bc) + central_deriv(v.y, Axis::Y, bc);
}

/// One-sided difference taken against the flow: backward where speed > 0,
/// forward where speed < 0, zero where speed == 0.
inline Field upwind_deriv(const Field& u, Axis axis, const Field& speed,
                          const BoundaryCondition& bc)
{
  u.require_same_shape(speed);
  const int di = detail::axis_di(axis), dj = detail::axis_dj(axis);
  Field out(u.width(), u.height());
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      const double a = speed(i, j);
      if (a > 0.0)
        out(i, j) = u(i, j) - sample(u, i - di, j - dj, bc);
      else if (a < 0.0)
        out(i, j) = sample(u, i + di, j + dj, bc) - u(i, j);
    }
  return out;
}

inline Field upwind_deriv(const Field& u, Axis axis, double speed, const BoundaryCondition& bc)
{
  return upwind_deriv(u, axis, Field(u.width(), u.height(), speed), bc);
}

enum class StencilBias
{
  Backward,
  Forward
};

/// One-sided 4-point third difference. Backward: u[+1] - 3u + 3u[-1] - u[-2];
/// Forward: u[+2] - 3u[+1] + 3u - u[-1]. Both are exact on cubics.
inline Field third_deriv_upwind(const Field& u, Axis axis, const BoundaryCondition& bc,
                                StencilBias bias = StencilBias::Backward)
{
  static constexpr double c[] = {-1.0, 3.0, -3.0, 1.0};
  return detail::axis_stencil(u, axis, bias == StencilBias::Backward ? -2 : -1, c, bc);
}

/// 5-point fourth difference along one axis: u[-2] - 4u[-1] + 6u - 4u[+1] + u[+2].
inline Field fourth_deriv(const Field& u, Axis axis, const BoundaryCondition& bc)
{
  static constexpr double c[] = {1.0, -4.0, 6.0, -4.0, 1.0};
  return detail::axis_stencil(u, axis, -2, c, bc);
}

/// Correlation with a centered kernel (no flip).
inline Field convolve2d(const Field& u, const Kernel& k, const BoundaryCondition& bc)
{
  const int hr = k.rows() / 2, hc = k.cols() / 2;
  Field out(u.width(), u.height());
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      double s = 0.0;
      for (int r = 0; r < k.rows(); ++r)
        for (int c = 0; c < k.cols(); ++c)
          s += k(r, c) * sample(u, i + r - hr, j + c - hc, bc);
      out(i, j) = s;
    }
  return out;
}

/// Sampled isotropic Gaussian, normalized to unit sum.
inline Kernel gaussian_kernel(int size, double sigma)
{
  if (size <= 0 || size % 2 == 0)
    throw std::invalid_argument("gaussian_kernel: size must be odd and positive");
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  const int h = size / 2;
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  double total = 0.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
    {
      const double x = c - h, y = r - h;
      const double v = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(r) * size + c] = v;
      total += v;
    }
  for (double& v : w)
    v /= total;
  return Kernel(size, size, std::move(w));
}

inline Field gradient_magnitude(const Field& u, const BoundaryCondition& bc)
{
  const VectorField g = grad_central(u, bc);
  Field out(u.width(), u.height());
  for (std::size_t k = 0; k < out.size(); ++k)
    out.values()[k] = std::hypot(g.x.values()[k], g.y.values()[k]);
  return out;
}

} // namespace pdeimg

#endif
