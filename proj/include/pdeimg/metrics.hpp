#ifndef PDEIMG_METRICS_HPP
#define PDEIMG_METRICS_HPP

#include "field.hpp"
#include "stencil.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pdeimg
{

struct MetricReport
{
  double mse = 0.0;
  double psnr = std::numeric_limits<double>::infinity();
  double ssim = 1.0;
  double q = 1.0;
};

inline double mse(const Field& a, const Field& b)
{
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    const double d = a.values()[k] - b.values()[k];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// +inf for identical inputs.
inline double psnr(const Field& a, const Field& b, double peak = 1.0)
{
  const double m = mse(a, b);
  if (m == 0.0)
    return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

struct SsimOptions
{
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

namespace detail
{

/// Weighted local moments over one window anchored at (i0, j0).
struct WindowMoments
{
  double mu_a, mu_b, var_a, var_b, cov;
};

template <class WeightFn>
WindowMoments window_moments(const Field& a, const Field& b, int i0, int j0, int rows, int cols,
                             WeightFn&& weight)
{
  double sa = 0, sb = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
    {
      const double w = weight(r, c);
      sa += w * a(i0 + r, j0 + c);
      sb += w * b(i0 + r, j0 + c);
    }
  double vaa = 0, vbb = 0, vab = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
    {
      const double w = weight(r, c);
      const double x = a(i0 + r, j0 + c) - sa, y = b(i0 + r, j0 + c) - sb;
      vaa += w * x * x;
      vbb += w * y * y;
      vab += w * x * y;
    }
  return {sa, sb, vaa, vbb, vab};
}

} // namespace detail

/// Mean SSIM over all fully-contained Gaussian-weighted windows.
inline double ssim(const Field& a, const Field& b, const SsimOptions& o = {})
{
  a.require_same_shape(b);
  if (a.width() < o.window || a.height() < o.window)
    throw std::invalid_argument("ssim: image smaller than window");
  const Kernel w = gaussian_kernel(o.window, o.sigma);
  const double c1 = (o.k1 * o.peak) * (o.k1 * o.peak);
  const double c2 = (o.k2 * o.peak) * (o.k2 * o.peak);
  double total = 0.0;
  long n = 0;
  for (int i = 0; i + o.window <= a.height(); ++i)
    for (int j = 0; j + o.window <= a.width(); ++j)
    {
      const auto m = detail::window_moments(a, b, i, j, o.window, o.window,
                                            [&](int r, int c) { return w(r, c); });
      total += ((2 * m.mu_a * m.mu_b + c1) * (2 * m.cov + c2)) /
               ((m.mu_a * m.mu_a + m.mu_b * m.mu_b + c1) * (m.var_a + m.var_b + c2));
      ++n;
    }
  return total / static_cast<double>(n);
}

inline constexpr double q_flat_variance = 1e-14;

/// Universal quality index averaged over sliding square windows (uniform weights).
/// Windows with a zero denominator count as 1 when both are flat with equal means
/// and are skipped otherwise; returns 0 when every window is skipped.
inline double quality_index_q(const Field& a, const Field& b, int window = 8)
{
  a.require_same_shape(b);
  if (window < 1)
    throw std::invalid_argument("quality_index_q: window must be positive");
  if (a.width() < window || a.height() < window)
    throw std::invalid_argument("quality_index_q: image smaller than window");
  const double w = 1.0 / (static_cast<double>(window) * window);
  double total = 0.0;
  long n = 0;
  for (int i = 0; i + window <= a.height(); ++i)
    for (int j = 0; j + window <= a.width(); ++j)
    {
      const auto m =
          detail::window_moments(a, b, i, j, window, window, [w](int, int) { return w; });
      // flat windows: variances at round-off level count as exactly zero
      const bool flat_a = m.var_a < q_flat_variance, flat_b = m.var_b < q_flat_variance;
      const double var_a = flat_a ? 0.0 : m.var_a, var_b = flat_b ? 0.0 : m.var_b;
      const double cov = (flat_a || flat_b) ? 0.0 : m.cov;
      const double den = (var_a + var_b) * (m.mu_a * m.mu_a + m.mu_b * m.mu_b);
      if (den > 0.0)
      {
        total += (2.0 * cov) * (2.0 * (m.mu_a * m.mu_b)) / den;
        ++n;
      }
      else if (flat_a && flat_b && m.mu_a == m.mu_b)
      {
        total += 1.0;
        ++n;
      }
    }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

inline MetricReport evaluate_metrics(const Field& reference, const Field& candidate)
{
  MetricReport r;
  r.mse = mse(reference, candidate);
  r.psnr = psnr(reference, candidate);
  r.ssim = ssim(reference, candidate);
  r.q = quality_index_q(reference, candidate);
  return r;
}

/// Mean gradient magnitude; used as a sharpness proxy for enhancement runs.
inline double mean_gradient_magnitude(const Field& u,
                                      const BoundaryCondition& bc = BoundaryCondition::neumann())
{
  return mean_intensity(gradient_magnitude(u, bc));
}

// ---------------------------------------------------------------------------
// Degradation
// ---------------------------------------------------------------------------

/// Standard normal variates from mt19937_64 via Box-Muller. Uniforms are the top
/// 53 bits of each 64-bit draw mapped to (0, 1]; each pair of draws yields two
/// variates (cosine branch first).
class NormalGenerator
{
public:
  explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}

  double operator()()
  {
    if (has_spare_)
    {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct NoiseSpec
{
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

/// u + N(0, sigma^2) i.i.d., unclamped, deterministic in the seed.
inline Field add_gaussian_noise(const Field& u, const NoiseSpec& n)
{
  if (!(n.sigma > 0.0))
    throw std::invalid_argument("add_gaussian_noise: sigma must be positive");
  NormalGenerator gen(n.seed);
  Field out = u;
  for (double& v : out.values())
    v += n.sigma * gen();
  return out;
}

inline constexpr int default_blur_size = 11;
inline constexpr double default_blur_sigma = 3.0;

inline Field gaussian_blur(const Field& u, int size = default_blur_size,
                           double sigma = default_blur_sigma,
                           const BoundaryCondition& bc = BoundaryCondition::periodic())
{
  return convolve2d(u, gaussian_kernel(size, sigma), bc);
}

inline Field apply_mask_damage(const Field& u, const Mask& m, double fill)
{
  m.require_matches(u);
  Field out = u;
  for (std::size_t k = 0; k < out.size(); ++k)
    if (m.at_index(k))
      out.values()[k] = fill;
  return out;
}

} // namespace pdeimg

#endif
