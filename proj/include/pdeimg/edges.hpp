#ifndef PDEIMG_EDGES_HPP
#define PDEIMG_EDGES_HPP

#include "field.hpp"
#include "stencil.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace pdeimg
{

/// Otsu threshold of values in [0,1] over a 256-bin histogram. Returns the upper
/// edge of the last bin of the lower class.
inline double otsu_threshold(const Field& normalized)
{
  std::array<double, 256> hist{};
  for (double v : normalized.values())
    hist[static_cast<std::size_t>(std::min(255.0, std::max(0.0, v) * 255.0))] += 1.0;
  const double total = static_cast<double>(normalized.size());
  double sum_all = 0.0;
  for (int b = 0; b < 256; ++b)
    sum_all += b * hist[b];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_bin = 0;
  for (int b = 0; b < 255; ++b)
  {
    w0 += hist[b];
    sum0 += b * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0)
      continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best)
    {
      best = between;
      best_bin = b;
    }
  }
  return (best_bin + 1) / 255.0;
}

struct GradThreshold
{
  /// Fraction of the maximum gradient magnitude in (0,1); unset selects Otsu.
  std::optional<double> threshold;
};

/// Gradient magnitude, non-maximum suppression across the gradient direction,
/// then a threshold relative to the maximum magnitude. 1 marks an edge pixel.
inline Field detect_edges_gradient(const Field& u, const GradThreshold& cfg,
                                   const BoundaryCondition& bc = BoundaryCondition::neumann())
{
  if (cfg.threshold && !(*cfg.threshold > 0.0 && *cfg.threshold < 1.0))
    throw std::invalid_argument("edge threshold must lie in (0,1)");
  const VectorField g = grad_central(u, bc);
  Field mag(u.width(), u.height());
  for (std::size_t k = 0; k < mag.size(); ++k)
    mag.values()[k] = std::hypot(g.x.values()[k], g.y.values()[k]);
  Field edges(u.width(), u.height());
  const double peak = max_value(mag);
  if (peak <= 1e-12)
    return edges;

  Field norm = mag;
  norm *= 1.0 / peak;
  const double t = cfg.threshold ? *cfg.threshold : otsu_threshold(norm);

  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      const double m = norm(i, j);
      if (m < t || m <= 0.0)
        continue;
      // quantize the gradient direction into 0/45/90/135 degrees
      const double ang = std::atan2(g.y(i, j), g.x(i, j));
      double a = ang * 180.0 / std::numbers::pi;
      if (a < 0)
        a += 180.0;
      int di = 0, dj = 0;
      if (a < 22.5 || a >= 157.5)
        dj = 1;
      else if (a < 67.5)
        di = 1, dj = 1;
      else if (a < 112.5)
        di = 1;
      else
        di = 1, dj = -1;
      const auto inside = [&](int ii, int jj) {
        return ii >= 0 && ii < u.height() && jj >= 0 && jj < u.width();
      };
      const double before = inside(i - di, j - dj) ? norm(i - di, j - dj) : 0.0;
      const double after = inside(i + di, j + dj) ? norm(i + di, j + dj) : 0.0;
      // ties resolve toward the lower index so a symmetric ridge stays one pixel wide
      if (m > before && m >= after)
        edges(i, j) = 1.0;
    }
  return edges;
}

/// Laplacian-of-Gaussian zero crossings whose local jump exceeds `contrast`
/// times the largest jump. The pixel on the positive side is marked.
inline Field detect_edges_log(const Field& u, double sigma, double contrast = 0.1,
                              const BoundaryCondition& bc = BoundaryCondition::neumann())
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("LoG sigma must be positive");
  int size = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  const Field lg = laplacian5(convolve2d(u, gaussian_kernel(size, sigma), bc), bc);
  Field jump(u.width(), u.height());
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      double best = 0.0;
      const double c = lg(i, j);
      if (c <= 0.0)
        continue;
      static constexpr int di[] = {0, 1, 0, -1};
      static constexpr int dj[] = {1, 0, -1, 0};
      for (int n = 0; n < 4; ++n)
      {
        const int ii = i + di[n], jj = j + dj[n];
        if (ii < 0 || ii >= u.height() || jj < 0 || jj >= u.width())
          continue;
        if (lg(ii, jj) < 0.0)
          best = std::max(best, c - lg(ii, jj));
      }
      jump(i, j) = best;
    }
  Field edges(u.width(), u.height());
  const double peak = max_value(jump);
  if (peak <= 1e-12)
    return edges;
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (jump.values()[k] > contrast * peak)
      edges.values()[k] = 1.0;
  return edges;
}

struct EdgeScore
{
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall of binary edge maps, a detection matching ground truth when
/// within `tolerance` pixels (Chebyshev distance).
inline EdgeScore edge_f1(const Field& detected, const Field& truth, int tolerance = 1)
{
  detected.require_same_shape(truth);
  auto near = [&](const Field& f, int i, int j) {
    for (int a = -tolerance; a <= tolerance; ++a)
      for (int b = -tolerance; b <= tolerance; ++b)
      {
        const int ii = i + a, jj = j + b;
        if (ii >= 0 && ii < f.height() && jj >= 0 && jj < f.width() && f(ii, jj) > 0.5)
          return true;
      }
    return false;
  };
  long det = 0, det_hit = 0, tru = 0, tru_hit = 0;
  for (int i = 0; i < truth.height(); ++i)
    for (int j = 0; j < truth.width(); ++j)
    {
      if (detected(i, j) > 0.5)
      {
        ++det;
        det_hit += near(truth, i, j);
      }
      if (truth(i, j) > 0.5)
      {
        ++tru;
        tru_hit += near(detected, i, j);
      }
    }
  EdgeScore s;
  s.precision = det ? static_cast<double>(det_hit) / det : (tru ? 0.0 : 1.0);
  s.recall = tru ? static_cast<double>(tru_hit) / tru : 1.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
  return s;
}

} // namespace pdeimg

#endif
