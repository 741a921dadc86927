#ifndef PDEIMG_SYNTHETIC_HPP
#define PDEIMG_SYNTHETIC_HPP

#include "field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdeimg::synthetic
{

// Stand-in test images in [0,1].

inline Field ramp(int w, int h)
{
  return Field::generate(w, h, [w](int, int j) { return w > 1 ? double(j) / (w - 1) : 0.5; });
}

inline Field constant(int w, int h, double v) { return Field(w, h, v); }

inline Field checkerboard(int w, int h, int cell)
{
  return Field::generate(w, h, [cell](int i, int j) { return ((i / cell + j / cell) % 2) ? 1.0 : 0.0; });
}

inline Field disk(int w, int h, double radius_frac = 0.3, double inside = 0.8, double outside = 0.2)
{
  const double ci = (h - 1) / 2.0, cj = (w - 1) / 2.0, r = radius_frac * std::min(w, h);
  return Field::generate(w, h, [&](int i, int j) {
    return std::hypot(i - ci, j - cj) <= r ? inside : outside;
  });
}

/// Vertical step between columns edge-1 and edge.
inline Field vertical_step(int w, int h, int edge, double lo = 0.0, double hi = 1.0)
{
  return Field::generate(w, h, [=](int, int j) { return j < edge ? lo : hi; });
}

/// Smoothed step: 0.5 + 0.5*amp*tanh((j - center)/width_px).
inline Field soft_edge(int w, int h, double width_px = 4.0, double amp = 0.6)
{
  const double c = (w - 1) / 2.0;
  return Field::generate(w, h, [=](int, int j) { return 0.5 + 0.5 * amp * std::tanh((j - c) / width_px); });
}

/// Vertical stripes with soft, rounded transitions; `k` sets the edge steepness.
inline Field soft_stripes(int w, int h, int period = 32, double k = 1.5, double amp = 0.6)
{
  constexpr double tau = 2.0 * std::numbers::pi;
  return Field::generate(w, h, [=](int, int j) {
    return 0.5 + 0.5 * amp * std::tanh(k * std::sin(tau * j / period)) / std::tanh(k);
  });
}

/// Periodic band-limited image (sum of low-frequency sinusoids).
inline Field smooth(int w, int h)
{
  constexpr double tau = 2.0 * std::numbers::pi;
  return Field::generate(w, h, [=](int i, int j) {
    const double x = double(j) / w, y = double(i) / h;
    return 0.5 + 0.2 * std::sin(tau * x) * std::cos(tau * 2 * y) + 0.15 * std::cos(tau * (x + y)) +
           0.1 * std::sin(tau * 3 * x + 0.4);
  });
}

/// Piecewise-constant composition: background, rectangle, disk and a bar.
inline Field shapes(int w, int h)
{
  return Field::generate(w, h, [=](int i, int j) {
    const double y = double(i) / h, x = double(j) / w;
    double v = 0.2;
    if (x > 0.1 && x < 0.45 && y > 0.15 && y < 0.5)
      v = 0.8;
    if (std::hypot(x - 0.68, y - 0.62) < 0.2)
      v = 0.55;
    if (y > 0.78 && y < 0.88 && x > 0.15 && x < 0.85)
      v = 0.95;
    return v;
  });
}

inline Field random_field(int w, int h, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  return Field::generate(w, h, [&](int, int) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; });
}

inline Mask rect_mask(int w, int h, int i0, int j0, int rows, int cols)
{
  Mask m(w, h);
  for (int i = i0; i < i0 + rows && i < h; ++i)
    for (int j = j0; j < j0 + cols && j < w; ++j)
      m.set(i, j, true);
  return m;
}

/// Random damage strokes: short random walks of a 3x3 brush.
inline Mask random_strokes(int w, int h, int strokes, int length, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  auto uniform_int = [&](int n) { return static_cast<int>(gen() % static_cast<std::uint64_t>(n)); };
  Mask m(w, h);
  for (int s = 0; s < strokes; ++s)
  {
    int i = uniform_int(h), j = uniform_int(w);
    const int di = uniform_int(3) - 1, dj = uniform_int(3) - 1;
    for (int k = 0; k < length; ++k)
    {
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
        {
          const int ii = i + a, jj = j + b;
          if (ii >= 0 && ii < h && jj >= 0 && jj < w)
            m.set(ii, jj, true);
        }
      i = std::clamp(i + di + uniform_int(3) - 1, 0, h - 1);
      j = std::clamp(j + dj + uniform_int(3) - 1, 0, w - 1);
    }
  }
  return m;
}

inline Field by_name(const std::string& name, int w, int h)
{
  if (name == "ramp")
    return ramp(w, h);
  if (name == "checkerboard")
    return checkerboard(w, h, std::max(1, w / 8));
  if (name == "disk")
    return disk(w, h);
  if (name == "shapes")
    return shapes(w, h);
  if (name == "smooth")
    return smooth(w, h);
  if (name == "soft_edge")
    return soft_edge(w, h);
  if (name == "soft_stripes")
    return soft_stripes(w, h);
  if (name == "step")
    return vertical_step(w, h, w / 2, 0.2, 0.8);
  throw std::invalid_argument("unknown synthetic image '" + name + "'");
}

inline const std::vector<std::string>& names()
{
  static const std::vector<std::string> n{"shapes", "disk", "checkerboard", "ramp", "smooth"};
  return n;
}

} // namespace pdeimg::synthetic

#endif
