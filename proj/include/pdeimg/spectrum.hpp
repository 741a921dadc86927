#ifndef PDEIMG_SPECTRUM_HPP
#define PDEIMG_SPECTRUM_HPP

#include "field.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace pdeimg
{

/// 2D DFT by separable direct row/column transforms, O(WH(W+H)).
inline std::vector<std::complex<double>> dft2(const Field& u)
{
  const int w = u.width(), h = u.height();
  using cd = std::complex<double>;
  std::vector<cd> rows(static_cast<std::size_t>(w) * h);
  auto twiddles = [](int n) {
    std::vector<cd> t(n);
    for (int k = 0; k < n; ++k)
      t[k] = std::polar(1.0, -2.0 * std::numbers::pi * k / n);
    return t;
  };
  const auto tw = twiddles(w), th = twiddles(h);
  for (int i = 0; i < h; ++i)
    for (int k = 0; k < w; ++k)
    {
      cd s = 0;
      for (int j = 0; j < w; ++j)
        s += u(i, j) * tw[(static_cast<long>(k) * j) % w];
      rows[static_cast<std::size_t>(i) * w + k] = s;
    }
  std::vector<cd> out(rows.size());
  for (int l = 0; l < h; ++l)
    for (int k = 0; k < w; ++k)
    {
      cd s = 0;
      for (int i = 0; i < h; ++i)
        s += rows[static_cast<std::size_t>(i) * w + k] * th[(static_cast<long>(l) * i) % h];
      out[static_cast<std::size_t>(l) * w + k] = s;
    }
  return out;
}

/// log(1 + |F|), zero frequency moved to (h/2, w/2). Not normalized.
inline Field log_magnitude_spectrum(const Field& u)
{
  const auto f = dft2(u);
  const int w = u.width(), h = u.height();
  Field out(w, h);
  for (int l = 0; l < h; ++l)
    for (int k = 0; k < w; ++k)
      out((l + h / 2) % h, (k + w / 2) % w) = std::log1p(std::abs(f[static_cast<std::size_t>(l) * w + k]));
  return out;
}

/// Linear rescale to [0,1] for display; a flat input maps to zero.
inline Field normalize_for_display(Field f)
{
  const double lo = min_value(f), hi = max_value(f);
  for (double& v : f.values())
    v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  return f;
}

} // namespace pdeimg

#endif
