#ifndef PDEIMG_PDE_NONLINEAR_HPP
#define PDEIMG_PDE_NONLINEAR_HPP

#include "errors.hpp"
#include "field.hpp"
#include "integrators.hpp"
#include "stencil.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pdeimg
{

// ---------------------------------------------------------------------------
// Perona-Malik
// ---------------------------------------------------------------------------

enum class DiffusivityFn
{
  Rational,    // 1 / (1 + (g/kappa)^2)
  Exponential  // exp(-(g/kappa)^2)
};

struct DiffusivityKind
{
  DiffusivityFn fn = DiffusivityFn::Rational;
  double kappa = 0.1;

  double operator()(double g) const noexcept
  {
    const double r = g / kappa;
    return fn == DiffusivityFn::Rational ? 1.0 / (1.0 + r * r) : std::exp(-r * r);
  }

  void validate() const
  {
    if (!(kappa > 0.0))
      throw ConfigError("diffusivity kappa must be positive");
  }
};

inline Field pm_diffusivity(const Field& grad_mag, const DiffusivityKind& d)
{
  d.validate();
  Field out = grad_mag;
  for (double& v : out.values())
  {
    if (v < 0.0)
      throw std::invalid_argument("pm_diffusivity: gradient magnitude must be non-negative");
    v = d(v);
  }
  return out;
}

enum class PmDiscretization
{
  Flux,     // conservative: sum of D(|u_n - u|) (u_n - u) over the 4 neighbors
  Expanded  // grad D . grad u + D Lap(u) with central differences
};

inline Field perona_malik_rhs(const Field& u, const DiffusivityKind& d, const BoundaryCondition& bc,
                              PmDiscretization form = PmDiscretization::Flux)
{
  d.validate();
  Field out(u.width(), u.height());
  if (form == PmDiscretization::Flux)
  {
    static constexpr int di[] = {-1, 1, 0, 0};
    static constexpr int dj[] = {0, 0, -1, 1};
    for (int i = 0; i < u.height(); ++i)
      for (int j = 0; j < u.width(); ++j)
      {
        const double c = u(i, j);
        double s = 0.0;
        for (int n = 0; n < 4; ++n)
        {
          const double diff = sample(u, i + di[n], j + dj[n], bc) - c;
          s += d(std::abs(diff)) * diff;
        }
        out(i, j) = s;
      }
    return out;
  }

  const Field diff = pm_diffusivity(gradient_magnitude(u, bc), d);
  const VectorField gd = grad_central(diff, bc);
  const VectorField gu = grad_central(u, bc);
  const Field lap = laplacian5(u, bc);
  for (std::size_t k = 0; k < out.size(); ++k)
    out.values()[k] = gd.x.values()[k] * gu.x.values()[k] + gd.y.values()[k] * gu.y.values()[k] +
                      diff.values()[k] * lap.values()[k];
  return out;
}

// ---------------------------------------------------------------------------
// Self-advection helper shared by Burgers, KdV and Kuramoto-Sivashinsky
// ---------------------------------------------------------------------------

namespace detail
{

/// -u * (du/dx + du/dy), each derivative upwinded with the local value of u.
inline Field self_advection(const Field& u, const BoundaryCondition& bc)
{
  const Field dx = upwind_deriv(u, Axis::X, u, bc);
  const Field dy = upwind_deriv(u, Axis::Y, u, bc);
  Field out(u.width(), u.height());
  for (std::size_t k = 0; k < out.size(); ++k)
    out.values()[k] = -u.values()[k] * (dx.values()[k] + dy.values()[k]);
  return out;
}

} // namespace detail

/// Self-advecting Burgers flow; viscosity 0 is the inviscid form.
inline Field burgers_rhs(const Field& u, double viscosity, const BoundaryCondition& bc)
{
  if (viscosity < 0.0)
    throw ConfigError("burgers: viscosity must be non-negative");
  Field out = detail::self_advection(u, bc);
  if (viscosity != 0.0)
    out.axpy(viscosity, laplacian5(u, bc));
  return out;
}

// ---------------------------------------------------------------------------
// Cahn-Hilliard
// ---------------------------------------------------------------------------

struct CahnHilliardParams
{
  double d_coeff = 1.0;
  double gamma = 1.0;
  bool invert_diffusion = false;
};

/// mu = -gamma Lap(c) + c + c^3 ; dc/dt = s * D * Lap(mu), s = -1 when inverted.
inline Field chemical_potential(const Field& c, double gamma, const BoundaryCondition& bc)
{
  Field mu = laplacian5(c, bc);
  mu *= -gamma;
  for (std::size_t k = 0; k < mu.size(); ++k)
  {
    const double v = c.values()[k];
    mu.values()[k] += v + v * v * v;
  }
  return mu;
}

inline Field cahn_hilliard_rhs(const Field& c, const CahnHilliardParams& p,
                               const BoundaryCondition& bc)
{
  if (!std::isfinite(p.d_coeff))
    throw ConfigError("cahn-hilliard: D must be finite");
  if (p.gamma < 0.0)
    throw ConfigError("cahn-hilliard: gamma must be non-negative");
  Field out = laplacian5(chemical_potential(c, p.gamma, bc), bc);
  out *= (p.invert_diffusion ? -1.0 : 1.0) * p.d_coeff;
  return out;
}

// ---------------------------------------------------------------------------
// Korteweg-de Vries
// ---------------------------------------------------------------------------

inline constexpr double kdv_default_alpha = 6.0;

/// du/dt = -u (u_x + u_y) - alpha (u_xxx + u_yyy).
/// The dispersive term is differenced one-sidedly toward where its waves come
/// from: for alpha > 0 dispersion carries energy toward -x, so the forward-biased
/// stencil is the upwind one (and is dissipative at the grid scale).
inline Field kdv_rhs(const Field& u, const BoundaryCondition& bc,
                     double alpha = kdv_default_alpha)
{
  const StencilBias bias = alpha >= 0.0 ? StencilBias::Forward : StencilBias::Backward;
  Field out = detail::self_advection(u, bc);
  out.axpy(-alpha, third_deriv_upwind(u, Axis::X, bc, bias));
  out.axpy(-alpha, third_deriv_upwind(u, Axis::Y, bc, bias));
  return out;
}

// ---------------------------------------------------------------------------
// Kuramoto-Sivashinsky (coefficient-free image form)
// ---------------------------------------------------------------------------

/// Explicit Euler stability bound for the per-axis fourth-order term at unit spacing.
inline constexpr double ks_stable_dt = 1.0 / 16.0;
inline constexpr double ks_default_dt = 0.05;

inline Field ks_rhs(const Field& u, const BoundaryCondition& bc)
{
  Field out = detail::self_advection(u, bc);
  out -= laplacian5(u, bc);
  out -= fourth_deriv(u, Axis::X, bc);
  out -= fourth_deriv(u, Axis::Y, bc);
  return out;
}

// ---------------------------------------------------------------------------
// Liouville
// ---------------------------------------------------------------------------

/// rho^{k+1} = rho^k - dt (v_x d rho/dx + v_y d rho/dy), upwinded. Rejects CFL violations.
inline Field liouville_step(const Field& rho, const VectorField& v, double dt,
                            const BoundaryCondition& bc)
{
  rho.require_same_shape(v.x);
  require_cfl(max_abs(v.x), max_abs(v.y), dt);
  const Field dx = upwind_deriv(rho, Axis::X, v.x, bc);
  const Field dy = upwind_deriv(rho, Axis::Y, v.y, bc);
  Field out = rho;
  for (std::size_t k = 0; k < out.size(); ++k)
    out.values()[k] -= dt * (v.x.values()[k] * dx.values()[k] + v.y.values()[k] * dy.values()[k]);
  return out;
}

struct LiouvilleVelocity
{
  enum class Kind
  {
    Constant,
    SinusoidalRandom
  };
  Kind kind = Kind::Constant;
  double vx = 0.0;
  double vy = 0.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  std::uint64_t seed = 0;
};

inline VectorField make_liouville_velocity(const LiouvilleVelocity& spec, int width, int height)
{
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("make_liouville_velocity: dimensions must be positive");
  if (spec.kind == LiouvilleVelocity::Kind::Constant)
    return VectorField(width, height, spec.vx, spec.vy);

  std::mt19937_64 gen(spec.seed);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double phase_x = two_pi * static_cast<double>(gen() >> 11) * 0x1.0p-53;
  const double phase_y = two_pi * static_cast<double>(gen() >> 11) * 0x1.0p-53;
  const double a = spec.amplitude, f = spec.frequency;
  return VectorField(
      Field::generate(width, height,
                      [&](int, int j) { return a * std::sin(two_pi * f * j / width + phase_x); }),
      Field::generate(width, height,
                      [&](int i, int) { return a * std::sin(two_pi * f * i / height + phase_y); }));
}

} // namespace pdeimg

#endif
