#ifndef PDEIMG_PDE_LINEAR_HPP
#define PDEIMG_PDE_LINEAR_HPP

#include "errors.hpp"
#include "field.hpp"
#include "integrators.hpp"
#include "stencil.hpp"

#include <cmath>
#include <optional>

namespace pdeimg
{

/// du/dt = alpha * Lap(u). Isotropic diffusion with constant D0 is this with alpha = D0.
inline Field heat_rhs(const Field& u, double alpha, const BoundaryCondition& bc)
{
  Field out = laplacian5(u, bc);
  out *= alpha;
  return out;
}

inline Rhs make_heat_rhs(double alpha, BoundaryCondition bc)
{
  return [alpha, bc](const Field& u) { return heat_rhs(u, alpha, bc); };
}

struct LaplaceResult
{
  Field field;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Jacobi relaxation of Lap(u) = 0. Under Neumann mirroring each sweep preserves
/// the mean, so the limit is the constant mean(u0).
inline LaplaceResult laplace_steady(const Field& u0, const BoundaryCondition& bc, double tol,
                                    long max_iter)
{
  if (!(tol > 0.0))
    throw ConfigError("laplace_steady: tol must be positive");
  LaplaceResult r{u0, 0, 0.0, false};
  for (;;)
  {
    Field lap = laplacian5(r.field, bc);
    r.residual = max_abs(lap);
    if (r.residual < tol)
    {
      r.converged = true;
      return r;
    }
    if (r.iterations >= max_iter)
      return r;
    r.field.axpy(0.25, lap);
    ++r.iterations;
  }
}

struct PoissonSource
{
  Field f;
  double strength = 1.0;
};

/// Pseudo-time relaxation du/dt = Lap(u) - strength*f; the steady state solves Lap(u) = strength*f.
inline Field poisson_rhs(const Field& u, const PoissonSource& source, const BoundaryCondition& bc)
{
  u.require_same_shape(source.f);
  Field out = laplacian5(u, bc);
  out.axpy(-source.strength, source.f);
  return out;
}

/// Source for source-guided denoising: gradient magnitude of the initial image,
/// kept only where it exceeds `threshold` (regions of high contrast).
inline Field contrast_source(const Field& u0, double threshold, const BoundaryCondition& bc)
{
  Field f = gradient_magnitude(u0, bc);
  for (double& v : f.values())
    if (!(v > threshold))
      v = 0.0;
  return f;
}

struct WaveState
{
  Field u;
  Field u_prev;
  double c = 1.0;

  /// Zero initial velocity start.
  static WaveState at_rest(const Field& u0, double c) { return {u0, u0, c}; }
};

inline constexpr double wave_stability_limit = 0.70710678118654752440; // 1/sqrt(2)

/// Leapfrog step. Pixels where the mask is false stay static.
inline WaveState wave_step(const WaveState& s, double dt, const BoundaryCondition& bc,
                           const std::optional<Mask>& mask = std::nullopt)
{
  s.u.require_same_shape(s.u_prev);
  if (!(dt > 0.0))
    throw ConfigError("wave_step: dt must be positive");
  const double courant = std::abs(s.c) * dt;
  if (courant > wave_stability_limit)
    throw CflViolation(courant, wave_stability_limit);
  if (mask)
    mask->require_matches(s.u);

  const Field lap = laplacian5(s.u, bc);
  const double r2 = courant * courant;
  Field next(s.u.width(), s.u.height());
  for (std::size_t k = 0; k < next.size(); ++k)
  {
    if (mask && !mask->at_index(k))
      next.values()[k] = s.u.values()[k];
    else
      next.values()[k] = 2.0 * s.u.values()[k] - s.u_prev.values()[k] + r2 * lap.values()[k];
  }
  return {std::move(next), s.u, s.c};
}

/// du/dt = -(c_x du/dx + c_y du/dy), upwind in the velocity direction.
inline Field transport_rhs(const Field& u, const VectorField& velocity,
                           const BoundaryCondition& bc)
{
  u.require_same_shape(velocity.x);
  const Field dx = upwind_deriv(u, Axis::X, velocity.x, bc);
  const Field dy = upwind_deriv(u, Axis::Y, velocity.y, bc);
  Field out(u.width(), u.height());
  for (std::size_t k = 0; k < out.size(); ++k)
    out.values()[k] = -(velocity.x.values()[k] * dx.values()[k] +
                        velocity.y.values()[k] * dy.values()[k]);
  return out;
}

} // namespace pdeimg

#endif
