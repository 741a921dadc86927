#ifndef PDEIMG_MAXWELL_HEAVISIDE_HPP
#define PDEIMG_MAXWELL_HEAVISIDE_HPP

#include "errors.hpp"
#include "field.hpp"
#include "integrators.hpp"
#include "stencil.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace pdeimg
{

/// Diffusion-advection-reaction flow where the image gradient plays the electric
/// field E and its curl the (scalar) magnetic field H:
///
///   du/dt = alpha Lap(u) - beta div(E x H) + gamma EM^2
///
/// EM is either sqrt(Ex^2 + Ey^2 + 2H^2) or the energy density
/// (eps0 |E|^2 + mu0 H^2) / 2.

enum class EmMethod
{
  VectorMagnitude,
  EnergyDensity
};

struct EmConstants
{
  double eps0 = 1.0;
  double mu0 = 1.0;

  static constexpr EmConstants si() { return {8.8541878128e-12, 1.25663706212e-6}; }
  static constexpr EmConstants normalized() { return {1.0, 1.0}; }
};

enum class FieldUpdate
{
  Fixed,        // E, H built once from u0
  PerIteration, // rebuilt from u^k at the start of each step, frozen across RK4 stages
  PerStage      // rebuilt from every RK4 stage state
};

struct MhParams
{
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  EmMethod em_method = EmMethod::VectorMagnitude;
  EmConstants constants = EmConstants::normalized();
  bool recompute_fields = false;
  /// With recompute_fields, also rebuild E/H and the frozen terms at every RK4 stage.
  bool recompute_per_stage = false;
  Scheme scheme = Scheme::Euler;
  double dt = 0.1;
  long steps = 1;
  std::optional<Mask> mask;

  FieldUpdate field_update() const noexcept
  {
    if (!recompute_fields)
      return FieldUpdate::Fixed;
    return recompute_per_stage ? FieldUpdate::PerStage : FieldUpdate::PerIteration;
  }
};

struct EmFields
{
  VectorField e;
  Field h;
};

inline VectorField electric_field(const Field& u, const BoundaryCondition& bc)
{
  return grad_central(u, bc);
}

/// Scalar 2D curl dEy/dx - dEx/dy.
inline Field magnetic_field(const VectorField& e, const BoundaryCondition& bc)
{
  return central_deriv(e.y, Axis::X, bc) - central_deriv(e.x, Axis::Y, bc);
}

inline EmFields em_fields(const Field& u, const BoundaryCondition& bc)
{
  VectorField e = electric_field(u, bc);
  Field h = magnetic_field(e, bc);
  return {std::move(e), std::move(h)};
}

inline Field em_magnitude(const EmFields& f, EmMethod method,
                          const EmConstants& k = EmConstants::normalized())
{
  Field out(f.h.width(), f.h.height());
  const auto ex = f.e.x.values(), ey = f.e.y.values(), h = f.h.values();
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    const double e2 = ex[i] * ex[i] + ey[i] * ey[i];
    out.values()[i] = method == EmMethod::VectorMagnitude
                          ? std::sqrt(e2 + 2.0 * h[i] * h[i])
                          : 0.5 * (k.eps0 * e2 + k.mu0 * h[i] * h[i]);
  }
  return out;
}

/// d(s)/dx + d(s)/dy with s = ExHy - EyHx = H (Ex - Ey).
///
/// Central differences throughout. Under Neumann mirroring the flux s is
/// reflected oddly across the border so the normal flux through the image
/// boundary is zero and the term sums to zero over the image.
inline Field poynting_divergence(const EmFields& f, const BoundaryCondition& bc)
{
  Field s(f.h.width(), f.h.height());
  for (std::size_t k = 0; k < s.size(); ++k)
    s.values()[k] = f.h.values()[k] * (f.e.x.values()[k] - f.e.y.values()[k]);

  if (bc.kind == BcKind::Periodic)
    return central_deriv(s, Axis::X, bc) + central_deriv(s, Axis::Y, bc);

  const int w = s.width(), hgt = s.height();
  auto at = [&](int i, int j) {
    // outside the image the flux is the negated edge value
    if (i < 0 || i >= hgt || j < 0 || j >= w)
      return -s(detail::clamp_index(i, hgt), detail::clamp_index(j, w));
    return s(i, j);
  };
  Field out(w, hgt);
  for (int i = 0; i < hgt; ++i)
    for (int j = 0; j < w; ++j)
      out(i, j) = 0.5 * (at(i, j + 1) - at(i, j - 1)) + 0.5 * (at(i + 1, j) - at(i - 1, j));
  return out;
}

/// Advection plus reaction part, -beta div(E x H) + gamma EM^2.
inline Field mh_field_terms(const EmFields& f, const MhParams& p, const BoundaryCondition& bc)
{
  Field out(f.h.width(), f.h.height());
  if (p.beta != 0.0)
    out.axpy(-p.beta, poynting_divergence(f, bc));
  if (p.gamma != 0.0)
  {
    const Field em = em_magnitude(f, p.em_method, p.constants);
    for (std::size_t k = 0; k < out.size(); ++k)
      out.values()[k] += p.gamma * em.values()[k] * em.values()[k];
  }
  return out;
}

namespace detail
{

inline void apply_mask(Field& rhs, const std::optional<Mask>& mask)
{
  if (!mask)
    return;
  mask->require_matches(rhs);
  for (std::size_t k = 0; k < rhs.size(); ++k)
    if (!mask->at_index(k))
      rhs.values()[k] = 0.0;
}

inline Field mh_rhs_with_terms(const Field& u, const Field& field_terms, const MhParams& p,
                               const BoundaryCondition& bc)
{
  Field out = field_terms;
  if (p.alpha != 0.0)
    out.axpy(p.alpha, laplacian5(u, bc));
  apply_mask(out, p.mask);
  return out;
}

} // namespace detail

inline Field mh_rhs(const Field& u, const EmFields& f, const MhParams& p,
                    const BoundaryCondition& bc)
{
  u.require_same_shape(f.h);
  return detail::mh_rhs_with_terms(u, mh_field_terms(f, p, bc), p, bc);
}

inline void validate(const MhParams& p)
{
  TimeGrid{p.dt, p.steps}.validate();
  if (p.alpha > 0.0 && p.alpha * p.dt > 0.25)
    throw ConfigError("maxwell-heaviside: alpha*dt must not exceed 0.25 for explicit diffusion");
}

/// One-step advance for the Maxwell-Heaviside flow. With fixed or per-iteration
/// fields the advection and reaction terms stay constant across RK4 stages and
/// only the diffusion argument moves; per-stage mode re-evaluates everything.
class MhStepper
{
public:
  MhStepper(const Field& u0, MhParams p, BoundaryCondition bc)
    : p_(std::move(p)), bc_(bc), frozen_(mh_field_terms(em_fields(u0, bc), p_, bc))
  {
    validate(p_);
    if (p_.mask)
      p_.mask->require_matches(u0);
  }

  Field operator()(const Field& u, long k)
  {
    const FieldUpdate mode = p_.field_update();
    if (mode == FieldUpdate::PerIteration && k > 1)
      frozen_ = mh_field_terms(em_fields(u, bc_), p_, bc_);
    Rhs rhs;
    if (mode == FieldUpdate::PerStage)
      rhs = [this](const Field& x) { return mh_rhs(x, em_fields(x, bc_), p_, bc_); };
    else
      rhs = [this](const Field& x) { return detail::mh_rhs_with_terms(x, frozen_, p_, bc_); };
    return scheme_step(p_.scheme, u, rhs, p_.dt, k);
  }

  const MhParams& params() const noexcept { return p_; }

private:
  MhParams p_;
  BoundaryCondition bc_;
  Field frozen_;
};

/// Runs p.steps iterations; `post_step` runs on the state after every step.
inline Field mh_evolve(const Field& u0, const MhParams& p, const BoundaryCondition& bc,
                       const std::function<void(Field&)>& post_step = {})
{
  MhStepper stepper(u0, p, bc);
  EvolveOptions opts;
  opts.post_step = post_step;
  return evolve_steps(u0, std::ref(stepper), p.steps, opts).field;
}

} // namespace pdeimg

#endif
