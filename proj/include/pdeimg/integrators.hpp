#ifndef PDEIMG_INTEGRATORS_HPP
#define PDEIMG_INTEGRATORS_HPP

#include "errors.hpp"
#include "field.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace pdeimg
{

using Rhs = std::function<Field(const Field&)>;

enum class Scheme
{
  Euler,
  RK4
};

struct TimeGrid
{
  double dt = 1.0;
  long steps = 1;

  void validate() const
  {
    if (!(dt > 0.0))
      throw ConfigError("time step dt must be positive");
    if (steps < 1)
      throw ConfigError("step count must be at least 1");
  }
};

struct CflReport
{
  double courant = 0.0;
  double limit = 1.0;
  bool ok = true;
};

/// Magnitude beyond which a state counts as blown up.
inline constexpr double divergence_bound = 1e6;

inline bool is_diverged(const Field& u) noexcept
{
  for (double v : u.values())
    if (!std::isfinite(v) || std::abs(v) > divergence_bound)
      return true;
  return false;
}

inline void check_divergence(const Field& u, long step)
{
  if (is_diverged(u))
    throw DivergenceError(step);
}

/// Courant number for unit grid spacing; explicit Euler limit is 1.
inline CflReport cfl_check(double ax, double ay, double dt)
{
  if (!(dt > 0.0))
    throw ConfigError("cfl_check: dt must be positive");
  CflReport r;
  r.courant = std::abs(ax) * dt + std::abs(ay) * dt;
  r.limit = 1.0;
  r.ok = r.courant <= r.limit;
  return r;
}

inline void require_cfl(double ax, double ay, double dt)
{
  const CflReport r = cfl_check(ax, ay, dt);
  if (!r.ok)
    throw CflViolation(r.courant, r.limit);
}

inline Field euler_step(const Field& u, const Rhs& rhs, double dt, long step_index = 0)
{
  if (!(dt > 0.0))
    throw ConfigError("euler_step: dt must be positive");
  Field k = rhs(u);
  check_divergence(k, step_index);
  Field next = u;
  next.axpy(dt, k);
  check_divergence(next, step_index);
  return next;
}

inline Field rk4_step(const Field& u, const Rhs& rhs, double dt, long step_index = 0)
{
  if (!(dt > 0.0))
    throw ConfigError("rk4_step: dt must be positive");
  auto stage = [&](const Field& x) {
    Field k = rhs(x);
    check_divergence(k, step_index);
    return k;
  };
  const Field k1 = stage(u);
  const Field k2 = stage(Field(u).axpy(0.5 * dt, k1));
  const Field k3 = stage(Field(u).axpy(0.5 * dt, k2));
  const Field k4 = stage(Field(u).axpy(dt, k3));
  Field next = u;
  const auto n = next.values();
  const auto a = k1.values(), b = k2.values(), c = k3.values(), d = k4.values();
  for (std::size_t i = 0; i < n.size(); ++i)
    n[i] += dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
  check_divergence(next, step_index);
  return next;
}

inline Field scheme_step(Scheme s, const Field& u, const Rhs& rhs, double dt, long step_index = 0)
{
  return s == Scheme::Euler ? euler_step(u, rhs, dt, step_index)
                            : rk4_step(u, rhs, dt, step_index);
}

struct EvolveOptions
{
  Scheme scheme = Scheme::Euler;
  std::optional<long> snapshot_every;
  /// Stop once max|u^{k+1} - u^k| < tol. Off when unset.
  std::optional<double> early_stop_tol;
  /// Applied to the state after every step (clamping, re-centering).
  std::function<void(Field&)> post_step;
};

struct EvolveResult
{
  Field field;
  std::vector<Field> snapshots;
  long steps_taken = 0;
};

/// Advances a state by one step; the second argument is the 1-based step index.
using Stepper = std::function<Field(const Field&, long)>;

/// Generic time loop. Snapshots land at every multiple of snapshot_every, plus
/// the final state when it is not already one.
inline EvolveResult evolve_steps(const Field& u0, const Stepper& step, long steps,
                                 const EvolveOptions& opts = {})
{
  if (steps < 1)
    throw ConfigError("step count must be at least 1");
  if (opts.snapshot_every && *opts.snapshot_every < 1)
    throw ConfigError("snapshot_every must be at least 1");
  EvolveResult r{u0, {}, 0};
  for (long k = 1; k <= steps; ++k)
  {
    Field next = step(r.field, k);
    if (opts.post_step)
      opts.post_step(next);
    check_divergence(next, k);
    const bool stop = opts.early_stop_tol && max_abs_diff(next, r.field) < *opts.early_stop_tol;
    r.field = std::move(next);
    r.steps_taken = k;
    const bool last = stop || k == steps;
    if (opts.snapshot_every && (k % *opts.snapshot_every == 0 || last))
      r.snapshots.push_back(r.field);
    if (stop)
      break;
  }
  return r;
}

inline EvolveResult evolve(const Field& u0, const Rhs& rhs, const TimeGrid& grid,
                           const EvolveOptions& opts = {})
{
  grid.validate();
  const Scheme scheme = opts.scheme;
  const double dt = grid.dt;
  return evolve_steps(
      u0, [&](const Field& u, long k) { return scheme_step(scheme, u, rhs, dt, k); }, grid.steps,
      opts);
}

} // namespace pdeimg

#endif
