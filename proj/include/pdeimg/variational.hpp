#ifndef PDEIMG_VARIATIONAL_HPP
#define PDEIMG_VARIATIONAL_HPP

#include "errors.hpp"
#include "field.hpp"
#include "integrators.hpp"
#include "stencil.hpp"

#include <cmath>
#include <vector>

namespace pdeimg
{

// Non-blind deblurring baselines solved by explicit gradient descent with
// step halving on objective increase.
//
//   Tikhonov: 1/2 |k*u - g|^2 + lambda/2 |D u|^2
//   TV:       1/2 |k*u - g|^2 + lambda sum sqrt(|D u|^2 + eps^2)
//
// D is the forward difference; its adjoint is the negative backward divergence.

struct DeblurProblem
{
  Field observed;
  Kernel kernel = Kernel::identity();
  double lambda = 0.01;
  double eps = 1e-3;
  double step = 1.0;
  long iters = 300;
};

inline constexpr int max_step_halvings = 10;

struct DeblurResult
{
  Field field;
  std::vector<double> objective; // value after each accepted iteration, [0] = initial
  double final_step = 0.0;
};

namespace detail
{

inline double forward_diff(const Field& u, int i, int j, Axis a, const BoundaryCondition& bc)
{
  return a == Axis::X ? sample(u, i, j + 1, bc) - u(i, j) : sample(u, i + 1, j, bc) - u(i, j);
}

inline VectorField forward_grad(const Field& u, const BoundaryCondition& bc)
{
  VectorField g(u.width(), u.height(), 0.0, 0.0);
  for (int i = 0; i < u.height(); ++i)
    for (int j = 0; j < u.width(); ++j)
    {
      g.x(i, j) = forward_diff(u, i, j, Axis::X, bc);
      g.y(i, j) = forward_diff(u, i, j, Axis::Y, bc);
    }
  if (bc.kind == BcKind::NeumannMirror)
  {
    // zero flux through the last row/column
    for (int i = 0; i < u.height(); ++i)
      g.x(i, u.width() - 1) = 0.0;
    for (int j = 0; j < u.width(); ++j)
      g.y(u.height() - 1, j) = 0.0;
  }
  return g;
}

/// Negative adjoint of forward_grad: backward-difference divergence.
inline Field backward_div(const VectorField& p, const BoundaryCondition& bc)
{
  const int w = p.width(), h = p.height();
  Field out(w, h);
  const bool periodic = bc.kind == BcKind::Periodic;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
    {
      double px_left = 0.0, py_up = 0.0;
      if (j > 0)
        px_left = p.x(i, j - 1);
      else if (periodic)
        px_left = p.x(i, w - 1);
      if (i > 0)
        py_up = p.y(i - 1, j);
      else if (periodic)
        py_up = p.y(h - 1, j);
      out(i, j) = p.x(i, j) - px_left + p.y(i, j) - py_up;
    }
  return out;
}

inline Field residual(const Field& u, const DeblurProblem& p, const BoundaryCondition& bc)
{
  return convolve2d(u, p.kernel, bc) - p.observed;
}

inline double half_sq_norm(const Field& f)
{
  double s = 0.0;
  for (double v : f.values())
    s += v * v;
  return 0.5 * s;
}

enum class Regularizer
{
  Tikhonov,
  TotalVariation
};

inline double objective(const Field& u, const DeblurProblem& p, Regularizer reg,
                        const BoundaryCondition& bc)
{
  double j = half_sq_norm(residual(u, p, bc));
  const VectorField g = forward_grad(u, bc);
  double r = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k)
  {
    const double gx = g.x.values()[k], gy = g.y.values()[k];
    r += reg == Regularizer::Tikhonov ? 0.5 * (gx * gx + gy * gy)
                                      : std::sqrt(gx * gx + gy * gy + p.eps * p.eps);
  }
  return j + p.lambda * r;
}

inline Field objective_gradient(const Field& u, const DeblurProblem& p, Regularizer reg,
                                const BoundaryCondition& bc)
{
  Field grad = convolve2d(residual(u, p, bc), p.kernel.flipped(), bc);
  VectorField g = forward_grad(u, bc);
  if (reg == Regularizer::TotalVariation)
  {
    for (std::size_t k = 0; k < u.size(); ++k)
    {
      const double gx = g.x.values()[k], gy = g.y.values()[k];
      const double n = std::sqrt(gx * gx + gy * gy + p.eps * p.eps);
      g.x.values()[k] = gx / n;
      g.y.values()[k] = gy / n;
    }
  }
  grad.axpy(-p.lambda, backward_div(g, bc));
  return grad;
}

inline DeblurResult descend(const DeblurProblem& p, Regularizer reg, const BoundaryCondition& bc)
{
  if (!(p.lambda > 0.0) || !(p.step > 0.0) || !(p.eps > 0.0))
    throw ConfigError("deblur: lambda, eps and step must be positive");
  if (p.iters < 1)
    throw ConfigError("deblur: iters must be at least 1");
  DeblurResult r{p.observed, {}, p.step};
  double j = objective(r.field, p, reg, bc);
  r.objective.push_back(j);
  for (long it = 1; it <= p.iters; ++it)
  {
    const Field grad = objective_gradient(r.field, p, reg, bc);
    check_divergence(grad, it);
    bool accepted = false;
    for (int h = 0; h <= max_step_halvings; ++h)
    {
      Field trial = r.field;
      trial.axpy(-r.final_step, grad);
      const double jt = objective(trial, p, reg, bc);
      if (!std::isfinite(jt))
        throw DivergenceError(it);
      if (jt <= j)
      {
        r.field = std::move(trial);
        j = jt;
        accepted = true;
        break;
      }
      if (h < max_step_halvings)
        r.final_step *= 0.5;
    }
    if (!accepted)
      break;
    r.objective.push_back(j);
  }
  return r;
}

} // namespace detail

/// Full descent trace; the `*_deblur` wrappers return only the clamped image.
inline DeblurResult tikhonov_descent(const DeblurProblem& p, const BoundaryCondition& bc)
{
  return detail::descend(p, detail::Regularizer::Tikhonov, bc);
}

inline DeblurResult tv_descent(const DeblurProblem& p, const BoundaryCondition& bc)
{
  return detail::descend(p, detail::Regularizer::TotalVariation, bc);
}

inline Field tikhonov_deblur(const DeblurProblem& p, const BoundaryCondition& bc)
{
  return clamp_unit(tikhonov_descent(p, bc).field);
}

inline Field tv_deblur(const DeblurProblem& p, const BoundaryCondition& bc)
{
  return clamp_unit(tv_descent(p, bc).field);
}

inline DeblurProblem tikhonov_defaults(Field observed, Kernel kernel)
{
  return {std::move(observed), std::move(kernel), 0.01, 1e-3, 1.0, 300};
}

inline DeblurProblem tv_defaults(Field observed, Kernel kernel)
{
  return {std::move(observed), std::move(kernel), 0.002, 1e-3, 1.0, 300};
}

} // namespace pdeimg

#endif
