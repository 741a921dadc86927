#include <pdeimg/config.hpp>
#include <pdeimg/field.hpp>
#include <pdeimg/integrators.hpp>
#include <pdeimg/metrics.hpp>
#include <pdeimg/pde_linear.hpp>
#include <pdeimg/stencil.hpp>
#include <pdeimg/synthetic.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pdeimg;

namespace
{

const auto neumann = BoundaryCondition::neumann();
const auto periodic = BoundaryCondition::periodic();

Field random_field(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  return Field::generate(w, h, [&](int, int) { return dist(gen); });
}

Field row(std::initializer_list<double> v) { return Field(static_cast<int>(v.size()), 1, std::vector<double>(v)); }

double field_sum(const Field& f)
{
  double s = 0;
  for (double v : f.values())
    s += v;
  return s;
}

} // namespace

// ---- field ---------------------------------------------------------------

TEST(Field, RejectsBadShape)
{
  EXPECT_THROW(Field(0, 3), std::invalid_argument);
  EXPECT_THROW(Field(2, 2, std::vector<double>(3)), std::invalid_argument);
  EXPECT_THROW(Field(2, 2) += Field(3, 2), std::invalid_argument);
}

TEST(Sample, SinglePixelNeumann) { EXPECT_EQ(sample(Field(1, 1, 0.7), -3, 5, neumann), 0.7); }

TEST(Sample, PeriodicWrapsAround) { EXPECT_EQ(sample(row({0.1, 0.2, 0.3}), 0, -1, periodic), 0.3); }

TEST(Sample, NeumannMirrorsEdge) { EXPECT_EQ(sample(row({0.1, 0.2, 0.3}), 0, -1, neumann), 0.1); }

TEST(Sample, TotalAndPeriodic)
{
  const Field f = random_field(5, 4, 1);
  for (int i = -9; i < 9; ++i)
    for (int j = -11; j < 11; ++j)
    {
      EXPECT_EQ(sample(f, i, j, periodic), sample(f, i + 4, j + 5, periodic));
      const double n = sample(f, i, j, neumann);
      EXPECT_EQ(n, f(std::clamp(i, 0, 3), std::clamp(j, 0, 4)));
    }
}

TEST(ExtendPeriodic, PadZeroIsIdentity)
{
  const Field f = random_field(6, 5, 2);
  EXPECT_EQ(extend_periodic(f, 0), f);
  EXPECT_EQ(crop_center(f, 0), f);
}

TEST(ExtendPeriodic, CornerWraps)
{
  const Field f(2, 2, {1, 2, 3, 4}); // [[a,b],[c,d]]
  const Field e = extend_periodic(f, 1);
  ASSERT_EQ(e.width(), 4);
  ASSERT_EQ(e.height(), 4);
  EXPECT_EQ(e(0, 0), 4.0);
}

TEST(ExtendPeriodic, CropRoundTripIsBitExact)
{
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    const Field f = random_field(7 + static_cast<int>(s), 9, s);
    EXPECT_EQ(crop_center(extend_periodic(f, 3), 3), f);
  }
}

TEST(ExtendPeriodic, Errors)
{
  EXPECT_THROW(extend_periodic(Field(2, 2), -1), std::invalid_argument);
  EXPECT_THROW(crop_center(Field(4, 4), 2), std::invalid_argument);
}

TEST(CropCenter, CentralBlock)
{
  const Field f = Field::generate(4, 4, [](int i, int j) { return 10.0 * i + j; });
  const Field c = crop_center(f, 1);
  EXPECT_EQ(c, Field(2, 2, {11, 12, 21, 22}));
}

TEST(MeanIntensity, Examples)
{
  EXPECT_DOUBLE_EQ(mean_intensity(Field(3, 3, 0.5)), 0.5);
  EXPECT_DOUBLE_EQ(mean_intensity(Field(2, 2, {0, 1, 1, 0})), 0.5);
  const Field r = Field::generate(256, 256, [](int, int j) { return j / 255.0; });
  EXPECT_NEAR(mean_intensity(r), 0.5, 1e-12);
}

TEST(ClampUnit, Examples)
{
  const Field f = row({1.3, -0.2, 0.4});
  const Field c = clamp_unit(f);
  EXPECT_EQ(c, row({1.0, 0.0, 0.4}));
  EXPECT_EQ(clamp_unit(c), c);
  const Field inside = random_field(4, 4, 3);
  EXPECT_EQ(clamp_unit(inside), inside);
}

TEST(RecenterMeanClamped, HitsTargetAndStaysInRange)
{
  const Field f = random_field(16, 16, 4, -0.3, 1.4);
  for (double target : {0.2, 0.5, 0.77})
  {
    const Field g = recenter_mean_clamped(f, target);
    EXPECT_NEAR(mean_intensity(g), target, 1e-12);
    EXPECT_GE(min_value(g), 0.0);
    EXPECT_LE(max_value(g), 1.0);
  }
}

// ---- stencils ------------------------------------------------------------

TEST(Stencil, AnnihilateConstants)
{
  const Field c(9, 8, 0.37);
  for (const auto& bc : {neumann, periodic})
  {
    const VectorField g = grad_central(c, bc);
    EXPECT_EQ(max_abs(g.x), 0.0);
    EXPECT_EQ(max_abs(g.y), 0.0);
    EXPECT_NEAR(max_abs(laplacian5(c, bc)), 0.0, 1e-15);
    EXPECT_NEAR(max_abs(biharmonic(c, bc)), 0.0, 1e-14);
    EXPECT_EQ(max_abs(divergence(VectorField(9, 8, 0.3, -2.0), bc)), 0.0);
    EXPECT_EQ(max_abs(upwind_deriv(c, Axis::X, random_field(9, 8, 5, -1, 1), bc)), 0.0);
    EXPECT_NEAR(max_abs(third_deriv_upwind(c, Axis::Y, bc)), 0.0, 1e-15);
    EXPECT_NEAR(max_abs(fourth_deriv(c, Axis::X, bc)), 0.0, 1e-15);
  }
}

TEST(GradCentral, ExactOnRamp)
{
  const Field r = Field::generate(10, 6, [](int, int j) { return double(j); });
  const VectorField g = grad_central(r, periodic);
  for (int i = 0; i < 6; ++i)
    for (int j = 1; j < 9; ++j)
      EXPECT_DOUBLE_EQ(g.x(i, j), 1.0);
}

TEST(GradCentral, SymmetricBumpHasZeroSlope)
{
  EXPECT_EQ(grad_central(row({0, 1, 0}), neumann).x(0, 1), 0.0);
}

TEST(Laplacian5, Impulse)
{
  const Field imp(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  EXPECT_EQ(laplacian5(imp, neumann)(1, 1), -4.0);
}

TEST(Laplacian5, ExactOnQuadratic)
{
  const Field q = Field::generate(8, 12, [](int i, int) { return double(i * i); });
  const Field l = laplacian5(q, neumann);
  for (int i = 1; i < 11; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_DOUBLE_EQ(l(i, j), 2.0);
}

TEST(Laplacian5, SumsToZeroPeriodic)
{
  const Field f = random_field(17, 13, 6, -1, 1);
  EXPECT_LE(std::abs(field_sum(laplacian5(f, periodic))), 1e-9 * f.size() * max_abs(f));
}

TEST(Biharmonic, CubicAndImpulse)
{
  const Field cubic = Field::generate(12, 3, [](int, int j) { return double(j) * j * j; });
  const Field b = biharmonic(cubic, neumann);
  for (int j = 2; j < 10; ++j)
    EXPECT_NEAR(b(1, j), 0.0, 1e-9);

  Field imp(7, 7);
  imp(3, 3) = 1.0;
  EXPECT_DOUBLE_EQ(biharmonic(imp, periodic)(3, 3), 20.0);
}

TEST(Divergence, LinearField)
{
  const VectorField v(Field::generate(8, 8, [](int, int j) { return double(j); }), Field(8, 8));
  const Field d = divergence(v, neumann);
  for (int i = 0; i < 8; ++i)
    for (int j = 1; j < 7; ++j)
      EXPECT_DOUBLE_EQ(d(i, j), 1.0);
}

TEST(Divergence, OfGradientOnQuadratic)
{
  // div(grad u) is the wide (spacing 2) Laplacian; for a i^2 + b j^2 it is 2(a+b).
  const double a = 0.5, b = 1.5;
  const Field u = Field::generate(12, 12, [&](int i, int j) { return a * i * i + b * j * j; });
  const Field d = divergence(grad_central(u, neumann), neumann);
  for (int i = 2; i < 10; ++i)
    for (int j = 2; j < 10; ++j)
      EXPECT_NEAR(d(i, j), 2.0 * (a + b), 1e-12);
}

TEST(UpwindDeriv, Examples)
{
  const Field u = row({0, 1, 2});
  EXPECT_EQ(upwind_deriv(u, Axis::X, 1.0, neumann)(0, 1), 1.0);
  EXPECT_EQ(upwind_deriv(u, Axis::X, -1.0, neumann)(0, 1), 1.0);
  const Field v = row({0, 1, 5});
  EXPECT_EQ(upwind_deriv(v, Axis::X, 1.0, neumann)(0, 1), 1.0);
  EXPECT_EQ(upwind_deriv(v, Axis::X, -1.0, neumann)(0, 1), 4.0);
  EXPECT_EQ(upwind_deriv(v, Axis::X, 0.0, neumann)(0, 1), 0.0);
}

TEST(ThirdDeriv, QuadraticAndCubic)
{
  const Field q = Field::generate(12, 1, [](int, int j) { return double(j) * j; });
  const Field c = Field::generate(12, 1, [](int, int j) { return double(j) * j * j; });
  for (auto bias : {StencilBias::Backward, StencilBias::Forward})
  {
    const Field tq = third_deriv_upwind(q, Axis::X, neumann, bias);
    const Field tc = third_deriv_upwind(c, Axis::X, neumann, bias);
    for (int j = 3; j < 9; ++j)
    {
      EXPECT_DOUBLE_EQ(tq(0, j), 0.0);
      EXPECT_DOUBLE_EQ(tc(0, j), 6.0);
    }
  }
}

TEST(FourthDeriv, Quartic)
{
  const Field f = Field::generate(12, 1, [](int, int j) { return std::pow(double(j), 4); });
  const Field d = fourth_deriv(f, Axis::X, neumann);
  for (int j = 2; j < 10; ++j)
    EXPECT_DOUBLE_EQ(d(0, j), 24.0);
}

TEST(Stencil, CurlOfGradientVanishesPeriodic)
{
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    const Field u = random_field(16, 12, 100 + s, -2, 2);
    const VectorField g = grad_central(u, periodic);
    const Field curl = central_deriv(g.y, Axis::X, periodic) - central_deriv(g.x, Axis::Y, periodic);
    EXPECT_LE(max_abs(curl), 1e-12 * max_abs(u));
  }
}

TEST(Convolve2d, IdentityConstantAndGradient)
{
  const Field f = random_field(9, 7, 7);
  EXPECT_EQ(convolve2d(f, Kernel::identity(), neumann), f);
  const Field c(9, 7, 0.4);
  const Field cb = convolve2d(c, gaussian_kernel(5, 1.3), neumann);
  EXPECT_LE(max_abs_diff(cb, c), 1e-15);
  const Field gx = convolve2d(f, Kernel::central_x(), periodic);
  EXPECT_EQ(gx, grad_central(f, periodic).x);
}

TEST(Convolve2d, PreservesMeanPeriodic)
{
  const Field f = random_field(20, 16, 8);
  EXPECT_NEAR(mean_intensity(convolve2d(f, gaussian_kernel(7, 2.0), periodic)), mean_intensity(f), 1e-9);
}

TEST(Kernel, AdjointIdentity)
{
  // <k*u, v> = <u, flip(k)*v> under periodic wrap
  const Kernel k = gaussian_kernel(5, 1.0);
  const Kernel asym(3, 3, {0.1, 0.7, -0.2, 0.0, 0.3, 0.4, -0.5, 0.2, 0.9});
  for (const Kernel& ker : {k, asym})
  {
    const Field u = random_field(16, 16, 9), v = random_field(16, 16, 10);
    const Field ku = convolve2d(u, ker, periodic), kv = convolve2d(v, ker.flipped(), periodic);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
    {
      a += ku.values()[i] * v.values()[i];
      b += u.values()[i] * kv.values()[i];
    }
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(GaussianKernel, Examples)
{
  for (int size : {1, 3, 5, 11, 13})
    for (double sigma : {0.3, 1.0, 3.0})
      EXPECT_NEAR(gaussian_kernel(size, sigma).sum(), 1.0, 1e-12);
  EXPECT_EQ(gaussian_kernel(1, 2.0)(0, 0), 1.0);
  const Kernel wide = gaussian_kernel(3, 100.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(wide(r, c), 1.0 / 9.0, 1e-3);
  EXPECT_THROW(gaussian_kernel(4, 1.0), std::invalid_argument);
  EXPECT_THROW(gaussian_kernel(3, 0.0), std::invalid_argument);
}

// ---- integrators ---------------------------------------------------------

namespace
{
const Rhs decay = [](const Field& u) { return Field(u) *= -1.0; };
const Rhs zero_rhs = [](const Field& u) { return Field(u.width(), u.height()); };
} // namespace

TEST(Euler, Examples)
{
  const Field one(1, 1, 1.0);
  EXPECT_EQ(euler_step(one, zero_rhs, 0.1), one);
  EXPECT_DOUBLE_EQ(euler_step(one, decay, 0.1)(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(euler_step(euler_step(one, decay, 0.1), decay, 0.1)(0, 0), 0.81);
}

TEST(Rk4, Examples)
{
  const Field one(1, 1, 1.0);
  EXPECT_EQ(rk4_step(one, zero_rhs, 0.1), one);
  // 1 - h + h^2/2 - h^3/6 + h^4/24 at h = 0.1
  EXPECT_NEAR(rk4_step(one, decay, 0.1)(0, 0), 0.9048375, 1e-12);
}

TEST(Rk4, FourthOrderConvergence)
{
  auto error = [](double dt) {
    Field u(1, 1, 1.0);
    const long n = std::lround(1.0 / dt);
    for (long k = 0; k < n; ++k)
      u = rk4_step(u, decay, dt);
    return std::abs(u(0, 0) - std::exp(-1.0));
  };
  EXPECT_NEAR(error(0.1) / error(0.05), 16.0, 1.0);
  EXPECT_GE(std::log2(error(0.2) / error(0.1)), 3.5);
  EXPECT_GE(std::log2(error(0.1) / error(0.05)), 3.5);
}

TEST(Integrators, LinearInState)
{
  const Rhs lap = make_heat_rhs(0.2, neumann);
  const Field u = random_field(8, 8, 11), v = random_field(8, 8, 12);
  const double a = 0.7, b = -1.3;
  Field comb = u;
  comb *= a;
  comb.axpy(b, v);
  for (auto step : {euler_step, rk4_step})
  {
    Field rhs_side = step(u, lap, 0.5, 0);
    rhs_side *= a;
    rhs_side.axpy(b, step(v, lap, 0.5, 0));
    EXPECT_LE(max_abs_diff(step(comb, lap, 0.5, 0), rhs_side), 1e-12);
  }
}

TEST(Integrators, DivergenceGuard)
{
  const Rhs blow = [](const Field& u) { return Field(u) *= 1e7; };
  EXPECT_THROW(euler_step(Field(2, 2, 1.0), blow, 1.0), DivergenceError);
  const Rhs nan_rhs = [](const Field& u) { return Field(u.width(), u.height(), std::nan("")); };
  try
  {
    evolve(Field(2, 2, 1.0), nan_rhs, {0.1, 5});
    FAIL() << "expected DivergenceError";
  }
  catch (const DivergenceError& e)
  {
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(Cfl, Examples)
{
  EXPECT_EQ(cfl_check(0, 0, 1).courant, 0.0);
  EXPECT_TRUE(cfl_check(0, 0, 1).ok);
  const CflReport edge = cfl_check(1, 0, 1);
  EXPECT_EQ(edge.courant, 1.0);
  EXPECT_TRUE(edge.ok);
  const CflReport bad = cfl_check(1, 1, 0.6);
  EXPECT_NEAR(bad.courant, 1.2, 1e-15);
  EXPECT_FALSE(bad.ok);
  EXPECT_THROW(require_cfl(1, 1, 0.6), CflViolation);
  EXPECT_THROW(cfl_check(1, 1, 0.0), ConfigError);
}

TEST(Evolve, SingleStepAndZeroRhs)
{
  const Field u = random_field(6, 6, 13);
  EXPECT_EQ(evolve(u, decay, {0.1, 1}).field, euler_step(u, decay, 0.1));
  EvolveOptions o;
  o.scheme = Scheme::RK4;
  EXPECT_EQ(evolve(u, decay, {0.1, 1}, o).field, rk4_step(u, decay, 0.1));

  o.snapshot_every = 2;
  const EvolveResult r = evolve(u, zero_rhs, {0.3, 7}, o);
  EXPECT_EQ(r.field, u);
  ASSERT_EQ(r.snapshots.size(), 4u); // steps 2, 4, 6 and the final 7
  for (const Field& s : r.snapshots)
    EXPECT_EQ(s, u);
}

TEST(Evolve, SnapshotEveryStepsGivesFinalOnly)
{
  EvolveOptions o;
  o.snapshot_every = 9;
  const EvolveResult r = evolve(random_field(5, 5, 14), decay, {0.1, 9}, o);
  ASSERT_EQ(r.snapshots.size(), 1u);
  EXPECT_EQ(r.snapshots.front(), r.field);
}

TEST(Evolve, HeatApproachesMeanAtSlowestModeRate)
{
  // Slowest Neumann mode on n=32 has eigenvalue 2 - 2cos(pi/32); after k steps the
  // deviation from the mean is at most (1 - a*dt*lambda1)^k times the initial one.
  const Field u0 = random_field(32, 32, 15);
  const double m = mean_intensity(u0);
  auto deviation = [m](Field u) {
    u += -m;
    return max_abs(u);
  };
  const double lambda1 = 2.0 - 2.0 * std::cos(std::numbers::pi / 32.0);
  const Rhs heat = make_heat_rhs(0.2, neumann);
  const Field u500 = evolve(u0, heat, {1.0, 500}).field;
  const double l2_0 = std::sqrt(mse(u0, Field(32, 32, m)));
  const double l2_500 = std::sqrt(mse(u500, Field(32, 32, m)));
  EXPECT_LE(l2_500, std::pow(1.0 - 0.2 * lambda1, 500) * l2_0 * (1 + 1e-12));
  const Field u5000 = evolve(u500, heat, {1.0, 4500}).field;
  EXPECT_LT(deviation(u5000), 1e-3);
}

TEST(TimeGrid, Validation)
{
  EXPECT_THROW((TimeGrid{0.0, 3}.validate()), ConfigError);
  EXPECT_THROW((TimeGrid{0.1, 0}.validate()), ConfigError);
}

// ---- config --------------------------------------------------------------

TEST(KeyValues, ParseAndTypes)
{
  const KeyValues kv = KeyValues::parse("# comment\n task = denoise\npde.kappa=0.1\nsteps=12\n"
                                        "flag = yes\nlist = a, b ,c\nsteps=13\n");
  EXPECT_EQ(kv.get("task", ""), "denoise");
  EXPECT_DOUBLE_EQ(kv.get_double("pde.kappa", 0), 0.1);
  EXPECT_EQ(kv.get_long("steps", 0), 13);
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_list("list", {}), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(kv.get("missing", "x"), "x");
}

TEST(KeyValues, Errors)
{
  EXPECT_THROW(KeyValues::parse("novalue\n"), ConfigError);
  EXPECT_THROW(KeyValues::parse("=3\n"), ConfigError);
  const KeyValues kv = KeyValues::parse("a=1.5x\nb=maybe\n");
  EXPECT_THROW(kv.get_double("a", 0), ConfigError);
  EXPECT_THROW(kv.get_long("a", 0), ConfigError);
  EXPECT_THROW(kv.get_bool("b", false), ConfigError);
  EXPECT_THROW(KeyValues::load("/nonexistent/config.txt"), IoError);
}
