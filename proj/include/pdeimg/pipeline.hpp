#ifndef PDEIMG_PIPELINE_HPP
#define PDEIMG_PIPELINE_HPP

#include "config.hpp"
#include "edges.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "image_io.hpp"
#include "integrators.hpp"
#include "maxwell_heaviside.hpp"
#include "metrics.hpp"
#include "pde_linear.hpp"
#include "pde_nonlinear.hpp"
#include "spectrum.hpp"
#include "stencil.hpp"
#include "synthetic.hpp"
#include "variational.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace pdeimg
{

enum class Task
{
  Denoise,
  Deblur,
  Enhance,
  Inpaint,
  Edges,
  Simulate,
  Metrics,
  Bench
};

inline Task parse_task(const std::string& s)
{
  static const std::pair<const char*, Task> table[] = {
      {"denoise", Task::Denoise}, {"deblur", Task::Deblur},     {"enhance", Task::Enhance},
      {"inpaint", Task::Inpaint}, {"edges", Task::Edges},       {"simulate", Task::Simulate},
      {"metrics", Task::Metrics}, {"bench", Task::Bench}};
  for (const auto& [name, t] : table)
    if (s == name)
      return t;
  throw ConfigError("unknown task '" + s + "'");
}

// ---------------------------------------------------------------------------
// PDE selection
// ---------------------------------------------------------------------------

struct HeatPde { double alpha = 0.2; };
struct LaplacePde { double tol = 1e-6; };
struct PoissonPde { double strength = 0.1; double threshold = 0.05; };
struct WavePde { double c = 0.5; };
struct TransportPde { double cx = 1.0; double cy = 0.0; };
struct PeronaMalikPde
{
  DiffusivityKind diffusivity;
  PmDiscretization form = PmDiscretization::Flux;
};
struct BurgersPde { double viscosity = 0.1; };
struct CahnHilliardPde { CahnHilliardParams params; };
struct KdvPde { double alpha = kdv_default_alpha; };
struct KsPde {};
struct LiouvillePde { LiouvilleVelocity velocity; };
struct MaxwellPde { MhParams params; };
struct TikhonovPde { double lambda = 0.01; double step = 1.0; long iters = 300; };
struct TvPde { double lambda = 0.002; double eps = 1e-3; double step = 1.0; long iters = 300; };

using PdeSpec = std::variant<HeatPde, LaplacePde, PoissonPde, WavePde, TransportPde,
                             PeronaMalikPde, BurgersPde, CahnHilliardPde, KdvPde, KsPde,
                             LiouvillePde, MaxwellPde, TikhonovPde, TvPde>;

inline const char* pde_name(const PdeSpec& spec)
{
  static const char* names[] = {"heat", "laplace",  "poisson", "wave", "transport",
                                "pm",   "burgers",  "ch",      "kdv",  "ks",
                                "liouville", "mh", "tikhonov", "tv"};
  return names[spec.index()];
}

/// Time-stepping defaults for one (task, pde) pair.
struct StepDefaults
{
  double dt = 1.0;
  long steps = 10;
};

namespace detail
{

inline std::string fmt_num(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int prec = 6)
{
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

} // namespace detail

/// Builds the PDE named `name` from `pde.*` keys, with presets that depend on the task.
inline std::pair<PdeSpec, StepDefaults> parse_pde(const std::string& name, const KeyValues& kv,
                                                  Task task)
{
  auto d = [&](const char* key, double fallback) { return kv.get_double(std::string("pde.") + key, fallback); };
  auto l = [&](const char* key, long fallback) { return kv.get_long(std::string("pde.") + key, fallback); };
  const bool inpaint = task == Task::Inpaint;
  const bool simulate = task == Task::Simulate;

  if (name == "heat")
    return {HeatPde{d("alpha", 0.2)}, {1.0, inpaint ? 2000 : (simulate ? 50 : 4)}};
  if (name == "laplace")
    return {LaplacePde{d("tol", 1e-6)}, {1.0, inpaint ? 2000 : (simulate ? 50 : 4)}};
  if (name == "poisson")
    return {PoissonPde{d("strength", 0.1), d("threshold", 0.05)}, {0.2, simulate ? 100 : 20}};
  if (name == "wave")
    return {WavePde{d("c", 0.5)}, {1.0, 50}};
  if (name == "transport")
    return {TransportPde{d("cx", 1.0), d("cy", 0.0)}, {1.0, 32}};
  if (name == "pm")
  {
    PeronaMalikPde p;
    p.diffusivity.kappa = d("kappa", 0.1);
    const std::string fn = kv.get("pde.diffusivity", "rational");
    if (fn == "rational")
      p.diffusivity.fn = DiffusivityFn::Rational;
    else if (fn == "exponential")
      p.diffusivity.fn = DiffusivityFn::Exponential;
    else
      throw ConfigError("pde.diffusivity must be rational or exponential");
    const std::string form = kv.get("pde.form", "flux");
    if (form == "flux")
      p.form = PmDiscretization::Flux;
    else if (form == "expanded")
      p.form = PmDiscretization::Expanded;
    else
      throw ConfigError("pde.form must be flux or expanded");
    return {p, {0.2, inpaint ? 2000 : (simulate ? 100 : 25)}};
  }
  if (name == "burgers")
    return {BurgersPde{d("nu", inpaint ? 1.0 : 0.1)}, {0.2, inpaint ? 2000 : (simulate ? 50 : 20)}};
  if (name == "ch")
  {
    CahnHilliardPde p;
    const bool enhance = task == Task::Enhance;
    p.params.d_coeff = d("D", enhance ? 0.05 : 1.0);
    p.params.gamma = d("gamma", 1.0);
    p.params.invert_diffusion = kv.get_bool("pde.invert", enhance);
    return {p, enhance ? StepDefaults{0.1, 20} : StepDefaults{0.02, inpaint ? 2000 : 50}};
  }
  if (name == "kdv")
    return {KdvPde{d("alpha", kdv_default_alpha)}, {0.01, simulate ? 100 : 20}};
  if (name == "ks")
    return {KsPde{}, {ks_default_dt, 40}};
  if (name == "liouville")
  {
    LiouvillePde p;
    const std::string kind = kv.get("pde.velocity", "constant");
    if (kind == "constant")
      p.velocity.kind = LiouvilleVelocity::Kind::Constant;
    else if (kind == "sinusoidal")
      p.velocity.kind = LiouvilleVelocity::Kind::SinusoidalRandom;
    else
      throw ConfigError("pde.velocity must be constant or sinusoidal");
    p.velocity.vx = d("vx", 1.0);
    p.velocity.vy = d("vy", 0.0);
    p.velocity.amplitude = d("amplitude", 0.5);
    p.velocity.frequency = d("frequency", 2.0);
    p.velocity.seed = kv.get_u64("pde.velocity_seed", kv.get_u64("seed", 0));
    return {p, {1.0, 32}};
  }
  if (name == "mh")
  {
    MaxwellPde p;
    MhParams& m = p.params;
    StepDefaults sd{1.0, simulate ? 50 : 10};
    switch (task)
    {
    case Task::Inpaint:
      m.alpha = 0.2, m.beta = 0.05, m.gamma = 0.02, m.recompute_fields = true;
      sd.steps = 2000;
      break;
    case Task::Enhance:
      m.alpha = -0.05, m.gamma = 0.1;
      break;
    default:
      m.alpha = 0.2, m.gamma = 0.01, m.recompute_fields = true;
      sd.steps = simulate ? 50 : 5;
      break;
    }
    m.alpha = d("alpha", m.alpha);
    m.beta = d("beta", m.beta);
    m.gamma = d("gamma", m.gamma);
    m.recompute_fields = kv.get_bool("pde.recompute", m.recompute_fields);
    m.recompute_per_stage = kv.get_bool("pde.per_stage", false);
    const std::string em = kv.get("pde.em", "vector");
    if (em == "vector")
      m.em_method = EmMethod::VectorMagnitude;
    else if (em == "energy")
      m.em_method = EmMethod::EnergyDensity;
    else
      throw ConfigError("pde.em must be vector or energy");
    m.constants = kv.get_bool("pde.si_constants", false) ? EmConstants::si() : EmConstants::normalized();
    return {p, sd};
  }
  if (name == "tikhonov")
    return {TikhonovPde{d("lambda", 0.01), d("step", 1.0), l("iters", 300)}, {1.0, 1}};
  if (name == "tv")
    return {TvPde{d("lambda", 0.002), d("eps", 1e-3), d("step", 1.0), l("iters", 300)}, {1.0, 1}};
  throw ConfigError("unknown pde '" + name + "'");
}

/// Short `k=v` description of the parameters of a PDE spec.
inline std::string describe(const PdeSpec& spec)
{
  using detail::fmt_num;
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HeatPde>)
          return "alpha=" + fmt_num(p.alpha);
        else if constexpr (std::is_same_v<T, LaplacePde>)
          return "tol=" + fmt_num(p.tol);
        else if constexpr (std::is_same_v<T, PoissonPde>)
          return "strength=" + fmt_num(p.strength) + ";threshold=" + fmt_num(p.threshold);
        else if constexpr (std::is_same_v<T, WavePde>)
          return "c=" + fmt_num(p.c);
        else if constexpr (std::is_same_v<T, TransportPde>)
          return "cx=" + fmt_num(p.cx) + ";cy=" + fmt_num(p.cy);
        else if constexpr (std::is_same_v<T, PeronaMalikPde>)
          return std::string("kappa=") + fmt_num(p.diffusivity.kappa) + ";fn=" +
                 (p.diffusivity.fn == DiffusivityFn::Rational ? "rational" : "exponential");
        else if constexpr (std::is_same_v<T, BurgersPde>)
          return "nu=" + fmt_num(p.viscosity);
        else if constexpr (std::is_same_v<T, CahnHilliardPde>)
          return "D=" + fmt_num(p.params.d_coeff) + ";gamma=" + fmt_num(p.params.gamma) +
                 ";invert=" + (p.params.invert_diffusion ? "1" : "0");
        else if constexpr (std::is_same_v<T, KdvPde>)
          return "alpha=" + fmt_num(p.alpha);
        else if constexpr (std::is_same_v<T, KsPde>)
          return "";
        else if constexpr (std::is_same_v<T, LiouvillePde>)
          return p.velocity.kind == LiouvilleVelocity::Kind::Constant
                     ? "vx=" + fmt_num(p.velocity.vx) + ";vy=" + fmt_num(p.velocity.vy)
                     : "amplitude=" + fmt_num(p.velocity.amplitude) +
                           ";frequency=" + fmt_num(p.velocity.frequency);
        else if constexpr (std::is_same_v<T, MaxwellPde>)
          return "alpha=" + fmt_num(p.params.alpha) + ";beta=" + fmt_num(p.params.beta) +
                 ";gamma=" + fmt_num(p.params.gamma);
        else if constexpr (std::is_same_v<T, TikhonovPde>)
          return "lambda=" + fmt_num(p.lambda) + ";iters=" + std::to_string(p.iters);
        else
          return "lambda=" + fmt_num(p.lambda) + ";eps=" + fmt_num(p.eps) +
                 ";iters=" + std::to_string(p.iters);
      },
      spec);
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct EdgeConfig
{
  enum class Prefilter
  {
    None,
    KdV,
    Heat
  };
  enum class Detector
  {
    GradThreshold,
    LogZeroCross
  };
  Prefilter prefilter = Prefilter::None;
  long prefilter_steps = 20;
  double prefilter_dt = 0.01;
  double prefilter_alpha = kdv_default_alpha;
  Detector detector = Detector::GradThreshold;
  std::optional<double> threshold; // unset = Otsu
  double log_sigma = 2.0;
};

struct RunConfig
{
  Task task = Task::Denoise;
  std::string pde_kind = "heat";
  PdeSpec pde = HeatPde{};

  std::string input;     // image path; empty = synthetic `image`
  std::string output;
  std::string reference; // metrics task: second image
  std::string mask_path;
  std::string image = "shapes";
  int image_size = 128;

  BoundaryCondition bc = BoundaryCondition::neumann();
  Scheme scheme = Scheme::Euler;
  double dt = 1.0;
  long steps = 10;
  std::uint64_t seed = 0;
  std::optional<long> snapshot_every;

  // degradation
  std::optional<double> noise_sigma;
  int blur_size = default_blur_size;
  double blur_sigma = default_blur_sigma;
  int extend_pad = 3;
  int mask_strokes = 6;
  int mask_length = 12;
  double mask_fill = 0.0;
  std::optional<std::vector<int>> mask_rect; // i0,j0,rows,cols

  EdgeConfig edges;
  bool spectrum = false;
  PgmVariant pgm_variant = PgmVariant::P5;
  std::vector<std::string> metric_set{"mse", "psnr", "ssim", "q"};

  KeyValues raw;
  std::ostream* log = nullptr;

  void warn(const std::string& msg) const
  {
    if (log)
      *log << "warning: " << msg << '\n';
  }
};

inline const char* default_pde(Task t)
{
  switch (t)
  {
  case Task::Deblur:
    return "tikhonov";
  case Task::Enhance:
    return "ch";
  case Task::Inpaint:
    return "mh";
  case Task::Edges:
    return "kdv";
  case Task::Simulate:
    return "wave";
  default:
    return "heat";
  }
}

/// Accepts the short CLI names and a few long spellings.
inline std::string canonical_pde_name(const std::string& name)
{
  static const std::pair<const char*, const char*> aliases[] = {
      {"perona_malik", "pm"},         {"cahn_hilliard", "ch"}, {"maxwell_heaviside", "mh"},
      {"kuramoto_sivashinsky", "ks"}, {"korteweg_de_vries", "kdv"}};
  for (const auto& [long_name, short_name] : aliases)
    if (name == long_name)
      return short_name;
  return name;
}

inline RunConfig make_run_config(Task task, const KeyValues& kv)
{
  RunConfig c;
  c.task = task;
  c.raw = kv;
  c.pde_kind = canonical_pde_name(kv.get("pde", kv.get("pde.kind", default_pde(task))));
  auto [spec, sd] = parse_pde(c.pde_kind, kv, task);
  c.pde = std::move(spec);
  c.dt = kv.get_double("dt", sd.dt);
  c.steps = kv.get_long("steps", sd.steps);
  if (!(c.dt > 0.0))
    throw ConfigError("dt must be positive");
  if (c.steps < 0)
    throw ConfigError("steps must be non-negative");

  c.input = kv.get("input", "");
  c.output = kv.get("output", "");
  c.reference = kv.get("reference", "");
  c.mask_path = kv.get("mask", "");
  c.image = kv.get("image", task == Task::Enhance ? "soft_stripes" : "shapes");
  c.image_size = static_cast<int>(kv.get_long("image.size", task == Task::Deblur ? 64 : 128));
  if (c.image_size < 16)
    throw ConfigError("image.size must be at least 16");

  const std::string bc = kv.get("bc", task == Task::Deblur || task == Task::Simulate ? "periodic" : "neumann");
  if (bc == "neumann")
    c.bc = BoundaryCondition::neumann();
  else if (bc == "periodic")
    c.bc = BoundaryCondition::periodic();
  else
    throw ConfigError("bc must be neumann or periodic");

  const std::string scheme = kv.get("scheme", "euler");
  if (scheme == "euler")
    c.scheme = Scheme::Euler;
  else if (scheme == "rk4")
    c.scheme = Scheme::RK4;
  else
    throw ConfigError("scheme must be euler or rk4");

  c.seed = kv.get_u64("seed", 0);
  if (kv.has("snapshot_every"))
  {
    c.snapshot_every = kv.get_long("snapshot_every", 1);
    if (*c.snapshot_every < 1)
      throw ConfigError("snapshot_every must be at least 1");
  }

  const double default_noise = task == Task::Denoise ? 0.1 : 0.0;
  const double sigma = kv.get_double("noise.sigma", default_noise);
  if (sigma < 0.0)
    throw ConfigError("noise.sigma must be non-negative");
  if (sigma > 0.0)
    c.noise_sigma = sigma;
  c.blur_size = static_cast<int>(kv.get_long("blur.size", default_blur_size));
  c.blur_sigma = kv.get_double("blur.sigma", default_blur_sigma);
  c.extend_pad = static_cast<int>(kv.get_long("deblur.pad", 3));
  c.mask_strokes = static_cast<int>(kv.get_long("mask.strokes", 6));
  c.mask_length = static_cast<int>(kv.get_long("mask.length", 12));
  c.mask_fill = kv.get_double("mask.fill", 0.0);
  if (kv.has("mask.rect"))
  {
    std::vector<int> r;
    for (double v : kv.get_double_list("mask.rect", {}))
      r.push_back(static_cast<int>(v));
    if (r.size() != 4)
      throw ConfigError("mask.rect must be i0,j0,rows,cols");
    c.mask_rect = r;
  }

  const std::string pf = kv.get("edges.prefilter", task == Task::Edges && c.pde_kind == "heat" ? "heat" : "kdv");
  if (pf == "none")
    c.edges.prefilter = EdgeConfig::Prefilter::None;
  else if (pf == "kdv")
    c.edges.prefilter = EdgeConfig::Prefilter::KdV;
  else if (pf == "heat")
    c.edges.prefilter = EdgeConfig::Prefilter::Heat;
  else
    throw ConfigError("edges.prefilter must be none, kdv or heat");
  c.edges.prefilter_steps = kv.get_long("edges.prefilter_steps", c.steps);
  c.edges.prefilter_dt = kv.get_double("edges.prefilter_dt", c.dt);
  c.edges.prefilter_alpha = kv.get_double("pde.alpha", pf == "heat" ? 0.2 : kdv_default_alpha);
  const std::string det = kv.get("edges.detector", "grad");
  if (det == "grad")
    c.edges.detector = EdgeConfig::Detector::GradThreshold;
  else if (det == "log")
    c.edges.detector = EdgeConfig::Detector::LogZeroCross;
  else
    throw ConfigError("edges.detector must be grad or log");
  const std::string thr = kv.get("edges.threshold", "otsu");
  if (thr != "otsu")
  {
    const double t = kv.get_double("edges.threshold", 0.5);
    if (!(t > 0.0 && t < 1.0))
      throw ConfigError("edges.threshold must lie in (0,1)");
    c.edges.threshold = t;
  }
  c.edges.log_sigma = kv.get_double("edges.log_sigma", 2.0);

  c.spectrum = kv.get_bool("spectrum", false);
  const std::string variant = kv.get("pgm.variant", "P5");
  if (variant == "P5")
    c.pgm_variant = PgmVariant::P5;
  else if (variant == "P2")
    c.pgm_variant = PgmVariant::P2;
  else
    throw ConfigError("pgm.variant must be P2 or P5");
  c.metric_set = kv.get_list("metrics", c.metric_set);
  for (const auto& m : c.metric_set)
    if (m != "mse" && m != "psnr" && m != "ssim" && m != "q")
      throw ConfigError("unknown metric '" + m + "'");
  return c;
}

// ---------------------------------------------------------------------------
// Stepping
// ---------------------------------------------------------------------------

/// Advective PDEs whose CFL condition is enforced before any step is taken.
inline void enforce_cfl(const PdeSpec& spec, const Field& u0, double dt)
{
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TransportPde>)
          require_cfl(p.cx, p.cy, dt);
        else if constexpr (std::is_same_v<T, LiouvillePde>)
        {
          const VectorField v = make_liouville_velocity(p.velocity, u0.width(), u0.height());
          require_cfl(max_abs(v.x), max_abs(v.y), dt);
        }
        else if constexpr (std::is_same_v<T, BurgersPde> || std::is_same_v<T, KdvPde>)
          require_cfl(max_abs(u0), max_abs(u0), dt);
      },
      spec);
}

/// Soft stability advisories for diffusive and dispersive models.
inline void advise_stability(const RunConfig& cfg)
{
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HeatPde>)
        {
          if (p.alpha * cfg.dt > 0.25)
            cfg.warn("alpha*dt exceeds 0.25; explicit diffusion may be unstable");
        }
        else if constexpr (std::is_same_v<T, PeronaMalikPde>)
        {
          if (cfg.dt > 0.25)
            cfg.warn("dt exceeds 0.25; explicit Perona-Malik may be unstable");
        }
        else if constexpr (std::is_same_v<T, KsPde>)
        {
          if (cfg.dt > ks_stable_dt)
            cfg.warn("dt exceeds the explicit fourth-order stability bound 1/16");
        }
      },
      cfg.pde);
}

struct StepContext
{
  BoundaryCondition bc;
  double dt = 1.0;
  Scheme scheme = Scheme::Euler;
  std::optional<Mask> mask; // evolution confined to true pixels
};

/// Wraps the PDE into a one-step advance starting from u0. Throws for the
/// variational baselines, which are not time evolutions.
inline Stepper make_stepper(const PdeSpec& spec, const Field& u0, const StepContext& ctx)
{
  const BoundaryCondition bc = ctx.bc;
  const double dt = ctx.dt;
  const Scheme scheme = ctx.scheme;
  const std::optional<Mask> mask = ctx.mask;

  auto from_rhs = [=](Rhs rhs) -> Stepper {
    if (mask)
      rhs = [inner = std::move(rhs), mask](const Field& u) {
        Field r = inner(u);
        detail::apply_mask(r, mask);
        return r;
      };
    return [=](const Field& u, long k) { return scheme_step(scheme, u, rhs, dt, k); };
  };

  return std::visit(
      [&](const auto& p) -> Stepper {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, HeatPde>)
          return from_rhs(make_heat_rhs(p.alpha, bc));
        else if constexpr (std::is_same_v<T, LaplacePde>)
        {
          // one Jacobi sweep per step
          Rhs rhs = make_heat_rhs(0.25, bc);
          if (mask)
            rhs = [inner = rhs, mask](const Field& u) {
              Field r = inner(u);
              detail::apply_mask(r, mask);
              return r;
            };
          return [rhs](const Field& u, long k) { return euler_step(u, rhs, 1.0, k); };
        }
        else if constexpr (std::is_same_v<T, PoissonPde>)
        {
          PoissonSource src{contrast_source(u0, p.threshold, bc), p.strength};
          return from_rhs([src, bc](const Field& u) { return poisson_rhs(u, src, bc); });
        }
        else if constexpr (std::is_same_v<T, WavePde>)
        {
          auto state = std::make_shared<WaveState>(WaveState::at_rest(u0, p.c));
          return [state, dt, bc, mask](const Field& u, long) {
            state->u = u;
            *state = wave_step(*state, dt, bc, mask);
            return state->u;
          };
        }
        else if constexpr (std::is_same_v<T, TransportPde>)
        {
          const VectorField v(u0.width(), u0.height(), p.cx, p.cy);
          return from_rhs([v, bc](const Field& u) { return transport_rhs(u, v, bc); });
        }
        else if constexpr (std::is_same_v<T, PeronaMalikPde>)
        {
          const auto dk = p.diffusivity;
          const auto form = p.form;
          return from_rhs([dk, form, bc](const Field& u) { return perona_malik_rhs(u, dk, bc, form); });
        }
        else if constexpr (std::is_same_v<T, BurgersPde>)
        {
          const double nu = p.viscosity;
          Stepper inner = from_rhs([nu, bc](const Field& u) { return burgers_rhs(u, nu, bc); });
          return [inner, dt](const Field& u, long k) {
            require_cfl(max_abs(u), max_abs(u), dt);
            return inner(u, k);
          };
        }
        else if constexpr (std::is_same_v<T, CahnHilliardPde>)
        {
          const auto cp = p.params;
          return from_rhs([cp, bc](const Field& u) { return cahn_hilliard_rhs(u, cp, bc); });
        }
        else if constexpr (std::is_same_v<T, KdvPde>)
        {
          const double a = p.alpha;
          Stepper inner = from_rhs([a, bc](const Field& u) { return kdv_rhs(u, bc, a); });
          return [inner, dt](const Field& u, long k) {
            require_cfl(max_abs(u), max_abs(u), dt);
            return inner(u, k);
          };
        }
        else if constexpr (std::is_same_v<T, KsPde>)
          return from_rhs([bc](const Field& u) { return ks_rhs(u, bc); });
        else if constexpr (std::is_same_v<T, LiouvillePde>)
        {
          const VectorField v = make_liouville_velocity(p.velocity, u0.width(), u0.height());
          return [v, dt, bc, mask](const Field& u, long) {
            Field next = liouville_step(u, v, dt, bc);
            if (mask)
              for (std::size_t k = 0; k < next.size(); ++k)
                if (!mask->at_index(k))
                  next.values()[k] = u.values()[k];
            return next;
          };
        }
        else if constexpr (std::is_same_v<T, MaxwellPde>)
        {
          MhParams mp = p.params;
          mp.dt = dt;
          mp.steps = 1;
          mp.scheme = scheme;
          if (mask)
            mp.mask = mask;
          auto stepper = std::make_shared<MhStepper>(u0, mp, bc);
          return [stepper](const Field& u, long k) { return (*stepper)(u, k); };
        }
        else
          throw ConfigError(std::string("pde '") + pde_name(spec) + "' is not a time evolution");
      },
      spec);
}

/// Runs cfg.steps steps of the configured PDE from u0 (identity for zero steps).
inline EvolveResult run_evolution(const RunConfig& cfg, const Field& u0,
                                  const std::optional<Mask>& mask = std::nullopt,
                                  std::function<void(Field&)> post_step = {})
{
  enforce_cfl(cfg.pde, u0, cfg.dt);
  advise_stability(cfg);
  if (cfg.steps == 0)
    return {u0, {}, 0};
  StepContext ctx{cfg.bc, cfg.dt, cfg.scheme, mask};
  EvolveOptions opts;
  opts.snapshot_every = cfg.snapshot_every;
  opts.post_step = std::move(post_step);
  if (mask)
  {
    // unmasked pixels keep their known values exactly
    auto inner = opts.post_step;
    opts.post_step = [inner, &mask, &u0](Field& u) {
      for (std::size_t k = 0; k < u.size(); ++k)
        if (!mask->at_index(k))
          u.values()[k] = u0.values()[k];
      if (inner)
        inner(u);
    };
  }
  return evolve_steps(u0, make_stepper(cfg.pde, u0, ctx), cfg.steps, opts);
}

// ---------------------------------------------------------------------------
// Task pipelines
// ---------------------------------------------------------------------------

/// Reads an image as a single channel; colour input is reduced to Rec. 601 luma.
inline Field read_gray(const std::filesystem::path& path)
{
  Image img = read_image(path);
  if (img.is_gray())
    return std::move(img.channels.front());
  Field y(img.width(), img.height());
  for (std::size_t k = 0; k < y.size(); ++k)
    y.values()[k] = 0.299 * img.channels[0].values()[k] + 0.587 * img.channels[1].values()[k] +
                    0.114 * img.channels[2].values()[k];
  return y;
}

inline Field load_gray_or_synthetic(const RunConfig& cfg)
{
  if (cfg.input.empty())
    return synthetic::by_name(cfg.image, cfg.image_size, cfg.image_size);
  return read_gray(cfg.input);
}

struct RestorationResult
{
  Field clean;
  Field degraded;
  Field output;
  MetricReport degraded_metrics;
  MetricReport output_metrics;
};

inline RestorationResult run_denoise(const RunConfig& cfg, const Field& clean)
{
  RestorationResult r;
  r.clean = clean;
  r.degraded = cfg.noise_sigma
                   ? clamp_unit(add_gaussian_noise(clean, {*cfg.noise_sigma, cfg.seed}))
                   : clean;
  if (std::holds_alternative<TikhonovPde>(cfg.pde) || std::holds_alternative<TvPde>(cfg.pde))
  {
    DeblurProblem p = std::holds_alternative<TikhonovPde>(cfg.pde)
                          ? tikhonov_defaults(r.degraded, Kernel::identity())
                          : tv_defaults(r.degraded, Kernel::identity());
    r.output = std::holds_alternative<TikhonovPde>(cfg.pde) ? tikhonov_deblur(p, cfg.bc)
                                                             : tv_deblur(p, cfg.bc);
  }
  else
    r.output = clamp_unit(run_evolution(cfg, r.degraded).field);
  r.degraded_metrics = evaluate_metrics(clean, r.degraded);
  r.output_metrics = evaluate_metrics(clean, r.output);
  return r;
}

/// Blur (+ optional noise), periodic extension, restore, crop, clamp.
inline RestorationResult run_deblur(const RunConfig& cfg, const Field& clean)
{
  RestorationResult r;
  r.clean = clean;
  const Kernel k = gaussian_kernel(cfg.blur_size, cfg.blur_sigma);
  Field blurred = convolve2d(clean, k, BoundaryCondition::periodic());
  if (cfg.noise_sigma)
    blurred = add_gaussian_noise(blurred, {*cfg.noise_sigma, cfg.seed});
  r.degraded = clamp_unit(std::move(blurred));

  const Field padded = extend_periodic(r.degraded, cfg.extend_pad);
  const BoundaryCondition bc = BoundaryCondition::periodic();
  Field restored = std::visit(
      [&](const auto& p) -> Field {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TikhonovPde>)
          return tikhonov_descent({padded, k, p.lambda, 1e-3, p.step, p.iters}, bc).field;
        else if constexpr (std::is_same_v<T, TvPde>)
          return tv_descent({padded, k, p.lambda, p.eps, p.step, p.iters}, bc).field;
        else
        {
          RunConfig c = cfg;
          c.bc = bc;
          c.snapshot_every.reset();
          return run_evolution(c, padded).field;
        }
      },
      cfg.pde);
  r.output = clamp_unit(crop_center(restored, cfg.extend_pad));
  r.degraded_metrics = evaluate_metrics(clean, r.degraded);
  r.output_metrics = evaluate_metrics(clean, r.output);
  return r;
}

struct EnhanceReport
{
  double psnr_vs_input = 0.0;
  double sharpness_in = 0.0;  // mean gradient magnitude (non-paper proxy)
  double sharpness_out = 0.0;
  double mean_in = 0.0;
  double mean_out = 0.0;
};

/// Backward diffusion with per-step clamping and mean re-centering to the input mean.
inline Field enhance_channel(const RunConfig& cfg, const Field& u0)
{
  if (!std::holds_alternative<CahnHilliardPde>(cfg.pde) &&
      !std::holds_alternative<MaxwellPde>(cfg.pde))
    throw ConfigError("enhance supports pde ch or mh");
  const double target = mean_intensity(u0);
  const Field start = clamp_unit(u0);
  Field out = run_evolution(cfg, start, std::nullopt,
                            [target](Field& u) { u = recenter_mean_clamped(u, target); })
                  .field;
  return recenter_mean_clamped(out, target);
}

inline std::pair<Image, EnhanceReport> run_enhance(const RunConfig& cfg, const Image& input)
{
  Image out;
  EnhanceReport rep;
  double mse_sum = 0.0;
  for (const Field& ch : input.channels)
  {
    Field e = cfg.steps == 0 ? ch : enhance_channel(cfg, ch);
    mse_sum += mse(ch, e);
    rep.sharpness_in += mean_gradient_magnitude(ch);
    rep.sharpness_out += mean_gradient_magnitude(e);
    rep.mean_in += mean_intensity(ch);
    rep.mean_out += mean_intensity(e);
    out.channels.push_back(std::move(e));
  }
  const double n = static_cast<double>(input.channels.size());
  rep.sharpness_in /= n;
  rep.sharpness_out /= n;
  rep.mean_in /= n;
  rep.mean_out /= n;
  const double m = mse_sum / n;
  rep.psnr_vs_input = m == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(m);
  return {std::move(out), rep};
}

struct InpaintResult
{
  Mask mask;
  Field clean;
  Field damaged;
  Field output;
  MetricReport global;
  double masked_mse = 0.0;
  double masked_psnr = 0.0;
};

inline Mask mask_from_field(const Field& f)
{
  Mask m(f.width(), f.height());
  for (int i = 0; i < f.height(); ++i)
    for (int j = 0; j < f.width(); ++j)
      m.set(i, j, f(i, j) > 0.0);
  return m;
}

inline Mask resolve_mask(const RunConfig& cfg, int width, int height)
{
  if (!cfg.mask_path.empty())
  {
    Mask m = mask_from_field(read_pgm(cfg.mask_path));
    if (m.width() != width || m.height() != height)
      throw ConfigError("mask dimensions do not match the image");
    return m;
  }
  if (cfg.mask_rect)
  {
    const auto& r = *cfg.mask_rect;
    return synthetic::rect_mask(width, height, r[0], r[1], r[2], r[3]);
  }
  return synthetic::random_strokes(width, height, cfg.mask_strokes, cfg.mask_length, cfg.seed);
}

inline InpaintResult run_inpaint(const RunConfig& cfg, const Field& clean, const Mask& mask)
{
  mask.require_matches(clean);
  InpaintResult r{mask, clean, apply_mask_damage(clean, mask, cfg.mask_fill), {}, {}, 0.0, 0.0};
  r.output = run_evolution(cfg, r.damaged, mask).field;
  // clamping touches only evolved pixels; known pixels are already in range
  for (std::size_t k = 0; k < r.output.size(); ++k)
    if (mask.at_index(k))
      r.output.values()[k] = std::min(1.0, std::max(0.0, r.output.values()[k]));
  r.global = evaluate_metrics(clean, r.output);
  double s = 0.0;
  const std::size_t n = mask.count();
  for (std::size_t k = 0; k < clean.size(); ++k)
    if (mask.at_index(k))
    {
      const double d = clean.values()[k] - r.output.values()[k];
      s += d * d;
    }
  r.masked_mse = n ? s / static_cast<double>(n) : 0.0;
  r.masked_psnr = r.masked_mse == 0.0 ? std::numeric_limits<double>::infinity()
                                      : -10.0 * std::log10(r.masked_mse);
  return r;
}

struct EdgeResult
{
  Field input;
  Field filtered;
  Field edges;
  std::optional<EdgeScore> score; // against the detector on the clean input
};

inline Field detect_edges(const EdgeConfig& e, const Field& u)
{
  return e.detector == EdgeConfig::Detector::GradThreshold
             ? detect_edges_gradient(u, GradThreshold{e.threshold})
             : detect_edges_log(u, e.log_sigma);
}

inline Field edge_prefilter(const EdgeConfig& e, const Field& u, const BoundaryCondition& bc)
{
  if (e.prefilter == EdgeConfig::Prefilter::None || e.prefilter_steps == 0)
    return u;
  const TimeGrid grid{e.prefilter_dt, e.prefilter_steps};
  if (e.prefilter == EdgeConfig::Prefilter::Heat)
    return evolve(u, make_heat_rhs(e.prefilter_alpha, bc), grid).field;
  require_cfl(max_abs(u), max_abs(u), e.prefilter_dt);
  const double a = e.prefilter_alpha;
  return evolve_steps(
             u,
             [&](const Field& x, long k) {
               require_cfl(max_abs(x), max_abs(x), e.prefilter_dt);
               return euler_step(x, [&](const Field& y) { return kdv_rhs(y, bc, a); },
                                 e.prefilter_dt, k);
             },
             e.prefilter_steps)
      .field;
}

inline EdgeResult run_edges(const RunConfig& cfg, const Field& clean)
{
  EdgeResult r;
  r.input = cfg.noise_sigma ? clamp_unit(add_gaussian_noise(clean, {*cfg.noise_sigma, cfg.seed}))
                            : clean;
  r.filtered = edge_prefilter(cfg.edges, r.input, cfg.bc);
  r.edges = detect_edges(cfg.edges, r.filtered);
  if (cfg.noise_sigma)
  {
    EdgeConfig truth_cfg = cfg.edges;
    truth_cfg.threshold.reset();
    r.score = edge_f1(r.edges, detect_edges(truth_cfg, clean));
  }
  return r;
}

struct SimulationFrame
{
  long step = 0;
  Field field;
};

/// Frames: the initial state plus evolve's snapshots (every snapshot_every
/// steps and the final state).
inline std::vector<SimulationFrame> run_simulate(const RunConfig& cfg, const Field& u0)
{
  RunConfig c = cfg;
  const long every = cfg.snapshot_every.value_or(std::max<long>(1, cfg.steps));
  c.snapshot_every = every;
  std::vector<SimulationFrame> frames{{0, u0}};
  if (cfg.steps == 0)
    return frames;
  EvolveResult r = run_evolution(c, u0);
  for (std::size_t k = 0; k < r.snapshots.size(); ++k)
  {
    const long step = std::min<long>(static_cast<long>(k + 1) * every, r.steps_taken);
    frames.push_back({step, std::move(r.snapshots[k])});
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Bench harness
// ---------------------------------------------------------------------------

inline const char* bench_csv_header = "image,method,params,mse,psnr,ssim,q,wall_ms";

/// Horizontal concatenation with a 2-pixel white gutter.
inline Field hconcat(const std::vector<Field>& tiles)
{
  if (tiles.empty())
    throw std::invalid_argument("hconcat: no tiles");
  const int gutter = 2;
  const int h = tiles.front().height();
  int w = 0;
  for (const Field& t : tiles)
  {
    if (t.height() != h)
      throw std::invalid_argument("hconcat: tile heights differ");
    w += t.width();
  }
  w += gutter * static_cast<int>(tiles.size() - 1);
  Field out(w, h, 1.0);
  int x0 = 0;
  for (const Field& t : tiles)
  {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < t.width(); ++j)
        out(i, x0 + j) = t(i, j);
    x0 += t.width() + gutter;
  }
  return out;
}

struct BenchSummary
{
  std::size_t rows = 0;
  std::filesystem::path csv;
  std::vector<std::filesystem::path> grids;
};

inline std::vector<std::pair<std::string, Field>> bench_images(const RunConfig& cfg)
{
  std::vector<std::pair<std::string, Field>> out;
  const KeyValues& kv = cfg.raw;
  if (kv.has("bench.corpus"))
  {
    const std::filesystem::path dir = kv.get("bench.corpus", "");
    if (!std::filesystem::is_directory(dir))
      throw IoError("bench corpus is not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
    {
      const std::string ext = lower_extension(e.path());
      if (ext == ".pgm" || ext == ".png" || ext == ".ppm" || ext == ".pnm")
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
    {
      out.emplace_back(f.stem().string(), read_gray(f));
    }
    return out;
  }
  for (const auto& name : kv.get_list("bench.images", {"shapes", "disk"}))
    out.emplace_back(name, synthetic::by_name(name, cfg.image_size, cfg.image_size));
  return out;
}

/// Runs task x image x parameter-point x method and writes results.csv plus one
/// grid image per (image, parameter point) into `out_dir`.
inline BenchSummary run_bench(const RunConfig& cfg, const std::filesystem::path& out_dir)
{
  const KeyValues& kv = cfg.raw;
  const Task task = parse_task(kv.get("bench.task", "denoise"));
  if (task != Task::Denoise && task != Task::Deblur && task != Task::Inpaint &&
      task != Task::Enhance)
    throw ConfigError("bench.task must be denoise, deblur, inpaint or enhance");
  const std::vector<std::string> default_methods =
      task == Task::Denoise   ? std::vector<std::string>{"heat", "laplace", "pm", "mh"}
      : task == Task::Deblur  ? std::vector<std::string>{"tikhonov", "tv", "ks"}
      : task == Task::Inpaint ? std::vector<std::string>{"burgers", "ch", "mh"}
                              : std::vector<std::string>{"ch", "mh"};
  const auto methods = kv.get_list("bench.methods", default_methods);
  const std::vector<double> default_sigmas =
      task == Task::Denoise ? std::vector<double>{0.1, 0.25}
      : task == Task::Deblur ? std::vector<double>{0.0, 0.05}
                             : std::vector<double>{0.0};
  const auto sigmas = kv.get_double_list("bench.sigmas", default_sigmas);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + out_dir.string());

  BenchSummary summary;
  summary.csv = out_dir / "results.csv";
  std::string csv = std::string(bench_csv_header) + "\n";
  const auto images = bench_images(cfg);

  for (std::size_t ii = 0; ii < images.size(); ++ii)
  {
    const auto& [name, clean] = images[ii];
    for (std::size_t si = 0; si < sigmas.size(); ++si)
    {
      const double sigma = sigmas[si];
      const std::uint64_t seed = cfg.seed + 1000 * ii + si;
      std::vector<Field> tiles{clean};
      std::vector<std::string> labels{"clean"};
      bool degraded_added = false;
      for (const auto& method : methods)
      {
        KeyValues mkv = kv;
        mkv.set("pde", method);
        // bench-level dt/steps are not shared across methods
        if (!kv.has("bench.keep_steps"))
        {
          mkv.set("steps", "");
          mkv.set("dt", "");
        }
        KeyValues clean_kv;
        for (const auto& [k, v] : mkv.entries())
          if (!v.empty())
            clean_kv.set(k, v);
        clean_kv.set("noise.sigma", detail::fmt_num(sigma));
        clean_kv.set("seed", std::to_string(seed));
        RunConfig c = make_run_config(task, clean_kv);
        c.log = cfg.log;

        const auto t0 = std::chrono::steady_clock::now();
        Field degraded, output;
        MetricReport m;
        switch (task)
        {
        case Task::Denoise:
        case Task::Deblur:
        {
          RestorationResult r = task == Task::Denoise ? run_denoise(c, clean) : run_deblur(c, clean);
          degraded = std::move(r.degraded);
          output = std::move(r.output);
          m = r.output_metrics;
          break;
        }
        case Task::Inpaint:
        {
          InpaintResult r = run_inpaint(c, clean, resolve_mask(c, clean.width(), clean.height()));
          degraded = std::move(r.damaged);
          output = std::move(r.output);
          m = r.global;
          break;
        }
        default:
        {
          degraded = clean;
          output = c.steps == 0 ? clean : enhance_channel(c, clean);
          m = evaluate_metrics(clean, output);
          break;
        }
        }
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

        if (!degraded_added)
        {
          tiles.push_back(degraded);
          labels.emplace_back("degraded");
          degraded_added = true;
        }
        tiles.push_back(output);
        labels.push_back(method);

        std::string params = "sigma=" + detail::fmt_num(sigma) + ";" + describe(c.pde) +
                             ";dt=" + detail::fmt_num(c.dt) + ";steps=" + std::to_string(c.steps);
        csv += name + "," + method + "," + params + "," + detail::fmt_fixed(m.mse, 8) + "," +
               detail::fmt_fixed(m.psnr, 4) + "," + detail::fmt_fixed(m.ssim, 6) + "," +
               detail::fmt_fixed(m.q, 6) + "," + detail::fmt_fixed(wall, 2) + "\n";
        ++summary.rows;
      }
      if (!methods.empty())
      {
        const auto grid = out_dir / ("grid_" + name + "_" + std::to_string(si) + ".pgm");
        std::string label = "labels:";
        for (const auto& l : labels)
          label += " " + l;
        write_pgm(hconcat(tiles), grid, PgmVariant::P5, label);
        summary.grids.push_back(grid);
      }
    }
  }
  detail::write_bytes(summary.csv, csv);
  return summary;
}

} // namespace pdeimg

#endif
