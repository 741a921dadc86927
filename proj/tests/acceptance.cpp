// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. argv[1] is the path of the pdeimg executable.
#include <pdeimg/cli.hpp>

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace pdeimg;
namespace fs = std::filesystem;

namespace
{

const auto neumann = BoundaryCondition::neumann();
const auto periodic = BoundaryCondition::periodic();
std::string cli_path;

struct Outcome
{
  bool ok = true;
  std::string detail;

  void check(bool cond, const std::string& what)
  {
    if (!cond)
    {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

Field random_field(int w, int h, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return Field::generate(w, h, [&](int, int) { return dist(gen); });
}

RunConfig config(Task task, const std::string& text)
{
  return make_run_config(task, KeyValues::parse(text));
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_tool(const std::string& args)
{
  const std::string cmd = "\"" + cli_path + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string drop_last_column(const std::string& csv)
{
  std::istringstream in(csv);
  std::string out;
  for (std::string line; std::getline(in, line);)
    out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Field shift_cols(const Field& u, int k)
{
  const int w = u.width();
  return Field::generate(w, u.height(), [&](int i, int j) { return u(i, ((j - k) % w + w) % w); });
}

// ---------------------------------------------------------------------------

Outcome heat_gaussian()
{
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Field u0 = synthetic::smooth(128, 128);
  const Field heat = evolve(u0, make_heat_rhs(0.2, periodic), {1.0, 10}).field;
  const Field blur = convolve2d(u0, gaussian_kernel(13, 2.0), periodic);
  const double p = psnr(heat, blur), t = seconds_since(t0);
  o.check(p >= 40.0, "psnr " + num(p) + " < 40");
  o.check(t < 1.0, "runtime " + num(t) + " s");
  o.note("psnr " + num(p) + " dB, " + num(t) + " s");
  return o;
}

Outcome conservation()
{
  Outcome o;
  const Field u0 = random_field(64, 64, 2);
  const double m0 = mean_intensity(u0);
  const std::pair<const char*, const char*> cases[] = {
      {"heat", "pde=heat\nbc=neumann"},
      {"pm", "pde=pm\nbc=neumann\npde.form=flux"},
      {"ch", "pde=ch\nbc=periodic"},
      {"mh", "pde=mh\npde.gamma=0\nbc=neumann"},
  };
  for (const auto& [name, text] : cases)
  {
    const RunConfig c = config(Task::Simulate, std::string(text) + "\nsteps=500");
    const double rel = std::abs(mean_intensity(run_evolution(c, u0).field) - m0) / m0;
    o.check(rel <= 1e-6, std::string(name) + " drift " + num(rel));
    o.note(std::string(name) + " " + num(rel));
  }
  return o;
}

Outcome steady_state()
{
  Outcome o;
  const Field u0 = random_field(32, 32, 3);
  const double m0 = mean_intensity(u0);
  Field heat = evolve(u0, make_heat_rhs(0.2, neumann), {1.0, 5000}).field;
  heat += -m0;
  const LaplaceResult lap = laplace_steady(u0, neumann, 1e-9, 200000);
  Field dev = lap.field;
  dev += -m0;
  o.check(max_abs(heat) < 1e-3, "heat deviation " + num(max_abs(heat)));
  o.check(max_abs(dev) < 1e-3, "laplace deviation " + num(max_abs(dev)));
  o.note("heat " + num(max_abs(heat)) + ", laplace " + num(max_abs(dev)));
  return o;
}

Outcome exact_advection()
{
  Outcome o;
  const Field u = synthetic::shapes(48, 40);
  const Field expect = shift_cols(u, 32);
  for (const char* pde : {"transport", "liouville"})
  {
    const RunConfig c = config(Task::Simulate, std::string("pde=") + pde +
                                                   "\npde.cx=1\npde.cy=0\npde.velocity=constant\n"
                                                   "pde.vx=1\npde.vy=0\ndt=1\nsteps=32\nbc=periodic");
    const double err = max_abs_diff(run_evolution(c, u).field, expect);
    o.check(err <= 1e-12, std::string(pde) + " error " + num(err));
    o.note(std::string(pde) + " " + num(err));
  }
  return o;
}

Outcome cfl_enforcement()
{
  Outcome o;
  for (const char* pde : {"transport", "liouville", "burgers", "kdv"})
  {
    const std::string base = std::string("simulate --pde ") + pde + " --image.size 32 --steps 3";
    const int bad = run_tool(base + (std::string(pde) == "burgers" || std::string(pde) == "kdv"
                                         ? " --dt 1.5 --image smooth"
                                         : " --dt 1.5"));
    o.check(bad == 2 || bad == 3, std::string(pde) + " courant>1 exit " + std::to_string(bad));
  }
  const int good = run_tool("simulate --pde transport --image.size 32 --steps 3 --dt 1");
  o.check(good == 0, "transport courant=1 exit " + std::to_string(good));
  const int lv = run_tool("simulate --pde liouville --image.size 32 --steps 3 --dt 0.5");
  o.check(lv == 0, "liouville courant=0.5 exit " + std::to_string(lv));
  return o;
}

Outcome rk4_order()
{
  Outcome o;
  const Rhs decay = [](const Field& u) { return Field(u) *= -1.0; };
  auto error = [&](double dt, Scheme s) {
    Field u(1, 1, 1.0);
    const long n = std::lround(1.0 / dt);
    for (long k = 0; k < n; ++k)
      u = s == Scheme::RK4 ? rk4_step(u, decay, dt) : euler_step(u, decay, dt);
    return std::abs(u(0, 0) - std::exp(-1.0));
  };
  const double dts[] = {0.2, 0.1, 0.05};
  for (int k = 0; k < 2; ++k)
  {
    const double rk = std::log2(error(dts[k], Scheme::RK4) / error(dts[k + 1], Scheme::RK4));
    const double eu = std::log2(error(dts[k], Scheme::Euler) / error(dts[k + 1], Scheme::Euler));
    o.check(rk >= 3.5, "rk4 order " + num(rk));
    o.check(eu >= 0.8 && eu <= 1.2, "euler order " + num(eu));
    o.note("rk4 " + num(rk) + ", euler " + num(eu));
  }
  return o;
}

Outcome curl_of_gradient()
{
  Outcome o;
  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s)
  {
    const Field u = random_field(24 + static_cast<int>(s), 20, 100 + s);
    const double r = max_abs(magnetic_field(electric_field(u, periodic), periodic)) / max_abs(u);
    worst = std::max(worst, r);
  }
  o.check(worst <= 1e-12, "ratio " + num(worst));
  o.note("max |H|/max|u| " + num(worst));
  return o;
}

Outcome denoising()
{
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Field clean = synthetic::shapes(128, 128);
  for (const char* pde : {"heat", "pm", "mh"})
  {
    const RestorationResult r = run_denoise(config(Task::Denoise, std::string("pde=") + pde), clean);
    const double g = r.output_metrics.psnr - r.degraded_metrics.psnr;
    o.check(g >= 3.0, std::string(pde) + " gain " + num(g));
    o.note(std::string(pde) + " +" + num(g) + " dB");
  }

  // edge localization on a contrast-1 step, true edge between columns 31 and 32
  const Field step = synthetic::vertical_step(64, 64, 32, 0.0, 1.0);
  auto peak = [](const Field& u) {
    int best = 0;
    double h = -1;
    for (int j = 0; j + 1 < u.width(); ++j)
    {
      double s = 0;
      for (int i = 0; i < u.height(); ++i)
        s += std::abs(u(i, j + 1) - u(i, j));
      if (s / u.height() > h)
        h = s / u.height(), best = j;
    }
    return std::pair{best, h};
  };
  const auto [pc, ph] = peak(run_denoise(config(Task::Denoise, "pde=pm\npde.kappa=0.1"), step).output);
  const auto [hc, hh] = peak(run_denoise(config(Task::Denoise, "pde=heat"), step).output);
  o.check(std::abs(pc - 31) <= 1, "pm peak at column " + std::to_string(pc));
  o.check(ph > hh, "pm peak " + num(ph) + " not above heat " + num(hh));
  o.note("edge peak pm " + num(ph) + "@" + std::to_string(pc) + ", heat " + num(hh) + "@" + std::to_string(hc));

  const double t = seconds_since(t0);
  o.check(t < 10.0, "runtime " + num(t) + " s");
  o.note(num(t) + " s");
  return o;
}

Outcome deblurring()
{
  Outcome o;
  const Field clean = synthetic::shapes(64, 64);
  for (const char* pde : {"tikhonov", "tv"})
  {
    const RestorationResult r = run_deblur(config(Task::Deblur, std::string("pde=") + pde), clean);
    const double g = r.output_metrics.psnr - r.degraded_metrics.psnr;
    o.check(g >= 1.0, std::string(pde) + " gain " + num(g));
    o.note(std::string(pde) + " +" + num(g) + " dB");
  }
  try
  {
    const RunConfig c = config(Task::Deblur, "pde=ks");
    const RestorationResult r = run_deblur(c, clean);
    o.check(c.steps == 40, "ks steps " + std::to_string(c.steps));
    o.check(std::isfinite(r.output_metrics.psnr) && std::isfinite(r.output_metrics.q), "ks metrics not finite");
    o.note("ks psnr " + num(r.output_metrics.psnr) + " q " + num(r.output_metrics.q));
  }
  catch (const DivergenceError& e)
  {
    o.check(false, std::string("ks diverged: ") + e.what());
  }
  return o;
}

Outcome inpainting()
{
  Outcome o;
  const Field c(48, 48, 0.6);
  const Mask strokes = synthetic::random_strokes(48, 48, 6, 12, 5);
  const InpaintResult rc = run_inpaint(config(Task::Inpaint, ""), c, strokes);
  o.check(max_abs_diff(rc.output, c) <= 1e-6, "constant error " + num(max_abs_diff(rc.output, c)));

  const Field ramp = synthetic::ramp(32, 32);
  const Mask hole = synthetic::rect_mask(32, 32, 14, 14, 5, 5);
  const InpaintResult rr = run_inpaint(
      config(Task::Inpaint, "pde=mh\npde.alpha=0.2\npde.beta=0\npde.gamma=0\nsteps=2000"), ramp, hole);
  const double err = max_abs_diff(rr.output, ramp);
  o.check(err <= 0.01, "ramp hole error " + num(err));
  o.note("ramp hole max error " + num(err));

  bool untouched = true;
  for (const InpaintResult* r : {&rc, &rr})
    for (std::size_t k = 0; k < r->output.size(); ++k)
      if (!r->mask.at_index(k) && r->output.values()[k] != r->damaged.values()[k])
        untouched = false;
  o.check(untouched, "unmasked pixel modified");
  return o;
}

Outcome metric_oracles()
{
  Outcome o;
  double worst = 0;
  bool props = true;
  for (std::uint64_t s = 0; s < 20; ++s)
  {
    const Field a = random_field(32, 32, 300 + s), b = random_field(32, 32, 400 + s);
    worst = std::max({worst, std::abs(mse(a, b) - oracle::mse(a, b)), std::abs(psnr(a, b) - oracle::psnr(a, b)),
                      std::abs(ssim(a, b) - oracle::ssim(a, b)),
                      std::abs(quality_index_q(a, b) - oracle::q(a, b))});
    props = props && mse(a, b) == mse(b, a) && psnr(a, b) == psnr(b, a);
    props = props && std::abs(ssim(a, b) - ssim(b, a)) <= 1e-12;
    props = props && std::abs(quality_index_q(a, b) - quality_index_q(b, a)) <= 1e-12;
    props = props && mse(a, a) == 0.0 && std::isinf(psnr(a, a)) && ssim(a, a) == 1.0 &&
            quality_index_q(a, a) == 1.0;
  }
  o.check(worst <= 1e-9, "oracle mismatch " + num(worst));
  o.check(props, "symmetry or self-identity violated");
  o.note("max oracle difference " + num(worst));
  return o;
}

Outcome enhancement()
{
  Outcome o;
  Image img;
  img.channels.push_back(synthetic::soft_stripes(128, 128));
  for (const char* pde : {"ch", "mh"})
  {
    const auto [out, rep] = run_enhance(config(Task::Enhance, std::string("pde=") + pde), img);
    const double dm = std::abs(mean_intensity(out.channels[0]) - mean_intensity(img.channels[0]));
    o.check(dm <= 1e-6, std::string(pde) + " mean shift " + num(dm));
    o.check(rep.sharpness_out >= rep.sharpness_in, std::string(pde) + " sharpness decreased");
    o.note(std::string(pde) + " sharpness " + num(rep.sharpness_in) + " -> " + num(rep.sharpness_out));
  }
  return o;
}

Outcome reproducibility()
{
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "pdeimg_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* run : {"1", "2"})
  {
    const std::string r = run;
    const int a = run_tool("denoise --pde pm --seed 11 --output " + (dir / ("d" + r + ".pgm")).string());
    const int b = run_tool("inpaint --seed 11 --steps 200 --image.size 64 --output " +
                           (dir / ("i" + r + ".pgm")).string());
    const int c = run_tool("bench --seed 11 --image.size 32 --output " + (dir / ("bench" + r)).string());
    o.check(a == 0 && b == 0 && c == 0, "run " + r + " failed");
  }
  o.check(slurp(dir / "d1.pgm") == slurp(dir / "d2.pgm"), "denoise output differs");
  o.check(slurp(dir / "i1.pgm") == slurp(dir / "i2.pgm"), "inpaint output differs");
  const std::string csv1 = slurp(dir / "bench1" / "results.csv");
  o.check(!csv1.empty() && drop_last_column(csv1) == drop_last_column(slurp(dir / "bench2" / "results.csv")),
          "bench csv differs");
  for (const auto& e : fs::directory_iterator(dir / "bench1"))
    if (e.path().extension() == ".pgm")
      o.check(slurp(e.path()) == slurp(dir / "bench2" / e.path().filename()),
              e.path().filename().string() + " differs");
  return o;
}

Outcome io_round_trip()
{
  Outcome o;
  const fs::path p = fs::temp_directory_path() / "pdeimg_acceptance_rt.pgm";
  std::mt19937_64 gen(14);
  int failures = 0;
  for (int k = 0; k < 100; ++k)
  {
    const int w = 1 + static_cast<int>(gen() % 40), h = 1 + static_cast<int>(gen() % 40);
    const Field f = Field::generate(w, h, [&](int, int) { return static_cast<double>(gen() % 256) / 255.0; });
    const PgmVariant v = k % 2 ? PgmVariant::P5 : PgmVariant::P2;
    write_pgm(f, p, v);
    failures += !(read_pgm(p) == f);
  }
  o.check(failures == 0, std::to_string(failures) + " of 100 differ");
  return o;
}

} // namespace

int main(int argc, char** argv)
{
  cli_path = argc > 1 ? argv[1] : "pdeimg";
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"heat matches gaussian blur", heat_gaussian},
      {"conservation of mean intensity", conservation},
      {"steady state is the mean", steady_state},
      {"exact advection at unit courant number", exact_advection},
      {"cfl enforcement in the cli", cfl_enforcement},
      {"rk4 and euler convergence order", rk4_order},
      {"curl of gradient vanishes", curl_of_gradient},
      {"denoising improvement and edge localization", denoising},
      {"deblurring improvement", deblurring},
      {"inpainting exactness", inpainting},
      {"metric oracles", metric_oracles},
      {"enhancement contract", enhancement},
      {"reproducibility", reproducibility},
      {"pgm round trip", io_round_trip},
  };
  int failed = 0, n = 0;
  for (const auto& [name, fn] : criteria)
  {
    ++n;
    Outcome o;
    try
    {
      o = fn();
    }
    catch (const std::exception& e)
    {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.ok;
    std::printf("%s %2d %s (%s)\n", o.ok ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed ? 1 : 0;
}
