#ifndef PDEIMG_CLI_HPP
#define PDEIMG_CLI_HPP

#include "pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

namespace pdeimg
{

enum ExitCode : int
{
  exit_ok = 0,
  exit_config = 2,
  exit_divergence = 3,
  exit_io = 4
};

namespace detail
{

inline void print_metrics(std::ostream& out, const char* label, const MetricReport& m)
{
  out << label << ": mse=" << fmt_fixed(m.mse, 8) << " psnr=" << fmt_fixed(m.psnr, 4)
      << " ssim=" << fmt_fixed(m.ssim, 6) << " q=" << fmt_fixed(m.q, 6) << '\n';
}

inline void write_field(const RunConfig& cfg, const Field& f, const std::filesystem::path& path,
                        const std::string& comment = {})
{
  Image img;
  img.channels.push_back(clamp_unit(f));
  write_image(img, path, cfg.pgm_variant, comment);
}

/// Turns leftover `--key value` / `--key=value` tokens into config entries.
inline void apply_extras(const std::vector<std::string>& extras, KeyValues& kv)
{
  for (std::size_t i = 0; i < extras.size(); ++i)
  {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3)
      throw ConfigError("unexpected argument '" + tok + "'");
    std::string key = tok.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos)
    {
      kv.set(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size())
      throw ConfigError("missing value for '--" + key + "'");
    kv.set(key, extras[++i]);
  }
}

inline int execute(Task task, const KeyValues& kv, std::ostream& out, std::ostream& err)
{
  RunConfig cfg = make_run_config(task, kv);
  cfg.log = &err;

  switch (task)
  {
  case Task::Denoise:
  case Task::Deblur:
  {
    const Field clean = load_gray_or_synthetic(cfg);
    const RestorationResult r = task == Task::Denoise ? run_denoise(cfg, clean) : run_deblur(cfg, clean);
    print_metrics(out, "degraded", r.degraded_metrics);
    print_metrics(out, "output", r.output_metrics);
    if (!cfg.output.empty())
      write_field(cfg, r.output, cfg.output);
    break;
  }
  case Task::Enhance:
  {
    Image input;
    if (cfg.input.empty())
      input.channels.push_back(synthetic::by_name(cfg.image, cfg.image_size, cfg.image_size));
    else
      input = read_image(cfg.input);
    const auto [img, rep] = run_enhance(cfg, input);
    out << "psnr_vs_input=" << fmt_fixed(rep.psnr_vs_input, 4)
        << " mean_in=" << fmt_fixed(rep.mean_in, 8) << " mean_out=" << fmt_fixed(rep.mean_out, 8)
        << " sharpness_in=" << fmt_fixed(rep.sharpness_in, 8)
        << " sharpness_out=" << fmt_fixed(rep.sharpness_out, 8) << '\n';
    if (!cfg.output.empty())
      write_image(img, cfg.output, cfg.pgm_variant);
    break;
  }
  case Task::Inpaint:
  {
    const Field clean = load_gray_or_synthetic(cfg);
    const Mask mask = resolve_mask(cfg, clean.width(), clean.height());
    const InpaintResult r = run_inpaint(cfg, clean, mask);
    out << "masked_pixels=" << mask.count() << " masked_mse=" << fmt_fixed(r.masked_mse, 8)
        << " masked_psnr=" << fmt_fixed(r.masked_psnr, 4) << '\n';
    print_metrics(out, "global", r.global);
    if (!cfg.output.empty())
      write_field(cfg, r.output, cfg.output);
    break;
  }
  case Task::Edges:
  {
    const EdgeResult r = run_edges(cfg, load_gray_or_synthetic(cfg));
    std::size_t n = 0;
    for (double v : r.edges.values())
      n += v > 0.0;
    out << "edge_pixels=" << n;
    if (r.score)
      out << " precision=" << fmt_fixed(r.score->precision, 6)
          << " recall=" << fmt_fixed(r.score->recall, 6) << " f1=" << fmt_fixed(r.score->f1, 6);
    out << '\n';
    if (!cfg.output.empty())
      write_field(cfg, r.edges, cfg.output);
    break;
  }
  case Task::Simulate:
  {
    const auto frames = run_simulate(cfg, load_gray_or_synthetic(cfg));
    out << "frames=" << frames.size() << '\n';
    if (!cfg.output.empty())
    {
      const std::filesystem::path dir = cfg.output;
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec)
        throw IoError("cannot create output directory " + dir.string());
      for (const auto& f : frames)
      {
        char name[64];
        std::snprintf(name, sizeof name, "frame_%06ld.pgm", f.step);
        write_field(cfg, f.field, dir / name, "step " + std::to_string(f.step));
        if (cfg.spectrum)
        {
          std::snprintf(name, sizeof name, "spectrum_%06ld.pgm", f.step);
          write_field(cfg, normalize_for_display(log_magnitude_spectrum(f.field)), dir / name,
                      "log magnitude spectrum, step " + std::to_string(f.step));
        }
      }
    }
    break;
  }
  case Task::Metrics:
  {
    if (cfg.input.empty() || cfg.reference.empty())
      throw ConfigError("metrics needs --input and --reference");
    const Field a = read_gray(cfg.reference);
    const Field b = read_gray(cfg.input);
    const MetricReport m = evaluate_metrics(a, b);
    for (const auto& name : cfg.metric_set)
    {
      const double v = name == "mse" ? m.mse : name == "psnr" ? m.psnr : name == "ssim" ? m.ssim : m.q;
      out << name << '=' << fmt_fixed(v, name == "mse" ? 8 : name == "psnr" ? 4 : 6) << '\n';
    }
    break;
  }
  case Task::Bench:
  {
    const BenchSummary s = run_bench(cfg, cfg.output.empty() ? "bench_out" : cfg.output);
    out << "rows=" << s.rows << " csv=" << s.csv.string() << '\n';
    break;
  }
  }
  return exit_ok;
}

} // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr)
{
  CLI::App app{"PDE-based image processing"};
  app.require_subcommand(1);
  static const std::pair<const char*, const char*> tasks[] = {
      {"denoise", "add seeded Gaussian noise and restore"},
      {"deblur", "blur (+ noise) and restore with tikhonov, tv or ks"},
      {"enhance", "contrast enhancement with mean preservation (ch, mh)"},
      {"inpaint", "fill masked pixels by masked evolution"},
      {"edges", "edge map with optional KdV or heat prefilter"},
      {"simulate", "evolve a PDE and write snapshot frames"},
      {"metrics", "compare --input against --reference"},
      {"bench", "method x noise-level matrix to CSV and image grids"},
  };

  struct Common
  {
    std::string input, output, config, reference, mask, bc, pde, scheme;
    std::optional<std::uint64_t> seed;
    std::optional<long> steps, snapshot_every;
    std::optional<double> dt;
  } common;

  for (const auto& [name, help] : tasks)
  {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--input", common.input, "input image (PGM/PPM/PNG); synthetic when absent");
    sub->add_option("--output", common.output, "output image, or directory for simulate/bench");
    sub->add_option("--config", common.config, "key=value config file");
    sub->add_option("--reference", common.reference, "reference image for metrics");
    sub->add_option("--mask", common.mask, "inpainting mask PGM (nonzero = damaged)");
    sub->add_option("--seed", common.seed);
    sub->add_option("--steps", common.steps);
    sub->add_option("--dt", common.dt);
    sub->add_option("--bc", common.bc)->check(CLI::IsMember({"neumann", "periodic"}));
    sub->add_option("--snapshot-every", common.snapshot_every);
    sub->add_option("--scheme", common.scheme)->check(CLI::IsMember({"euler", "rk4"}));
    sub->add_option("--pde", common.pde);
  }

  std::vector<std::string> argv{args.rbegin(), args.rend()}; // CLI11 wants reversed order
  try
  {
    app.parse(argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    out << app.help(); // includes the parsed subcommand's help
    return exit_ok;
  }
  catch (const CLI::ParseError& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  try
  {
    CLI::App* chosen = app.get_subcommands().front();
    const Task task = parse_task(chosen->get_name());
    KeyValues kv;
    if (!common.config.empty())
      kv = KeyValues::load(common.config);
    kv.set("task", chosen->get_name());
    auto put = [&](const char* key, const std::string& v) {
      if (!v.empty())
        kv.set(key, v);
    };
    put("input", common.input);
    put("output", common.output);
    put("reference", common.reference);
    put("mask", common.mask);
    put("bc", common.bc);
    put("pde", common.pde);
    put("scheme", common.scheme);
    if (common.seed)
      kv.set("seed", std::to_string(*common.seed));
    if (common.steps)
      kv.set("steps", std::to_string(*common.steps));
    if (common.snapshot_every)
      kv.set("snapshot_every", std::to_string(*common.snapshot_every));
    if (common.dt)
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", *common.dt);
      kv.set("dt", buf);
    }
    detail::apply_extras(chosen->remaining(), kv);
    return detail::execute(task, kv, out, err);
  }
  catch (const CflViolation& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
  catch (const ConfigError& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
  catch (const DivergenceError& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_divergence;
  }
  catch (const IoError& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_io;
  }
  catch (const std::invalid_argument& e)
  {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

} // namespace pdeimg

#endif
