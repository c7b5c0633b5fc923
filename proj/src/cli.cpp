#include "lapconv/cli.hpp"

#include "lapconv/config.hpp"
#include "lapconv/errors.hpp"
#include "lapconv/experiments.hpp"
#include "lapconv/kernels.hpp"
#include "lapconv/neighbors.hpp"
#include "lapconv/numerics.hpp"
#include "lapconv/operators.hpp"
#include "lapconv/report_io.hpp"
#include "lapconv/sampling.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lapconv::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by every subcommand that takes a config.
struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  bool dry_run = false;
};

// Flags of the sample / laplacian / knn-laplacian subcommands; applied on top
// of the config when given.
struct CloudFlags {
  std::string manifold;
  std::vector<double> radii;
  std::string density;
  double beta = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string kernel;
  double h = 0.0;
  std::size_t k = 0;
  std::vector<std::string> functions;
  std::size_t eval_grid = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--dry-run", c.dry_run, "validate the config and exit");
}

void add_cloud_flags(CLI::App* sub, CloudFlags& f, bool operator_flags) {
  sub->add_option("--manifold", f.manifold, "s1, s2, s3 or torus");
  sub->add_option("--radii", f.radii, "manifold radii");
  sub->add_option("--density", f.density, "uniform or tilted");
  sub->add_option("--beta", f.beta, "tilt of the tilted density");
  sub->add_option("--n", f.n, "sample size")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "seed");
  if (!operator_flags) return;
  sub->set_help_flag("--help", "Print this help message and exit");
  sub->add_option("--kernel", f.kernel, "kernel name");
  sub->add_option("--h", f.h, "bandwidth")->check(CLI::PositiveNumber);
  sub->add_option("--k", f.k, "neighbor count")->check(CLI::PositiveNumber);
  sub->add_option("--function", f.functions, "test function, e.g. coordinate:0 (repeatable)");
  sub->add_option("--eval-grid", f.eval_grid, "evaluation grid size")->check(CLI::PositiveNumber);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig load_config(const std::string& kind, const Common& c) {
  RunConfig cfg = c.config.empty() ? default_config(kind) : parse_config(read_file(c.config), c.config, kind);
  if (c.threads > 0) cfg.threads = c.threads;
  return cfg;
}

void apply_cloud_flags(const CLI::App* sub, const CloudFlags& f, RunConfig& cfg) {
  if (sub->count("--manifold")) {
    cfg.manifold.name = f.manifold;
    if (!sub->count("--radii")) cfg.manifold.radii.clear();
  }
  if (sub->count("--radii")) cfg.manifold.radii = f.radii;
  if (sub->count("--density")) cfg.density.name = f.density;
  if (sub->count("--beta")) cfg.density.beta = f.beta;
  if (sub->count("--n")) cfg.n_grid = {f.n};
  if (sub->count("--seed")) cfg.seeds = {f.seed};
  if (sub->get_option_no_throw("--kernel") == nullptr) return;
  if (sub->count("--kernel")) cfg.kernel = {f.kernel, {}};
  if (sub->count("--h")) cfg.h_grid = {f.h};
  if (sub->count("--k")) cfg.k_rule = {static_cast<double>(f.k), 0.0};
  if (sub->count("--function")) cfg.functions = f.functions;
  if (sub->count("--eval-grid")) cfg.eval_grid = f.eval_grid;
}

void require_single_n(const RunConfig& cfg) {
  if (cfg.n_grid.size() != 1) throw ConfigError("n_grid must hold exactly one sample size for " + cfg.experiment);
}

fs::path output_dir(const Common& c, const RunConfig& cfg) {
  return resolve_output_dir(c.out, cfg.output);
}

void print_paths(std::ostream& out, const std::vector<fs::path>& paths) {
  for (const auto& p : paths) out << p.string() << "\n";
}

int kernel_info(const std::string& name, int dim, std::ostream& out) {
  if (dim < 1) throw ConfigError("--dim must be >= 1");
  const Kernel k = Kernel::from_name(name);
  out << "kernel = " << k.name() << "\n";
  out << "dim = " << dim << "\n";
  out << "c0 = " << format_double(c0(k, dim)) << "\n";
  out << "bv_moment(d+3) = " << format_double(bv_moment(k, dim + 3.0)) << "\n";
  out << "total_variation = " << format_double(k.total_variation_limit()) << "\n";
  out << "sup = " << format_double(k.sup_norm()) << "\n";
  out << "support = " << (k.support_radius() ? format_double(*k.support_radius()) : std::string("unbounded"))
      << "\n";
  return 0;
}

int do_sample(RunConfig cfg, const Common& c, std::ostream& out) {
  validate(cfg);
  require_single_n(cfg);
  if (c.dry_run) {
    out << to_json(cfg).dump(2) << "\nconfig ok\n";
    return 0;
  }
  const Manifold m = build_manifold(cfg.manifold);
  const Density p = build_density(cfg.density, m);
  const fs::path dir = output_dir(c, cfg);
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (std::uint64_t seed : cfg.seeds) {
    const SampleCloud cloud = sample(m, p, cfg.n_grid.front(), seed, cfg.threads);
    const fs::path path =
        dir / ("cloud_" + m.name() + "_n" + std::to_string(cloud.size()) + "_seed" + std::to_string(seed) + ".csv");
    std::ofstream f(path, std::ios::binary);
    write_cloud_csv(f, cloud);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
  }
  print_paths(out, written);
  return 0;
}

int do_operator(RunConfig cfg, const Common& c, bool knn, std::ostream& out) {
  validate(cfg);
  require_single_n(cfg);
  if (cfg.functions.empty()) throw ConfigError("functions must not be empty");
  const Manifold m = build_manifold(cfg.manifold);
  const Density p = build_density(cfg.density, m);
  const Kernel kernel = knn ? Kernel::indicator() : build_kernel(cfg.kernel);
  const std::size_t n = cfg.n_grid.front();
  const int d = m.dim();
  const double h = cfg.h_grid.empty() ? bandwidth(cfg.h_rule, n, d) : cfg.h_grid.front();
  const std::size_t k = neighbor_count(cfg.k_rule, n, d);
  if (knn && (k < 1 || k > n)) throw ConfigError("k must satisfy 1 <= k <= n");
  if (!knn && !(h > 0.0)) throw ConfigError("h must be positive");
  if (c.dry_run) {
    out << to_json(cfg).dump(2) << "\nconfig ok\n";
    return 0;
  }
  std::vector<TestFunction> fs_;
  for (const auto& f : cfg.functions) fs_.push_back(parse_function(f, m));
  const auto grid = eval_grid(m, cfg.eval_grid);
  const double c0v = c0(kernel, d);
  const fs::path dir = output_dir(c, cfg);
  fs::create_directories(dir);

  Report report;
  report.kind = cfg.experiment;
  report.config = to_json(cfg);
  Table errors{"errors", {"function", "seed", "h_or_k", "sup_error"}, {}};
  std::vector<fs::path> written;
  for (std::uint64_t seed : cfg.seeds) {
    const SampleCloud cloud = sample(m, p, n, seed, cfg.threads);
    const NeighborIndex index(cloud.points, m.ambient_dim());
    const auto fields = knn ? knn_laplacian(cloud, index, k, fs_, grid, cfg.threads)
                            : graph_laplacian(cloud, index, kernel, h, fs_, grid, cfg.threads);
    for (std::size_t j = 0; j < fs_.size(); ++j) {
      double sup = 0.0;
      for (std::size_t r = 0; r < grid.size(); ++r)
        sup = std::max(sup, std::abs(fields[j].values[r] - limit_operator(p, fs_[j], c0v, grid[r])));
      errors.add({fs_[j].id(), seed, fields[j].provenance.h_or_k, sup});
      const fs::path path =
          dir / (cfg.experiment + "_f" + std::to_string(j) + "_seed" + std::to_string(seed) + ".csv");
      std::ofstream f(path, std::ios::binary);
      write_field_csv(f, fields[j]);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      written.push_back(path);
    }
  }
  report.summary["c0"] = c0v;
  report.summary["h_or_k"] = knn ? static_cast<double>(k) : h;
  report.tables = {std::move(errors)};
  const auto more = write_report(report, dir);
  written.insert(written.end(), more.begin(), more.end());
  print_paths(out, written);
  return 0;
}

int do_experiment(RunConfig cfg, const Common& c, std::ostream& out) {
  validate(cfg);
  if (c.dry_run) {
    out << to_json(cfg).dump(2) << "\nconfig ok\n";
    return 0;
  }
  const Report report = run_experiment(cfg);
  print_paths(out, write_report(report, output_dir(c, cfg)));
  return 0;
}

} // namespace

std::string resolve_output_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("LAPCONV_OUT"); env != nullptr && *env != '\0') return env;
  return "lapconv_out";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph and kNN Laplacians on sampled manifolds"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string kernel_name = "indicator";
  int dim = 2;
  CLI::App* info = app.add_subcommand("kernel-info", "print kernel constants");
  info->add_option("--kernel", kernel_name, "kernel name");
  info->add_option("--dim", dim, "intrinsic dimension");

  Common common;
  CloudFlags flags;
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw a point cloud");
  add_common(sample_cmd, common);
  add_cloud_flags(sample_cmd, flags, false);
  CLI::App* lap_cmd = app.add_subcommand("laplacian", "evaluate the graph Laplacian on a grid");
  add_common(lap_cmd, common);
  add_cloud_flags(lap_cmd, flags, true);
  CLI::App* knn_cmd = app.add_subcommand("knn-laplacian", "evaluate the kNN Laplacian on a grid");
  add_common(knn_cmd, common);
  add_cloud_flags(knn_cmd, flags, true);

  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const char* kind : {"rate", "knn-rate", "concentration", "deviation", "moments", "geometry", "operator-gap"}) {
    CLI::App* sub = app.add_subcommand(kind, std::string("run the ") + kind + " experiment");
    add_common(sub, common);
    experiments.emplace_back(kind, sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (info->parsed()) return kernel_info(kernel_name, dim, out);
    for (CLI::App* sub : {sample_cmd, lap_cmd, knn_cmd}) {
      if (!sub->parsed()) continue;
      RunConfig cfg = load_config(sub->get_name(), common);
      apply_cloud_flags(sub, flags, cfg);
      if (sub == sample_cmd) return do_sample(std::move(cfg), common, out);
      return do_operator(std::move(cfg), common, sub == knn_cmd, out);
    }
    for (const auto& [kind, sub] : experiments)
      if (sub->parsed()) return do_experiment(load_config(kind, common), common, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

} // namespace lapconv::cli
