#include "lapconv/config.hpp"

#include "lapconv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace lapconv {

using nlohmann::json;

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> s(count);
  for (std::size_t i = 0; i < count; ++i) s[i] = first + i;
  return s;
}

std::vector<std::size_t> powers_of_two(int lo, int hi) {
  std::vector<std::size_t> out;
  for (int e = lo; e <= hi; ++e) out.push_back(std::size_t{1} << e);
  return out;
}

// Parsing context: source name, raw text (for line lookup) and JSON pointer.
struct Ctx {
  const std::string& source;
  const std::string& text;

  std::size_t line_of_key(const std::string& key) const {
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
  }

  [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& what) const {
    std::ostringstream msg;
    msg << source;
    if (const auto line = line_of_key(key)) msg << ":" << line;
    msg << ": field '" << path << "': " << what;
    throw ConfigError(msg.str());
  }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, path.substr(path.rfind('/') + 1), "expected an object");
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        fail(path + "/" + key, key, "unknown field");
    }
  }

  template <class T>
  T get(const json& obj, const std::string& path, const std::string& key) const {
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(path + "/" + key, key, std::string("wrong type (") + e.what() + ")");
    }
  }
};

void read_rule(const Ctx& c, const json& j, const std::string& path, RuleSpec& rule) {
  c.check_keys(j, path, {"constant", "exponent"});
  if (j.contains("constant")) rule.constant = c.get<double>(j, path, "constant");
  if (j.contains("exponent")) rule.exponent = c.get<double>(j, path, "exponent");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& spec) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("function '" + spec + "': cannot parse number '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& spec) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("function '" + spec + "': cannot parse integer '" + s + "'");
  return v;
}

} // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"rate",     "knn-rate", "concentration", "deviation",
                                              "moments",  "geometry", "operator-gap",  "laplacian",
                                              "knn-laplacian", "sample", "kernel-info"};
  return kinds;
}

RunConfig default_config(const std::string& experiment) {
  RunConfig c;
  c.experiment = experiment;
  c.functions = {"coordinate:0"};
  if (experiment == "rate") {
    c.n_grid = powers_of_two(10, 15);
    c.seeds = seed_range(1, 10);
  } else if (experiment == "knn-rate") {
    c.density = {"tilted", 0.5};
    c.n_grid = powers_of_two(12, 15);
    c.seeds = seed_range(1, 5);
  } else if (experiment == "concentration") {
    c.n_grid = {5000, 20000, 40000};
    c.seeds = seed_range(1, 20);
    c.functions.clear();
  } else if (experiment == "deviation") {
    c.functions = {"coordinate:0", "coordinate:1", "coordinate:2"};
    c.seeds = seed_range(1, 200);
    c.eval_grid = 100;
    c.deviation.threshold_scale = 0.5;
  } else if (experiment == "moments") {
    c.h_grid = {0.4, 0.2, 0.1};
    c.eval_grid = 20;
    c.functions.clear();
  } else if (experiment == "geometry") {
    c.functions = {"coordinate:0", "harmonic:2"};
    c.seeds = {1};
  } else if (experiment == "operator-gap") {
    c.h_grid = {0.4, 0.2, 0.1, 0.05};
    c.eval_grid = 100;
  } else if (experiment == "laplacian" || experiment == "knn-laplacian" || experiment == "sample") {
    c.n_grid = {1000};
    c.seeds = {1};
    c.h_grid = {0.3};
    c.eval_grid = 100;
  } else if (experiment != "kernel-info") {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source, const std::string& experiment) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
    const auto nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t col = nl == std::string::npos ? byte : byte - nl - 1;
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": JSON syntax error: " << e.what();
    throw ConfigError(msg.str());
  }
  const Ctx c{source, text};
  c.check_keys(j, "", {"experiment", "manifold", "density", "kernel", "functions", "n_grid", "h_rule", "k_rule",
                       "h_grid", "seeds", "eval_grid", "include_samples", "deviation", "window", "geometry",
                       "quadrature", "threads", "output"});
  if (j.contains("experiment")) {
    const auto e = c.get<std::string>(j, "", "experiment");
    if (e != experiment) c.fail("/experiment", "experiment", "config is for '" + e + "', not '" + experiment + "'");
  }
  RunConfig cfg = default_config(experiment);

  if (j.contains("manifold")) {
    const json& m = j["manifold"];
    c.check_keys(m, "/manifold", {"name", "radii"});
    if (m.contains("name")) cfg.manifold.name = c.get<std::string>(m, "/manifold", "name");
    if (m.contains("radii")) cfg.manifold.radii = c.get<std::vector<double>>(m, "/manifold", "radii");
  }
  if (j.contains("density")) {
    const json& d = j["density"];
    c.check_keys(d, "/density", {"name", "beta"});
    if (d.contains("name")) cfg.density.name = c.get<std::string>(d, "/density", "name");
    if (d.contains("beta")) cfg.density.beta = c.get<double>(d, "/density", "beta");
  }
  if (j.contains("kernel")) {
    const json& k = j["kernel"];
    c.check_keys(k, "/kernel", {"name", "steps"});
    if (k.contains("name")) cfg.kernel.name = c.get<std::string>(k, "/kernel", "name");
    if (k.contains("steps")) {
      for (const auto& s : c.get<std::vector<std::vector<double>>>(k, "/kernel", "steps")) {
        if (s.size() != 2) c.fail("/kernel/steps", "steps", "each step is [breakpoint, value]");
        cfg.kernel.steps.emplace_back(s[0], s[1]);
      }
    }
  }
  if (j.contains("functions")) cfg.functions = c.get<std::vector<std::string>>(j, "", "functions");
  if (j.contains("n_grid")) cfg.n_grid = c.get<std::vector<std::size_t>>(j, "", "n_grid");
  if (j.contains("h_rule")) read_rule(c, j["h_rule"], "/h_rule", cfg.h_rule);
  if (j.contains("k_rule")) read_rule(c, j["k_rule"], "/k_rule", cfg.k_rule);
  if (j.contains("h_grid")) cfg.h_grid = c.get<std::vector<double>>(j, "", "h_grid");
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    if (s.is_object()) {
      c.check_keys(s, "/seeds", {"first", "count"});
      cfg.seeds = seed_range(s.contains("first") ? c.get<std::uint64_t>(s, "/seeds", "first") : 1,
                             c.get<std::size_t>(s, "/seeds", "count"));
    } else {
      cfg.seeds = c.get<std::vector<std::uint64_t>>(j, "", "seeds");
    }
  }
  if (j.contains("eval_grid")) cfg.eval_grid = c.get<std::size_t>(j, "", "eval_grid");
  if (j.contains("include_samples")) cfg.include_samples = c.get<bool>(j, "", "include_samples");
  if (j.contains("deviation")) {
    const json& d = j["deviation"];
    c.check_keys(d, "/deviation", {"n", "h", "delta_count", "deltas", "threshold_scale"});
    if (d.contains("n")) cfg.deviation.n = c.get<std::size_t>(d, "/deviation", "n");
    if (d.contains("h")) cfg.deviation.h = c.get<double>(d, "/deviation", "h");
    if (d.contains("delta_count")) cfg.deviation.delta_count = c.get<std::size_t>(d, "/deviation", "delta_count");
    if (d.contains("deltas")) cfg.deviation.deltas = c.get<std::vector<double>>(d, "/deviation", "deltas");
    if (d.contains("threshold_scale"))
      cfg.deviation.threshold_scale = c.get<double>(d, "/deviation", "threshold_scale");
  }
  if (j.contains("window")) {
    const json& w = j["window"];
    c.check_keys(w, "/window", {"kappa", "count"});
    if (w.contains("kappa")) cfg.window.kappa = c.get<double>(w, "/window", "kappa");
    if (w.contains("count")) cfg.window.count = c.get<int>(w, "/window", "count");
  }
  if (j.contains("geometry")) {
    const json& g = j["geometry"];
    c.check_keys(g, "/geometry", {"pairs", "mc_draws", "lemma_radius"});
    if (g.contains("pairs")) cfg.geometry.pairs = c.get<std::size_t>(g, "/geometry", "pairs");
    if (g.contains("mc_draws")) cfg.geometry.mc_draws = c.get<std::size_t>(g, "/geometry", "mc_draws");
    if (g.contains("lemma_radius")) cfg.geometry.lemma_radius = c.get<double>(g, "/geometry", "lemma_radius");
  }
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    c.check_keys(q, "/quadrature", {"radial", "angular", "tolerance"});
    if (q.contains("radial")) cfg.quadrature.radial = c.get<int>(q, "/quadrature", "radial");
    if (q.contains("angular")) cfg.quadrature.angular = c.get<int>(q, "/quadrature", "angular");
    if (q.contains("tolerance")) cfg.quadrature.tolerance = c.get<double>(q, "/quadrature", "tolerance");
  }
  if (j.contains("threads")) cfg.threads = c.get<int>(j, "", "threads");
  if (j.contains("output")) cfg.output = c.get<std::string>(j, "", "output");
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["manifold"] = {{"name", cfg.manifold.name}, {"radii", build_manifold(cfg.manifold).radii()}};
  j["density"] = {{"name", cfg.density.name}, {"beta", cfg.density.beta}};
  j["kernel"]["name"] = cfg.kernel.name;
  if (!cfg.kernel.steps.empty()) {
    json steps = json::array();
    for (const auto& [b, v] : cfg.kernel.steps) steps.push_back({b, v});
    j["kernel"]["steps"] = steps;
  }
  j["functions"] = cfg.functions;
  j["n_grid"] = cfg.n_grid;
  auto rule = [](const RuleSpec& r) {
    json o{{"constant", r.constant}};
    if (r.exponent) o["exponent"] = *r.exponent;
    return o;
  };
  j["h_rule"] = rule(cfg.h_rule);
  j["k_rule"] = rule(cfg.k_rule);
  j["h_grid"] = cfg.h_grid;
  j["seeds"] = cfg.seeds;
  j["eval_grid"] = cfg.eval_grid;
  j["include_samples"] = cfg.include_samples;
  json dev{{"n", cfg.deviation.n},
           {"delta_count", cfg.deviation.delta_count},
           {"deltas", cfg.deviation.deltas},
           {"threshold_scale", cfg.deviation.threshold_scale}};
  if (cfg.deviation.h) dev["h"] = *cfg.deviation.h;
  j["deviation"] = dev;
  j["window"] = {{"count", cfg.window.count}};
  if (cfg.window.kappa) j["window"]["kappa"] = *cfg.window.kappa;
  j["geometry"] = {{"pairs", cfg.geometry.pairs},
                   {"mc_draws", cfg.geometry.mc_draws},
                   {"lemma_radius", cfg.geometry.lemma_radius}};
  j["quadrature"] = {{"radial", cfg.quadrature.radial},
                     {"angular", cfg.quadrature.angular},
                     {"tolerance", cfg.quadrature.tolerance}};
  j["threads"] = cfg.threads;
  j["output"] = cfg.output;
  return j;
}

Manifold build_manifold(const ManifoldSpec& spec) {
  try {
    return Manifold::from_name(spec.name, spec.radii);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("manifold: ") + e.what());
  }
}

Density build_density(const DensitySpec& spec, const Manifold& m) {
  if (spec.name == "uniform") return Density::uniform(m);
  if (spec.name == "tilted") {
    if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw ConfigError("density: tilt beta must lie in (0, 1)");
    return Density::tilted(m, spec.beta);
  }
  throw ConfigError("density: unknown name '" + spec.name + "' (expected uniform or tilted)");
}

Kernel build_kernel(const KernelSpec& spec) {
  if (spec.name == "piecewise") return Kernel::piecewise_constant("piecewise", spec.steps);
  if (!spec.steps.empty()) throw ConfigError("kernel: steps are only allowed with name 'piecewise'");
  return Kernel::from_name(spec.name);
}

TestFunction parse_function(const std::string& spec, const Manifold& m) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (family == "constant") return TestFunction::constant(m, args.empty() ? 1.0 : to_double(args, spec));
    if (family == "coordinate") return TestFunction::coordinate(m, to_int(args, spec));
    if (family == "harmonic") return TestFunction::sphere_harmonic(m, to_int(args, spec));
    if (family == "linear") {
      const auto parts = split(args, ';');
      if (static_cast<int>(parts.size()) != m.ambient_dim())
        throw ConfigError("function '" + spec + "': expected " + std::to_string(m.ambient_dim()) + " coefficients");
      Point a{};
      for (std::size_t i = 0; i < parts.size(); ++i) a[i] = to_double(parts[i], spec);
      return TestFunction::linear(m, a);
    }
    if (family == "wave") {
      const auto parts = split(args, ';');
      if (parts.size() != 2) throw ConfigError("function '" + spec + "': expected wave:k1;k2");
      return TestFunction::torus_wave(m, to_int(parts[0], spec), to_int(parts[1], spec));
    }
  } catch (const DomainError& e) {
    throw ConfigError("function '" + spec + "': " + e.what());
  }
  throw ConfigError("function '" + spec + "': unknown family '" + family + "'");
}

double bandwidth(const RuleSpec& rule, std::size_t n, int d) {
  return rule.constant * std::pow(static_cast<double>(n), rule.exponent.value_or(-1.0 / (d + 4)));
}

std::size_t neighbor_count(const RuleSpec& rule, std::size_t n, int d) {
  const double k = rule.constant * std::pow(static_cast<double>(n), rule.exponent.value_or(4.0 / (d + 4)));
  // Guard against n^e landing a hair above an integer.
  return static_cast<std::size_t>(std::ceil(k * (1.0 - 1e-12)));
}

double window_ratio(double h, std::size_t n, int d) {
  return std::log(1.0 / h) / (static_cast<double>(n) * std::pow(h, d + 2));
}

double knn_ratio(std::size_t k, std::size_t n, int d) {
  const double q = static_cast<double>(k) / static_cast<double>(n);
  return std::pow(q, -1.0 - 2.0 / d) * std::log(1.0 / q) / static_cast<double>(n);
}

void validate(const RunConfig& cfg) {
  const Manifold m = build_manifold(cfg.manifold);
  const Density p = build_density(cfg.density, m);
  build_kernel(cfg.kernel);
  for (const auto& f : cfg.functions) parse_function(f, m);
  const int d = m.dim();
  const std::string& e = cfg.experiment;
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.eval_grid < 1) throw ConfigError("eval_grid must be >= 1");
  if (cfg.quadrature.radial < 1 || cfg.quadrature.angular < 2 || !(cfg.quadrature.tolerance > 0.0))
    throw ConfigError("quadrature: radial >= 1, angular >= 2 and tolerance > 0 required");

  const bool sampled = e == "rate" || e == "knn-rate" || e == "concentration" || e == "deviation" ||
                       e == "laplacian" || e == "knn-laplacian" || e == "sample";
  if (sampled && cfg.seeds.empty()) throw ConfigError("seeds: at least one repeat is required");
  if ((e == "rate" || e == "knn-rate" || e == "concentration") && cfg.n_grid.empty())
    throw ConfigError("n_grid must not be empty");
  for (std::size_t n : cfg.n_grid)
    if (n < 1) throw ConfigError("n_grid entries must be >= 1");

  if (e == "rate") {
    if (cfg.functions.empty()) throw ConfigError("functions must not be empty");
    for (std::size_t n : cfg.n_grid) {
      const double h = bandwidth(cfg.h_rule, n, d);
      if (!(h > 0.0)) throw ConfigError("h_rule gives a nonpositive bandwidth");
      const double w = window_ratio(h, n, d);
      if (w > 1.0) {
        std::ostringstream msg;
        msg << "window condition violated at n=" << n << ", h=" << h << ": log(1/h)/(n h^(d+2)) = " << w << " > 1";
        throw ConfigError(msg.str());
      }
    }
  }
  if (e == "knn-rate" || e == "concentration") {
    if (e == "knn-rate" && cfg.functions.empty()) throw ConfigError("functions must not be empty");
    if (!p.p_min() || !(*p.p_min() > 0.0)) throw ConfigError("kNN experiments need a density bounded below");
    for (std::size_t n : cfg.n_grid) {
      const std::size_t k = neighbor_count(cfg.k_rule, n, d);
      std::ostringstream at;
      at << " (n=" << n << ", k=" << k << ")";
      if (k < 1 || k >= n) throw ConfigError("k_rule must give 1 <= k < n; k/n -> 0 is required" + at.str());
      if (!(static_cast<double>(k) > std::log(static_cast<double>(n))))
        throw ConfigError("k_rule must give k > log n (k/log n -> infinity)" + at.str());
      if (e == "knn-rate" && knn_ratio(k, n, d) > 1.0)
        throw ConfigError("kNN admissibility violated: (1/n)(k/n)^(-1-2/d) log(n/k) > 1" + at.str());
    }
    if (cfg.window.count < 1) throw ConfigError("window.count must be >= 1");
    if (cfg.window.kappa && !(*cfg.window.kappa > 1.0)) throw ConfigError("window.kappa must exceed 1");
  }
  if (e == "deviation") {
    if (cfg.functions.empty()) throw ConfigError("functions must not be empty");
    for (const auto& f : cfg.functions)
      if (parse_function(f, m).sup_bound() > 1.0 + 1e-12)
        throw ConfigError("deviation: function '" + f + "' is not bounded by 1");
    const std::size_t n = cfg.deviation.n;
    if (n < 2) throw ConfigError("deviation.n must be >= 2");
    const double h = cfg.deviation.h.value_or(bandwidth(cfg.h_rule, n, d));
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("deviation: h must lie in (0, 1)");
    if (window_ratio(h, n, d) > 1.0) throw ConfigError("deviation: window condition violated");
    if (!(cfg.deviation.threshold_scale > 0.0)) throw ConfigError("deviation.threshold_scale must be positive");
    const double lo = std::max(h, std::sqrt(window_ratio(h, n, d)));
    if (cfg.deviation.deltas.empty()) {
      if (cfg.deviation.delta_count < 2) throw ConfigError("deviation.delta_count must be >= 2");
    } else {
      for (double delta : cfg.deviation.deltas)
        if (!(delta >= lo && delta <= 1.0)) {
          std::ostringstream msg;
          msg << "deviation: delta " << delta << " outside [" << lo << ", 1]";
          throw ConfigError(msg.str());
        }
    }
  }
  if (e == "moments" || e == "operator-gap") {
    if (cfg.h_grid.empty()) throw ConfigError("h_grid must not be empty");
    for (double h : cfg.h_grid)
      if (!(h > 0.0)) throw ConfigError("h_grid entries must be positive");
  }
  if (e == "operator-gap") {
    if (cfg.functions.empty()) throw ConfigError("functions must not be empty");
    for (std::size_t i = 1; i < cfg.h_grid.size(); ++i)
      if (std::abs(cfg.h_grid[i - 1] / cfg.h_grid[i] - 2.0) > 1e-9)
        throw ConfigError("operator-gap: h_grid must decrease by a factor 2");
  }
  if (e == "geometry" && (cfg.geometry.pairs < 1 || cfg.geometry.mc_draws < 2 || !(cfg.geometry.lemma_radius > 0.0)))
    throw ConfigError("geometry: pairs >= 1, mc_draws >= 2 and lemma_radius > 0 required");
}

} // namespace lapconv
