#include "lapconv/sampling.hpp"

#include "lapconv/errors.hpp"
#include "lapconv/numerics.hpp"
#include "lapconv/parallel.hpp"
#include "lapconv/rng.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace lapconv {

namespace {

constexpr double kPi = std::numbers::pi;

struct Block {
  std::vector<Point> points;
  std::size_t proposals = 0;
};

double frac(double x) { return x - std::floor(x); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("cloud csv: cannot parse " + what + " '" + s + "'");
  return v;
}

} // namespace

std::string manifold_id(const Manifold& m) {
  std::string id = m.name();
  for (double r : m.radii()) id += ":" + format_double(r);
  return id;
}

Manifold manifold_from_id(const std::string& id) {
  const auto parts = split(id, ':');
  std::vector<double> radii;
  for (std::size_t i = 1; i < parts.size(); ++i) radii.push_back(parse_double(parts[i], "radius"));
  return Manifold::from_name(parts.front(), radii);
}

SampleCloud sample(const Manifold& m, const Density& p, std::size_t n, std::uint64_t seed, int threads,
                   SamplingStats* stats) {
  if (n < 1) throw DomainError("sample: n must be >= 1");
  const auto q_max = p.unnormalized_max();
  if (!q_max) throw ConfigError("sample: density '" + p.id() + "' has no upper bound p_max");

  const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
  std::vector<Block> out(blocks);
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t want = std::min(kSampleBlock, n - b * kSampleBlock);
    Rng rng = Rng::substream(seed, b);
    Block& blk = out[b];
    blk.points.reserve(want);
    while (blk.points.size() < want) {
      const Point x = m.sample_uniform(rng);
      ++blk.proposals;
      if (p.is_uniform() || rng.uniform() * *q_max < p.unnormalized(x)) blk.points.push_back(x);
    }
  });

  SampleCloud cloud;
  cloud.manifold_id = manifold_id(m);
  cloud.density_id = p.id();
  cloud.seed = seed;
  cloud.intrinsic_dim = m.dim();
  cloud.ambient_dim = m.ambient_dim();
  cloud.points.reserve(n);
  std::size_t proposals = 0;
  for (auto& blk : out) {
    proposals += blk.proposals;
    cloud.points.insert(cloud.points.end(), blk.points.begin(), blk.points.end());
  }
  if (stats) {
    stats->proposals = proposals;
    stats->accepted = n;
    stats->expected_rate = p.is_uniform() ? 1.0 : 1.0 / (p.normalizer() * m.volume() * *q_max);
  }
  return cloud;
}

std::vector<Point> eval_grid(const Manifold& m, std::size_t count) {
  if (count < 1) throw DomainError("eval_grid: count must be >= 1");
  std::vector<Point> grid;
  grid.reserve(count);
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  if (const auto* s = std::get_if<SphereShape>(&m.shape())) {
    const double r = s->radius;
    if (s->d == 1) {
      for (std::size_t i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * static_cast<double>(i) / count;
        grid.push_back({r * std::cos(a), r * std::sin(a), 0, 0});
      }
    } else if (s->d == 2) {
      for (std::size_t i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = 2.0 * kPi * frac(i / golden);
        grid.push_back({r * rho * std::cos(a), r * rho * std::sin(a), r * z, 0});
      }
    } else {
      // Kronecker sequence with the plastic-number generalization of the
      // golden ratio, pushed through the uniform parametrization of S^3.
      double g = 1.3;
      for (int it = 0; it < 50; ++it) g = std::cbrt(1.0 + g);
      const double a1 = 1.0 / g, a2 = 1.0 / (g * g), a3 = 1.0 / (g * g * g);
      for (std::size_t i = 0; i < count; ++i) {
        const double t = i + 0.5;
        const double u = frac(0.5 + a1 * t);
        const double phi = 2.0 * kPi * frac(0.5 + a2 * t);
        const double psi = 2.0 * kPi * frac(0.5 + a3 * t);
        const double c = std::sqrt(u), sn = std::sqrt(1.0 - u);
        grid.push_back({r * c * std::cos(phi), r * c * std::sin(phi), r * sn * std::cos(psi), r * sn * std::sin(psi)});
      }
    }
    return grid;
  }
  const std::size_t k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (k * k == count) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        grid.push_back(m.torus_point(2.0 * kPi * i / k, 2.0 * kPi * j / k));
  } else {
    for (std::size_t i = 0; i < count; ++i)
      grid.push_back(m.torus_point(2.0 * kPi * static_cast<double>(i) / count, 2.0 * kPi * frac(i / golden)));
  }
  return grid;
}

void write_cloud_csv(std::ostream& out, const SampleCloud& cloud) {
  out << "# manifold=" << cloud.manifold_id << ";density=" << cloud.density_id << ";seed=" << cloud.seed
      << ";n=" << cloud.size() << ";stream=" << Rng::kStreamVersion << "\n";
  for (int i = 0; i < cloud.ambient_dim; ++i) out << (i ? "," : "") << "x" << i;
  out << "\n";
  for (const Point& x : cloud.points) {
    for (int i = 0; i < cloud.ambient_dim; ++i) out << (i ? "," : "") << format_double(x[i]);
    out << "\n";
  }
}

SampleCloud read_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw ConfigError("cloud csv: missing metadata line");
  SampleCloud cloud;
  std::size_t declared_n = 0;
  bool have_manifold = false;
  for (const auto& field : split(line.substr(2), ';')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("cloud csv: bad metadata field '" + field + "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    if (key == "manifold") {
      cloud.manifold_id = value;
      have_manifold = true;
    } else if (key == "density") {
      cloud.density_id = value;
    } else if (key == "seed") {
      cloud.seed = std::stoull(value);
    } else if (key == "n") {
      declared_n = std::stoull(value);
    }
  }
  if (!have_manifold) throw ConfigError("cloud csv: metadata has no manifold");
  const Manifold m = manifold_from_id(cloud.manifold_id);
  cloud.intrinsic_dim = m.dim();
  cloud.ambient_dim = m.ambient_dim();
  if (!std::getline(in, line)) throw ConfigError("cloud csv: missing header row");
  if (static_cast<int>(split(line, ',').size()) != cloud.ambient_dim)
    throw ConfigError("cloud csv: header does not match ambient dimension");
  std::size_t row = 2;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != cloud.ambient_dim)
      throw ConfigError("cloud csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " columns");
    Point x{};
    for (int i = 0; i < cloud.ambient_dim; ++i) x[i] = parse_double(cells[i], "coordinate");
    m.require_on_manifold(x);
    cloud.points.push_back(x);
  }
  if (cloud.points.size() != declared_n) throw ConfigError("cloud csv: row count differs from metadata n");
  return cloud;
}

} // namespace lapconv
