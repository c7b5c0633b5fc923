#include "doctest.h"

#include "lapconv/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using lapconv::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lapconv_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::size_t file_count(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

} // namespace

TEST_CASE("kernel-info prints c0 and the variation moment") {
  const Outcome r = call({"kernel-info", "--kernel", "indicator", "--dim", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("c0 = 0.7853981633974483\n") != std::string::npos);
  CHECK(r.out.find("bv_moment(d+3) = 1\n") != std::string::npos);
  CHECK(call({"kernel-info", "--kernel", "nope"}).code == 1);
}

TEST_CASE("missing or malformed configs exit with code 1") {
  const fs::path dir = scratch("configs");
  const Outcome missing = call({"rate", "--config", (dir / "missing.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("missing.json") != std::string::npos);

  write(dir / "unknown.json", "{\n  \"n_grid\": [1024],\n  \"bogus\": 3\n}\n");
  const Outcome unknown = call({"rate", "--config", (dir / "unknown.json").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("unknown.json:3") != std::string::npos);
  CHECK(unknown.err.find("bogus") != std::string::npos);

  write(dir / "syntax.json", "{\n  \"seeds\": [1,\n}\n");
  CHECK(call({"rate", "--config", (dir / "syntax.json").string()}).code == 1);

  write(dir / "window.json", "{\"n_grid\": [64], \"h_rule\": {\"constant\": 0.1}}");
  const Outcome window = call({"rate", "--dry-run", "--config", (dir / "window.json").string()});
  CHECK(window.code == 1);
  CHECK(window.err.find("window condition") != std::string::npos);

  CHECK(call({}).code == 1);
  CHECK(call({"nonsense"}).code == 1);
}

TEST_CASE("dry runs validate without writing") {
  const fs::path dir = scratch("dry");
  for (const char* kind : {"rate", "knn-rate", "concentration", "deviation", "moments", "geometry", "operator-gap",
                           "sample", "laplacian", "knn-laplacian"}) {
    const Outcome r = call({kind, "--dry-run", "--out", (dir / "out").string()});
    INFO(kind);
    CHECK(r.code == 0);
    CHECK(r.out.find("config ok") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("sample is reproducible and stays in its output directory") {
  const fs::path dir = scratch("sample");
  const std::vector<std::string> a{"sample", "--manifold", "s2", "--n", "100", "--seed", "7", "--out",
                                   (dir / "a").string()};
  auto b = a;
  b.back() = (dir / "b").string();
  REQUIRE(call(a).code == 0);
  REQUIRE(call(b).code == 0);
  const std::string name = "cloud_s2_n100_seed7.csv";
  CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  CHECK(file_count(dir) == 2);
}

TEST_CASE("laplacian writes fields, errors and a summary with the config echo") {
  const fs::path dir = scratch("laplacian");
  const Outcome r = call({"laplacian", "--n", "500", "--h", "0.4", "--function", "coordinate:0", "--function",
                          "constant:1", "--eval-grid", "10", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "laplacian_f0_seed1.csv"));
  const std::string constant_field = slurp(dir / "laplacian_f1_seed1.csv");
  std::istringstream lines(constant_field);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "x0,x1,x2,value,operator,h_or_k,n,seed");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.find(",0,graph,0.4,500,1") != std::string::npos);
  }
  CHECK(rows == 10);
  const std::string summary = slurp(dir / "laplacian_summary.json");
  CHECK(summary.find("\"version\": \"0.1.0\"") != std::string::npos);
  CHECK(summary.find("\"config\"") != std::string::npos);

  const Outcome knn = call({"knn-laplacian", "--n", "500", "--k", "30", "--eval-grid", "5", "--out", dir.string()});
  CHECK(knn.code == 0);
  CHECK(call({"knn-laplacian", "--n", "50", "--k", "60", "--out", dir.string()}).code == 1);
}

TEST_CASE("experiment subcommands write reports and honour LAPCONV_OUT") {
  const fs::path dir = scratch("experiment");
  write(dir / "geo.json", "{\"geometry\": {\"pairs\": 50, \"mc_draws\": 2000}}");
  ::setenv("LAPCONV_OUT", (dir / "env").string().c_str(), 1);
  const Outcome r = call({"geometry", "--config", (dir / "geo.json").string()});
  ::unsetenv("LAPCONV_OUT");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "env" / "geometry_checks.csv"));
  CHECK(fs::exists(dir / "env" / "geometry_summary.json"));
  CHECK(lapconv::cli::resolve_output_dir("x", "y") == "x");
  CHECK(lapconv::cli::resolve_output_dir("", "y") == "y");
}

TEST_CASE("quadrature failures exit with code 2") {
  const fs::path dir = scratch("numerical");
  write(dir / "gap.json",
        "{\"h_grid\": [0.4], \"eval_grid\": 3, \"quadrature\": {\"radial\": 1, \"angular\": 2, \"tolerance\": 1e-14}}");
  const Outcome r = call({"operator-gap", "--config", (dir / "gap.json").string(), "--out", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("quadrature") != std::string::npos);
}

TEST_CASE("the installed binary runs end to end") {
  const fs::path dir = scratch("binary");
  const std::string cmd = std::string(LAPCONV_CLI_PATH) + " kernel-info --kernel gaussian --dim 3 > " +
                          (dir / "out.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(slurp(dir / "out.txt").find("c0 = ") != std::string::npos);
  const int bad = std::system((std::string(LAPCONV_CLI_PATH) + " rate --config /nonexistent.json 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == 1);
}
