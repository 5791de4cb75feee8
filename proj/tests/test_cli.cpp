#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpi/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "rpi_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << body;
  return p;
}

struct Run {
  int code;
  json summary;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = rpi::run_cli(args, out, err);
  json summary;
  try {
    summary = json::parse(out.str());
  } catch (const json::exception&) {
  }
  return {code, summary, err.str()};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

const char* kMinimal = R"({
  "schema": 1, "seed": 7,
  "law": {"family": "exponential", "rate": 1.0},
  "kernel": {"type": "indicator", "eta": {"family": "exponential", "rate": 1.0}},
  "t": 30, "u_grid": [0], "n_replicates": 100
})";

}  // namespace

TEST_CASE("simulate writes an N x d matrix and is byte-reproducible") {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = write_config(dir, kMinimal);
  const Run a = run({"simulate", cfg.string(), "--out", (dir / "a").string()});
  CHECK(a.code == 0);
  CHECK(a.summary["command"] == "simulate");
  CHECK(a.summary["exit_code"] == 0);
  const std::string csv = slurp(dir / "a" / "fdd.csv");
  CHECK(count_lines(csv) == 101);
  CHECK(csv.rfind("u=0\n", 0) == 0);
  CHECK(csv.find(',') == std::string::npos);
  CHECK(fs::exists(dir / "a" / "metadata.json"));

  const Run b = run({"simulate", cfg.string(), "--out", (dir / "b").string()});
  CHECK(b.code == 0);
  CHECK(slurp(dir / "b" / "fdd.csv") == csv);
  CHECK(slurp(dir / "b" / "metadata.json") == slurp(dir / "a" / "metadata.json"));
}

TEST_CASE("config errors exit 1 and name the field") {
  const fs::path dir = scratch("bad");
  std::string body = kMinimal;
  body.replace(body.find("\"n_replicates\": 100"), 19, "\"n_replicates\": -3");
  const fs::path cfg = write_config(dir, body);
  const Run r = run({"simulate", cfg.string(), "--out", (dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("n_replicates") != std::string::npos);
  CHECK(r.summary["field"] == "n_replicates");
  CHECK_FALSE(fs::exists(dir / "o" / "fdd.csv"));

  CHECK(run({"simulate", (dir / "missing.json").string()}).code == 1);
  CHECK(run({"nonsense"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("stationary window dump for a point mass law") {
  const fs::path dir = scratch("window");
  const fs::path cfg = write_config(dir, R"({
    "schema": 1, "seed": 7, "law": {"family": "point_mass", "value": 2.0},
    "kernel": {"type": "zero"}, "u_grid": [0], "n_replicates": 10, "window_c": 3
  })");
  const Run r = run({"stationary", cfg.string(), "--dump-window", "--out", dir.string()});
  CHECK(r.code == 0);
  std::istringstream in(slurp(dir / "window.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,point");
  std::vector<std::pair<long, double>> pts;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    pts.emplace_back(std::stol(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  REQUIRE(pts.size() >= 4);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].first == pts[i - 1].first + 1);
    CHECK(pts[i].second - pts[i - 1].second == doctest::Approx(2.0).epsilon(1e-12));
  }
  CHECK(pts.front().second < -3.0);
  CHECK(pts.back().second > 3.0);

  // Zero kernel: the value column is all 0.
  std::istringstream fdd(slurp(dir / "fdd.csv"));
  std::getline(fdd, line);
  while (std::getline(fdd, line)) CHECK(line == "0");
}

TEST_CASE("stationary truncation failure exits 2 with a report") {
  const fs::path dir = scratch("trunc");
  const fs::path cfg = write_config(dir, R"({
    "schema": 1, "seed": 1, "law": {"family": "exponential", "rate": 1.0},
    "kernel": {"type": "scaled_exp_decay", "eta": {"family": "point_mass", "value": 1}, "a": 1},
    "u_grid": [0], "n_replicates": 10, "tol": 1e-300
  })");
  const Run r = run({"stationary", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
  const json rep = json::parse(slurp(dir / "truncation.json"));
  CHECK(rep["error"] == "truncation");
  CHECK_FALSE(fs::exists(dir / "fdd.csv"));
}

TEST_CASE("converge exit codes") {
  const fs::path dir = scratch("converge");
  const fs::path heavy = write_config(dir, R"({
    "schema": 1, "seed": 3, "law": {"family": "exponential", "rate": 1.0},
    "kernel": {"type": "indicator", "eta": {"family": "pareto", "alpha": 0.8, "xm": 1}},
    "t_list": [5, 20], "u_grid": [0], "n_replicates": 200
  })");
  const Run h = run({"converge", heavy.string(), "--out", (dir / "h").string()});
  CHECK(h.code == 3);
  CHECK(h.summary["hypothesis_violation"] == true);
  const json rep = json::parse(slurp(dir / "h" / "converge.json"));
  CHECK(rep["warnings"].dump().find("E tau = inf") != std::string::npos);

  const fs::path zero = write_config(dir, R"({
    "schema": 1, "seed": 3, "law": {"family": "exponential", "rate": 1.0},
    "kernel": {"type": "zero"}, "t_list": [1, 5], "u_grid": [0, 1], "n_replicates": 200
  })");
  const Run z = run({"converge", zero.string(), "--out", (dir / "z").string()});
  CHECK(z.code == 0);
  CHECK(fs::exists(dir / "z" / "comparison_0.json"));
  CHECK(fs::exists(dir / "z" / "comparison_1.json"));
  CHECK(count_lines(slurp(dir / "z" / "summary.csv")) == 3);
}

TEST_CASE("converge rejects at t = 1 for the M/M/infinity config") {
  const fs::path dir = scratch("converge_t1");
  const fs::path cfg = write_config(dir, R"({
    "schema": 1, "seed": 12345, "law": {"family": "exponential", "rate": 1.0},
    "kernel": {"type": "indicator", "eta": {"family": "exponential", "rate": 1.0}},
    "t_list": [1], "u_grid": [0, 1, 5], "n_replicates": 10000, "alpha": 0.01,
    "n_permutations": 200
  })");
  const Run r = run({"converge", cfg.string(), "--out", dir.string()});
  CHECK(r.code == 2);
}

TEST_CASE("dri exit codes") {
  const fs::path dir = scratch("dri");
  auto with_kernel = [&](const std::string& name, const std::string& kernel) {
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    return write_config(sub, R"({"schema": 1, "seed": 5, "kernel": )" + kernel +
                                 R"(, "dri": {"k_max": 50, "grid_per_unit": 8, "n_mc": 4000}})");
  };
  const Run dec = run({"dri",
                       with_kernel("decay", R"({"type": "scaled_exp_decay",
                           "eta": {"family": "point_mass", "value": 1}, "a": 1})")
                           .string(),
                       "--out", (dir / "decay").string()});
  CHECK(dec.code == 0);
  CHECK(fs::exists(dir / "decay" / "dri_mean.json"));
  CHECK(fs::exists(dir / "decay" / "dri_path.json"));
  CHECK(count_lines(slurp(dir / "decay" / "dri.csv")) == 51);

  const Run spike = run({"dri",
                         with_kernel("spike", R"({"type": "spike_train",
                             "eta": {"family": "uniform", "lo": 0, "hi": 1}})")
                             .string(),
                         "--out", (dir / "spike").string()});
  CHECK(spike.code == 3);
  CHECK(spike.summary["path_verdict"] == "DivergentEvidence");
  CHECK(spike.summary["explanation"].get<std::string>().find("path criterion") !=
        std::string::npos);

  const Run heavy = run({"dri",
                         with_kernel("pareto", R"({"type": "indicator",
                             "eta": {"family": "pareto", "alpha": 0.8, "xm": 1}})")
                             .string(),
                         "--out", (dir / "pareto").string()});
  CHECK(heavy.code == 2);
}

TEST_CASE("pointprocess checks") {
  const fs::path dir = scratch("pointprocess");
  const std::string sizes = R"("pointprocess": {"n_windows": 20000, "n_realizations": 20000,
      "shift_windows": 20000, "laplace_n_mc": 20000})";
  const fs::path exp1 = write_config(dir, R"({"schema": 1, "seed": 11,
      "law": {"family": "exponential", "rate": 1.0}, )" + sizes + "}");
  const Run e = run({"pointprocess", exp1.string(), "--out", (dir / "e").string()});
  CHECK(e.code == 0);
  CHECK(e.summary["pass"] == true);

  const fs::path uni = write_config(dir, R"({"schema": 1, "seed": 11,
      "law": {"family": "uniform", "lo": 0, "hi": 1}, )" + sizes + "}");
  const Run u = run({"pointprocess", uni.string(), "--out", (dir / "u").string()});
  CHECK((u.code == 0 || u.code == 2));
  const json ru = json::parse(slurp(dir / "u" / "pointprocess.json"));
  CHECK(ru["overshoot"]["pass"] == true);

  const fs::path pm = write_config(dir, R"({"schema": 1, "seed": 11,
      "law": {"family": "point_mass", "value": 1}, )" + sizes + "}");
  const Run p = run({"pointprocess", pm.string(), "--out", (dir / "p").string()});
  CHECK(p.code == 3);
  const json rp = json::parse(slurp(dir / "p" / "pointprocess.json"));
  CHECK(rp["overshoot"]["lattice_warning"] == true);
  CHECK(rp["laplace"]["lattice_warning"] == true);
  CHECK(rp["warnings"].dump().find("lattice") != std::string::npos);
}

TEST_CASE("the installed binary returns the same exit codes") {
  const fs::path dir = scratch("binary");
  const fs::path cfg = write_config(dir, kMinimal);
  const std::string cmd = std::string(RPI_CLI_PATH) + " simulate " + cfg.string() + " --out " +
                          (dir / "o").string() + " > " + (dir / "stdout.txt").string() +
                          " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  const std::string out = slurp(dir / "stdout.txt");
  CHECK(count_lines(out) == 1);
  CHECK(json::parse(out)["exit_code"] == 0);

  const std::string bad = std::string(RPI_CLI_PATH) + " simulate " +
                          (dir / "nope.json").string() + " > /dev/null 2>&1";
  const int s2 = std::system(bad.c_str());
  REQUIRE(WIFEXITED(s2));
  CHECK(WEXITSTATUS(s2) == 1);
}
