#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rpi/config.hpp"
#include "rpi/errors.hpp"
#include "rpi/io.hpp"

using namespace rpi;
using nlohmann::ordered_json;

namespace {

ordered_json minimal() {
  return ordered_json::parse(R"({
    "schema": 1, "seed": 7,
    "law": {"family": "exponential", "rate": 1.0},
    "kernel": {"type": "indicator", "eta": {"family": "exponential", "rate": 1.0}},
    "t": 30, "u_grid": [0], "n_replicates": 100
  })");
}

std::string field_of(const ordered_json& doc) {
  try {
    (void)parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config parses") {
  const ExperimentConfig c = parse_config(minimal());
  CHECK(c.seed == 7);
  CHECK(c.law->mean() == 1.0);
  CHECK(c.kernel->type_name() == "indicator");
  CHECK(*c.t == 30.0);
  CHECK(c.u_grid == std::vector<double>{0.0});
  CHECK(c.n_replicates == 100);
  CHECK(c.alpha == 0.01);
  CHECK(c.n_permutations == 200);
}

TEST_CASE("every kernel type parses") {
  const char* kernels[] = {
      R"({"type": "zero"})",
      R"({"type": "deterministic_table", "breakpoints": [0, 1], "values": [1, 0]})",
      R"({"type": "indicator", "eta": {"family": "pareto", "alpha": 0.8, "xm": 1}})",
      R"({"type": "scaled_exp_decay", "eta": {"family": "normal", "mean": 0, "sd": 1}, "a": 1})",
      R"({"type": "scaled_table", "eta": {"family": "point_mass", "value": 2},
          "breakpoints": [0, 2], "values": [1, 0]})",
      R"({"type": "spike_train", "eta": {"family": "uniform", "lo": 0, "hi": 1}})",
      R"({"type": "birth_death", "initial": 1, "birth_rates": [0], "death_rates": [1],
          "state_cap": 1})",
  };
  for (const char* k : kernels) {
    CAPTURE(k);
    ordered_json doc = minimal();
    doc["kernel"] = ordered_json::parse(k);
    CHECK_NOTHROW(parse_config(doc));
  }
}

TEST_CASE("every interarrival family parses") {
  const char* laws[] = {
      R"({"family": "gamma", "shape": 2, "scale": 0.5})",
      R"({"family": "uniform", "lo": 0, "hi": 2})",
      R"({"family": "lognormal", "mu": 0, "sigma": 1})",
      R"({"family": "point_mass", "value": 2})",
      R"({"family": "finite_discrete", "values": [1, 2], "probs": [0.5, 0.5]})",
  };
  for (const char* l : laws) {
    CAPTURE(l);
    ordered_json doc = minimal();
    doc["law"] = ordered_json::parse(l);
    CHECK_NOTHROW(parse_config(doc));
  }
}

TEST_CASE("schema violations name the field") {
  ordered_json d = minimal();
  d["n_replicates"] = -5;
  CHECK(field_of(d) == "n_replicates");

  d = minimal();
  d.erase("seed");
  CHECK(field_of(d) == "seed");

  d = minimal();
  d["schema"] = 2;
  CHECK(field_of(d) == "schema");

  d = minimal();
  d["bogus"] = 1;
  CHECK(field_of(d) == "bogus");

  d = minimal();
  d["law"]["rate"] = -1.0;
  CHECK(field_of(d).rfind("law", 0) == 0);

  d = minimal();
  d["law"] = ordered_json::parse(R"({"family": "pareto", "alpha": 2, "xm": 1})");
  CHECK(field_of(d).rfind("law", 0) == 0);

  d = minimal();
  d["kernel"]["eta"]["family"] = "cauchy";
  CHECK(field_of(d).rfind("kernel.eta", 0) == 0);

  d = minimal();
  d["u_grid"] = ordered_json::parse("[1, 0]");
  CHECK(field_of(d) == "u_grid");

  d = minimal();
  d["dri"] = ordered_json::parse(R"({"grid_per_unit": 1})");
  CHECK(field_of(d) == "dri.grid_per_unit");

  d = minimal();
  d["n_replicates"] = 2.5;
  CHECK(field_of(d) == "n_replicates");
  d["n_replicates"] = 20.0;
  CHECK(field_of(d) == "<accepted>");
}

TEST_CASE("number formatting") {
  CHECK(format_shortest(0.1) == "0.1");
  CHECK(format_shortest(1.0) == "1");
  CHECK(format_g17(0.1) == "0.10000000000000001");
  CHECK(format_g17(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_g17(std::nan("")) == "nan");
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_number(2.5) == 2.5);
}

TEST_CASE("fdd csv layout") {
  FddMatrix m;
  m.u_grid = {0.0, 1.5};
  m.rows = 2;
  m.data = {0.0, 1.0, 2.0, 0.25};
  CHECK(fdd_csv(m) == "u=0,u=1.5\n0,1\n2,0.25\n");
}

TEST_CASE("atomic writes leave no temporaries") {
  const auto dir = std::filesystem::temp_directory_path() / "rpi_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_file_atomic(dir / "a.txt", "hello\n");
  write_file_atomic(dir / "a.txt", "again\n");
  CHECK(slurp(dir / "a.txt") == "again\n");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
  std::filesystem::remove_all(dir.parent_path());
}

TEST_CASE("report serialization keeps key order and finite numbers") {
  DriReport r;
  r.terms = {1.0, 0.5};
  r.term_se = {0.0, 0.1};
  classify_dri(r);
  const ordered_json j = to_json(r);
  CHECK(j.begin().key() == "criterion");
  CHECK(j["terms"].size() == 2);
  CHECK(j.dump() == to_json(r).dump());

  TestResult t;
  t.statistic = std::numeric_limits<double>::infinity();
  t.p_value = 0.0;
  t.method = TestMethod::ChiSquare;
  CHECK(to_json(t)["statistic"] == "inf");
}
