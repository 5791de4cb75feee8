#include "rpi/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "rpi/errors.hpp"

namespace rpi {

namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void allow_keys(const Json& j, const std::string& path, std::set<std::string> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

const Json& field(const Json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "required");
  return j.at(key);
}

double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double positive_double(const Json& j, const std::string& path) {
  const double v = as_double(j, path);
  if (!(v > 0)) throw ConfigError(path, "must be > 0");
  return v;
}

/// Nonnegative integer; integral floats such as 1e5 are accepted.
std::uint64_t as_count(const Json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) throw ConfigError(path, "must be >= 0");
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!(v >= 0)) throw ConfigError(path, "must be >= 0");
    if (v != std::floor(v) || v > 9.0e15) throw ConfigError(path, "expected an integer");
    return static_cast<std::uint64_t>(v);
  }
  throw ConfigError(path, "expected an integer");
}

std::size_t positive_count(const Json& j, const std::string& path) {
  if (j.is_number() && !(j.get<double>() >= 1)) throw ConfigError(path, "must be >= 1");
  const auto v = as_count(j, path);
  if (v < 1) throw ConfigError(path, "must be >= 1");
  return static_cast<std::size_t>(v);
}

std::vector<double> double_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], index(path, i)));
  return out;
}

std::shared_ptr<const StepTable> parse_table(const Json& j, const std::string& path) {
  StepTable t;
  t.breakpoints = double_list(field(j, path, "breakpoints"), join(path, "breakpoints"));
  t.values = double_list(field(j, path, "values"), join(path, "values"));
  try {
    t.validate();
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  return std::make_shared<const StepTable>(std::move(t));
}

}  // namespace

LawParams parse_law(const Json& j, const std::string& path) {
  require_object(j, path);
  const Json& fam = field(j, path, "family");
  if (!fam.is_string()) throw ConfigError(join(path, "family"), "expected a string");
  const std::string family = fam.get<std::string>();
  auto num = [&](const char* key) { return as_double(field(j, path, key), join(path, key)); };

  LawParams params;
  if (family == "exponential") {
    allow_keys(j, path, {"family", "rate"});
    params = Exponential{num("rate")};
  } else if (family == "gamma") {
    allow_keys(j, path, {"family", "shape", "scale"});
    params = GammaLaw{num("shape"), num("scale")};
  } else if (family == "uniform") {
    allow_keys(j, path, {"family", "lo", "hi"});
    params = UniformLaw{num("lo"), num("hi")};
  } else if (family == "lognormal") {
    allow_keys(j, path, {"family", "mu", "sigma"});
    params = LogNormal{num("mu"), num("sigma")};
  } else if (family == "point_mass") {
    allow_keys(j, path, {"family", "value"});
    params = PointMass{num("value")};
  } else if (family == "finite_discrete") {
    allow_keys(j, path, {"family", "values", "probs"});
    const auto values = double_list(field(j, path, "values"), join(path, "values"));
    const auto probs = double_list(field(j, path, "probs"), join(path, "probs"));
    if (values.size() != probs.size())
      throw ConfigError(join(path, "probs"), "must have the same length as values");
    FiniteDiscrete fd;
    for (std::size_t i = 0; i < values.size(); ++i) fd.atoms.push_back({values[i], probs[i]});
    params = fd;
  } else if (family == "pareto") {
    allow_keys(j, path, {"family", "alpha", "xm"});
    params = Pareto{num("alpha"), num("xm")};
  } else if (family == "normal") {
    allow_keys(j, path, {"family", "mean", "sd"});
    params = Normal{num("mean"), num("sd")};
  } else {
    throw ConfigError(join(path, "family"), "unknown family '" + family + "'");
  }
  try {
    Law check(params);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  return params;
}

KernelVariant parse_kernel(const Json& j, const std::string& path) {
  require_object(j, path);
  const Json& ty = field(j, path, "type");
  if (!ty.is_string()) throw ConfigError(join(path, "type"), "expected a string");
  const std::string type = ty.get<std::string>();
  auto eta = [&] { return Law(parse_law(field(j, path, "eta"), join(path, "eta"))); };

  if (type == "zero") {
    allow_keys(j, path, {"type"});
    return DeterministicTable{std::make_shared<const StepTable>(StepTable{{0.0}, {0.0}})};
  }
  if (type == "deterministic_table") {
    allow_keys(j, path, {"type", "breakpoints", "values"});
    return DeterministicTable{parse_table(j, path)};
  }
  if (type == "indicator") {
    allow_keys(j, path, {"type", "eta"});
    return Indicator{eta()};
  }
  if (type == "scaled_exp_decay") {
    allow_keys(j, path, {"type", "eta", "a"});
    return ScaledExpDecay{eta(), positive_double(field(j, path, "a"), join(path, "a"))};
  }
  if (type == "scaled_table") {
    allow_keys(j, path, {"type", "eta", "breakpoints", "values"});
    return ScaledTable{eta(), parse_table(j, path)};
  }
  if (type == "spike_train") {
    allow_keys(j, path, {"type", "eta"});
    return SpikeTrain{eta()};
  }
  if (type == "birth_death") {
    allow_keys(j, path, {"type", "initial", "birth_rates", "death_rates", "state_cap",
                         "max_jumps", "max_time"});
    BirthDeath bd;
    bd.initial = static_cast<int>(as_count(field(j, path, "initial"), join(path, "initial")));
    bd.birth_rates = double_list(field(j, path, "birth_rates"), join(path, "birth_rates"));
    bd.death_rates = double_list(field(j, path, "death_rates"), join(path, "death_rates"));
    bd.state_cap =
        static_cast<int>(positive_count(field(j, path, "state_cap"), join(path, "state_cap")));
    if (j.contains("max_jumps"))
      bd.max_jumps = positive_count(j["max_jumps"], join(path, "max_jumps"));
    if (j.contains("max_time"))
      bd.max_time = positive_double(j["max_time"], join(path, "max_time"));
    return bd;
  }
  throw ConfigError(join(path, "type"), "unknown kernel type '" + type + "'");
}

ExperimentConfig parse_config(const Json& doc) {
  require_object(doc, "");
  allow_keys(doc, "", {"schema", "seed", "law", "kernel", "t", "t_list", "u_grid",
                       "n_replicates", "alpha", "tol", "c_max", "window_c",
                       "n_permutations", "dri", "pointprocess", "output_dir"});
  ExperimentConfig cfg;
  cfg.source = doc;

  const Json& schema = field(doc, "", "schema");
  if (!schema.is_number_integer() || schema.get<long long>() != 1)
    throw ConfigError("schema", "unsupported schema version (expected 1)");
  cfg.seed = as_count(field(doc, "", "seed"), "seed");

  if (doc.contains("law")) {
    const LawParams p = parse_law(doc["law"], "law");
    try {
      cfg.law.emplace(p);
    } catch (const std::exception& e) {
      throw ConfigError("law", e.what());
    }
  }
  if (doc.contains("kernel")) {
    const KernelVariant v = parse_kernel(doc["kernel"], "kernel");
    try {
      cfg.kernel.emplace(v);
    } catch (const std::exception& e) {
      throw ConfigError("kernel", e.what());
    }
  }

  if (doc.contains("t")) {
    cfg.t = as_double(doc["t"], "t");
    if (*cfg.t < 0) throw ConfigError("t", "must be >= 0");
  }
  if (doc.contains("t_list")) {
    cfg.t_list = double_list(doc["t_list"], "t_list");
    for (std::size_t i = 0; i < cfg.t_list.size(); ++i)
      if (cfg.t_list[i] < 0) throw ConfigError(index("t_list", i), "must be >= 0");
  }
  if (doc.contains("u_grid")) {
    cfg.u_grid = double_list(doc["u_grid"], "u_grid");
    if (cfg.u_grid.empty()) throw ConfigError("u_grid", "must not be empty");
    if (!std::is_sorted(cfg.u_grid.begin(), cfg.u_grid.end()))
      throw ConfigError("u_grid", "must be sorted ascending");
  }
  if (doc.contains("n_replicates"))
    cfg.n_replicates = positive_count(doc["n_replicates"], "n_replicates");
  if (doc.contains("alpha")) {
    cfg.alpha = as_double(doc["alpha"], "alpha");
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) throw ConfigError("alpha", "must lie in (0, 1)");
  }
  if (doc.contains("tol")) cfg.tol = positive_double(doc["tol"], "tol");
  if (doc.contains("c_max")) cfg.c_max = positive_double(doc["c_max"], "c_max");
  if (doc.contains("window_c")) cfg.window_c = positive_double(doc["window_c"], "window_c");
  if (doc.contains("n_permutations")) {
    cfg.n_permutations = positive_count(doc["n_permutations"], "n_permutations");
    if (cfg.n_permutations < 19) throw ConfigError("n_permutations", "must be >= 19");
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir", "expected a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }

  if (doc.contains("dri")) {
    const Json& d = doc["dri"];
    require_object(d, "dri");
    allow_keys(d, "dri", {"k_max", "grid_per_unit", "n_mc"});
    if (d.contains("k_max")) cfg.dri.k_max = positive_count(d["k_max"], "dri.k_max");
    if (d.contains("grid_per_unit")) {
      cfg.dri.grid_per_unit = positive_count(d["grid_per_unit"], "dri.grid_per_unit");
      if (cfg.dri.grid_per_unit < 2) throw ConfigError("dri.grid_per_unit", "must be >= 2");
    }
    if (d.contains("n_mc")) {
      cfg.dri.n_mc = positive_count(d["n_mc"], "dri.n_mc");
      if (cfg.dri.n_mc < 2) throw ConfigError("dri.n_mc", "must be >= 2");
    }
  }

  if (doc.contains("pointprocess")) {
    const Json& p = doc["pointprocess"];
    const std::string base = "pointprocess";
    require_object(p, base);
    allow_keys(p, base, {"intervals", "n_windows", "horizon", "n_realizations", "shift",
                         "shift_windows", "laplace_h", "laplace_t", "laplace_n_mc"});
    auto& pp = cfg.pointprocess;
    if (p.contains("intervals")) {
      const Json& iv = p["intervals"];
      const std::string ip = join(base, "intervals");
      if (!iv.is_array()) throw ConfigError(ip, "expected an array of [a, b] pairs");
      pp.intervals.clear();
      for (std::size_t i = 0; i < iv.size(); ++i) {
        const auto ab = double_list(iv[i], index(ip, i));
        if (ab.size() != 2 || ab[1] < ab[0])
          throw ConfigError(index(ip, i), "expected [a, b] with a <= b");
        pp.intervals.emplace_back(ab[0], ab[1]);
      }
    }
    auto count2 = [&](const char* key, std::size_t& out) {
      if (!p.contains(key)) return;
      out = positive_count(p[key], join(base, key));
      if (out < 2) throw ConfigError(join(base, key), "must be >= 2");
    };
    count2("n_windows", pp.n_windows);
    count2("n_realizations", pp.n_realizations);
    count2("shift_windows", pp.shift_windows);
    count2("laplace_n_mc", pp.laplace_n_mc);
    if (p.contains("horizon")) pp.horizon = positive_double(p["horizon"], join(base, "horizon"));
    if (p.contains("shift")) pp.shift = as_double(p["shift"], join(base, "shift"));
    if (p.contains("laplace_t")) {
      pp.laplace_t = as_double(p["laplace_t"], join(base, "laplace_t"));
      if (pp.laplace_t < 0) throw ConfigError(join(base, "laplace_t"), "must be >= 0");
    }
    if (p.contains("laplace_h")) {
      const std::string hp = join(base, "laplace_h");
      require_object(p["laplace_h"], hp);
      allow_keys(p["laplace_h"], hp, {"breakpoints", "values"});
      const auto h = parse_table(p["laplace_h"], hp);
      if (!h->nonnegative()) throw ConfigError(hp, "must be nonnegative");
      if (!h->support_end()) throw ConfigError(hp, "must have compact support");
      pp.laplace_h = *h;
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace rpi
