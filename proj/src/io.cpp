#include "rpi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>
#include <unistd.h>

namespace rpi {

namespace {

std::string chars(double x, bool g17) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = g17 ? std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17)
                       : std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json number_list(const std::vector<double>& xs) {
  auto a = nlohmann::ordered_json::array();
  for (double x : xs) a.push_back(json_number(x));
  return a;
}

}  // namespace

std::string format_shortest(double x) { return chars(x, false); }
std::string format_g17(double x) { return chars(x, true); }

nlohmann::ordered_json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_shortest(x);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string fdd_csv(const FddMatrix& m) {
  std::string s;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (c) s += ',';
    s += "u=" + format_shortest(m.u_grid[c]);
  }
  s += '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) s += ',';
      s += format_g17(m.at(r, c));
    }
    s += '\n';
  }
  return s;
}

std::string window_csv(const StationaryWindow& w) {
  std::string s = "index,point\n";
  for (long k = w.first_index(); k <= w.last_index(); ++k)
    s += std::to_string(k) + "," + format_g17(w.at(k)) + "\n";
  return s;
}

std::string dri_csv(const DriReport& mean, const DriReport& path) {
  std::string s = "k,mean_term,mean_se,mean_partial_sum,path_term,path_se,path_partial_sum\n";
  const std::size_t n = std::max(mean.terms.size(), path.terms.size());
  auto cell = [](const std::vector<double>& v, std::size_t k) {
    return k < v.size() ? format_g17(v[k]) : std::string();
  };
  for (std::size_t k = 0; k < n; ++k) {
    s += std::to_string(k) + "," + cell(mean.terms, k) + "," + cell(mean.term_se, k) + "," +
         cell(mean.partial_sums, k) + "," + cell(path.terms, k) + "," +
         cell(path.term_se, k) + "," + cell(path.partial_sums, k) + "\n";
  }
  return s;
}

nlohmann::ordered_json to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["method"] = to_string(r.method);
  j["statistic"] = json_number(r.statistic);
  j["p_value"] = json_number(r.p_value);
  j["n"] = r.n;
  j["m"] = r.m;
  if (r.method == TestMethod::EnergyPermutation) {
    j["n_permutations"] = r.dof;
    j["subsampled"] = r.subsampled;
  } else if (r.method == TestMethod::ChiSquare ||
             r.method == TestMethod::ChiSquareHomogeneity) {
    j["dof"] = r.dof;
  }
  return j;
}

nlohmann::ordered_json to_json(const DriReport& r) {
  nlohmann::ordered_json j;
  j["criterion"] = to_string(r.criterion);
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  j["k_max"] = r.k_max;
  j["n_mc"] = r.n_mc;
  if (r.criterion == DriCriterion::Mean) j["grid_per_unit"] = r.grid_per_unit;
  j["log_slope"] = json_number(r.log_slope);
  j["fitted_ratio"] = r.fitted_ratio ? json_number(*r.fitted_ratio) : nullptr;
  j["remainder_estimate"] =
      r.remainder_estimate ? json_number(*r.remainder_estimate) : nullptr;
  j["terms"] = number_list(r.terms);
  j["term_se"] = number_list(r.term_se);
  j["partial_sums"] = number_list(r.partial_sums);
  return j;
}

nlohmann::ordered_json to_json(const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["t"] = json_number(r.t);
  j["u_grid"] = number_list(r.u_grid);
  j["alpha"] = r.alpha;
  j["ks_level"] = r.ks_level;
  j["energy_level"] = r.energy_level;
  auto ks = nlohmann::ordered_json::array();
  for (const auto& k : r.ks) ks.push_back(to_json(k));
  j["ks"] = ks;
  j["energy"] = to_json(r.energy);
  j["reject"] = r.reject;
  j["note"] = r.note;
  return j;
}

}  // namespace rpi
