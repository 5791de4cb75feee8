#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rpi/diagnostics.hpp"
#include "rpi/process.hpp"
#include "rpi/renewal.hpp"

namespace rpi {

/// Shortest round-trip representation ("0", "1.5", "inf").
std::string format_shortest(double x);
/// 17 significant digits, locale independent.
std::string format_g17(double x);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// One row per replicate; header "u=<value>" per column.
std::string fdd_csv(const FddMatrix& m);
/// "index,point" rows in index order.
std::string window_csv(const StationaryWindow& w);
/// "k,term,term_se,partial_sum".
std::string dri_csv(const DriReport& mean, const DriReport& path);

nlohmann::ordered_json to_json(const TestResult& r);
nlohmann::ordered_json to_json(const DriReport& r);
nlohmann::ordered_json to_json(const ComparisonReport& r);

/// Non-finite numbers become the strings "inf", "-inf", "nan" so reports stay
/// lossless.
nlohmann::ordered_json json_number(double x);

}  // namespace rpi
