#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrregger/estimators.hpp"
#include "mrregger/simulation.hpp"

namespace mrregger {

inline constexpr const char* kSchemaVersion = "mr-regger/1";

/// Shortest decimal string that round-trips to the same double.
std::string format_number(double x);
std::string format_optional(const std::optional<double>& x);

nlohmann::ordered_json to_json(const EstimateReport& report);

/// Line-oriented key=value block; absent optional fields are written as NA.
std::string to_key_value(const EstimateReport& report);

std::string estimate_tsv_header();
std::string to_tsv_row(const EstimateReport& report);

/// One configuration point of a simulation sweep and its study results.
struct SweepPoint {
  sim::SimConfig cfg;
  sim::StudyResult result;
};

/// One row per (point, method) with the summary metrics.
std::string metrics_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans);

/// Long format: one row per (point, replicate, method).
std::string reps_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans);

/// Plot-ready long table: h2_x, method, metric, value.
std::string plot_tsv(const std::vector<SweepPoint>& points, const std::vector<sim::MethodPlan>& plans);

}  // namespace mrregger
