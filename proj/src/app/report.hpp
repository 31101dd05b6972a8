#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msseg/metrics.hpp"

namespace msseg::app {

/// Undefined metrics are "NA" in CSV and null in JSON; they are never NaN.
std::string metric_cell(const std::optional<double>& v);

nlohmann::json scores_to_json(const metrics::RaterScores& s);

nlohmann::json report_to_json(const std::string& case_id, const metrics::MetricsReport& r);

/// CSV with one row per (case, rater in {A, B, avg}) and the Table-3 column
/// set DSC, Jaccard, PPV, TPR, LFPR, LTPR.
void write_report_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, metrics::MetricsReport>>& rows);

}  // namespace msseg::app
