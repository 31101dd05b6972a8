#include "app/report.hpp"

#include <fstream>
#include <sstream>

#include "msseg/volume_io.hpp"

namespace msseg::app {

std::string metric_cell(const std::optional<double>& v) {
    if (!v) return "NA";
    std::ostringstream s;
    s.precision(6);
    s << std::fixed << *v;
    return s.str();
}

nlohmann::json scores_to_json(const metrics::RaterScores& s) {
    nlohmann::json j;
    const auto names = metrics::RaterScores::names();
    const auto values = s.values();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (values[i])
            j[names[i]] = *values[i];
        else
            j[names[i]] = nullptr;
    }
    return j;
}

nlohmann::json report_to_json(const std::string& case_id, const metrics::MetricsReport& r) {
    return nlohmann::json{{"case", case_id},
                          {"connectivity", r.connectivity},
                          {"conventions", r.conventions},
                          {"rater_a", scores_to_json(r.rater_a)},
                          {"rater_b", scores_to_json(r.rater_b)},
                          {"average", scores_to_json(r.average)}};
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, metrics::MetricsReport>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path.string());
    out << "case,rater,DSC,Jaccard,PPV,TPR,LFPR,LTPR\n";
    auto emit = [&](const std::string& case_id, const char* rater,
                    const metrics::RaterScores& s) {
        out << case_id << "," << rater;
        for (const auto& v : s.values()) out << "," << metric_cell(v);
        out << "\n";
    };
    for (const auto& [case_id, r] : rows) {
        emit(case_id, "A", r.rater_a);
        emit(case_id, "B", r.rater_b);
        emit(case_id, "avg", r.average);
    }
    out.flush();
    require(out.good(), "failed writing file: " + path.string());
}

}  // namespace msseg::app
