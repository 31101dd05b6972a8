#include "app/dataset.hpp"

#include <algorithm>

#include "msseg/labels.hpp"

namespace msseg::app {

std::vector<CasePaths> discover_cases(const std::filesystem::path& root) {
    require(std::filesystem::exists(root), "data directory not found: " + root.string());
    std::vector<CasePaths> cases;
    if (std::filesystem::exists(root / "stack.json")) {
        cases.push_back({root.filename().string(), root});
        return cases;
    }
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "stack.json"))
            cases.push_back({entry.path().filename().string(), entry.path()});
    }
    std::sort(cases.begin(), cases.end(),
              [](const CasePaths& a, const CasePaths& b) { return a.id < b.id; });
    require(!cases.empty(), "no cases (directories with stack.json) found under " + root.string());
    return cases;
}

MultiChannelVolume<double> load_normalized_stack(const std::filesystem::path& case_dir) {
    return normalize(read_stack<double>(case_dir));
}

BinaryMask load_mask(const std::filesystem::path& json_path) {
    return volume_to_mask(read_volume<double>(json_path));
}

train::TrainCase<double> load_train_case(const CasePaths& paths) {
    train::TrainCase<double> c;
    c.id = paths.id;
    c.input = load_normalized_stack(paths.dir);
    const BinaryMask gt_a = load_mask(paths.dir / "gt_a.json");
    const BinaryMask gt_b = load_mask(paths.dir / "gt_b.json");
    c.labels = merge_masks<double>(gt_a, gt_b);
    return c;
}

}  // namespace msseg::app
