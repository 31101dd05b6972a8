#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "msseg/train/trainer.hpp"
#include "msseg/volume_io.hpp"

namespace msseg::app {

/// A case directory holds `stack.json` + one json/raw pair per channel plus
/// the two rater masks `gt_a` / `gt_b`.
struct CasePaths {
    std::string id;
    std::filesystem::path dir;
};

/// Case discovery: the data root is either itself a case (has stack.json)
/// or a directory of case subdirectories, returned sorted by name.
std::vector<CasePaths> discover_cases(const std::filesystem::path& root);

/// Load a case for training/evaluation: per-channel min-max normalization
/// of the stack and the merged two-rater label volume.
train::TrainCase<double> load_train_case(const CasePaths& paths);

/// Load only the normalized input stack.
MultiChannelVolume<double> load_normalized_stack(const std::filesystem::path& case_dir);

/// Load one rater mask (values must be exactly 0/1).
BinaryMask load_mask(const std::filesystem::path& json_path);

}  // namespace msseg::app
