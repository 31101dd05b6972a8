#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "app/config.hpp"

namespace msseg::app {

/// Flag-level overrides shared across subcommands; every set field wins
/// over the corresponding config value.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> connectivity;
    bool no_seqdrop = false;
    std::optional<std::string> missing;  // comma list of channel names
    std::optional<std::string> subsets;  // semicolon list of '+'-joined names
    std::optional<int> count;            // phantom case count
};

/// Each command returns a process exit code: 0 iff every declared output was
/// written. Errors print to stderr.
int cmd_phantom(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const CliOverrides& flags);

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& data_dir,
              const std::filesystem::path& out_dir, const CliOverrides& flags);

int cmd_predict(const std::filesystem::path& config_path,
                const std::filesystem::path& checkpoint_dir,
                const std::filesystem::path& case_dir, const std::filesystem::path& out_dir,
                const CliOverrides& flags);

int cmd_evaluate(const std::filesystem::path& config_path, const std::filesystem::path& pred_path,
                 const std::filesystem::path& gt_a_path, const std::filesystem::path& gt_b_path,
                 const std::filesystem::path& out_dir, const CliOverrides& flags);

int cmd_ablate(const std::filesystem::path& config_path,
               const std::filesystem::path& checkpoint_dir, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir, const CliOverrides& flags);

}  // namespace msseg::app
