#include <CLI11.hpp>

#include "app/commands.hpp"
#include "msseg/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-contrast lesion segmentation with sequence dropout"};
    app.set_version_flag("--version", std::string("msseg ") + msseg::kVersion);
    app.require_subcommand(1);

    std::string config, out, data, checkpoint, pred, gt_a, gt_b;
    msseg::app::CliOverrides flags;
    std::uint64_t seed_value = 0;
    int connectivity_value = 26;
    int count_value = 1;
    std::string missing_value, subsets_value;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON config file");
        cmd->add_option("--out", out, "output directory")->required();
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { flags.seed = v; }, "override every seed");
    };

    auto* phantom = app.add_subcommand("phantom", "generate synthetic multi-contrast cases");
    add_common(phantom);
    phantom->add_option_function<int>(
        "--count", [&](int v) { flags.count = v; }, "number of cases to generate");

    auto* train = app.add_subcommand("train", "train a network on a case directory");
    add_common(train);
    train->add_option("--data", data, "directory of cases")->required();
    train->add_flag_callback(
        "--no-seqdrop", [&] { flags.no_seqdrop = true; },
        "disable sequence dropout (baseline arm)");

    auto* predict = app.add_subcommand("predict", "segment one case with a trained checkpoint");
    add_common(predict);
    predict->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    predict->add_option("--data", data, "case directory (stack.json inside)")->required();
    predict->add_option_function<std::string>(
        "--missing", [&](const std::string& v) { flags.missing = v; },
        "comma list of channels to treat as unavailable (zero-filled)");

    auto* evaluate = app.add_subcommand("evaluate", "score a prediction against two rater masks");
    add_common(evaluate);
    evaluate->add_option("--pred", pred, "predicted mask header (.json)")->required();
    evaluate->add_option("--gt-a", gt_a, "rater A mask header (.json)")->required();
    evaluate->add_option("--gt-b", gt_b, "rater B mask header (.json)")->required();
    evaluate->add_option_function<int>(
        "--connectivity", [&](int v) { flags.connectivity = v; },
        "component connectivity: 6, 18 or 26");

    auto* ablate = app.add_subcommand("ablate", "evaluate a checkpoint over channel subsets");
    add_common(ablate);
    ablate->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
    ablate->add_option("--data", data, "directory of cases")->required();
    ablate->add_option_function<std::string>(
        "--subsets", [&](const std::string& v) { flags.subsets = v; },
        "';'-separated '+'-joined channel subsets, or 'standard' / 'all'");
    ablate->add_option_function<int>(
        "--connectivity", [&](int v) { flags.connectivity = v; },
        "component connectivity: 6, 18 or 26");

    CLI11_PARSE(app, argc, argv);

    if (phantom->parsed()) return msseg::app::cmd_phantom(config, out, flags);
    if (train->parsed()) return msseg::app::cmd_train(config, data, out, flags);
    if (predict->parsed()) return msseg::app::cmd_predict(config, checkpoint, data, out, flags);
    if (evaluate->parsed()) return msseg::app::cmd_evaluate(config, pred, gt_a, gt_b, out, flags);
    if (ablate->parsed()) return msseg::app::cmd_ablate(config, checkpoint, data, out, flags);
    return 1;
}
