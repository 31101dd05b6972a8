#include "app/commands.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "app/dataset.hpp"
#include "app/report.hpp"
#include "msseg/net/checkpoint.hpp"
#include "msseg/net/predict.hpp"
#include "msseg/version.hpp"

namespace msseg::app {

namespace {

using nlohmann::json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Shared manifest writer. Returns 0 iff every declared output exists.
int finish_run(const std::filesystem::path& out_dir, const std::string& command,
               const AppConfig& cfg, std::uint64_t seed, const json& inputs,
               const std::vector<std::filesystem::path>& outputs, const std::string& started,
               const json& extra = json()) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["seed"] = seed;
    manifest["config"] = config_to_json(cfg);
    manifest["inputs"] = inputs;
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back(o.string());
    manifest["outputs"] = outs;
    manifest["started"] = started;
    manifest["finished"] = utc_now();
    if (!extra.is_null()) manifest["history"] = extra;
    detail::write_json_file(out_dir / "run.json", manifest);

    for (const auto& o : outputs) {
        if (!std::filesystem::exists(o)) {
            std::cerr << "error: declared output missing: " << o.string() << "\n";
            return 1;
        }
    }
    return 0;
}

void apply_common_overrides(AppConfig& cfg, const CliOverrides& flags) {
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.phantom.seed = *flags.seed;
    }
    if (flags.connectivity) cfg.connectivity = *flags.connectivity;
    if (flags.no_seqdrop) cfg.seqdrop_enabled = false;
    if (flags.count) cfg.phantom_count = *flags.count;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (auto b = item.find_first_not_of(" \t"); b != std::string::npos) {
            const auto e = item.find_last_not_of(" \t");
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

std::set<std::string> parse_missing(const std::optional<std::string>& missing,
                                    const std::vector<std::string>& channel_names) {
    std::set<std::string> out;
    if (!missing || *missing == "none" || missing->empty()) return out;
    for (const auto& name : split_list(*missing, ',')) {
        require(std::find(channel_names.begin(), channel_names.end(), name) !=
                    channel_names.end(),
                "--missing: unknown channel '" + name + "'");
        out.insert(name);
    }
    return out;
}

/// Build the network input for a case given the available channel set:
/// available channels are read and normalized, the rest are zero volumes.
MultiChannelVolume<double> load_masked_stack(const std::filesystem::path& case_dir,
                                             const std::vector<std::string>& channel_names,
                                             const std::set<std::string>& available) {
    require(!available.empty(), "no channels left: at least one channel must be available");
    std::vector<Volume<double>> channels;
    Dims3 dims;
    bool have_dims = false;
    for (const auto& name : channel_names) {
        if (available.count(name)) {
            Volume<double> v = normalize(read_volume<double>(case_dir / (name + ".json")));
            require(v.name == name, "channel file " + (case_dir / (name + ".json")).string() +
                                        " holds channel '" + v.name + "'");
            if (have_dims)
                require(v.dims == dims, "channel '" + name + "' dims differ within case");
            dims = v.dims;
            have_dims = true;
            channels.push_back(std::move(v));
        }
    }
    require(have_dims, "no available channels could be read from " + case_dir.string());
    // Insert zero volumes for the masked-out channels, in order.
    std::vector<Volume<double>> full;
    std::size_t next_read = 0;
    for (const auto& name : channel_names) {
        if (available.count(name))
            full.push_back(std::move(channels[next_read++]));
        else
            full.push_back(zero_like<double>(dims, name));
    }
    MultiChannelVolume<double> stack(std::move(full));
    // mask_missing is idempotent here; it re-asserts the deployment rule.
    return mask_missing(stack, available);
}

json preserved_log_to_json(const std::vector<train::PreservedRecord>& log) {
    json out = json::array();
    for (const auto& rec : log)
        out.push_back({{"step", rec.step},
                       {"sample", rec.sample},
                       {"case", rec.case_id},
                       {"preserved", rec.preserved}});
    return out;
}

struct SubsetSpec {
    std::string label;               // e.g. "T2+FLAIR" or "all"
    std::set<std::string> available;
};

std::string join_names(const std::vector<std::string>& names, const char* sep) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += sep;
        out += n;
    }
    return out;
}

/// Expand a subset spec string into available-channel sets. Grammar:
///   "standard"          full stack + each single-missing + the classic pairs
///                       (T1+PD, T2+FLAIR, T1+T2, T1+FLAIR, FLAIR) when the
///                       model has exactly those four channels
///   "all"               full stack + each single-missing
///   "T1+PD;FLAIR;..."   explicit '+'-joined channel lists, ';'-separated
/// Duplicates are removed with a warning.
std::vector<SubsetSpec> expand_subsets(const std::string& spec,
                                       const std::vector<std::string>& channels) {
    std::vector<SubsetSpec> result;
    auto add = [&](SubsetSpec s) {
        for (const auto& existing : result) {
            if (existing.available == s.available) {
                std::cerr << "warning: duplicate subset '" << s.label << "' ignored\n";
                return;
            }
        }
        result.push_back(std::move(s));
    };
    auto full_set = [&] { return std::set<std::string>(channels.begin(), channels.end()); };

    auto add_full_and_singles = [&] {
        add({join_names(channels, "+"), full_set()});
        for (const auto& drop : channels) {
            auto s = full_set();
            s.erase(drop);
            std::vector<std::string> rest;
            for (const auto& c : channels)
                if (c != drop) rest.push_back(c);
            add({join_names(rest, "+"), std::move(s)});
        }
    };

    for (const auto& token : split_list(spec, ';')) {
        if (token == "standard") {
            add_full_and_singles();
            const std::set<std::string> four{"T1", "T2", "PD", "FLAIR"};
            if (full_set() == four) {
                for (const char* pair : {"T1+PD", "T2+FLAIR", "T1+T2", "T1+FLAIR", "FLAIR"}) {
                    SubsetSpec s;
                    s.label = pair;
                    for (const auto& n : split_list(pair, '+')) s.available.insert(n);
                    add(std::move(s));
                }
            }
        } else if (token == "all") {
            add_full_and_singles();
        } else {
            SubsetSpec s;
            s.label = token;
            for (const auto& name : split_list(token, '+')) {
                require(std::find(channels.begin(), channels.end(), name) != channels.end(),
                        "--subsets: unknown channel '" + name + "' in '" + token + "'");
                s.available.insert(name);
            }
            require(!s.available.empty(), "--subsets: empty subset token");
            add(std::move(s));
        }
    }
    require(!result.empty(), "--subsets expanded to nothing");
    return result;
}

int run_guarded(const char* command, const std::function<int()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        std::cerr << "msseg " << command << ": error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int cmd_phantom(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                const CliOverrides& flags) {
    return run_guarded("phantom", [&] {
        const std::string started = utc_now();
        AppConfig cfg = load_config(config_path);
        apply_common_overrides(cfg, flags);
        require(cfg.phantom_count >= 1, "phantom: count must be >= 1");
        std::filesystem::create_directories(out_dir);

        std::vector<std::filesystem::path> outputs;
        for (int i = 0; i < cfg.phantom_count; ++i) {
            phantom::PhantomConfig pc = cfg.phantom;
            pc.seed = derive_seed(cfg.phantom.seed, static_cast<std::uint64_t>(i));
            const auto result = phantom::generate_phantom<double>(pc);

            char name[32];
            std::snprintf(name, sizeof name, "case_%03d", i);
            const auto case_dir = out_dir / name;
            write_stack(result.volume, case_dir);
            write_volume(mask_to_volume<double>(result.gt_a, "gt_a"), case_dir / "gt_a.json");
            write_volume(mask_to_volume<double>(result.gt_b, "gt_b"), case_dir / "gt_b.json");

            json lesions = json::array();
            for (const auto& l : result.lesions)
                lesions.push_back({{"center", {l.cx, l.cy, l.cz}}, {"radius", l.radius}});
            json prov;
            prov["seed"] = pc.seed;
            prov["base_seed"] = cfg.phantom.seed;
            prov["case_index"] = i;
            prov["lesions"] = lesions;
            prov["config"] = config_to_json(cfg)["phantom"];
            detail::write_json_file(case_dir / "phantom.json", prov);

            outputs.push_back(case_dir / "stack.json");
            outputs.push_back(case_dir / "gt_a.json");
            outputs.push_back(case_dir / "gt_b.json");
            outputs.push_back(case_dir / "phantom.json");
        }
        return finish_run(out_dir, "phantom", cfg, cfg.phantom.seed,
                          json{{"config", config_path.string()}}, outputs, started);
    });
}

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& data_dir,
              const std::filesystem::path& out_dir, const CliOverrides& flags) {
    return run_guarded("train", [&] {
        const std::string started = utc_now();
        AppConfig cfg = load_config(config_path);
        apply_common_overrides(cfg, flags);
        std::filesystem::create_directories(out_dir);

        std::vector<train::TrainCase<double>> cases;
        for (const auto& paths : discover_cases(data_dir)) cases.push_back(load_train_case(paths));
        const auto channel_names = cases.front().input.channel_names();
        require(static_cast<int>(channel_names.size()) == cfg.net.in_channels,
                "train: data has " + std::to_string(channel_names.size()) +
                    " channels but net.in_channels is " + std::to_string(cfg.net.in_channels));

        train::TrainConfig tc;
        tc.epochs = cfg.epochs;
        tc.steps_per_epoch = cfg.steps_per_epoch;
        tc.batch_size = cfg.batch_size;
        tc.patch = cfg.patch;
        tc.policy = effective_policy(cfg, cfg.net.in_channels);
        tc.seed = cfg.seed;

        const auto result = train::train(cases, cfg.net, tc, cfg.loss, cfg.adam);

        net::CheckpointMeta meta;
        meta.config = cfg.net;
        meta.channel_names = channel_names;
        meta.seed = cfg.seed;
        write_checkpoint(result.params, meta, out_dir);

        // history.json carries no timestamps, so equal-seed reruns are
        // byte-comparable; run.json echoes the same history plus wall-clock.
        json history;
        history["seed"] = cfg.seed;
        history["epoch_loss"] = result.epoch_loss;
        history["step_loss"] = result.step_loss;
        history["preserved_log"] = preserved_log_to_json(result.preserved_log);
        detail::write_json_file(out_dir / "history.json", history);

        return finish_run(out_dir, "train", cfg, cfg.seed,
                          json{{"config", config_path.string()}, {"data", data_dir.string()}},
                          {out_dir / "checkpoint.json", out_dir / "params.bin",
                           out_dir / "history.json"},
                          started, history);
    });
}

int cmd_predict(const std::filesystem::path& config_path,
                const std::filesystem::path& checkpoint_dir,
                const std::filesystem::path& case_dir, const std::filesystem::path& out_dir,
                const CliOverrides& flags) {
    return run_guarded("predict", [&] {
        const std::string started = utc_now();
        AppConfig cfg = load_config(config_path);
        apply_common_overrides(cfg, flags);
        std::filesystem::create_directories(out_dir);

        auto [params, meta] = net::read_checkpoint<double>(checkpoint_dir);
        const auto missing = parse_missing(flags.missing, meta.channel_names);
        std::set<std::string> available(meta.channel_names.begin(), meta.channel_names.end());
        for (const auto& m : missing) available.erase(m);
        require(!available.empty(),
                "--missing removes every channel; at least one must remain available");

        const auto stack = load_masked_stack(case_dir, meta.channel_names, available);
        const BinaryMask pred = net::predict_volume(params, meta.config, stack, cfg.window);
        write_volume(mask_to_volume<double>(pred, "pred"), out_dir / "pred.json");

        json inputs{{"config", config_path.string()},
                    {"checkpoint", checkpoint_dir.string()},
                    {"case", case_dir.string()},
                    {"available", std::vector<std::string>(available.begin(), available.end())}};
        return finish_run(out_dir, "predict", cfg, meta.seed, inputs,
                          {out_dir / "pred.json", out_dir / "pred.raw"}, started);
    });
}

int cmd_evaluate(const std::filesystem::path& config_path, const std::filesystem::path& pred_path,
                 const std::filesystem::path& gt_a_path, const std::filesystem::path& gt_b_path,
                 const std::filesystem::path& out_dir, const CliOverrides& flags) {
    return run_guarded("evaluate", [&] {
        const std::string started = utc_now();
        AppConfig cfg = load_config(config_path);
        apply_common_overrides(cfg, flags);
        std::filesystem::create_directories(out_dir);

        const BinaryMask pred = load_mask(pred_path);
        const BinaryMask gt_a = load_mask(gt_a_path);
        const BinaryMask gt_b = load_mask(gt_b_path);
        const auto report = metrics::evaluate_two_raters(pred, gt_a, gt_b, cfg.connectivity);

        const std::string case_id = pred_path.parent_path().filename().string();
        detail::write_json_file(out_dir / "report.json", report_to_json(case_id, report));
        write_report_csv(out_dir / "report.csv", {{case_id, report}});

        json inputs{{"config", config_path.string()},
                    {"pred", pred_path.string()},
                    {"gt_a", gt_a_path.string()},
                    {"gt_b", gt_b_path.string()}};
        return finish_run(out_dir, "evaluate", cfg, cfg.seed, inputs,
                          {out_dir / "report.json", out_dir / "report.csv"}, started);
    });
}

int cmd_ablate(const std::filesystem::path& config_path,
               const std::filesystem::path& checkpoint_dir, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir, const CliOverrides& flags) {
    return run_guarded("ablate", [&] {
        const std::string started = utc_now();
        AppConfig cfg = load_config(config_path);
        apply_common_overrides(cfg, flags);
        std::filesystem::create_directories(out_dir);

        auto [params, meta] = net::read_checkpoint<double>(checkpoint_dir);
        const auto cases = discover_cases(data_dir);
        const auto subsets = expand_subsets(flags.subsets.value_or("standard"),
                                            meta.channel_names);

        json detail_rows = json::array();
        std::ofstream csv(out_dir / "ablate.csv", std::ios::trunc);
        require(csv.good(), "cannot open " + (out_dir / "ablate.csv").string());
        csv << "available,missing,cases,DSC,Jaccard,PPV,TPR,LFPR,LTPR\n";

        for (const auto& subset : subsets) {
            std::vector<std::string> missing_names;
            for (const auto& c : meta.channel_names)
                if (!subset.available.count(c)) missing_names.push_back(c);

            // Aggregate each metric's two-rater average over the cases;
            // undefined per-case values are excluded from the mean.
            std::array<double, 6> sums{};
            std::array<int, 6> defined{};
            json per_case = json::array();
            for (const auto& cp : cases) {
                const auto stack = load_masked_stack(cp.dir, meta.channel_names, subset.available);
                const BinaryMask pred = net::predict_volume(params, meta.config, stack, cfg.window);
                const BinaryMask gt_a = load_mask(cp.dir / "gt_a.json");
                const BinaryMask gt_b = load_mask(cp.dir / "gt_b.json");
                const auto report = metrics::evaluate_two_raters(pred, gt_a, gt_b,
                                                                 cfg.connectivity);
                per_case.push_back(report_to_json(cp.id, report));
                const auto values = report.average.values();
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (values[i]) {
                        sums[i] += *values[i];
                        ++defined[i];
                    }
                }
            }

            metrics::RaterScores agg;
            std::array<std::optional<double>*, 6> slots{&agg.dsc,  &agg.jaccard, &agg.ppv,
                                                        &agg.tpr,  &agg.lfpr,    &agg.ltpr};
            for (std::size_t i = 0; i < slots.size(); ++i)
                if (defined[i] > 0) *slots[i] = sums[i] / defined[i];

            csv << subset.label << "," << join_names(missing_names, "+") << "," << cases.size();
            for (const auto& v : agg.values()) csv << "," << metric_cell(v);
            csv << "\n";

            detail_rows.push_back({{"available", subset.label},
                                   {"missing", missing_names},
                                   {"aggregate", scores_to_json(agg)},
                                   {"cases", per_case}});
        }
        csv.flush();
        require(csv.good(), "failed writing " + (out_dir / "ablate.csv").string());
        csv.close();

        detail::write_json_file(out_dir / "ablate.json",
                                json{{"connectivity", cfg.connectivity},
                                     {"conventions", metrics::kDegenerateConventions},
                                     {"subsets", detail_rows}});

        json inputs{{"config", config_path.string()},
                    {"checkpoint", checkpoint_dir.string()},
                    {"data", data_dir.string()}};
        return finish_run(out_dir, "ablate", cfg, meta.seed, inputs,
                          {out_dir / "ablate.csv", out_dir / "ablate.json"}, started);
    });
}

}  // namespace msseg::app
