// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Criteria 7-9 drive the real CLI binary (path via --cli).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "msseg/labels.hpp"
#include "msseg/net/checkpoint.hpp"
#include "msseg/net/predict.hpp"
#include "msseg/phantom.hpp"
#include "msseg/sampler.hpp"
#include "msseg/seqdrop.hpp"
#include "msseg/train/trainer.hpp"
#include "msseg/volume_io.hpp"
#include "oracles.hpp"

using namespace msseg;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

int run_cli(const std::string& cli, const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------- criterion 1

void criterion_gradients() {
    const auto t0 = Clock::now();
    net::UNetConfig cfg;
    cfg.levels = 2;
    cfg.root_features = 2;
    cfg.in_channels = 2;
    cfg.convs_per_level = 2;

    Rng rng(20250810);
    auto params = net::init_parameters<double>(cfg, rng);

    Tensor4<double> input(2, Dims3{8, 8, 8});
    for (Eigen::Index i = 0; i < input.data.size(); ++i) input.data[i] = rng.uniform(0.0, 1.0);
    Array<double> lv(512);
    for (Eigen::Index i = 0; i < 512; ++i) {
        const double u = rng.uniform01();
        lv[i] = u < 0.3 ? 1.0 : (u < 0.45 ? 0.5 : 0.0);
    }
    std::vector<train::TrainSample<double>> batch;
    batch.push_back({input, LabelVolume<double>(Dims3{8, 8, 8}, lv)});
    const train::LossConfig loss_cfg;

    const auto [loss, grads] = train::compute_gradients<double>(
        params, cfg, std::span<const train::TrainSample<double>>(batch), loss_cfg);

    auto loss_at = [&]() {
        double total = 0.0;
        for (const auto& s : batch) {
            const auto probs = net::softmax_channels(net::forward_logits(params, cfg, s.input));
            total += train::weighted_ce_loss(probs, s.labels, loss_cfg).loss;
        }
        return total / static_cast<double>(batch.size());
    };

    const double h = 1e-5;
    int checked = 0;
    double worst = 0.0;
    std::string worst_name;
    for (auto& entry : params.entries) {
        const auto n = entry.values.size();
        const int samples = static_cast<int>(std::min<Eigen::Index>(n, 24));
        std::vector<Eigen::Index> picked;
        while (static_cast<int>(picked.size()) < samples) {
            const auto idx = static_cast<Eigen::Index>(
                rng.uniform_below(static_cast<std::uint64_t>(n)));
            if (std::find(picked.begin(), picked.end(), idx) == picked.end())
                picked.push_back(idx);
        }
        for (const auto idx : picked) {
            const double saved = entry.values[idx];
            entry.values[idx] = saved + h;
            const double up = loss_at();
            entry.values[idx] = saved - h;
            const double down = loss_at();
            entry.values[idx] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double analytic = grads[entry.name][idx];
            const double rel = std::abs(analytic - fd) / (std::abs(analytic) + 1e-8);
            if (rel > worst) {
                worst = rel;
                worst_name = entry.name;
            }
            ++checked;
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = checked >= 200 && worst < 1e-4 && elapsed < 60.0 && std::isfinite(loss);
    report(1, "gradient fidelity vs central finite differences", pass,
           std::to_string(checked) + " params, max rel err " + fmt(worst, 3) + " at " +
               worst_name + ", " + fmt(elapsed, 3) + "s");
}

// ---------------------------------------------------------------- criterion 2

void criterion_sampler_bias() {
    Rng gen(77);
    const Dims3 d{20, 20, 20};
    Array<double> lv(static_cast<Eigen::Index>(d.count()));
    for (Eigen::Index i = 0; i < lv.size(); ++i) {
        const double u = gen.uniform01();
        lv[i] = u < 0.12 ? 1.0 : (u < 0.18 ? 0.5 : 0.0);
    }
    const LabelVolume<double> labels(d, std::move(lv));

    PatchSpec spec;
    spec.size = Dims3{1, 1, 1};
    spec.lesion_center_prob = 0.99;
    Rng rng(4242);
    const int draws = 10000;
    int lesion_centered = 0;
    for (int i = 0; i < draws; ++i) {
        const Coord3 c = sample_patch_center(labels, spec, rng);
        if (labels.at(c.x, c.y, c.z) == 1.0) ++lesion_centered;
    }
    const double frac = static_cast<double>(lesion_centered) / draws;
    const bool pass = frac >= 0.985 && frac <= 0.995;
    report(2, "sampler lesion-center bias p=0.99", pass,
           "fraction " + fmt(frac, 4) + " over 10000 draws");
}

// ---------------------------------------------------------------- criterion 3

void criterion_dropout_distribution() {
    Rng gen(5);
    std::vector<Volume<double>> chs;
    for (const char* name : {"T1", "T2", "PD", "FLAIR"}) {
        Array<double> a(27);
        for (Eigen::Index i = 0; i < 27; ++i) a[i] = gen.uniform(0.01, 1.0);
        chs.emplace_back(Dims3{3, 3, 3}, std::move(a), name);
    }
    const MultiChannelVolume<double> patch(std::move(chs));
    const auto policy = DropoutPolicy::uniform(4);

    Rng rng(31337);
    const int draws = 10000;
    std::array<int, 5> count_by_n{};
    bool payload_ok = true;
    for (int i = 0; i < draws; ++i) {
        const auto [dropped, preserved] = apply_sequence_dropout(patch, policy, rng);
        count_by_n[preserved.size()]++;
        for (int c = 0; c < 4; ++c) {
            const bool kept = std::find(preserved.begin(), preserved.end(),
                                        dropped.channels[c].name) != preserved.end();
            if (kept && !(dropped.channels[c].voxels == patch.channels[c].voxels).all())
                payload_ok = false;
            if (!kept && dropped.channels[c].voxels.abs().sum() != 0.0) payload_ok = false;
        }
    }
    bool freq_ok = true;
    std::string freqs;
    for (int n = 1; n <= 4; ++n) {
        const double f = static_cast<double>(count_by_n[n]) / draws;
        if (std::abs(f - 0.25) > 0.02) freq_ok = false;
        freqs += (n > 1 ? "/" : "") + fmt(f, 3);
    }
    report(3, "dropout preserve-count distribution and payload integrity", freq_ok && payload_ok,
           "n=1..4 freq " + freqs + ", payload " + (payload_ok ? "exact" : "violated"));
}

// ---------------------------------------------------------------- criterion 4

void criterion_ignore_exactness() {
    net::UNetConfig cfg;
    cfg.levels = 2;
    cfg.root_features = 2;
    cfg.in_channels = 2;
    Rng rng(6);
    const auto params = net::init_parameters<double>(cfg, rng);
    Tensor4<double> input(2, Dims3{8, 8, 8});
    for (Eigen::Index i = 0; i < input.data.size(); ++i) input.data[i] = rng.uniform01();
    std::vector<train::TrainSample<double>> batch;
    batch.push_back({input, LabelVolume<double>(Dims3{8, 8, 8}, Array<double>::Constant(512, 0.5))});
    const auto [loss, grads] = train::compute_gradients<double>(
        params, cfg, std::span<const train::TrainSample<double>>(batch), train::LossConfig{});
    bool zeros = loss == 0.0;
    for (const auto& e : grads.entries)
        if (!(e.values == 0.0).all()) zeros = false;
    report(4, "all-ignore patch gives loss 0 and bit-exact zero gradients", zeros,
           "loss " + fmt(loss, 17));
}

// ---------------------------------------------------------------- criterion 5

void criterion_loss_ratio() {
    const train::LossConfig cfg;
    auto one_voxel = [&](double label) {
        Tensor4<double> probs(2, Dims3{1, 1, 1});
        probs.data[0] = 0.5;
        probs.data[1] = 0.5;
        const LabelVolume<double> l(Dims3{1, 1, 1}, Array<double>::Constant(1, label));
        return train::weighted_ce_loss(probs, l, cfg).loss;
    };
    const double lesion = one_voxel(1.0);
    const double background = one_voxel(0.0);
    const double ratio = lesion / background;
    const bool pass = ratio == 3.0;
    report(5, "single-voxel loss ratio is exactly 3", pass,
           "lesion " + fmt(lesion, 10) + ", background " + fmt(background, 10) + ", ratio " +
               fmt(ratio, 17));
}

// ---------------------------------------------------------------- criterion 6

void criterion_metric_identities() {
    Rng rng(7);
    double worst_gap = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = testing::random_mask(Dims3{6, 6, 6}, 0.3, rng);
        const auto b = testing::random_mask(Dims3{6, 6, 6}, 0.3, rng);
        const auto c = metrics::confusion(a, b);
        const double d = metrics::dice(c);
        worst_gap = std::max(worst_gap, std::abs(metrics::jaccard(c) - d / (2.0 - d)));
    }
    const bool jaccard_ok = worst_gap <= 1e-12;

    bool components_ok = true;
    for (int trial = 0; trial < 1000 && components_ok; ++trial) {
        const auto mask = testing::random_mask(Dims3{8, 8, 8}, 0.2 + 0.4 * rng.uniform01(), rng);
        for (int connectivity : {6, 18, 26}) {
            const auto mine = metrics::connected_components(mask, connectivity);
            const auto oracle = testing::union_find_components(mask, connectivity);
            for (std::size_t i = 0; i < oracle.size(); ++i)
                if (mine.labels[i] != oracle[i]) components_ok = false;
        }
    }
    report(6, "jaccard identity and connected-component oracle equivalence",
           jaccard_ok && components_ok,
           "max |J - D/(2-D)| = " + fmt(worst_gap, 3) + ", 1000 masks x {6,18,26} " +
               (components_ok ? "exact" : "mismatch"));
}

// ------------------------------------------------------------- criteria 7+8+9

json experiment_config() {
    return json{
        {"phantom",
         {{"dims", {32, 32, 32}},
          {"channels",
           {{{"name", "T1"}, {"background", 0.60}, {"lesion_contrast", -0.12}},
            {{"name", "T2"}, {"background", 0.30}, {"lesion_contrast", 0.15}},
            {{"name", "PD"}, {"background", 0.40}, {"lesion_contrast", 0.04}},
            {{"name", "FLAIR"}, {"background", 0.20}, {"lesion_contrast", 0.65}}}},
          {"lesion_count", {2, 4}},
          {"lesion_radius", {2.0, 4.0}},
          {"noise_sigma", 0.03},
          {"rater_flip_prob", 0.15},
          {"seed", 11}}},
        {"sampler", {{"patch_size", {16, 16, 16}}, {"lesion_center_prob", 0.95}}},
        {"net", {{"levels", 2}, {"root_features", 4}, {"in_channels", 4}}},
        {"train",
         {{"epochs", 16},
          {"steps_per_epoch", 25},
          {"batch_size", 1},
          {"seed", 21},
          {"adam", {{"learning_rate", 0.003}}}}},
        {"predict", {{"window", {16, 16, 16}}, {"stride", {8, 8, 8}}}},
        {"metrics", {{"connectivity", 26}}},
    };
}

/// DSC aggregate for one available-subset label out of ablate.json.
double ablate_dsc(const fs::path& ablate_json, const std::string& label) {
    const json doc = json::parse(slurp(ablate_json));
    for (const auto& row : doc.at("subsets")) {
        if (row.at("available").get<std::string>() == label) {
            const auto& v = row.at("aggregate").at("DSC");
            return v.is_null() ? 0.0 : v.get<double>();
        }
    }
    throw Error("subset '" + label + "' not found in " + ablate_json.string());
}

void criteria_experiment(const std::string& cli) {
    const auto t0 = Clock::now();
    const fs::path dir = fs::temp_directory_path() / "msseg_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const auto config_path = dir / "config.json";
    std::ofstream(config_path) << experiment_config().dump(2);

    bool cli_ok = true;
    auto cli_step = [&](const std::string& args) {
        if (!cli_ok) return;
        if (run_cli(cli, args) != 0) {
            cli_ok = false;
            std::cerr << "CLI step failed: " << args << "\n";
        }
    };

    // Train set and a held-out test set with a different seed.
    cli_step("phantom --config " + config_path.string() + " --out " + (dir / "train").string() +
             " --count 3");
    cli_step("phantom --config " + config_path.string() + " --out " + (dir / "test").string() +
             " --count 2 --seed 1213");

    // Two arms, identical seeds/configs; plus a rerun of the dropout arm.
    cli_step("train --config " + config_path.string() + " --data " + (dir / "train").string() +
             " --out " + (dir / "m_drop").string());
    cli_step("train --config " + config_path.string() + " --data " + (dir / "train").string() +
             " --out " + (dir / "m_base").string() + " --no-seqdrop");
    cli_step("train --config " + config_path.string() + " --data " + (dir / "train").string() +
             " --out " + (dir / "m_drop2").string());

    const std::string subsets = "\"T1+T2+PD+FLAIR;T1+T2+PD\"";
    cli_step("ablate --config " + config_path.string() + " --checkpoint " +
             (dir / "m_drop").string() + " --data " + (dir / "test").string() + " --out " +
             (dir / "ab_drop").string() + " --subsets " + subsets);
    cli_step("ablate --config " + config_path.string() + " --checkpoint " +
             (dir / "m_base").string() + " --data " + (dir / "test").string() + " --out " +
             (dir / "ab_base").string() + " --subsets " + subsets);

    if (!cli_ok) {
        report(7, "sequence-dropout collapse reproduction", false, "CLI pipeline step failed");
        report(8, "training determinism", false, "CLI pipeline step failed");
    } else {
        const double drop_full = ablate_dsc(dir / "ab_drop" / "ablate.json", "T1+T2+PD+FLAIR");
        const double base_full = ablate_dsc(dir / "ab_base" / "ablate.json", "T1+T2+PD+FLAIR");
        const double drop_noflair = ablate_dsc(dir / "ab_drop" / "ablate.json", "T1+T2+PD");
        const double base_noflair = ablate_dsc(dir / "ab_base" / "ablate.json", "T1+T2+PD");
        const double elapsed = seconds_since(t0);
        const bool pattern = drop_full >= 0.70 && base_full >= 0.70 &&
                             (drop_noflair - base_noflair) >= 0.20 && base_noflair <= 0.30;
        report(7, "sequence-dropout collapse reproduction", pattern && elapsed < 600.0,
               "full: drop " + fmt(drop_full, 3) + " base " + fmt(base_full, 3) +
                   "; no-FLAIR: drop " + fmt(drop_noflair, 3) + " base " + fmt(base_noflair, 3) +
                   "; " + fmt(elapsed, 3) + "s");

        const bool det_history = slurp(dir / "m_drop" / "history.json") ==
                                 slurp(dir / "m_drop2" / "history.json");
        const bool det_params =
            slurp(dir / "m_drop" / "params.bin") == slurp(dir / "m_drop2" / "params.bin");
        report(8, "training determinism (bit-identical history and checkpoint)",
               det_history && det_params,
               std::string("history ") + (det_history ? "identical" : "differs") + ", params " +
                   (det_params ? "identical" : "differ"));
    }

    // Criterion 9: CLI-only pipeline with format integrity and the identity
    // evaluation.
    bool nine_ok = cli_ok;
    if (nine_ok) {
        const auto case0 = dir / "test" / "case_000";
        nine_ok = run_cli(cli, "predict --config " + config_path.string() + " --checkpoint " +
                                   (dir / "m_drop").string() + " --data " + case0.string() +
                                   " --out " + (dir / "pred").string()) == 0;
        if (nine_ok)
            nine_ok = run_cli(cli, "evaluate --config " + config_path.string() + " --pred " +
                                       (dir / "pred" / "pred.json").string() + " --gt-a " +
                                       (case0 / "gt_a.json").string() + " --gt-b " +
                                       (case0 / "gt_b.json").string() + " --out " +
                                       (dir / "eval").string()) == 0;
        if (nine_ok)
            nine_ok = run_cli(cli, "evaluate --pred " + (case0 / "gt_a.json").string() +
                                       " --gt-a " + (case0 / "gt_a.json").string() + " --gt-b " +
                                       (case0 / "gt_a.json").string() + " --out " +
                                       (dir / "eval_id").string()) == 0;
    }

    std::string nine_detail = "CLI pipeline step failed";
    if (nine_ok) {
        // file round-trips are bit-exact
        const auto flair = read_volume<double>(dir / "test" / "case_000" / "FLAIR.json");
        write_volume(flair, dir / "FLAIR_copy.json");
        const bool vol_rt = slurp(dir / "test" / "case_000" / "FLAIR.raw") ==
                            slurp(dir / "FLAIR_copy.raw");

        const auto [params, meta] = net::read_checkpoint<double>(dir / "m_drop");
        net::write_checkpoint(params, meta, dir / "ckpt_copy");
        const bool ckpt_rt =
            slurp(dir / "m_drop" / "params.bin") == slurp(dir / "ckpt_copy" / "params.bin");

        const auto pred = read_volume<double>(dir / "pred" / "pred.json");
        write_volume(pred, dir / "pred_copy.json");
        const bool pred_rt = slurp(dir / "pred" / "pred.raw") == slurp(dir / "pred_copy.raw");

        const json id_report = json::parse(slurp(dir / "eval_id" / "report.json"));
        const auto& avg = id_report.at("average");
        const bool identity = avg.at("DSC") == 1.0 && avg.at("Jaccard") == 1.0 &&
                              avg.at("PPV") == 1.0 && avg.at("TPR") == 1.0 &&
                              avg.at("LFPR") == 0.0 && avg.at("LTPR") == 1.0;
        nine_ok = vol_rt && ckpt_rt && pred_rt && identity;
        nine_detail = std::string("volume/checkpoint/pred round-trips ") +
                      (vol_rt && ckpt_rt && pred_rt ? "bit-exact" : "BROKEN") +
                      ", identity evaluation " + (identity ? "exact" : "wrong");
    }
    report(9, "end-to-end CLI pipeline and format integrity", nine_ok, nine_detail);

    if (g_failures == 0) fs::remove_all(dir);  // keep artifacts only on failure
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = "./msseg";
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--cli") cli = argv[i + 1];

    try {
        criterion_gradients();
        criterion_sampler_bias();
        criterion_dropout_distribution();
        criterion_ignore_exactness();
        criterion_loss_ratio();
        criterion_metric_identities();
        criteria_experiment(cli);
    } catch (const std::exception& e) {
        std::cerr << "acceptance suite aborted: " << e.what() << "\n";
        return 2;
    }

    std::cout << (g_failures == 0 ? "acceptance: all criteria passed"
                                  : "acceptance: " + std::to_string(g_failures) +
                                        " criterion(s) failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
