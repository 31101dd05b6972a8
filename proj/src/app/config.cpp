#include "app/config.hpp"

#include "msseg/volume_io.hpp"

namespace msseg::app {

namespace {

using nlohmann::json;

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        require(ok, "config: unknown key '" + key + "' in section " + where);
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void get_dims(const json& j, const char* key, Dims3& out) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    require(a.is_array() && a.size() == 3, std::string("config: ") + key + " must be [nx, ny, nz]");
    out = Dims3{a[0].get<int>(), a[1].get<int>(), a[2].get<int>()};
}

}  // namespace

AppConfig config_from_json(const json& j) {
    AppConfig cfg;
    check_known_keys(j, {"phantom", "sampler", "seqdrop", "net", "train", "predict", "metrics"},
                     "<root>");

    if (j.contains("phantom")) {
        const auto& p = j.at("phantom");
        check_known_keys(p,
                         {"dims", "channels", "lesion_count", "lesion_radius", "noise_sigma",
                          "rater_flip_prob", "seed", "count", "placement_retries"},
                         "phantom");
        get_dims(p, "dims", cfg.phantom.dims);
        if (p.contains("channels")) {
            cfg.phantom.channels.clear();
            for (const auto& c : p.at("channels")) {
                check_known_keys(c, {"name", "background", "lesion_contrast"}, "phantom.channels[]");
                phantom::ChannelSpec spec;
                spec.name = c.at("name").get<std::string>();
                get_if(c, "background", spec.background);
                get_if(c, "lesion_contrast", spec.lesion_contrast);
                cfg.phantom.channels.push_back(std::move(spec));
            }
        }
        if (p.contains("lesion_count")) {
            const auto& r = p.at("lesion_count");
            require(r.is_array() && r.size() == 2, "config: phantom.lesion_count must be [min, max]");
            cfg.phantom.lesion_count_min = r[0].get<int>();
            cfg.phantom.lesion_count_max = r[1].get<int>();
        }
        if (p.contains("lesion_radius")) {
            const auto& r = p.at("lesion_radius");
            require(r.is_array() && r.size() == 2,
                    "config: phantom.lesion_radius must be [min, max]");
            cfg.phantom.lesion_radius_min = r[0].get<double>();
            cfg.phantom.lesion_radius_max = r[1].get<double>();
        }
        get_if(p, "noise_sigma", cfg.phantom.noise_sigma);
        get_if(p, "rater_flip_prob", cfg.phantom.rater_flip_prob);
        get_if(p, "seed", cfg.phantom.seed);
        get_if(p, "count", cfg.phantom_count);
        get_if(p, "placement_retries", cfg.phantom.placement_retries);
    }

    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        check_known_keys(s, {"patch_size", "lesion_center_prob"}, "sampler");
        get_dims(s, "patch_size", cfg.patch.size);
        get_if(s, "lesion_center_prob", cfg.patch.lesion_center_prob);
    }

    if (j.contains("seqdrop")) {
        const auto& s = j.at("seqdrop");
        check_known_keys(s, {"enabled", "preserve_count_weights"}, "seqdrop");
        get_if(s, "enabled", cfg.seqdrop_enabled);
        get_if(s, "preserve_count_weights", cfg.seqdrop_preserve_weights);
    }

    if (j.contains("net")) {
        const auto& n = j.at("net");
        check_known_keys(n,
                         {"levels", "root_features", "in_channels", "classes", "convs_per_level",
                          "prelu_init_slope"},
                         "net");
        get_if(n, "levels", cfg.net.levels);
        get_if(n, "root_features", cfg.net.root_features);
        get_if(n, "in_channels", cfg.net.in_channels);
        get_if(n, "classes", cfg.net.classes);
        get_if(n, "convs_per_level", cfg.net.convs_per_level);
        get_if(n, "prelu_init_slope", cfg.net.prelu_init_slope);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_known_keys(t, {"epochs", "steps_per_epoch", "batch_size", "seed", "adam", "loss"},
                         "train");
        get_if(t, "epochs", cfg.epochs);
        get_if(t, "steps_per_epoch", cfg.steps_per_epoch);
        get_if(t, "batch_size", cfg.batch_size);
        get_if(t, "seed", cfg.seed);
        if (t.contains("adam")) {
            const auto& a = t.at("adam");
            check_known_keys(a, {"learning_rate", "beta1", "beta2", "epsilon"}, "train.adam");
            get_if(a, "learning_rate", cfg.adam.learning_rate);
            get_if(a, "beta1", cfg.adam.beta1);
            get_if(a, "beta2", cfg.adam.beta2);
            get_if(a, "epsilon", cfg.adam.epsilon);
        }
        if (t.contains("loss")) {
            const auto& l = t.at("loss");
            check_known_keys(l, {"background_weight", "lesion_weight", "prob_floor"}, "train.loss");
            get_if(l, "background_weight", cfg.loss.background_weight);
            get_if(l, "lesion_weight", cfg.loss.lesion_weight);
            get_if(l, "prob_floor", cfg.loss.prob_floor);
        }
    }

    if (j.contains("predict")) {
        const auto& p = j.at("predict");
        check_known_keys(p, {"window", "stride"}, "predict");
        get_dims(p, "window", cfg.window.size);
        get_dims(p, "stride", cfg.window.stride);
    }

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        check_known_keys(m, {"connectivity"}, "metrics");
        get_if(m, "connectivity", cfg.connectivity);
    }

    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    if (path.empty()) return AppConfig{};
    require(std::filesystem::exists(path), "config file not found: " + path.string());
    return config_from_json(detail::read_json_file(path));
}

nlohmann::json config_to_json(const AppConfig& cfg) {
    json channels = json::array();
    for (const auto& c : cfg.phantom.channels)
        channels.push_back({{"name", c.name},
                            {"background", c.background},
                            {"lesion_contrast", c.lesion_contrast}});
    return json{
        {"phantom",
         {{"dims", {cfg.phantom.dims.nx, cfg.phantom.dims.ny, cfg.phantom.dims.nz}},
          {"channels", channels},
          {"lesion_count", {cfg.phantom.lesion_count_min, cfg.phantom.lesion_count_max}},
          {"lesion_radius", {cfg.phantom.lesion_radius_min, cfg.phantom.lesion_radius_max}},
          {"noise_sigma", cfg.phantom.noise_sigma},
          {"rater_flip_prob", cfg.phantom.rater_flip_prob},
          {"seed", cfg.phantom.seed},
          {"count", cfg.phantom_count},
          {"placement_retries", cfg.phantom.placement_retries}}},
        {"sampler",
         {{"patch_size", {cfg.patch.size.nx, cfg.patch.size.ny, cfg.patch.size.nz}},
          {"lesion_center_prob", cfg.patch.lesion_center_prob}}},
        {"seqdrop",
         {{"enabled", cfg.seqdrop_enabled},
          {"preserve_count_weights", cfg.seqdrop_preserve_weights}}},
        {"net",
         {{"levels", cfg.net.levels},
          {"root_features", cfg.net.root_features},
          {"in_channels", cfg.net.in_channels},
          {"classes", cfg.net.classes},
          {"convs_per_level", cfg.net.convs_per_level},
          {"prelu_init_slope", cfg.net.prelu_init_slope}}},
        {"train",
         {{"epochs", cfg.epochs},
          {"steps_per_epoch", cfg.steps_per_epoch},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"adam",
           {{"learning_rate", cfg.adam.learning_rate},
            {"beta1", cfg.adam.beta1},
            {"beta2", cfg.adam.beta2},
            {"epsilon", cfg.adam.epsilon}}},
          {"loss",
           {{"background_weight", cfg.loss.background_weight},
            {"lesion_weight", cfg.loss.lesion_weight},
            {"prob_floor", cfg.loss.prob_floor}}}}},
        {"predict",
         {{"window", {cfg.window.size.nx, cfg.window.size.ny, cfg.window.size.nz}},
          {"stride", {cfg.window.stride.nx, cfg.window.stride.ny, cfg.window.stride.nz}}}},
        {"metrics", {{"connectivity", cfg.connectivity}}},
    };
}

DropoutPolicy effective_policy(const AppConfig& cfg, int channels) {
    if (!cfg.seqdrop_enabled) return DropoutPolicy::keep_all(channels);
    if (cfg.seqdrop_preserve_weights.empty()) return DropoutPolicy::uniform(channels);
    DropoutPolicy p{cfg.seqdrop_preserve_weights};
    p.validate(channels);
    return p;
}

}  // namespace msseg::app
