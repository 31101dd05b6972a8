#pragma once

#include <bit>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "msseg/net/unet.hpp"
#include "msseg/volume_io.hpp"

namespace msseg::net {

namespace detail {

template <typename S>
constexpr const char* scalar_dtype() {
    if constexpr (sizeof(S) == 4)
        return "f32le";
    else
        return "f64le";
}

template <typename S>
void put_scalar_le(S v, std::vector<std::uint8_t>& out) {
    if constexpr (sizeof(S) == 4) {
        msseg::detail::put_f32le(static_cast<float>(v), out);
    } else {
        const auto u = std::bit_cast<std::uint64_t>(static_cast<double>(v));
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
    }
}

template <typename S>
S get_scalar_le(const std::uint8_t* p) {
    if constexpr (sizeof(S) == 4) {
        return static_cast<S>(msseg::detail::get_f32le(p));
    } else {
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return static_cast<S>(std::bit_cast<double>(u));
    }
}

}  // namespace detail

struct CheckpointMeta {
    UNetConfig config;
    std::vector<std::string> channel_names;
    std::uint64_t seed = 0;
};

inline nlohmann::json unet_config_to_json(const UNetConfig& c) {
    return nlohmann::json{{"levels", c.levels},
                          {"root_features", c.root_features},
                          {"in_channels", c.in_channels},
                          {"classes", c.classes},
                          {"convs_per_level", c.convs_per_level},
                          {"prelu_init_slope", c.prelu_init_slope}};
}

inline UNetConfig unet_config_from_json(const nlohmann::json& j) {
    UNetConfig c;
    c.levels = j.value("levels", c.levels);
    c.root_features = j.value("root_features", c.root_features);
    c.in_channels = j.value("in_channels", c.in_channels);
    c.classes = j.value("classes", c.classes);
    c.convs_per_level = j.value("convs_per_level", c.convs_per_level);
    c.prelu_init_slope = j.value("prelu_init_slope", c.prelu_init_slope);
    return c;
}

/// Checkpoint on disk: `checkpoint.json` manifest (names, shapes, config
/// echo, channel names, seed) plus a raw little-endian `params.bin`.
/// Write-then-read round-trips bit-exactly.
template <typename S>
void write_checkpoint(const ParameterStore<S>& params, const CheckpointMeta& meta,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "msseg-checkpoint-v1";
    manifest["dtype"] = detail::scalar_dtype<S>();
    manifest["config"] = unet_config_to_json(meta.config);
    manifest["channels"] = meta.channel_names;
    manifest["seed"] = meta.seed;

    std::vector<std::uint8_t> payload;
    payload.reserve(params.total_size() * sizeof(S));
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& e : params.entries) {
        plist.push_back({{"name", e.name},
                         {"shape", e.shape},
                         {"offset", payload.size()},
                         {"count", e.values.size()}});
        for (Eigen::Index i = 0; i < e.values.size(); ++i)
            detail::put_scalar_le(e.values[i], payload);
    }
    manifest["params"] = plist;
    msseg::detail::write_json_file(dir / "checkpoint.json", manifest);
    msseg::detail::write_all_bytes(dir / "params.bin", payload);
}

template <typename S>
std::pair<ParameterStore<S>, CheckpointMeta> read_checkpoint(const std::filesystem::path& dir) {
    const nlohmann::json manifest = msseg::detail::read_json_file(dir / "checkpoint.json");
    require(manifest.value("format", "") == "msseg-checkpoint-v1",
            "unrecognized checkpoint format in " + (dir / "checkpoint.json").string());
    const std::string dtype = manifest.value("dtype", "");
    require(dtype == detail::scalar_dtype<S>(),
            "checkpoint dtype " + dtype + " does not match requested scalar type " +
                detail::scalar_dtype<S>());

    CheckpointMeta meta;
    meta.config = unet_config_from_json(manifest.at("config"));
    meta.channel_names = manifest.at("channels").get<std::vector<std::string>>();
    meta.seed = manifest.value("seed", std::uint64_t{0});

    const auto payload = msseg::detail::read_all_bytes(dir / "params.bin");
    ParameterStore<S> params;
    for (const auto& pj : manifest.at("params")) {
        auto& values = params.add(pj.at("name").get<std::string>(),
                                  pj.at("shape").get<std::vector<int>>());
        const auto offset = pj.at("offset").get<std::size_t>();
        const auto count = pj.at("count").get<std::size_t>();
        require(static_cast<std::size_t>(values.size()) == count,
                "checkpoint entry '" + pj.at("name").get<std::string>() + "' count mismatch");
        require(offset + count * sizeof(S) <= payload.size(),
                "checkpoint payload too small for '" + pj.at("name").get<std::string>() + "'");
        for (std::size_t i = 0; i < count; ++i)
            values[static_cast<Eigen::Index>(i)] =
                detail::get_scalar_le<S>(payload.data() + offset + i * sizeof(S));
    }
    // Shapes must be exactly what the config would create.
    check_params_match(params, meta.config);
    return {std::move(params), std::move(meta)};
}

}  // namespace msseg::net
