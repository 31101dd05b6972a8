#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "msseg/volume.hpp"

namespace msseg {

namespace detail {

inline void put_f32le(float f, std::vector<std::uint8_t>& out) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    out.push_back(static_cast<std::uint8_t>(u & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((u >> 24) & 0xff));
}

inline float get_f32le(const std::uint8_t* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                            (static_cast<std::uint32_t>(p[1]) << 8) |
                            (static_cast<std::uint32_t>(p[2]) << 16) |
                            (static_cast<std::uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(u);
}

inline std::vector<std::uint8_t> read_all_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(n);
    if (n > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    require(in.good(), "failed reading file: " + path.string());
    return bytes;
}

inline void write_all_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path.string());
    if (!bytes.empty())
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), "failed writing file: " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), "file not found: " + path.string());
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open file for writing: " + path.string());
    out << j.dump(2) << "\n";
    out.flush();
    require(out.good(), "failed writing file: " + path.string());
}

}  // namespace detail

/// On-disk volume: `<base>.json` header + `<base>.raw` payload of
/// nx*ny*nz little-endian 32-bit floats in x-fastest order. `json_path`
/// must end in ".json". Computation may use a wider scalar in memory;
/// the payload element type is always f32le.
template <typename Scalar>
void write_volume(const Volume<Scalar>& v, const std::filesystem::path& json_path) {
    require(json_path.extension() == ".json",
            "write_volume: header path must end in .json: " + json_path.string());
    nlohmann::json header = {
        {"dims", {v.dims.nx, v.dims.ny, v.dims.nz}},
        {"dtype", "f32le"},
        {"order", "x-fastest"},
        {"channel", v.name},
    };
    detail::write_json_file(json_path, header);

    std::vector<std::uint8_t> payload;
    payload.reserve(v.size() * 4);
    for (Eigen::Index i = 0; i < v.voxels.size(); ++i)
        detail::put_f32le(static_cast<float>(v.voxels[i]), payload);
    std::filesystem::path raw_path = json_path;
    raw_path.replace_extension(".raw");
    detail::write_all_bytes(raw_path, payload);
}

template <typename Scalar>
Volume<Scalar> read_volume(const std::filesystem::path& json_path) {
    const nlohmann::json header = detail::read_json_file(json_path);
    require(header.contains("dims") && header["dims"].is_array() && header["dims"].size() == 3,
            "volume header missing dims triplet: " + json_path.string());
    const Dims3 dims{header["dims"][0].get<int>(), header["dims"][1].get<int>(),
                     header["dims"][2].get<int>()};
    require(dims.positive(), "volume header has non-positive dims: " + json_path.string());
    const std::string dtype = header.value("dtype", "");
    require(dtype == "f32le", "unsupported element type '" + dtype + "' in " + json_path.string());
    const std::string order = header.value("order", "");
    require(order == "x-fastest", "unsupported storage order '" + order + "' in " + json_path.string());
    const std::string name = header.value("channel", "");

    std::filesystem::path raw_path = json_path;
    raw_path.replace_extension(".raw");
    const auto bytes = detail::read_all_bytes(raw_path);
    require(bytes.size() == dims.count() * 4,
            "header/payload size mismatch for " + json_path.string() + ": header says " +
                dims_str(dims) + " (" + std::to_string(dims.count() * 4) + " bytes), payload has " +
                std::to_string(bytes.size()) + " bytes");

    Array<Scalar> voxels(static_cast<Eigen::Index>(dims.count()));
    for (std::size_t i = 0; i < dims.count(); ++i)
        voxels[static_cast<Eigen::Index>(i)] =
            static_cast<Scalar>(detail::get_f32le(bytes.data() + 4 * i));
    return Volume<Scalar>(dims, std::move(voxels), name);
}

/// A stack directory holds one json/raw pair per channel plus a
/// `stack.json` listing channel order by name.
template <typename Scalar>
void write_stack(const MultiChannelVolume<Scalar>& mcv, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& c : mcv.channels) write_volume(c, dir / (c.name + ".json"));
    detail::write_json_file(dir / "stack.json", nlohmann::json{{"channels", mcv.channel_names()}});
}

template <typename Scalar>
MultiChannelVolume<Scalar> read_stack(const std::filesystem::path& dir) {
    const nlohmann::json j = detail::read_json_file(dir / "stack.json");
    require(j.contains("channels") && j["channels"].is_array() && !j["channels"].empty(),
            "stack.json has no channel list: " + (dir / "stack.json").string());
    std::vector<Volume<Scalar>> channels;
    for (const auto& name : j["channels"])
        channels.push_back(read_volume<Scalar>(dir / (name.get<std::string>() + ".json")));
    return MultiChannelVolume<Scalar>(std::move(channels));
}

}  // namespace msseg
