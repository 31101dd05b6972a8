#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace msseg {

/// Error type thrown on any contract violation (bad dims, malformed
/// files, shape mismatches, ...). Carries a human-readable message.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grid extent of a 3D scalar field.
struct Dims3 {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    constexpr Dims3() = default;
    constexpr Dims3(int x, int y, int z) : nx(x), ny(y), nz(z) {}

    constexpr std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    constexpr bool positive() const { return nx >= 1 && ny >= 1 && nz >= 1; }

    bool operator==(const Dims3&) const = default;
};

/// Integer voxel coordinate.
struct Coord3 {
    int x = 0;
    int y = 0;
    int z = 0;

    constexpr Coord3() = default;
    constexpr Coord3(int px, int py, int pz) : x(px), y(py), z(pz) {}

    bool operator==(const Coord3&) const = default;
};

/// Flat index in x-fastest order: x varies fastest, then y, then z.
inline std::size_t flat_index(const Dims3& d, int x, int y, int z) {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(d.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(d.ny) * static_cast<std::size_t>(z));
}

inline Coord3 coord_of(const Dims3& d, std::size_t flat) {
    const auto nx = static_cast<std::size_t>(d.nx);
    const auto ny = static_cast<std::size_t>(d.ny);
    return Coord3{static_cast<int>(flat % nx), static_cast<int>((flat / nx) % ny),
                  static_cast<int>(flat / (nx * ny))};
}

inline std::string dims_str(const Dims3& d) {
    return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

}  // namespace msseg
