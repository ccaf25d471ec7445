#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crossdiff/grid.hpp"

namespace crossdiff {

/// Binary snapshot of a solution pair: magic "XDIF", then the format
/// version, dimension and per-axis node counts as 4-byte little-endian
/// unsigned integers, then the U values followed by the V values as
/// 8-byte little-endian IEEE-754 doubles in canonical node ordering.
/// Doubles round-trip through their bit patterns, so write-read-write is
/// bit-stable.
inline constexpr std::uint32_t kFieldFileVersion = 1;

struct FieldFile {
    std::uint32_t version = kFieldFileVersion;
    std::vector<std::uint32_t> nodes;
    std::vector<double> u;
    std::vector<double> v;
};

/// Both fields must live on one grid.
std::string encode_fields(const Field& u, const Field& v);

/// Throws ConfigError on bad magic, unsupported version, dimension
/// outside {2, 3}, or a payload whose length disagrees with the header.
FieldFile decode_fields(std::string_view bytes);

void write_field_file(const std::filesystem::path& path, const Field& u, const Field& v);
FieldFile read_field_file(const std::filesystem::path& path);

/// Reattaches the payload to `grid`; throws ConfigError when the per-axis
/// node counts disagree.
std::pair<Field, Field> fields_on_grid(const FieldFile& file, const Grid& grid);

} // namespace crossdiff
