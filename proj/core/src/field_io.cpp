#include "crossdiff/field_io.hpp"

#include <bit>
#include <fstream>

#include "crossdiff/errors.hpp"

namespace crossdiff {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
                 << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ConfigError("field file: truncated payload");
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string encode_fields(const Field& u, const Field& v) {
    if (!(u.grid() == v.grid()))
        throw ConfigError("field file: U and V must live on one grid");
    const Grid& g = u.grid();

    std::string out;
    out.reserve(16 + 4 * g.dim() + 16 * u.size());
    out += "XDIF";
    put_u32(out, kFieldFileVersion);
    put_u32(out, static_cast<std::uint32_t>(g.dim()));
    for (int k = 0; k < g.dim(); ++k) put_u32(out, static_cast<std::uint32_t>(g.nodes(k)));
    for (const double x : u.values()) put_f64(out, x);
    for (const double x : v.values()) put_f64(out, x);
    return out;
}

FieldFile decode_fields(std::string_view bytes) {
    if (bytes.size() < 4 || bytes.substr(0, 4) != "XDIF")
        throw ConfigError("field file: bad magic, expected XDIF");
    Reader r(bytes.substr(4));

    FieldFile f;
    f.version = r.u32();
    if (f.version != kFieldFileVersion)
        throw ConfigError("field file: unsupported version " + std::to_string(f.version));
    const std::uint32_t dim = r.u32();
    if (dim != 2 && dim != 3)
        throw ConfigError("field file: dimension must be 2 or 3, got " + std::to_string(dim));

    std::size_t count = 1;
    for (std::uint32_t k = 0; k < dim; ++k) {
        const std::uint32_t n = r.u32();
        if (n < 2) throw ConfigError("field file: node counts must be >= 2");
        f.nodes.push_back(n);
        count *= n;
    }
    if (r.remaining() != 16 * count)
        throw ConfigError("field file: payload length disagrees with the header");

    f.u.resize(count);
    f.v.resize(count);
    for (double& x : f.u) x = r.f64();
    for (double& x : f.v) x = r.f64();
    return f;
}

void write_field_file(const std::filesystem::path& path, const Field& u, const Field& v) {
    const std::string bytes = encode_fields(u, v);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed: " + path.string());
}

FieldFile read_field_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open field file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_fields(bytes);
}

std::pair<Field, Field> fields_on_grid(const FieldFile& file, const Grid& grid) {
    if (static_cast<int>(file.nodes.size()) != grid.dim())
        throw ConfigError("field file: dimension disagrees with the grid");
    for (int k = 0; k < grid.dim(); ++k)
        if (file.nodes[static_cast<std::size_t>(k)] != static_cast<std::uint32_t>(grid.nodes(k)))
            throw ConfigError("field file: node counts disagree with the grid");

    Field u(grid), v(grid);
    for (std::size_t i = 0; i < file.u.size(); ++i) u[i] = file.u[i];
    for (std::size_t i = 0; i < file.v.size(); ++i) v[i] = file.v[i];
    return {std::move(u), std::move(v)};
}

} // namespace crossdiff
