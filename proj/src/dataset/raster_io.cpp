#include "neuroeco/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

namespace neuroeco {
namespace {

constexpr std::string_view kMagic = "SNRAS1";
constexpr std::string_view kHeaderNames = "rows,channels,dt_ms";
constexpr std::string_view kMetaHeader = "id,x,y,is_backbone";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    return ec == std::errc() && ptr == end;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff),
                                static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in, const char* field) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw DatasetError(fmt::format("malformed header: truncated {}", field));
    }
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

std::size_t bytes_per_row(std::size_t channels) { return (channels + 7) / 8; }

}  // namespace

std::filesystem::path meta_path_for(const std::filesystem::path& raster_path) {
    auto p = raster_path;
    p += ".meta.csv";
    return p;
}

std::uint64_t packed_size(std::size_t rows, std::size_t channels) {
    return kMagic.size() + 12 + static_cast<std::uint64_t>(rows) * bytes_per_row(channels);
}

SpikeRaster read_raster_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DatasetError("malformed header: empty file", 1);
    ++line_no;
    if (trim(line) == kHeaderNames) {
        if (!std::getline(in, line)) throw DatasetError("malformed header: missing values", 2);
        ++line_no;
    }
    const auto head = split(trim(line));
    std::size_t rows = 0, channels = 0;
    std::uint32_t dt = 0;
    if (head.size() != 3 || !parse_number(head[0], rows) || !parse_number(head[1], channels) ||
        !parse_number(head[2], dt) || rows == 0 || channels == 0 || dt == 0) {
        throw DatasetError("malformed header: expected rows,channels,dt_ms", line_no);
    }

    SpikeRaster raster(rows, channels, dt);
    std::size_t r = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (r >= rows) throw DatasetError(fmt::format("dimension mismatch: more than {} rows", rows), line_no);
        const auto cells = split(body);
        if (cells.size() != channels) {
            throw DatasetError(
                fmt::format("dimension mismatch: expected {} columns, got {}", channels, cells.size()),
                line_no);
        }
        for (std::size_t c = 0; c < channels; ++c) {
            if (cells[c] == "1") {
                raster.set(r, c);
            } else if (cells[c] != "0") {
                throw DatasetError(fmt::format("non-binary cell value '{}'", cells[c]), line_no, c + 1);
            }
        }
        ++r;
    }
    if (r != rows) {
        throw DatasetError(fmt::format("dimension mismatch: header says {} rows, found {}", rows, r),
                           line_no);
    }
    return raster;
}

void write_raster_csv(const SpikeRaster& raster, std::ostream& out) {
    out << raster.rows() << ',' << raster.channels() << ',' << raster.dt_ms() << '\n';
    std::string line;
    for (std::size_t r = 0; r < raster.rows(); ++r) {
        line.clear();
        for (auto cell : raster.row(r)) {
            line.push_back(cell ? '1' : '0');
            line.push_back(',');
        }
        line.back() = '\n';
        out << line;
    }
}

SpikeRaster read_raster_packed(std::istream& in) {
    std::array<char, kMagic.size()> magic{};
    if (!in.read(magic.data(), magic.size())) throw DatasetError("malformed header: truncated magic");
    if (std::string_view(magic.data(), magic.size()) != kMagic) {
        throw DatasetError("malformed header: bad magic");
    }
    const auto rows = get_u32(in, "row count");
    const auto channels = get_u32(in, "channel count");
    const auto dt = get_u32(in, "dt");
    if (rows == 0 || channels == 0 || dt == 0) throw DatasetError("malformed header: zero dimension");

    SpikeRaster raster(rows, channels, dt);
    std::vector<unsigned char> packed(bytes_per_row(channels));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()))) {
            throw DatasetError(fmt::format("dimension mismatch: data ends at row {}", r), r + 1);
        }
        for (std::size_t c = 0; c < channels; ++c) {
            if ((packed[c / 8] >> (c % 8)) & 1u) raster.set(r, c);
        }
        if (const auto spare = channels % 8; spare != 0 && (packed.back() >> spare) != 0) {
            throw DatasetError("non-binary cell value: padding bits set", r + 1, channels + 1);
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw DatasetError("dimension mismatch: trailing bytes after last row");
    }
    return raster;
}

void write_raster_packed(const SpikeRaster& raster, std::ostream& out) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, static_cast<std::uint32_t>(raster.rows()));
    put_u32(out, static_cast<std::uint32_t>(raster.channels()));
    put_u32(out, raster.dt_ms());
    std::vector<char> packed(bytes_per_row(raster.channels()));
    for (std::size_t r = 0; r < raster.rows(); ++r) {
        std::fill(packed.begin(), packed.end(), 0);
        const auto cells = raster.row(r);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c]) packed[c / 8] = static_cast<char>(packed[c / 8] | (1 << (c % 8)));
        }
        out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
    }
}

std::vector<NeuronMeta> read_meta_csv(std::istream& in, std::size_t expected_channels) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != kMetaHeader) {
        throw DatasetError("malformed header: expected id,x,y,is_backbone", 1);
    }
    std::vector<NeuronMeta> meta;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto f = split(body);
        NeuronMeta m;
        int flag = 0;
        if (f.size() != 4) throw DatasetError("metadata: expected 4 fields", line_no);
        if (!parse_number(f[0], m.id)) throw DatasetError("metadata: bad id", line_no, 1);
        if (!parse_number(f[1], m.x) || m.x < 0 || m.x > 1) throw DatasetError("metadata: x outside [0,1]", line_no, 2);
        if (!parse_number(f[2], m.y) || m.y < 0 || m.y > 1) throw DatasetError("metadata: y outside [0,1]", line_no, 3);
        if (!parse_number(f[3], flag) || (flag != 0 && flag != 1)) {
            throw DatasetError("metadata: is_backbone must be 0 or 1", line_no, 4);
        }
        if (m.id != meta.size()) throw DatasetError("metadata: ids must be dense and ascending", line_no, 1);
        m.is_backbone = flag == 1;
        meta.push_back(m);
    }
    if (meta.size() != expected_channels) {
        throw DatasetError(fmt::format("dimension mismatch: {} metadata rows for {} channels",
                                       meta.size(), expected_channels));
    }
    return meta;
}

void write_meta_csv(std::span<const NeuronMeta> meta, std::ostream& out) {
    out << kMetaHeader << '\n';
    for (const auto& m : meta) {
        // {} is the shortest representation that round-trips exactly.
        out << fmt::format("{},{},{},{}\n", m.id, m.x, m.y, m.is_backbone ? 1 : 0);
    }
}

std::vector<NeuronMeta> default_meta(std::size_t channels) {
    std::vector<NeuronMeta> meta(channels);
    const double golden = 0.6180339887498949;
    for (std::size_t c = 0; c < channels; ++c) {
        meta[c].id = static_cast<std::uint32_t>(c);
        meta[c].x = std::fmod(0.5 + golden * static_cast<double>(c), 1.0);
        meta[c].y = (static_cast<double>(c) + 0.5) / static_cast<double>(channels);
    }
    return meta;
}

Dataset load_raster(const std::filesystem::path& path, RasterFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(fmt::format("cannot open raster file {}", path.string()));
    Dataset data;
    data.raster = format == RasterFormat::csv ? read_raster_csv(in) : read_raster_packed(in);
    const auto sidecar = meta_path_for(path);
    if (std::filesystem::exists(sidecar)) {
        std::ifstream meta_in(sidecar);
        data.meta = read_meta_csv(meta_in, data.raster.channels());
    } else {
        data.meta = default_meta(data.raster.channels());
    }
    return data;
}

void save_raster(const Dataset& data, const std::filesystem::path& path, RasterFormat format) {
    if (data.meta.size() != data.raster.channels()) {
        throw std::invalid_argument("metadata count must equal channel count");
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
        if (format == RasterFormat::csv) {
            write_raster_csv(data.raster, out);
        } else {
            write_raster_packed(data.raster, out);
        }
        if (!out.flush()) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
    }
    std::ofstream meta_out(meta_path_for(path), std::ios::trunc);
    if (!meta_out) throw std::runtime_error(fmt::format("cannot write {}", meta_path_for(path).string()));
    write_meta_csv(data.meta, meta_out);
}

}  // namespace neuroeco
