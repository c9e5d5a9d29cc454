#include "neuroeco/ecology.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string_view>

namespace neuroeco {
namespace {

constexpr std::string_view kCheckpointMagic = "SNECO1";

// Little-endian encoding of fixed-width values.
template <typename T>
void put(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    if (!in.read(bytes.data(), sizeof(T))) throw std::runtime_error("checkpoint truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void put_field(std::ostream& out, const TrailField& f) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.width()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.height()));
    for (double v : f.values()) put(out, v);
}

void get_field(std::istream& in, TrailField& f) {
    const auto w = get<std::uint32_t>(in), h = get<std::uint32_t>(in);
    if (w != f.width() || h != f.height()) throw std::runtime_error("checkpoint field shape mismatch");
    for (double& v : f.values()) v = get<double>(in);
}

std::uint8_t to_byte(double v, double peak) {
    if (!(peak > 0)) return 0;
    return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v / peak), 0L, 255L));
}

}  // namespace

void Ecosystem::save_checkpoint(std::ostream& out) const {
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    put<std::uint64_t>(out, row_step_);
    put<std::uint64_t>(out, tick_);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(fields_.size()));
    for (const auto& f : fields_) put_field(out, f);
    put<std::uint64_t>(out, physarum_.size());
    for (const auto& a : physarum_) {
        put(out, a.x);
        put(out, a.y);
        put(out, a.heading);
        put(out, a.species);
    }
    put_field(out, termite_field_);
    put<std::uint64_t>(out, termites_.size());
    for (const auto& t : termites_) {
        put(out, t.neuron_id);
        put(out, t.pos.x);
        put(out, t.pos.y);
        put(out, t.heading);
    }
    put<std::uint64_t>(out, boids_.size());
    for (const auto& b : boids_) {
        put(out, b.pos.x);
        put(out, b.pos.y);
        put(out, b.vel.x);
        put(out, b.vel.y);
    }
    put<std::uint64_t>(out, pending_kicks_.size());
    for (auto k : pending_kicks_) put(out, k);
}

void Ecosystem::load_checkpoint(std::istream& in) {
    std::array<char, kCheckpointMagic.size()> magic{};
    if (!in.read(magic.data(), magic.size()) ||
        std::string_view(magic.data(), magic.size()) != kCheckpointMagic) {
        throw std::runtime_error("not an SNECO1 checkpoint");
    }
    row_step_ = get<std::uint64_t>(in);
    tick_ = get<std::uint64_t>(in);
    if (get<std::uint32_t>(in) != fields_.size()) throw std::runtime_error("checkpoint species mismatch");
    for (auto& f : fields_) get_field(in, f);
    physarum_.resize(get<std::uint64_t>(in));
    for (auto& a : physarum_) {
        a.x = get<double>(in);
        a.y = get<double>(in);
        a.heading = get<double>(in);
        a.species = get<std::uint32_t>(in);
    }
    get_field(in, termite_field_);
    termites_.resize(get<std::uint64_t>(in));
    for (auto& t : termites_) {
        t.neuron_id = get<std::uint32_t>(in);
        t.pos.x = get<double>(in);
        t.pos.y = get<double>(in);
        t.heading = get<double>(in);
    }
    boids_.resize(get<std::uint64_t>(in));
    for (auto& b : boids_) {
        b.pos.x = get<double>(in);
        b.pos.y = get<double>(in);
        b.vel.x = get<double>(in);
        b.vel.y = get<double>(in);
    }
    pending_kicks_.resize(get<std::uint64_t>(in));
    for (auto& k : pending_kicks_) k = get<std::uint8_t>(in);
}

void write_pgm(const TrailField& field, std::ostream& out) {
    out << "P5\n" << field.width() << ' ' << field.height() << "\n255\n";
    const double peak = field.max();
    std::vector<char> bytes;
    bytes.reserve(field.values().size());
    for (double v : field.values()) bytes.push_back(static_cast<char>(to_byte(v, peak)));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_ppm_composite(std::span<const TrailField> fields, std::ostream& out) {
    if (fields.empty()) throw std::invalid_argument("composite needs at least one field");
    static constexpr std::array<std::array<double, 3>, kMaxSpecies> tint{
        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}}};
    const std::size_t w = fields[0].width(), h = fields[0].height();
    out << "P6\n" << w << ' ' << h << "\n255\n";
    std::vector<double> peaks;
    for (const auto& f : fields) peaks.push_back(f.max());
    std::vector<char> bytes(w * h * 3);
    for (std::size_t i = 0; i < w * h; ++i) {
        std::array<double, 3> rgb{};
        for (std::size_t s = 0; s < fields.size() && s < kMaxSpecies; ++s) {
            if (!(peaks[s] > 0)) continue;
            const double level = fields[s].values()[i] / peaks[s];
            for (int c = 0; c < 3; ++c) rgb[c] += tint[s][c] * level;
        }
        for (int c = 0; c < 3; ++c) {
            bytes[i * 3 + c] = static_cast<char>(std::clamp(std::lround(255.0 * rgb[c]), 0L, 255L));
        }
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace neuroeco
