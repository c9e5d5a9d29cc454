#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "neuroeco/fabric.hpp"

namespace neuroeco {
namespace {

std::uint8_t level_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L));
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::size_t led_cell(double x, double y) {
    const auto cx = std::min<std::size_t>(kLedSide - 1, static_cast<std::size_t>(std::max(0.0, x) * kLedSide));
    const auto cy = std::min<std::size_t>(kLedSide - 1, static_cast<std::size_t>(std::max(0.0, y) * kLedSide));
    return cy * kLedSide + cx;
}

std::string to_json_line(const LedFrame& f) {
    std::size_t lit = 0;
    std::uint64_t sum = 0;
    for (std::size_t p = 0; p < kLedPixels; ++p) {
        const auto i = p * 3;
        if (f.rgb[i] || f.rgb[i + 1] || f.rgb[i + 2]) ++lit;
        sum += f.rgb[i] + f.rgb[i + 1] + f.rgb[i + 2];
    }
    return fmt::format(R"({{"frame":{},"matrix":{},"t_us":{},"lit":{},"sum":{},"fnv":"{:016x}"}})",
                       f.index, f.matrix_id, f.t_us, lit, sum, fnv1a(f.rgb));
}

void write_led_ppm(const LedFrame& f, std::ostream& out) {
    out << "P6\n" << kLedSide << ' ' << kLedSide << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
}

LedRenderer::LedRenderer(std::span<const NeuronMeta> meta, const FabricProfile& profile)
    : profile_(profile) {
    if (!(profile.led_fps > 0)) throw std::invalid_argument("LED frame rate must be positive");
    if (!(profile.led_decay >= 0 && profile.led_decay <= 1)) {
        throw std::invalid_argument("LED decay must lie in [0, 1]");
    }
    for (const auto& m : meta) {
        cell_of_.push_back(led_cell(m.x, m.y));
        backbone_.push_back(m.is_backbone);
    }
}

std::int64_t LedRenderer::frame_time_us(std::uint64_t k) const {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(k) * 1e6 / profile_.led_fps));
}

void LedRenderer::render(std::vector<LedFrame>& out) {
    LedFrame f0, f1;
    f0.matrix_id = 0;
    f1.matrix_id = 1;
    f0.index = f1.index = next_frame_;
    f0.t_us = f1.t_us = frame_time_us(next_frame_);
    for (std::size_t p = 0; p < kLedPixels; ++p) {
        level0_[p] = hit0_[p] ? 1.0 : level0_[p] * profile_.led_decay;
        level1_[p] = hit1_[p] ? 1.0 : level1_[p] * profile_.led_decay;
        const auto a = level_byte(level0_[p]);
        f0.rgb[p * 3] = f0.rgb[p * 3 + 1] = f0.rgb[p * 3 + 2] = a;
        const auto b = level_byte(level1_[p]);
        f1.rgb[p * 3] = b;
        f1.rgb[p * 3 + 1] = level_byte(level1_[p] * std::clamp(cluster_[p], 0.0, 1.0));
        f1.rgb[p * 3 + 2] = b;
    }
    hit0_.fill(false);
    hit1_.fill(false);
    out.push_back(f0);
    out.push_back(f1);
    ++next_frame_;
}

void LedRenderer::on_row(const RowEvent& row, std::span<const std::uint8_t> spikes,
                         std::vector<LedFrame>& out) {
    if (row.pass != pass_) {
        pass_ = row.pass;
        next_frame_ = 0;
    }
    while (frame_time_us(next_frame_) < row.t_sim_us) render(out);
    const std::size_t n = std::min(spikes.size(), cell_of_.size());
    for (std::size_t c = 0; c < n; ++c) {
        if (!spikes[c]) continue;
        hit0_[cell_of_[c]] = true;
        if (backbone_[c]) hit1_[cell_of_[c]] = true;
    }
}

void LedRenderer::flush(std::int64_t t_end_us, std::vector<LedFrame>& out) {
    while (frame_time_us(next_frame_) <= t_end_us) render(out);
}

}  // namespace neuroeco
