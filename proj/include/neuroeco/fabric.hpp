#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "neuroeco/clock.hpp"
#include "neuroeco/dataset.hpp"

namespace neuroeco {

struct FabricProfile {
    std::size_t solenoids = 27;
    double refractory_ms = 40.0;
    double velocity_floor = 0.3;
    double led_fps = 30.0;
    double led_decay = 0.85;
};

struct SolenoidStrike {
    std::uint32_t solenoid_id = 0;
    double onset_ms = 0;
    double velocity = 0;
    std::size_t row = 0;

    bool operator==(const SolenoidStrike&) const = default;
};

std::string to_json_line(const SolenoidStrike& s);

/// Backbone spikes to solenoid strikes. Solenoid i is driven by
/// backbone_order[i]; strikes closer than the refractory time to the previous
/// strike on the same solenoid are suppressed and counted.
class StrikeMapper {
public:
    StrikeMapper(std::span<const std::uint32_t> backbone_order, const FabricProfile& profile,
                 const RateSeries& rate);

    void on_row(const RowEvent& row, std::span<const std::uint8_t> spikes,
                std::vector<SolenoidStrike>& out);

    std::uint64_t emitted() const { return emitted_; }
    std::uint64_t suppressed() const { return suppressed_; }
    std::uint64_t backbone_spikes() const { return emitted_ + suppressed_; }

private:
    std::vector<std::uint32_t> order_;
    FabricProfile profile_;
    const RateSeries& rate_;
    std::vector<double> last_onset_;
    std::vector<bool> armed_;
    std::uint32_t pass_ = 0;
    std::uint64_t emitted_ = 0;
    std::uint64_t suppressed_ = 0;
};

struct StrikeReport {
    std::vector<SolenoidStrike> strikes;
    std::uint64_t suppressed = 0;
    std::uint64_t backbone_spikes = 0;
};

StrikeReport strikes_from_spikes(const SpikeRaster& raster, std::span<const RowEvent> rows,
                                 std::span<const std::uint32_t> backbone_order,
                                 const FabricProfile& profile, const RateSeries& rate);

inline constexpr std::size_t kLedSide = 16;
inline constexpr std::size_t kLedPixels = kLedSide * kLedSide;

struct LedFrame {
    std::uint32_t matrix_id = 0;
    std::uint64_t index = 0;
    std::int64_t t_us = 0;
    std::array<std::uint8_t, kLedPixels * 3> rgb{};  // row-major, RGB per pixel

    std::array<std::uint8_t, 3> pixel(std::size_t x, std::size_t y) const {
        const auto i = (y * kLedSide + x) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
};

std::string to_json_line(const LedFrame& f);
void write_led_ppm(const LedFrame& f, std::ostream& out);

/// LED cell for a unit-square position: (floor(16x), floor(16y)) clamped.
std::size_t led_cell(double x, double y);

/// Renders matrix 0 (every neuron) and matrix 1 (backbone only, green
/// scaled by agent clustering) at a fixed frame rate on the simulated
/// timeline. A spike sets its cell to full brightness in the next frame;
/// each frame first multiplies brightness by the decay factor.
class LedRenderer {
public:
    LedRenderer(std::span<const NeuronMeta> meta, const FabricProfile& profile);

    /// Emits frames due strictly before this row, then records its spikes.
    void on_row(const RowEvent& row, std::span<const std::uint8_t> spikes, std::vector<LedFrame>& out);
    /// Emits all frames up to and including time t_end_us.
    void flush(std::int64_t t_end_us, std::vector<LedFrame>& out);
    void set_cluster_intensity(const std::array<double, kLedPixels>& intensity) { cluster_ = intensity; }

    std::int64_t frame_time_us(std::uint64_t k) const;

private:
    void render(std::vector<LedFrame>& out);

    std::vector<std::size_t> cell_of_;
    std::vector<bool> backbone_;
    FabricProfile profile_;
    std::array<double, kLedPixels> level0_{}, level1_{};
    std::array<bool, kLedPixels> hit0_{}, hit1_{};
    std::array<double, kLedPixels> cluster_{};
    std::uint64_t next_frame_ = 0;
    std::uint32_t pass_ = 0;
};

}  // namespace neuroeco
