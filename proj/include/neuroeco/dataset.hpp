#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace neuroeco {

/// Binary spike matrix: one row per `dt_ms`, one column per channel.
class SpikeRaster {
public:
    SpikeRaster() = default;
    SpikeRaster(std::size_t rows, std::size_t channels, std::uint32_t dt_ms = 1);

    std::size_t rows() const { return rows_; }
    std::size_t channels() const { return channels_; }
    std::uint32_t dt_ms() const { return dt_ms_; }

    bool spike(std::size_t row, std::size_t channel) const {
        return cells_[row * channels_ + channel] != 0;
    }
    void set(std::size_t row, std::size_t channel, bool value = true) {
        cells_[row * channels_ + channel] = value ? 1 : 0;
    }
    /// Per-channel 0/1 bytes for one row.
    std::span<const std::uint8_t> row(std::size_t r) const {
        return {cells_.data() + r * channels_, channels_};
    }

    std::uint64_t total_spikes() const;
    std::vector<std::uint64_t> channel_counts() const;
    std::vector<std::uint32_t> row_counts() const;

    bool operator==(const SpikeRaster&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t channels_ = 0;
    std::uint32_t dt_ms_ = 1;
    std::vector<std::uint8_t> cells_;
};

struct NeuronMeta {
    std::uint32_t id = 0;
    double x = 0;  // unit square
    double y = 0;
    bool is_backbone = false;

    bool operator==(const NeuronMeta&) const = default;
};

struct Dataset {
    SpikeRaster raster;
    std::vector<NeuronMeta> meta;

    bool operator==(const Dataset&) const = default;
};

/// Raised for malformed raster or metadata files. `line` and `column` are
/// 1-based; zero means "not applicable".
class DatasetError : public std::runtime_error {
public:
    DatasetError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// --- file formats ---------------------------------------------------------

enum class RasterFormat { csv, packed };

/// Sidecar holding `id,x,y,is_backbone` for a raster at `raster_path`.
std::filesystem::path meta_path_for(const std::filesystem::path& raster_path);

/// Reads a raster and its metadata sidecar. Without a sidecar the channels
/// get a deterministic lattice layout and no backbone flags.
Dataset load_raster(const std::filesystem::path& path, RasterFormat format);
void save_raster(const Dataset& data, const std::filesystem::path& path, RasterFormat format);

SpikeRaster read_raster_csv(std::istream& in);
void write_raster_csv(const SpikeRaster& raster, std::ostream& out);
SpikeRaster read_raster_packed(std::istream& in);
void write_raster_packed(const SpikeRaster& raster, std::ostream& out);
std::vector<NeuronMeta> read_meta_csv(std::istream& in, std::size_t expected_channels);
void write_meta_csv(std::span<const NeuronMeta> meta, std::ostream& out);
std::vector<NeuronMeta> default_meta(std::size_t channels);

/// Bytes in a packed raster file with these dimensions.
std::uint64_t packed_size(std::size_t rows, std::size_t channels);

// --- synthetic recordings ---------------------------------------------------

struct BurstSpec {
    std::size_t n_bursts = 6;
    double burst_rate_multiplier = 100.0;  // relative to the background midpoint
    std::size_t burst_len_ms = 200;
    std::size_t backbone_k = 27;
};

struct SyntheticSpec {
    std::uint64_t seed = 7;
    std::size_t rows = 180'000;
    std::size_t channels = 131;
    double background_hz_lo = 0.5;
    double background_hz_hi = 1.5;
    BurstSpec burst;
};

/// Background channels fire as independent Bernoulli processes whose rates
/// are stratified over [lo, hi] (mean exactly the midpoint). During each
/// planted burst the backbone channels fire at midpoint x multiplier.
Dataset gen_synthetic(const SyntheticSpec& spec);

/// Row intervals [start, end) of the bursts gen_synthetic plants.
std::vector<std::pair<std::size_t, std::size_t>> planted_bursts(const SyntheticSpec& spec);

// --- analysis ---------------------------------------------------------------

struct RateSeries {
    std::size_t window_ms = 0;
    std::uint32_t dt_ms = 1;
    std::vector<double> raw;   // spikes per second
    std::vector<double> norm;  // raw / max(raw), or 0

    std::size_t size() const { return raw.size(); }
    /// norm at `row`, clamped to the series bounds.
    double norm_at(std::size_t row) const { return norm[row < norm.size() ? row : norm.size() - 1]; }
};

/// Trailing-window population rate over all channels. Windows longer than
/// the raster are clamped to its length.
RateSeries population_rate(const SpikeRaster& raster, std::size_t window_ms = 1000);

/// Wraps an externally supplied normalized series (for replayed rate files
/// and tests). raw is set equal to norm.
RateSeries rate_from_norm(std::vector<double> norm, std::uint32_t dt_ms = 1);

struct BurstInterval {
    std::size_t start = 0;  // first row at or above the open threshold
    std::size_t end = 0;    // first row of the closing sub-threshold run

    bool operator==(const BurstInterval&) const = default;
};

struct BurstParams {
    double theta_hi = 0.5;
    double theta_lo = 0.25;
    std::size_t min_dur_ms = 50;
    std::size_t min_gap_ms = 100;
};

/// Two-threshold hysteresis on the normalized rate.
std::vector<BurstInterval> detect_bursts(const RateSeries& rate, const BurstParams& params = {});

struct BackboneSelection {
    std::vector<double> scores;          // per channel, summed correlation
    std::vector<std::uint32_t> ranked;   // the k selected channels, best first
};

/// Top-k channels by summed pairwise Pearson correlation of binned counts.
/// Ties go to the lower channel id.
BackboneSelection select_backbone(const SpikeRaster& raster, std::size_t k,
                                  std::size_t bin_ms = 10);
void apply_backbone(std::vector<NeuronMeta>& meta, const BackboneSelection& selection);

/// Backbone channel ids in solenoid order: by rank if a selection is given,
/// else ascending id.
std::vector<std::uint32_t> backbone_order(std::span<const NeuronMeta> meta,
                                          const BackboneSelection* selection = nullptr);

struct Region {
    std::vector<std::size_t> cells;  // row-major indices
    double mass = 0;
    double cx = 0;  // centroid in grid coordinates
    double cy = 0;
};

struct ZoneMap {
    std::size_t grid = 0;
    std::vector<double> density;     // grid x grid, row-major (y, x)
    std::vector<std::uint8_t> mask;  // density above the 75th percentile of nonzero cells
    double threshold = 0;

    /// 4-connected components of the mask.
    std::vector<Region> regions() const;
};

/// Spike-count weighted Gaussian density of backbone positions.
ZoneMap backbone_zones(std::span<const NeuronMeta> meta, const SpikeRaster& raster,
                       std::size_t grid = 32, double sigma = 0.08);

}  // namespace neuroeco
