#include "neuroeco/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

// Entity ids for the counter-based streams used below.
constexpr std::uint64_t kPermEntity = 1ull << 40;
constexpr std::uint64_t kBackboneEntity = 2ull << 40;
constexpr std::uint64_t kBurstEntity = 3ull << 40;
constexpr std::uint64_t kPositionEntity = 4ull << 40;

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, std::uint64_t entity) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    Draws d(seed, entity, 0);
    for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[d.below(i)]);
    return v;
}

void validate(const SyntheticSpec& spec) {
    if (spec.rows == 0) throw std::invalid_argument("synthetic raster needs rows >= 1");
    if (spec.channels == 0) throw std::invalid_argument("synthetic raster needs channels >= 1");
    if (spec.burst.backbone_k > spec.channels) {
        throw std::invalid_argument("backbone_k exceeds channel count");
    }
    if (spec.background_hz_lo < 0 || spec.background_hz_hi < spec.background_hz_lo) {
        throw std::invalid_argument("background rate range must satisfy 0 <= lo <= hi");
    }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> planted_bursts(const SyntheticSpec& spec) {
    validate(spec);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const std::size_t n = spec.burst.n_bursts;
    if (n == 0 || spec.burst.burst_len_ms == 0) return out;
    // One burst per equal segment, so bursts never overlap.
    const std::size_t segment = spec.rows / n;
    const std::size_t len = std::min(spec.burst.burst_len_ms, segment);
    if (len == 0) return out;
    Draws d(spec.seed, kBurstEntity, 0);
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t begin = b * segment;
        const std::size_t start = begin + d.below(segment - len + 1);
        out.emplace_back(start, start + len);
    }
    return out;
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    const std::size_t channels = spec.channels;
    Dataset data{SpikeRaster(spec.rows, channels, 1), std::vector<NeuronMeta>(channels)};

    // Stratified rates: the channel mean equals the range midpoint exactly.
    const auto strata = shuffled(channels, spec.seed, kPermEntity);
    std::vector<double> p_background(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const double u = (static_cast<double>(strata[c]) + 0.5) / static_cast<double>(channels);
        const double hz = spec.background_hz_lo + (spec.background_hz_hi - spec.background_hz_lo) * u;
        p_background[c] = hz / 1000.0;
    }

    const auto order = shuffled(channels, spec.seed, kBackboneEntity);
    std::vector<bool> backbone(channels, false);
    for (std::size_t i = 0; i < spec.burst.backbone_k; ++i) backbone[order[i]] = true;

    const double midpoint = 0.5 * (spec.background_hz_lo + spec.background_hz_hi);
    const double p_burst = std::min(1.0, midpoint * spec.burst.burst_rate_multiplier / 1000.0);
    const auto bursts = planted_bursts(spec);

    std::vector<bool> in_burst(spec.rows, false);
    for (auto [s, e] : bursts) std::fill(in_burst.begin() + s, in_burst.begin() + e, true);

    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t r = 0; r < spec.rows; ++r) {
            const double p = (backbone[c] && in_burst[r]) ? p_burst : p_background[c];
            if (p <= 0.0) continue;
            if (rng::to_unit(rng::prf(spec.seed, c, r, 0)) < p) data.raster.set(r, c);
        }
    }

    for (std::size_t c = 0; c < channels; ++c) {
        Draws d(spec.seed, kPositionEntity + c, 0);
        auto& m = data.meta[c];
        m.id = static_cast<std::uint32_t>(c);
        m.x = d.uniform();
        m.y = d.uniform();
        m.is_backbone = backbone[c];
    }
    return data;
}

}  // namespace neuroeco
