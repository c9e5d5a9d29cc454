#include "neuroeco/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroeco/kernels.hpp"

namespace neuroeco {

RateSeries population_rate(const SpikeRaster& raster, std::size_t window_ms) {
    if (window_ms == 0) throw std::invalid_argument("rate window must be >= 1 ms");
    const std::size_t n = raster.rows();
    const std::size_t dt = raster.dt_ms();
    const std::size_t window_rows = std::clamp<std::size_t>(window_ms / dt, 1, n);

    RateSeries out;
    out.window_ms = window_rows * dt;
    out.dt_ms = raster.dt_ms();
    out.raw.resize(n);
    out.norm.assign(n, 0.0);

    const auto counts = raster.row_counts();
    const double seconds = static_cast<double>(out.window_ms) / 1000.0;
    std::uint64_t sum = 0;
    for (std::size_t r = 0; r < n; ++r) {
        sum += counts[r];
        if (r >= window_rows) sum -= counts[r - window_rows];
        out.raw[r] = static_cast<double>(sum) / seconds;
    }
    const double peak = *std::max_element(out.raw.begin(), out.raw.end());
    if (peak > 0) {
        for (std::size_t r = 0; r < n; ++r) out.norm[r] = out.raw[r] / peak;
    }
    return out;
}

RateSeries rate_from_norm(std::vector<double> norm, std::uint32_t dt_ms) {
    RateSeries out;
    out.window_ms = dt_ms;
    out.dt_ms = dt_ms;
    for (auto& v : norm) v = std::clamp(v, 0.0, 1.0);
    out.raw = norm;
    out.norm = std::move(norm);
    return out;
}

std::vector<BurstInterval> detect_bursts(const RateSeries& rate, const BurstParams& params) {
    if (!(params.theta_lo >= 0 && params.theta_lo < params.theta_hi && params.theta_hi <= 1)) {
        throw std::invalid_argument("burst thresholds must satisfy 0 <= lo < hi <= 1");
    }
    const std::size_t dt = std::max<std::uint32_t>(rate.dt_ms, 1);
    const std::size_t min_dur = (params.min_dur_ms + dt - 1) / dt;
    const std::size_t min_gap = std::max<std::size_t>(1, (params.min_gap_ms + dt - 1) / dt);
    const std::size_t n = rate.norm.size();

    std::vector<BurstInterval> out;
    auto emit = [&](std::size_t start, std::size_t end) {
        if (end > start && end - start >= min_dur) out.push_back({start, end});
    };

    bool open = false;
    std::size_t start = 0;
    std::size_t below_since = 0;
    bool below = false;
    for (std::size_t r = 0; r < n; ++r) {
        const double v = rate.norm[r];
        if (!open) {
            if (v >= params.theta_hi) {
                open = true;
                start = r;
                below = false;
            }
            continue;
        }
        if (v < params.theta_lo) {
            if (!below) {
                below = true;
                below_since = r;
            }
            if (r - below_since + 1 >= min_gap) {
                emit(start, below_since);
                open = false;
            }
        } else {
            below = false;
        }
    }
    if (open && n > 0) emit(start, below ? below_since : n - 1);
    return out;
}

BackboneSelection select_backbone(const SpikeRaster& raster, std::size_t k, std::size_t bin_ms) {
    const std::size_t channels = raster.channels();
    if (k < 1 || k > channels) throw std::invalid_argument("backbone size out of range");
    const std::size_t bin_rows = std::max<std::size_t>(1, bin_ms / raster.dt_ms());
    const std::size_t bins = (raster.rows() + bin_rows - 1) / bin_rows;

    // Centered bin counts per channel, then Pearson via dot products.
    std::vector<std::vector<double>> series(channels, std::vector<double>(bins, 0.0));
    for (std::size_t r = 0; r < raster.rows(); ++r) {
        const auto cells = raster.row(r);
        for (std::size_t c = 0; c < channels; ++c) series[c][r / bin_rows] += cells[c];
    }
    const auto& kern = kernels::active();
    std::vector<double> norms(channels);
    for (auto& s : series) {
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(bins);
        for (auto& v : s) v -= mean;
    }
    for (std::size_t c = 0; c < channels; ++c) {
        norms[c] = std::sqrt(kern.dot(series[c].data(), series[c].data(), bins));
    }

    std::vector<std::vector<double>> corr(channels);
    for (auto& row : corr) row.reserve(channels);
    for (std::size_t i = 0; i < channels; ++i) {
        for (std::size_t j = i + 1; j < channels; ++j) {
            double r = 0;
            if (norms[i] > 0 && norms[j] > 0) {
                r = kern.dot(series[i].data(), series[j].data(), bins) / (norms[i] * norms[j]);
            }
            corr[i].push_back(r);
            corr[j].push_back(r);
        }
    }

    BackboneSelection sel;
    sel.scores.resize(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        // Sorted summation makes the score independent of channel order.
        std::sort(corr[c].begin(), corr[c].end());
        sel.scores[c] = std::accumulate(corr[c].begin(), corr[c].end(), 0.0);
    }
    std::vector<std::uint32_t> ids(channels);
    std::iota(ids.begin(), ids.end(), 0u);
    std::stable_sort(ids.begin(), ids.end(), [&](std::uint32_t a, std::uint32_t b) {
        return sel.scores[a] > sel.scores[b];
    });
    sel.ranked.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
    return sel;
}

void apply_backbone(std::vector<NeuronMeta>& meta, const BackboneSelection& selection) {
    for (auto& m : meta) m.is_backbone = false;
    for (auto id : selection.ranked) {
        if (id >= meta.size()) throw std::out_of_range("backbone id outside metadata");
        meta[id].is_backbone = true;
    }
}

std::vector<std::uint32_t> backbone_order(std::span<const NeuronMeta> meta,
                                          const BackboneSelection* selection) {
    std::vector<std::uint32_t> out;
    if (selection) {
        for (auto id : selection->ranked) {
            if (id < meta.size() && meta[id].is_backbone) out.push_back(id);
        }
        if (out.size() == static_cast<std::size_t>(std::count_if(
                              meta.begin(), meta.end(), [](const auto& m) { return m.is_backbone; }))) {
            return out;
        }
        out.clear();
    }
    for (const auto& m : meta) {
        if (m.is_backbone) out.push_back(m.id);
    }
    return out;
}

ZoneMap backbone_zones(std::span<const NeuronMeta> meta, const SpikeRaster& raster,
                       std::size_t grid, double sigma) {
    if (grid == 0) throw std::invalid_argument("zone grid must be non-empty");
    if (!(sigma > 0)) throw std::invalid_argument("zone kernel width must be positive");
    if (std::none_of(meta.begin(), meta.end(), [](const auto& m) { return m.is_backbone; })) {
        throw std::invalid_argument("no backbone neurons flagged");
    }
    const auto counts = raster.channel_counts();
    ZoneMap z;
    z.grid = grid;
    z.density.assign(grid * grid, 0.0);
    z.mask.assign(grid * grid, 0);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const double g = static_cast<double>(grid);
    for (const auto& m : meta) {
        if (!m.is_backbone || m.id >= counts.size() || counts[m.id] == 0) continue;
        const double w = static_cast<double>(counts[m.id]);
        for (std::size_t y = 0; y < grid; ++y) {
            const double dy = (static_cast<double>(y) + 0.5) / g - m.y;
            for (std::size_t x = 0; x < grid; ++x) {
                const double dx = (static_cast<double>(x) + 0.5) / g - m.x;
                z.density[y * grid + x] += w * std::exp(-(dx * dx + dy * dy) * inv);
            }
        }
    }

    std::vector<double> nonzero;
    for (double v : z.density) {
        if (v > 0) nonzero.push_back(v);
    }
    if (nonzero.empty()) return z;
    std::sort(nonzero.begin(), nonzero.end());
    // Linear interpolation between closest ranks.
    const double pos = 0.75 * static_cast<double>(nonzero.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, nonzero.size() - 1);
    z.threshold = nonzero[lo] + (nonzero[hi] - nonzero[lo]) * (pos - static_cast<double>(lo));
    for (std::size_t i = 0; i < z.density.size(); ++i) z.mask[i] = z.density[i] > z.threshold ? 1 : 0;
    return z;
}

std::vector<Region> ZoneMap::regions() const {
    std::vector<Region> out;
    std::vector<bool> seen(mask.size(), false);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask[start] || seen[start]) continue;
        Region reg;
        stack.push_back(start);
        seen[start] = true;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            reg.cells.push_back(i);
            const std::size_t x = i % grid, y = i / grid;
            const double m = density[i];
            reg.mass += m;
            reg.cx += m * static_cast<double>(x);
            reg.cy += m * static_cast<double>(y);
            auto visit = [&](std::size_t j) {
                if (mask[j] && !seen[j]) {
                    seen[j] = true;
                    stack.push_back(j);
                }
            };
            if (x > 0) visit(i - 1);
            if (x + 1 < grid) visit(i + 1);
            if (y > 0) visit(i - grid);
            if (y + 1 < grid) visit(i + grid);
        }
        if (reg.mass > 0) {
            reg.cx /= reg.mass;
            reg.cy /= reg.mass;
        }
        std::sort(reg.cells.begin(), reg.cells.end());
        out.push_back(std::move(reg));
    }
    return out;
}

}  // namespace neuroeco
