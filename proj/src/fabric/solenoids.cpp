#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "neuroeco/fabric.hpp"

namespace neuroeco {

std::string to_json_line(const SolenoidStrike& s) {
    return fmt::format(R"({{"id":{},"onset_ms":{},"velocity":{},"row":{}}})", s.solenoid_id,
                       s.onset_ms, s.velocity, s.row);
}

StrikeMapper::StrikeMapper(std::span<const std::uint32_t> backbone_order,
                           const FabricProfile& profile, const RateSeries& rate)
    : order_(backbone_order.begin(), backbone_order.end()),
      profile_(profile),
      rate_(rate),
      last_onset_(order_.size(), 0.0),
      armed_(order_.size(), false) {
    if (order_.size() != profile.solenoids) {
        throw std::invalid_argument(fmt::format("hardware profile has {} solenoids but {} backbone neurons",
                                                profile.solenoids, order_.size()));
    }
}

void StrikeMapper::on_row(const RowEvent& row, std::span<const std::uint8_t> spikes,
                          std::vector<SolenoidStrike>& out) {
    if (row.pass != pass_) {
        pass_ = row.pass;
        std::fill(armed_.begin(), armed_.end(), false);
    }
    const double onset = row.t_sim_ms();
    for (std::uint32_t id = 0; id < order_.size(); ++id) {
        const auto channel = order_[id];
        if (channel >= spikes.size() || !spikes[channel]) continue;
        if (armed_[id] && onset - last_onset_[id] < profile_.refractory_ms) {
            ++suppressed_;
            continue;
        }
        armed_[id] = true;
        last_onset_[id] = onset;
        const double r = std::clamp(rate_.norm_at(row.row), 0.0, 1.0);
        out.push_back({id, onset, profile_.velocity_floor + (1.0 - profile_.velocity_floor) * r, row.row});
        ++emitted_;
    }
}

StrikeReport strikes_from_spikes(const SpikeRaster& raster, std::span<const RowEvent> rows,
                                 std::span<const std::uint32_t> backbone_order,
                                 const FabricProfile& profile, const RateSeries& rate) {
    StrikeMapper mapper(backbone_order, profile, rate);
    StrikeReport report;
    for (const auto& e : rows) mapper.on_row(e, raster.row(e.row), report.strikes);
    report.suppressed = mapper.suppressed();
    report.backbone_spikes = mapper.backbone_spikes();
    return report;
}

}  // namespace neuroeco
