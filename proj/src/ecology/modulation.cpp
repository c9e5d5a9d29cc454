#include "neuroeco/ecology.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <fmt/format.h>

namespace neuroeco {

double ParamRange::at(double r_norm) const {
    const double v = min + (max - min) * r_norm;
    return std::clamp(v, std::min(min, max), std::max(min, max));
}

ModulatedParams modulate(double r_norm, const ModulationMap& map) {
    if (!(r_norm >= 0.0 && r_norm <= 1.0)) {
        static std::atomic<bool> reported{false};
        if (!reported.exchange(true)) {
            fmt::print(stderr, "modulate: r_norm {} outside [0, 1], clamping\n", r_norm);
        }
        r_norm = std::isnan(r_norm) ? 0.0 : std::clamp(r_norm, 0.0, 1.0);
    }
    ModulatedParams out;
    out.species.reserve(map.species.size());
    for (const auto& s : map.species) {
        SpeciesParams p;
        p.sensor_angle = s.sensor_angle.at(r_norm);
        p.sensor_offset = s.sensor_offset.at(r_norm);
        p.step_size = s.step_size.at(r_norm);
        p.rotation_angle = s.rotation_angle.at(r_norm);
        p.deposit = s.deposit.at(r_norm);
        out.species.push_back(p);
    }
    out.w_coh = map.boids.w_coh.at(r_norm);
    out.w_sep = map.boids.w_sep.at(r_norm);
    out.w_ali = map.boids.w_ali.at(r_norm);
    out.max_speed = map.boids.max_speed.at(r_norm);
    return out;
}

}  // namespace neuroeco
