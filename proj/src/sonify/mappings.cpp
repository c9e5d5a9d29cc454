#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neuroeco/sonify.hpp"

namespace neuroeco {

double sustain_density(double r_norm) {
    return std::lerp(kSustainMin, kSustainMax, std::sqrt(r_norm));
}

double granular_density(double r_norm) {
    return std::lerp(kGrainDensityMax, kGrainDensityMin, std::pow(r_norm, 1.0 / 6.0));
}

double grain_duration(double r_norm, bool rising) {
    const double r = rising ? r_norm : 1.0 - r_norm;
    return std::lerp(kGrainMinMs, kGrainMaxMs, r);
}

double quantize_grain(double duration_ms, double root_hz) {
    if (!(duration_ms > 0) || !(root_hz > 0)) {
        throw std::invalid_argument("grain duration and root frequency must be positive");
    }
    const double periods = std::max(1.0, std::round(duration_ms * root_hz / 1000.0));
    return periods * 1000.0 / root_hz;
}

// std::lerp is exact at both ends and monotone in between.
double kick_density(double r_norm) { return std::lerp(kKickMax, kKickMin, r_norm); }

}  // namespace neuroeco
