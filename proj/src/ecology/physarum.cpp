#include "neuroeco/ecology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "neuroeco/parallel.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

constexpr std::uint64_t kPhysarumStream = 0x9a'0000'0000ull;

}  // namespace

void validate(const SpeciesParams& p) {
    if (!(p.sensor_offset >= 1.0)) throw std::invalid_argument("sensor_offset must be >= 1");
    if (!(p.sensor_angle > 0.0 && p.sensor_angle < std::numbers::pi)) {
        throw std::invalid_argument("sensor_angle must lie in (0, pi)");
    }
    if (!(p.step_size >= 0.0) || !(p.deposit >= 0.0) || !std::isfinite(p.rotation_angle)) {
        throw std::invalid_argument("step_size and deposit must be non-negative");
    }
}

CouplingMatrix default_coupling(std::size_t species, double self, double other) {
    CouplingMatrix m(species, std::vector<double>(species, other));
    for (std::size_t s = 0; s < species; ++s) m[s][s] = self;
    return m;
}

std::vector<PhysarumAgent> spawn_physarum(std::span<const std::size_t> counts_per_species,
                                          const TrailField& shape, std::uint64_t seed) {
    std::vector<PhysarumAgent> agents;
    std::size_t total = 0;
    for (auto c : counts_per_species) total += c;
    agents.reserve(total);
    const double w = static_cast<double>(shape.width()), h = static_cast<double>(shape.height());
    for (std::size_t s = 0; s < counts_per_species.size(); ++s) {
        for (std::size_t i = 0; i < counts_per_species[s]; ++i) {
            Draws d(seed, kPhysarumStream + agents.size(), ~0ull);
            agents.push_back({d.uniform(0, w), d.uniform(0, h), d.uniform(0, kTwoPi),
                              static_cast<std::uint32_t>(s)});
        }
    }
    return agents;
}

void step_physarum(std::span<PhysarumAgent> agents, std::span<TrailField> fields,
                   std::span<const SpeciesParams> params, const CouplingMatrix& coupling,
                   std::uint64_t seed, std::uint64_t step, std::size_t workers) {
    const std::size_t n_species = fields.size();
    if (n_species == 0 || n_species > kMaxSpecies) throw std::invalid_argument("1..4 species required");
    if (params.size() != n_species || coupling.size() != n_species) {
        throw std::invalid_argument("species params and coupling must match the field count");
    }
    for (const auto& row : coupling) {
        if (row.size() != n_species) throw std::invalid_argument("coupling matrix must be square");
    }
    for (const auto& p : params) validate(p);
    const std::size_t fw = fields[0].width(), fh = fields[0].height();
    for (const auto& f : fields) {
        if (f.width() != fw || f.height() != fh) throw std::invalid_argument("species fields must share a shape");
    }

    struct Precomputed {
        double cos_sensor, sin_sensor, cos_rot, sin_rot;
    };
    std::array<Precomputed, kMaxSpecies> pre{};
    for (std::size_t s = 0; s < n_species; ++s) {
        pre[s] = {std::cos(params[s].sensor_angle), std::sin(params[s].sensor_angle),
                  std::cos(params[s].rotation_angle), std::sin(params[s].rotation_angle)};
    }

    const double w = static_cast<double>(fw), h = static_cast<double>(fh);
    std::vector<std::uint32_t> cells(agents.size());

    // Agents are processed in blocks: probe cells for the whole block are
    // computed and prefetched first, so the random field reads overlap
    // instead of stalling one agent at a time.
    constexpr std::size_t kBlock = 64;
    parallel_for(agents.size(), workers, [&](std::size_t begin, std::size_t end) {
        std::array<std::size_t, 3 * kBlock> probe{};
        for (std::size_t b0 = begin; b0 < end; b0 += kBlock) {
            const std::size_t b1 = std::min(end, b0 + kBlock);
            for (std::size_t i = b0; i < b1; ++i) {
                const auto& a = agents[i];
                if (a.species >= n_species) continue;
                const auto& p = params[a.species];
                const auto& k = pre[a.species];
                const double c = std::cos(a.heading), sn = std::sin(a.heading);
                // Left probe sits at heading - sensor_angle, right at heading + sensor_angle.
                const double dirs[3][2] = {{c, sn},
                                           {c * k.cos_sensor + sn * k.sin_sensor, sn * k.cos_sensor - c * k.sin_sensor},
                                           {c * k.cos_sensor - sn * k.sin_sensor, sn * k.cos_sensor + c * k.sin_sensor}};
                for (int j = 0; j < 3; ++j) {
                    const std::size_t cell =
                        fields[0].cell_index(a.x + dirs[j][0] * p.sensor_offset, a.y + dirs[j][1] * p.sensor_offset);
                    probe[3 * (i - b0) + j] = cell;
                    for (std::size_t s = 0; s < n_species; ++s) __builtin_prefetch(fields[s].values().data() + cell);
                }
            }
            for (std::size_t i = b0; i < b1; ++i) {
                auto& a = agents[i];
                if (a.species >= n_species) continue;
                const auto& p = params[a.species];
                const auto& weights = coupling[a.species];
                double v[3];
                for (int j = 0; j < 3; ++j) {
                    const std::size_t cell = probe[3 * (i - b0) + j];
                    v[j] = 0;
                    for (std::size_t s = 0; s < n_species; ++s) v[j] += weights[s] * fields[s].values()[cell];
                }
                const double front = v[0], left = v[1], right = v[2];

                double turn = 0;
                if (front > left && front > right) {
                    turn = 0;
                } else if (front < left && front < right) {
                    Draws d(seed, kPhysarumStream + i, step);
                    turn = d.uniform() < 0.5 ? -p.rotation_angle : p.rotation_angle;
                } else if (left > right) {
                    turn = -p.rotation_angle;
                } else if (right > left) {
                    turn = p.rotation_angle;
                }
                if (turn != 0) a.heading = wrap_angle(a.heading + turn);

                a.x = wrap_coord(a.x + std::cos(a.heading) * p.step_size, w);
                a.y = wrap_coord(a.y + std::sin(a.heading) * p.step_size, h);
                cells[i] = static_cast<std::uint32_t>(fields[0].cell_index(a.x, a.y));
            }
        }
    });

    constexpr std::size_t kAhead = 16;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (i + kAhead < agents.size() && agents[i + kAhead].species < n_species) {
            __builtin_prefetch(fields[agents[i + kAhead].species].values().data() + cells[i + kAhead], 1);
        }
        const auto s = agents[i].species;
        if (s < n_species) fields[s].values()[cells[i]] += params[s].deposit;
    }
}

}  // namespace neuroeco
