#include "neuroeco/ecology.hpp"

#include <cmath>
#include <stdexcept>

#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

constexpr std::uint64_t kTermiteStream = 0x7e'0000'0000ull;

}  // namespace

std::vector<TermiteAgent> spawn_termites(std::size_t channels, const TrailField& field,
                                         std::uint64_t seed) {
    std::vector<TermiteAgent> agents(channels);
    for (std::size_t i = 0; i < channels; ++i) {
        Draws d(seed, kTermiteStream + i, ~0ull);
        agents[i].neuron_id = static_cast<std::uint32_t>(i);
        agents[i].pos = {d.uniform(0, static_cast<double>(field.width())),
                         d.uniform(0, static_cast<double>(field.height()))};
        agents[i].heading = d.uniform(0, kTwoPi);
    }
    return agents;
}

void step_termites(std::span<TermiteAgent> agents, TrailField& field,
                   std::span<const std::uint8_t> spike_row, const TermiteParams& params,
                   std::uint64_t seed, std::uint64_t step, std::vector<DepositRecord>* log,
                   DepositCounts* counts) {
    const double w = static_cast<double>(field.width());
    const double h = static_cast<double>(field.height());
    for (std::size_t i = 0; i < agents.size(); ++i) {
        auto& a = agents[i];
        Draws d(seed, kTermiteStream + a.neuron_id, step);
        const double noise = d.uniform(-1.0, 1.0) * params.noise;
        const double spontaneous = d.uniform();
        a.heading = wrap_angle(a.heading + noise);

        auto probe = [&](double angle) {
            return field.sample(a.pos.x + std::cos(angle) * params.probe_distance,
                                a.pos.y + std::sin(angle) * params.probe_distance);
        };
        const double left = probe(a.heading - params.probe_angle);
        const double centre = probe(a.heading);
        const double right = probe(a.heading + params.probe_angle);
        const double strongest = std::max({left, centre, right});
        if (left > centre && left > right) {
            a.heading = wrap_angle(a.heading - params.turn_angle);
        } else if (right > centre && right > left) {
            a.heading = wrap_angle(a.heading + params.turn_angle);
        }

        a.pos.x = wrap_coord(a.pos.x + std::cos(a.heading) * params.step_size, w);
        a.pos.y = wrap_coord(a.pos.y + std::sin(a.heading) * params.step_size, h);

        const bool spiked = a.neuron_id < spike_row.size() && spike_row[a.neuron_id] != 0;
        DepositReason reason;
        if (spiked) {
            reason = DepositReason::spike;
        } else if (strongest > params.deposit_threshold) {
            reason = DepositReason::sensed;
        } else if (spontaneous < params.p_spontaneous) {
            reason = DepositReason::spontaneous;
        } else {
            continue;
        }
        const auto cell = field.cell_index(a.pos.x, a.pos.y);
        field.values()[cell] += params.deposit;
        if (log) log->push_back({step, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(cell), reason});
        if (counts) {
            switch (reason) {
                case DepositReason::spike: ++counts->spike; break;
                case DepositReason::sensed: ++counts->sensed; break;
                case DepositReason::spontaneous: ++counts->spontaneous; break;
            }
        }
    }
}

}  // namespace neuroeco
