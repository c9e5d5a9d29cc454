#include "neuroeco/ecology.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "neuroeco/parallel.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {

Ecosystem::Ecosystem(const EcologyConfig& config, std::size_t channels, std::uint64_t seed)
    : config_(config), seed_(seed) {
    if (config.species == 0 || config.species > kMaxSpecies) {
        throw std::invalid_argument("ecology supports 1..4 physarum species");
    }
    if (config.modulation.species.size() < config.species) {
        throw std::invalid_argument("modulation map needs an entry per species");
    }
    coupling_ = default_coupling(config.species, config.coupling_self, config.coupling_other);
    fields_.assign(config.species, TrailField(config.field_width, config.field_height));
    const std::vector<std::size_t> counts(config.species, config.agents_per_species);
    physarum_ = spawn_physarum(counts, fields_[0], rng::derive(seed, "physarum"));

    termite_field_ = TrailField(config.termite_field, config.termite_field);
    termites_ = spawn_termites(channels, termite_field_, rng::derive(seed, "termites"));

    world_ = {static_cast<double>(config.field_width), static_cast<double>(config.field_height)};
    boids_ = spawn_boids(config.boids, world_, config.boid_params.max_speed,
                         rng::derive(seed, "boids"));
    pending_kicks_.assign(channels, 0);
}

void Ecosystem::on_row(std::span<const std::uint8_t> spikes) {
    step_termites(termites_, termite_field_, spikes, config_.termites, rng::derive(seed_, "termites"),
                  row_step_, config_.audit_deposits ? &deposit_log_ : nullptr, &deposit_counts_);
    const std::size_t n = std::min(spikes.size(), pending_kicks_.size());
    for (std::size_t c = 0; c < n; ++c) pending_kicks_[c] |= spikes[c];
    ++row_step_;
}

void Ecosystem::tick(double r_norm) {
    const auto params = modulate(r_norm, config_.modulation);
    const std::span<const SpeciesParams> species(params.species.data(), config_.species);
    step_physarum(physarum_, fields_, species, coupling_, rng::derive(seed_, "physarum"), tick_,
                  config_.workers);

    BoidParams bp = config_.boid_params;
    bp.w_coh = params.w_coh;
    bp.w_sep = params.w_sep;
    bp.w_ali = params.w_ali;
    bp.max_speed = params.max_speed;
    step_boids(boids_, bp, world_, pending_kicks_, config_.boid_spike_gain, config_.boid_search,
               config_.workers);
    std::fill(pending_kicks_.begin(), pending_kicks_.end(), 0);

    // Fields are independent, so they can be diffused concurrently.
    parallel_for(fields_.size(), config_.workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t s = b; s < e; ++s) field_diffuse_decay(fields_[s], config_.decay);
    });
    field_diffuse_decay(termite_field_, config_.termite_decay);
    ++tick_;
}

EcologySummary Ecosystem::summary() const {
    EcologySummary s;
    s.tick = tick_;
    for (const auto& f : fields_) s.species_mass.push_back(f.total());
    s.termite_mass = termite_field_.total();
    s.termite_deposits = deposit_counts_;
    if (!boids_.empty()) {
        double speed = 0;
        for (const auto& b : boids_) {
            s.boid_mean_velocity.x += b.vel.x;
            s.boid_mean_velocity.y += b.vel.y;
            speed += std::hypot(b.vel.x, b.vel.y);
        }
        const double n = static_cast<double>(boids_.size());
        s.boid_mean_velocity.x /= n;
        s.boid_mean_velocity.y /= n;
        s.boid_mean_speed = speed / n;
    }
    return s;
}

std::array<double, 256> Ecosystem::cluster_intensity() const {
    std::array<double, 256> out{};
    const std::size_t w = config_.field_width, h = config_.field_height;
    for (const auto& f : fields_) {
        const auto v = f.values();
        for (std::size_t y = 0; y < h; ++y) {
            const std::size_t by = y * 16 / h;
            for (std::size_t x = 0; x < w; ++x) out[by * 16 + x * 16 / w] += v[y * w + x];
        }
    }
    const double peak = *std::max_element(out.begin(), out.end());
    if (peak > 0) {
        for (auto& v : out) v /= peak;
    }
    return out;
}

}  // namespace neuroeco
