#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace neuroeco {

struct Vec2 {
    double x = 0;
    double y = 0;

    bool operator==(const Vec2&) const = default;
};

// --- trail field ------------------------------------------------------------

/// Toroidal scalar field shared by the stigmergic agents.
class TrailField {
public:
    TrailField() = default;
    TrailField(std::size_t width, std::size_t height);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& at(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }

    /// Row-major index of the cell containing continuous position (x, y),
    /// wrapped onto the torus.
    std::size_t cell_index(double x, double y) const {
        const double w = static_cast<double>(width_), h = static_cast<double>(height_);
        if (x >= 0 && x < w && y >= 0 && y < h) {
            return static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x);
        }
        return wrapped_cell_index(x, y);
    }
    double sample(double x, double y) const { return values_[cell_index(x, y)]; }

    double total() const;
    double max() const;

    bool operator==(const TrailField&) const = default;

private:
    std::size_t wrapped_cell_index(double x, double y) const;

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

/// Each cell becomes decay x (3x3 toroidal neighborhood mean). The mean
/// preserves the field total, so mass shrinks by exactly `decay` per call up
/// to rounding. decay must lie in (0, 1].
void field_diffuse_decay(TrailField& field, double decay);

double wrap_coord(double v, double extent);
double wrap_angle(double a);

// --- termites ----------------------------------------------------------------

struct TermiteParams {
    double noise = 0.3;                          // sigma: uniform turn in [-sigma, sigma]
    double probe_angle = std::numbers::pi / 4;  // left/right probe offset from heading
    double probe_distance = 3.0;                 // cells
    double turn_angle = std::numbers::pi / 8;   // bias toward the strongest probe
    double step_size = 1.0;
    double deposit_threshold = 1.0;              // theta_dep
    double p_spontaneous = 0.005;                // p0
    double deposit = 10.0;                       // d_base
};

struct TermiteAgent {
    std::uint32_t neuron_id = 0;
    Vec2 pos;
    double heading = 0;

    bool operator==(const TermiteAgent&) const = default;
};

enum class DepositReason : std::uint8_t { sensed, spontaneous, spike };

struct DepositRecord {
    std::uint64_t step = 0;
    std::uint32_t agent = 0;
    std::uint32_t cell = 0;
    DepositReason reason = DepositReason::sensed;
};

struct DepositCounts {
    std::uint64_t sensed = 0;
    std::uint64_t spontaneous = 0;
    std::uint64_t spike = 0;
};

/// One agent per neuron channel, placed uniformly at random.
std::vector<TermiteAgent> spawn_termites(std::size_t channels, const TrailField& field,
                                         std::uint64_t seed);

/// Noise turn, three-probe sensing, biased turn, move, then deposit. A spike
/// on the agent's channel forces a deposit regardless of the sensed trail.
/// Records are appended to `log` when given.
void step_termites(std::span<TermiteAgent> agents, TrailField& field,
                   std::span<const std::uint8_t> spike_row, const TermiteParams& params,
                   std::uint64_t seed, std::uint64_t step, std::vector<DepositRecord>* log,
                   DepositCounts* counts = nullptr);

// --- physarum ----------------------------------------------------------------

inline constexpr std::size_t kMaxSpecies = 4;

struct SpeciesParams {
    double sensor_angle = std::numbers::pi / 8;    // 22.5 deg
    double sensor_offset = 9.0;                    // cells
    double step_size = 1.0;
    double rotation_angle = std::numbers::pi / 4;  // 45 deg
    double deposit = 5.0;
};

void validate(const SpeciesParams& p);

struct PhysarumAgent {
    double x = 0;
    double y = 0;
    double heading = 0;
    std::uint32_t species = 0;

    bool operator==(const PhysarumAgent&) const = default;
};

/// Row s holds the weights species s applies to every species' field when
/// sensing.
using CouplingMatrix = std::vector<std::vector<double>>;
CouplingMatrix default_coupling(std::size_t species, double self = 1.0, double other = 0.25);

std::vector<PhysarumAgent> spawn_physarum(std::span<const std::size_t> counts_per_species,
                                          const TrailField& shape, std::uint64_t seed);

/// Sense-rotate-move for every agent (parallel over `workers`), then deposits
/// applied in agent order so the result is independent of the worker count.
void step_physarum(std::span<PhysarumAgent> agents, std::span<TrailField> fields,
                   std::span<const SpeciesParams> params, const CouplingMatrix& coupling,
                   std::uint64_t seed, std::uint64_t step, std::size_t workers = 1);

// --- boids -------------------------------------------------------------------

struct Boid {
    Vec2 pos;
    Vec2 vel;

    bool operator==(const Boid&) const = default;
};

struct BoidParams {
    double r_neighbor = 12.0;
    double r_sep = 4.0;
    double w_coh = 0.01;
    double w_sep = 1.0;
    double w_ali = 0.05;
    double max_speed = 2.0;
    double max_force = 0.1;
};

struct BoidWorld {
    double width = 1024;
    double height = 1024;
};

enum class NeighborSearch { naive, grid };

std::vector<Boid> spawn_boids(std::size_t n, const BoidWorld& world, double speed,
                              std::uint64_t seed);

/// Unclamped steering per boid: w_coh * (centroid offset) + w_sep * (sum of
/// -d/|d|^2 inside r_sep) + w_ali * (mean neighbor velocity - own velocity).
/// Both search methods visit the same neighbor set.
std::vector<Vec2> steering_forces(std::span<const Boid> boids, const BoidParams& params,
                                  const BoidWorld& world, NeighborSearch search,
                                  std::size_t workers = 1);

/// Rotates the velocity of every boid whose cohort channel spiked, then
/// applies clamped steering, clamps speed and integrates on the torus. Boid i
/// belongs to channel i mod n_channels.
void step_boids(std::vector<Boid>& boids, const BoidParams& params, const BoidWorld& world,
                std::span<const std::uint8_t> spiked_channels, double spike_gain,
                NeighborSearch search = NeighborSearch::grid, std::size_t workers = 1);

// --- modulation --------------------------------------------------------------

/// Affine map from r_norm to [min, max]; min > max gives an inverse response.
struct ParamRange {
    double min = 0;
    double max = 0;

    double at(double r_norm) const;
};

struct SpeciesModulation {
    ParamRange sensor_angle{std::numbers::pi / 16, 3 * std::numbers::pi / 16};
    ParamRange sensor_offset{3.0, 15.0};
    ParamRange step_size{0.5, 1.5};
    ParamRange rotation_angle{std::numbers::pi / 8, 3 * std::numbers::pi / 8};
    ParamRange deposit{5.0, 5.0};
};

struct BoidModulation {
    ParamRange w_coh{0.005, 0.02};
    ParamRange w_sep{1.0, 1.0};
    ParamRange w_ali{0.02, 0.08};
    ParamRange max_speed{1.0, 3.0};
};

struct ModulationMap {
    std::vector<SpeciesModulation> species = std::vector<SpeciesModulation>(4);
    BoidModulation boids;
};

struct ModulatedParams {
    std::vector<SpeciesParams> species;
    double w_coh = 0, w_sep = 0, w_ali = 0, max_speed = 0;
};

/// Out-of-range r_norm is clamped to [0, 1] (reported once on stderr).
ModulatedParams modulate(double r_norm, const ModulationMap& map);

// --- the coupled ecosystem ---------------------------------------------------

struct EcologyConfig {
    std::size_t field_width = 1024;
    std::size_t field_height = 1024;
    std::size_t species = 4;
    std::size_t agents_per_species = 250'000;
    double decay = 0.9;
    double coupling_self = 1.0;
    double coupling_other = 0.25;

    std::size_t termite_field = 256;
    double termite_decay = 0.9;
    TermiteParams termites;

    std::size_t boids = 5000;
    BoidParams boid_params;
    double boid_spike_gain = 0.3;
    NeighborSearch boid_search = NeighborSearch::grid;

    ModulationMap modulation;
    std::size_t workers = 1;
    bool audit_deposits = false;
};

struct EcologySummary {
    std::uint64_t tick = 0;
    std::vector<double> species_mass;
    double termite_mass = 0;
    DepositCounts termite_deposits;
    Vec2 boid_mean_velocity;
    double boid_mean_speed = 0;
};

class Ecosystem {
public:
    Ecosystem(const EcologyConfig& config, std::size_t channels, std::uint64_t seed);

    /// One raster row: termites step (spikes force deposits) and spiking
    /// channels are remembered for the next boid update.
    void on_row(std::span<const std::uint8_t> spikes);
    /// One frame of the slower systems at the current rate: physarum step,
    /// boid step, then diffuse/decay of every field.
    void tick(double r_norm);

    EcologySummary summary() const;
    /// 16x16 block means of the summed species fields, scaled to [0, 1].
    std::array<double, 256> cluster_intensity() const;

    const EcologyConfig& config() const { return config_; }
    std::span<const TrailField> species_fields() const { return fields_; }
    const TrailField& termite_field() const { return termite_field_; }
    std::span<const PhysarumAgent> physarum() const { return physarum_; }
    std::span<const TermiteAgent> termites() const { return termites_; }
    std::span<const Boid> boids() const { return boids_; }
    std::span<const DepositRecord> deposit_log() const { return deposit_log_; }
    std::uint64_t row_steps() const { return row_step_; }
    std::uint64_t ticks() const { return tick_; }

    /// Agent-state checkpoint ("SNECO1"): counters, agents and fields.
    void save_checkpoint(std::ostream& out) const;
    void load_checkpoint(std::istream& in);

private:
    EcologyConfig config_;
    std::uint64_t seed_;
    CouplingMatrix coupling_;
    std::vector<TrailField> fields_;
    std::vector<PhysarumAgent> physarum_;
    TrailField termite_field_;
    std::vector<TermiteAgent> termites_;
    std::vector<Boid> boids_;
    BoidWorld world_;
    std::vector<std::uint8_t> pending_kicks_;
    std::vector<DepositRecord> deposit_log_;
    DepositCounts deposit_counts_;
    std::uint64_t row_step_ = 0;
    std::uint64_t tick_ = 0;
};

// --- verification dumps ------------------------------------------------------

/// Binary PGM (P5), scaled so the field maximum maps to 255.
void write_pgm(const TrailField& field, std::ostream& out);
/// Binary PPM (P6): species 0..3 tint red, green, blue and yellow.
void write_ppm_composite(std::span<const TrailField> fields, std::ostream& out);

}  // namespace neuroeco
