#include "neuroeco/ecology.hpp"

#include <cmath>
#include <stdexcept>

#include "../kernels/neighbor_pair.hpp"
#include "neuroeco/kernels.hpp"
#include "neuroeco/parallel.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

constexpr std::uint64_t kBoidStream = 0xb0'0000'0000ull;

struct Columns {
    std::vector<double> x, y, vx, vy;

    explicit Columns(std::span<const Boid> boids)
        : x(boids.size()), y(boids.size()), vx(boids.size()), vy(boids.size()) {
        for (std::size_t i = 0; i < boids.size(); ++i) {
            x[i] = boids[i].pos.x;
            y[i] = boids[i].pos.y;
            vx[i] = boids[i].vel.x;
            vy[i] = boids[i].vel.y;
        }
    }
};

Vec2 combine(const kernels::NeighborSums& s, const Boid& self, const BoidParams& p) {
    if (s.count == 0) return {};
    const double inv = 1.0 / s.count;
    const double coh_x = s.offset_x * inv, coh_y = s.offset_y * inv;
    const double ali_x = s.vel_x * inv - self.vel.x, ali_y = s.vel_y * inv - self.vel.y;
    return {p.w_coh * coh_x + p.w_sep * s.sep_x + p.w_ali * ali_x,
            p.w_coh * coh_y + p.w_sep * s.sep_y + p.w_ali * ali_y};
}

Vec2 clamp_length(Vec2 v, double limit) {
    const double len = std::hypot(v.x, v.y);
    if (!(len > limit) || len == 0) return v;
    double k = limit / len;
    // Rounding can leave the scaled vector one ulp long; shrink until it fits.
    for (int i = 0; i < 8 && std::hypot(v.x * k, v.y * k) > limit; ++i) k = std::nextafter(k, 0.0);
    return {v.x * k, v.y * k};
}

kernels::NeighborQuery query_for(const Boid& b, const BoidParams& p, const BoidWorld& world) {
    return {b.pos.x, b.pos.y, world.width, world.height, p.r_neighbor * p.r_neighbor,
            p.r_sep * p.r_sep};
}

// Uniform bins of side >= r_neighbor on the torus; each boid scans the 3x3
// block of bins around its own.
class BinGrid {
public:
    BinGrid(const Columns& cols, const BoidParams& p, const BoidWorld& world)
        : nx_(static_cast<std::size_t>(world.width / p.r_neighbor)),
          ny_(static_cast<std::size_t>(world.height / p.r_neighbor)) {
        if (!usable()) return;
        cell_w_ = world.width / static_cast<double>(nx_);
        cell_h_ = world.height / static_cast<double>(ny_);
        const std::size_t n = cols.x.size();
        start_.assign(nx_ * ny_ + 1, 0);
        std::vector<std::size_t> bin(n);
        for (std::size_t i = 0; i < n; ++i) {
            bin[i] = bin_of(cols.x[i], cols.y[i]);
            ++start_[bin[i] + 1];
        }
        for (std::size_t b = 0; b < nx_ * ny_; ++b) start_[b + 1] += start_[b];
        auto fill = start_;
        members_.resize(n);
        for (std::size_t i = 0; i < n; ++i) members_[fill[bin[i]]++] = i;
    }

    bool usable() const { return nx_ >= 3 && ny_ >= 3; }

    template <typename Visit>
    void for_candidates(double x, double y, Visit&& visit) const {
        const auto bx = static_cast<std::ptrdiff_t>(bin_x(x));
        const auto by = static_cast<std::ptrdiff_t>(bin_y(y));
        for (std::ptrdiff_t oy = -1; oy <= 1; ++oy) {
            const auto cy = static_cast<std::size_t>((by + oy + static_cast<std::ptrdiff_t>(ny_)) %
                                                     static_cast<std::ptrdiff_t>(ny_));
            for (std::ptrdiff_t ox = -1; ox <= 1; ++ox) {
                const auto cx = static_cast<std::size_t>((bx + ox + static_cast<std::ptrdiff_t>(nx_)) %
                                                         static_cast<std::ptrdiff_t>(nx_));
                const auto b = cy * nx_ + cx;
                for (std::size_t k = start_[b]; k < start_[b + 1]; ++k) visit(members_[k]);
            }
        }
    }

private:
    std::size_t bin_x(double x) const { return std::min(nx_ - 1, static_cast<std::size_t>(x / cell_w_)); }
    std::size_t bin_y(double y) const { return std::min(ny_ - 1, static_cast<std::size_t>(y / cell_h_)); }
    std::size_t bin_of(double x, double y) const { return bin_y(y) * nx_ + bin_x(x); }

    std::size_t nx_, ny_;
    double cell_w_ = 0, cell_h_ = 0;
    std::vector<std::size_t> start_;
    std::vector<std::size_t> members_;
};

}  // namespace

std::vector<Boid> spawn_boids(std::size_t n, const BoidWorld& world, double speed,
                              std::uint64_t seed) {
    std::vector<Boid> boids(n);
    for (std::size_t i = 0; i < n; ++i) {
        Draws d(seed, kBoidStream + i, ~0ull);
        const double angle = d.uniform(0, kTwoPi);
        boids[i].pos = {d.uniform(0, world.width), d.uniform(0, world.height)};
        boids[i].vel = {std::cos(angle) * speed, std::sin(angle) * speed};
    }
    return boids;
}

std::vector<Vec2> steering_forces(std::span<const Boid> boids, const BoidParams& params,
                                  const BoidWorld& world, NeighborSearch search,
                                  std::size_t workers) {
    if (!(params.r_neighbor > 0) || !(params.r_sep > 0)) {
        throw std::invalid_argument("boid radii must be positive");
    }
    const Columns cols(boids);
    std::vector<Vec2> forces(boids.size());
    const auto& k = kernels::active();

    if (search == NeighborSearch::grid) {
        const BinGrid grid(cols, params, world);
        if (grid.usable() && params.r_neighbor <= 0.5 * std::min(world.width, world.height)) {
            parallel_for(boids.size(), workers, [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) {
                    const auto q = query_for(boids[i], params, world);
                    kernels::NeighborSums sums;
                    grid.for_candidates(q.x, q.y, [&](std::size_t j) {
                        kernels::accumulate_pair(q, cols.x[j], cols.y[j], cols.vx[j], cols.vy[j], sums);
                    });
                    forces[i] = combine(sums, boids[i], params);
                }
            });
            return forces;
        }
    }

    parallel_for(boids.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto q = query_for(boids[i], params, world);
            kernels::NeighborSums sums;
            k.neighbor_sums(q, cols.x.data(), cols.y.data(), cols.vx.data(), cols.vy.data(),
                            boids.size(), sums);
            forces[i] = combine(sums, boids[i], params);
        }
    });
    return forces;
}

void step_boids(std::vector<Boid>& boids, const BoidParams& params, const BoidWorld& world,
                std::span<const std::uint8_t> spiked_channels, double spike_gain,
                NeighborSearch search, std::size_t workers) {
    if (!spiked_channels.empty() && spike_gain != 0) {
        const double c = std::cos(spike_gain), s = std::sin(spike_gain);
        for (std::size_t i = 0; i < boids.size(); ++i) {
            if (!spiked_channels[i % spiked_channels.size()]) continue;
            auto& v = boids[i].vel;
            v = {v.x * c - v.y * s, v.x * s + v.y * c};
        }
    }
    const auto forces = steering_forces(boids, params, world, search, workers);
    for (std::size_t i = 0; i < boids.size(); ++i) {
        auto& b = boids[i];
        const Vec2 steer = clamp_length(forces[i], params.max_force);
        b.vel = clamp_length({b.vel.x + steer.x, b.vel.y + steer.y}, params.max_speed);
        b.pos.x = wrap_coord(b.pos.x + b.vel.x, world.width);
        b.pos.y = wrap_coord(b.pos.y + b.vel.y, world.height);
    }
}

}  // namespace neuroeco
