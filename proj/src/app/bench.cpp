#include <chrono>

#include <fmt/format.h>

#include "neuroeco/app.hpp"

namespace neuroeco {

double time_per_call(const std::function<void()>& fn, double min_seconds) {
    using clock = std::chrono::steady_clock;
    fn();  // warm-up
    double best = 1e300;
    double spent = 0;
    int batches = 0;
    std::size_t per_batch = 1;
    while (spent < min_seconds || batches < 3) {
        const auto t0 = clock::now();
        for (std::size_t i = 0; i < per_batch; ++i) fn();
        const double dt = std::chrono::duration<double>(clock::now() - t0).count();
        best = std::min(best, dt / static_cast<double>(per_batch));
        spent += dt;
        ++batches;
        // Keep batches at least ~10 ms so timer resolution does not matter.
        if (dt < 0.01) per_batch *= 2;
    }
    return best;
}

std::vector<BenchRow> run_bench(const BenchOptions& o) {
    std::vector<BenchRow> rows;
    const SpeciesParams params;
    const auto coupling = default_coupling(1);
    for (const std::size_t n : o.physarum_counts) {
        std::vector<TrailField> fields(1, TrailField(o.field, o.field));
        const std::vector<std::size_t> counts{n};
        auto agents = spawn_physarum(counts, fields[0], o.seed);
        std::uint64_t step = 0;
        const double t = time_per_call(
            [&] {
                step_physarum(agents, fields, {&params, 1}, coupling, o.seed, step++, o.workers);
                field_diffuse_decay(fields[0], 0.9);
            },
            o.min_seconds);
        rows.push_back({"physarum", n, o.field, step, t, static_cast<double>(n) / t});
    }
    const BoidParams bp;
    const BoidWorld world{static_cast<double>(o.field), static_cast<double>(o.field)};
    for (const auto search : {NeighborSearch::naive, NeighborSearch::grid}) {
        for (const std::size_t n : o.boid_counts) {
            auto boids = spawn_boids(n, world, bp.max_speed, o.seed);
            std::size_t steps = 0;
            const double t = time_per_call(
                [&] {
                    step_boids(boids, bp, world, {}, 0.0, search, o.workers);
                    ++steps;
                },
                o.min_seconds);
            rows.push_back({search == NeighborSearch::naive ? "boids_naive" : "boids_grid", n, o.field, steps, t,
                            static_cast<double>(n) / t});
        }
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::string out = "model,count,field,steps,seconds_per_step,agents_per_second\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{:.6g},{:.6g}\n", r.model, r.count, r.field, r.steps, r.seconds_per_step,
                           r.items_per_second);
    }
    return out;
}

}  // namespace neuroeco
