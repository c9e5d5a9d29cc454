// Acceptance criteria 1-12: one PASS/FAIL line each, exit status 1 if any fails.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "neuroeco/app.hpp"
#include "neuroeco/kernels.hpp"
#include "neuroeco/rng.hpp"

using namespace neuroeco;
namespace fs = std::filesystem;

namespace {

int failures = 0;
std::map<int, std::string> lines;  // printed in criterion order at the end

void report(int id, const char* name, bool ok, const std::string& detail) {
    failures += !ok;
    lines[id] = fmt::format("{} {:>2} {:<26} {}", ok ? "PASS" : "FAIL", id, name, detail);
}

bool within_3_sigma(double n, double mu) { return std::abs(n - mu) <= 3 * std::sqrt(mu); }

const fs::path& scratch() {
    static const fs::path dir = fs::temp_directory_path() / fmt::format("neuroeco_acceptance_{}", ::getpid());
    return dir;
}

struct FullRun {
    RunReport report;
    fs::path dir;
    std::map<std::string, std::string> hashes;
};

FullRun full_run(const std::string& name, std::size_t workers) {
    RunConfig c;
    c.ecology.workers = workers;
    c.output.dir = (scratch() / name).string();
    FullRun r{run_pipeline(c), c.output.dir, {}};
    for (const auto& s : r.report.streams) r.hashes[s.name] = s.fnv1a;
    return r;
}

// ---------------------------------------------------------------------------

void clock_fidelity(const FullRun& run) {
    const auto& r = run.report;
    const bool ok = r.rows == 180'000 && r.last_t_sim_ms == 5'399'970.0 && r.wall_s < 60.0;
    report(1, "clock fidelity", ok,
           fmt::format("{} rows, last t_sim {} ms, span {:.4f} min, offline wall {:.1f} s (need 180000, 5399970, < 60 s)",
                       r.rows, r.last_t_sim_ms, (r.last_t_sim_ms + 30.0) / 60'000.0, r.wall_s));
}

void mapping_endpoints() {
    const bool exact = sustain_density(0) == 0.21 && sustain_density(1) == 20.0 && granular_density(0) == 160.0 &&
                       granular_density(1) == 5.0 && grain_duration(0) == 6.25 && grain_duration(1) == 400.0 &&
                       kick_density(0) == 0.83 && kick_density(1) == 0.1;
    std::size_t violations = 0;
    for (int i = 1; i < 1000; ++i) {
        const double a = (i - 1) / 999.0, b = i / 999.0;
        violations += !(sustain_density(b) > sustain_density(a));
        violations += !(granular_density(b) < granular_density(a));
        violations += !(grain_duration(b) > grain_duration(a));
        violations += !(kick_density(b) < kick_density(a));
    }
    report(2, "mapping endpoints", exact && violations == 0,
           fmt::format("endpoints {}, {} monotonicity violations over 1000 points", exact ? "exact" : "WRONG",
                       violations));
}

void stochastic_calibration() {
    // Kick repeats are articulations of one kick event; they are switched off
    // so the kick count is a plain Poisson count.
    SonifyConfig cfg;
    cfg.kick_repeat_p = 0;
    const PlaybackConfig pc;
    const std::size_t rows = 33'334;  // 1000.02 simulated seconds at 30 ms per row
    const double seconds = rows * row_duration(pc, 1) / 1000.0;
    bool ok = true;
    std::string detail;
    for (double r : {0.0, 1.0}) {
        const auto rate = rate_from_norm(std::vector<double>(rows, r));
        const auto events = gen_events(rate, {}, pc, HarmonicState::c_minor_phrygian(), 17, cfg);
        std::map<EventKind, double> n;
        for (const auto& e : events) n[e.kind] += 1;
        const double mu[3] = {sustain_density(r) * seconds, granular_density(r) * seconds, kick_density(r) * seconds};
        const double got[3] = {n[EventKind::sustain], n[EventKind::grain], n[EventKind::kick]};
        for (int k = 0; k < 3; ++k) ok &= within_3_sigma(got[k], mu[k]);
        detail += fmt::format("r={}: sustain {}/{:.0f} grain {}/{:.0f} kick {}/{:.0f}; ", r, got[0], mu[0], got[1], mu[1],
                              got[2], mu[2]);
    }
    const auto rate = rate_from_norm(std::vector<double>(20'000, 1.0));
    const auto events = gen_events(rate, {}, pc, HarmonicState::c_minor_phrygian(), 18);
    std::size_t n = 0, half = 0;
    for (const auto& e : events) {
        if (e.kind != EventKind::sustain || n == 10'000) continue;
        ++n;
        half += e.half_speed;
    }
    const double freq = static_cast<double>(half) / static_cast<double>(n);
    ok &= n == 10'000 && std::abs(freq - 0.5) <= 0.015;
    report(3, "stochastic calibration", ok, detail + fmt::format("half-speed {:.4f} over {} sustain events", freq, n));
}

void mass_conservation() {
    TrailField f(64, 64);
    for (std::size_t i = 0; i < f.values().size(); ++i) f.values()[i] = rng::to_unit(rng::prf(5, i, 0, 0)) * 100;
    const double t0 = f.total();
    for (int i = 0; i < 100; ++i) field_diffuse_decay(f, 0.9);
    const double expected = t0 * std::pow(0.9, 100);
    const double rel = std::abs(f.total() - expected) / expected;
    report(4, "trail mass conservation", rel <= 1e-6,
           fmt::format("T100 {:.12g}, T0*0.9^100 {:.12g}, relative error {:.3g} (<= 1e-6)", f.total(), expected, rel));
}

void spike_override() {
    SyntheticSpec spec;
    spec.rows = 60'000;
    auto data = gen_synthetic(spec);
    // Keep exactly the first 10,000 spikes.
    std::uint64_t kept = 0;
    std::size_t rows = 0;
    for (std::size_t r = 0; r < data.raster.rows(); ++r) {
        for (std::size_t c = 0; c < data.raster.channels(); ++c) {
            if (!data.raster.spike(r, c)) continue;
            if (kept < 10'000) {
                ++kept;
                rows = r + 1;
            } else {
                data.raster.set(r, c, false);
            }
        }
    }
    TrailField field(256, 256);
    auto agents = spawn_termites(data.raster.channels(), field, 9);
    std::vector<DepositRecord> log;
    for (std::size_t r = 0; r < rows; ++r) step_termites(agents, field, data.raster.row(r), TermiteParams{}, 9, r, &log);
    std::set<std::pair<std::uint64_t, std::uint32_t>> forced;
    for (const auto& rec : log) {
        if (rec.reason == DepositReason::spike) forced.insert({rec.step, rec.agent});
    }
    std::uint64_t misses = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < data.raster.channels(); ++c) {
            if (data.raster.spike(r, c) && !forced.count({r, static_cast<std::uint32_t>(c)})) ++misses;
        }
    }
    report(5, "spike-override audit", kept == 10'000 && misses == 0 && forced.size() == kept,
           fmt::format("{} spikes, {} forced deposits, {} misses", kept, forced.size(), misses));
}

void solenoid_contract(const FullRun& run) {
    const FabricProfile profile;
    std::ifstream in(run.dir / "strikes.jsonl");
    std::map<int, double> last;
    std::set<int> ids;
    double min_gap = INFINITY;
    std::uint64_t strikes = 0;
    bool sorted = true;
    double prev = -INFINITY;
    for (std::string line; std::getline(in, line);) {
        const auto s = nlohmann::json::parse(line);
        const int id = s["id"];
        const double t = s["onset_ms"];
        sorted &= t >= prev;
        prev = t;
        if (last.count(id)) min_gap = std::min(min_gap, t - last[id]);
        last[id] = t;
        ids.insert(id);
        ++strikes;
    }
    const auto& r = run.report;
    const bool ok = sorted && min_gap >= profile.refractory_ms && strikes == r.strikes &&
                    r.strikes + r.strikes_suppressed == r.backbone_spikes && ids.size() == 27 && *ids.rbegin() == 26;
    report(6, "solenoid contract", ok,
           fmt::format("min per-id gap {} ms (>= {}), {} emitted + {} suppressed = {} backbone spikes, {} ids in use",
                       min_gap, profile.refractory_ms, r.strikes, r.strikes_suppressed, r.backbone_spikes, ids.size()));
}

void burst_boundaries() {
    const std::vector<std::pair<std::size_t, std::size_t>> truth{{1000, 1300}, {2500, 2600}, {4000, 4800}, {7000, 7060}};
    std::vector<double> norm(9000, 0.05);
    for (const auto& [s, e] : truth) std::fill(norm.begin() + s, norm.begin() + e, 1.0);
    const auto rate = rate_from_norm(norm);
    const auto found = detect_bursts(rate);
    std::size_t worst = 0;
    bool ok = found.size() == truth.size();
    for (std::size_t i = 0; ok && i < truth.size(); ++i) {
        worst = std::max({worst, static_cast<std::size_t>(std::abs(static_cast<long>(found[i].start) - static_cast<long>(truth[i].first))),
                          static_cast<std::size_t>(std::abs(static_cast<long>(found[i].end) - static_cast<long>(truth[i].second)))});
    }
    ok &= worst <= 1;
    const PlaybackConfig pc;
    const auto events = gen_events(rate, found, pc, HarmonicState::c_minor_phrygian(), 3);
    std::vector<double> changes;
    for (const auto& e : events) {
        if (e.kind == EventKind::chord_change) changes.push_back(e.onset_ms);
    }
    std::vector<double> expected;
    for (const auto& b : found) expected.push_back(static_cast<double>(b.end) * row_duration(pc, 1));
    ok &= changes == expected;
    report(7, "burst boundaries", ok,
           fmt::format("{} of {} bursts, worst boundary error {} rows (<= 1), chord changes at {} (expected {})",
                       found.size(), truth.size(), worst, fmt::join(changes, ","), fmt::join(expected, ",")));
}

// OSC 1.0 reference encoding built byte by byte from the format description.
std::vector<std::uint8_t> reference_osc(const OscMessage& m) {
    std::vector<std::uint8_t> out;
    auto pad = [&] {
        while (out.size() % 4) out.push_back(0);
    };
    auto str = [&](const std::string& s) {
        out.insert(out.end(), s.begin(), s.end());
        out.push_back(0);
        pad();
    };
    auto word = [&](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    str(m.address);
    std::string tags = ",";
    for (const auto& a : m.args) tags += "ifsb"[a.index()];
    str(tags);
    for (const auto& a : m.args) {
        if (a.index() == 0) word(static_cast<std::uint32_t>(std::get<0>(a)));
        if (a.index() == 1) {
            std::uint32_t v;
            const float f = std::get<1>(a);
            std::memcpy(&v, &f, 4);
            word(v);
        }
        if (a.index() == 2) str(std::get<2>(a));
        if (a.index() == 3) {
            const auto& b = std::get<3>(a).bytes;
            word(static_cast<std::uint32_t>(b.size()));
            out.insert(out.end(), b.begin(), b.end());
            pad();
        }
    }
    return out;
}

void osc_codec() {
    const OscMessage golden_msg{"/sim/row", {std::int32_t{42}}};
    const std::vector<std::uint8_t> golden{0x2f, 0x73, 0x69, 0x6d, 0x2f, 0x72, 0x6f, 0x77, 0x00, 0x00,
                                           0x00, 0x00, 0x2c, 0x69, 0x00, 0x00, 0x00, 0x00, 0x00, 0x2a};
    const auto bytes = osc_encode(golden_msg);
    bool golden_ok = bytes == golden && reference_osc(golden_msg) == golden && osc_decode(golden) == golden_msg;
    std::size_t mismatches = 0, misaligned = 0;
    for (std::uint64_t i = 0; i < 10'000; ++i) {
        Draws d(31337, i, 0);
        OscMessage m{"/", {}};
        for (auto k = d.below(30); k > 0; --k) m.address.push_back(static_cast<char>('!' + d.below(94)));
        for (auto k = d.below(8); k > 0; --k) {
            switch (d.below(4)) {
                case 0: m.args.emplace_back(static_cast<std::int32_t>(d.bits())); break;
                case 1: m.args.emplace_back(static_cast<float>(d.uniform(-1e9, 1e9))); break;
                case 2: {
                    std::string s;
                    for (auto n = d.below(40); n > 0; --n) s.push_back(static_cast<char>(1 + d.below(255)));
                    m.args.emplace_back(s);
                    break;
                }
                default: {
                    Blob b;
                    b.bytes.resize(d.below(1025));
                    for (auto& x : b.bytes) x = static_cast<std::uint8_t>(d.bits());
                    m.args.emplace_back(b);
                }
            }
        }
        const auto enc = osc_encode(m);
        misaligned += enc.size() % 4 != 0;
        mismatches += enc != reference_osc(m) || osc_decode(enc) != m;
    }
    report(8, "OSC codec", golden_ok && mismatches == 0 && misaligned == 0,
           fmt::format("golden 20-byte vector {}, 10000 fuzzed messages: {} mismatches, {} misaligned",
                       golden_ok ? "matches" : "DIFFERS", mismatches, misaligned));
}

void sync_harness() {
    const PlaybackConfig pc;
    const auto jitter = run_sync_harness(3, {0, 10, 0, 1}, pc, 180'000);
    const auto zero = run_sync_harness(3, {}, pc, 180'000);
    report(9, "sync harness", jitter.max_skew_rows <= 1 && zero.max_skew_rows == 0,
           fmt::format("+-10 ms jitter skew {} rows (<= 1), zero-latency skew {} (== 0), {} rows x 3 subscribers",
                       jitter.max_skew_rows, zero.max_skew_rows, jitter.published));
}

void determinism(const FullRun& a, const FullRun& b, const FullRun& w2, const FullRun& w8) {
    const bool same_seed = a.hashes == b.hashes;
    const bool workers = a.hashes == w2.hashes && a.hashes == w8.hashes;
    std::string differing;
    for (const auto& [name, h] : a.hashes) {
        if (b.hashes.at(name) != h || w2.hashes.at(name) != h || w8.hashes.at(name) != h) differing += name + " ";
    }
    report(10, "determinism", same_seed && workers && a.hashes.size() >= 6,
           fmt::format("{} streams; repeat run {}, workers 1/2/8 {}{}", a.hashes.size(),
                       same_seed ? "identical" : "DIFFERS", workers ? "identical" : "DIFFER",
                       differing.empty() ? "" : " (" + differing + ")"));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// Step cost depends on the trail state, so both sizes are warmed into a
// steady regime and then timed in alternation.
struct PhysarumSim {
    std::vector<TrailField> fields{TrailField(1024, 1024)};
    std::vector<PhysarumAgent> agents;
    SpeciesParams params;
    CouplingMatrix coupling = default_coupling(1);
    std::uint64_t step = 0;

    explicit PhysarumSim(std::size_t n) {
        const std::vector<std::size_t> counts{n};
        agents = spawn_physarum(counts, fields[0], 4);
        for (int i = 0; i < 50; ++i) tick();
    }
    void tick() {
        step_physarum(agents, fields, {&params, 1}, coupling, 4, step++);
        field_diffuse_decay(fields[0], 0.9);
    }
    double agent_step_seconds() {
        return time_per_call([&] { step_physarum(agents, fields, {&params, 1}, coupling, 4, step++); }, 0.3);
    }
};

void complexity() {
    PhysarumSim small(100'000), large(200'000);
    std::vector<double> p_ratios;
    for (int round = 0; round < 7; ++round) {
        const double ts = small.agent_step_seconds();
        p_ratios.push_back(large.agent_step_seconds() / ts);
    }
    const double p_ratio = median(p_ratios);

    const BoidParams bp;
    const BoidWorld world{1024, 1024};
    const auto b_small = spawn_boids(2000, world, 2.0, 4), b_large = spawn_boids(4000, world, 2.0, 4);
    std::vector<double> b_ratios;
    for (int round = 0; round < 7; ++round) {
        const double bs = time_per_call([&] { steering_forces(b_small, bp, world, NeighborSearch::naive); }, 0.3);
        b_ratios.push_back(time_per_call([&] { steering_forces(b_large, bp, world, NeighborSearch::naive); }, 0.3) / bs);
    }
    const double b_ratio = median(b_ratios);

    double worst = 0;
    for (std::uint64_t cfg = 0; cfg < 1000; ++cfg) {
        Draws d(cfg, 1, 0);
        const BoidWorld w{d.uniform(50, 400), d.uniform(50, 400)};
        BoidParams p;
        p.r_neighbor = d.uniform(3, 25);
        p.r_sep = d.uniform(0.5, p.r_neighbor);
        const auto boids = spawn_boids(20 + d.below(400), w, d.uniform(0.5, 3), cfg);
        const auto naive = steering_forces(boids, p, w, NeighborSearch::naive);
        const auto grid = steering_forces(boids, p, w, NeighborSearch::grid);
        for (std::size_t i = 0; i < boids.size(); ++i) {
            worst = std::max({worst, std::abs(naive[i].x - grid[i].x), std::abs(naive[i].y - grid[i].y)});
        }
    }
    const bool ok = p_ratio >= 1.5 && p_ratio <= 2.5 && b_ratio >= 3.0 && b_ratio <= 5.0 && worst <= 1e-9;
    report(11, "complexity witnesses", ok,
           fmt::format("physarum t(2N)/t(N) {:.3f} in [1.5, 2.5]; naive boids {:.3f} in [3, 5]; "
                       "grid vs naive max diff {:.3g} (<= 1e-9, 1000 configs); median ratio of 7 interleaved rounds",
                       p_ratio, b_ratio, worst));
}

void throughput() {
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<TrailField> fields(1, TrailField(1024, 1024));
    const std::vector<std::size_t> counts{100'000};
    auto agents = spawn_physarum(counts, fields[0], 6);
    const SpeciesParams p;
    const auto coupling = default_coupling(1);
    std::uint64_t step = 0;
    const double t = time_per_call(
        [&] {
            step_physarum(agents, fields, {&p, 1}, coupling, 6, step++, workers);
            field_diffuse_decay(fields[0], 0.9);
        },
        2.0);
    report(12, "throughput floor", 1.0 / t >= 30.0,
           fmt::format("100000 physarum agents on 1024x1024 with diffuse/decay: {:.1f} steps/s (>= 30), {} worker(s)",
                       1.0 / t, workers));
}

}  // namespace

// With arguments, runs only the listed criteria (e.g. `acceptance 3 11`).
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](std::initializer_list<int> ids) {
        if (only.empty()) return true;
        for (int id : ids) {
            if (only.count(id)) return true;
        }
        return false;
    };
    fmt::print("acceptance: kernels {}\n", kernels::active().name);
    fs::create_directories(scratch());
    try {
        if (want({2})) mapping_endpoints();
        if (want({3})) stochastic_calibration();
        if (want({4})) mass_conservation();
        if (want({5})) spike_override();
        if (want({7})) burst_boundaries();
        if (want({8})) osc_codec();
        if (want({9})) sync_harness();
        if (want({11})) complexity();
        if (want({12})) throughput();
        if (want({1, 6, 10})) {
            const auto a = full_run("a", 1);
            clock_fidelity(a);
            solenoid_contract(a);
            if (want({10})) {
                const auto b = full_run("b", 1);
                const auto w2 = full_run("w2", 2);
                const auto w8 = full_run("w8", 8);
                determinism(a, b, w2, w8);
            }
        }
    } catch (const std::exception& e) {
        fmt::print("FAIL    acceptance aborted: {}\n", e.what());
        ++failures;
    }
    fs::remove_all(scratch());
    for (const auto& [id, line] : lines) fmt::print("{}\n", line);
    fmt::print("{} criteria failed\n", failures);
    return failures ? 1 : 0;
}
