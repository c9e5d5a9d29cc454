#include <algorithm>
#include <cmath>
#include <filesystem>

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "neuroeco/app.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

using Check = CheckResult;

Check check_mapping_endpoints() {
    const std::vector<double> measured{sustain_density(0), sustain_density(1), granular_density(0),
                                       granular_density(1), grain_duration(0), grain_duration(1),
                                       kick_density(0),     kick_density(1)};
    const std::vector<double> expected{0.21, 20.0, 160.0, 5.0, 6.25, 400.0, 0.83, 0.1};
    return {"mapping.endpoints", measured == expected, fmt::format("{}", measured), fmt::format("{}", expected),
            "sustain, granular, grain duration, kick at r=0 and r=1"};
}

Check check_mapping_monotonic() {
    std::size_t violations = 0;
    double prev[4] = {sustain_density(0), granular_density(0), grain_duration(0), kick_density(0)};
    for (int i = 1; i < 1000; ++i) {
        const double r = i / 999.0;
        const double cur[4] = {sustain_density(r), granular_density(r), grain_duration(r), kick_density(r)};
        violations += cur[0] < prev[0];
        violations += cur[1] > prev[1];
        violations += cur[2] < prev[2];
        violations += cur[3] > prev[3];
        std::copy(cur, cur + 4, prev);
    }
    return {"mapping.monotonic", violations == 0, fmt::format("{} violations", violations), "0 violations",
            "1000 points; sustain and grain rise, granular and kick fall"};
}

Check check_mass_conservation(double decay) {
    Check c{"trail.mass_conservation", false, "", "", fmt::format("64x64 field, decay {}, 100 steps", decay)};
    TrailField field(64, 64);
    for (std::size_t i = 0; i < field.values().size(); ++i) {
        field.values()[i] = rng::to_unit(rng::prf(11, i, 0, 0)) * 10.0;
    }
    const double t0 = field.total();
    const double expected = t0 * std::pow(decay, 100);
    c.expected = fmt::format("{:.12g} (rel err <= 1e-6, non-increasing)", expected);
    try {
        double prev = t0;
        bool grew = false;
        for (int i = 0; i < 100; ++i) {
            field_diffuse_decay(field, decay);
            grew |= field.total() > prev;
            prev = field.total();
        }
        const double rel = std::abs(field.total() - expected) / expected;
        c.measured = fmt::format("{:.12g} (rel err {:.3g}{})", field.total(), rel, grew ? ", mass grew" : "");
        c.passed = rel <= 1e-6 && !grew;
    } catch (const std::exception& e) {
        c.measured = fmt::format("error: {}", e.what());
    }
    return c;
}

Check check_osc_golden() {
    const std::vector<std::uint8_t> golden{0x2f, 0x73, 0x69, 0x6d, 0x2f, 0x72, 0x6f, 0x77, 0x00, 0x00,
                                           0x00, 0x00, 0x2c, 0x69, 0x00, 0x00, 0x00, 0x00, 0x00, 0x2a};
    const auto bytes = osc_encode({"/sim/row", {std::int32_t{42}}});
    const bool decoded = osc_decode(golden) == OscMessage{"/sim/row", {std::int32_t{42}}};
    return {"osc.golden", bytes == golden && decoded, fmt::format("{:02x}", fmt::join(bytes, " ")),
            fmt::format("{:02x}", fmt::join(golden, " ")), "(\"/sim/row\", [int32 42])"};
}

OscMessage random_message(std::uint64_t seed, std::uint64_t i) {
    Draws d(seed, i, 0);
    OscMessage m;
    m.address = "/";
    const auto addr_len = d.below(24);
    for (std::uint64_t k = 0; k < addr_len; ++k) m.address.push_back(static_cast<char>('a' + d.below(26)));
    const auto n_args = d.below(6);
    for (std::uint64_t a = 0; a < n_args; ++a) {
        switch (d.below(4)) {
            case 0: m.args.emplace_back(static_cast<std::int32_t>(d.bits())); break;
            case 1: m.args.emplace_back(static_cast<float>(d.uniform(-1e6, 1e6))); break;
            case 2: {
                std::string s;
                const auto len = d.below(20);
                for (std::uint64_t k = 0; k < len; ++k) s.push_back(static_cast<char>(1 + d.below(255)));
                m.args.emplace_back(std::move(s));
                break;
            }
            default: {
                Blob b;
                b.bytes.resize(d.below(4097));
                for (auto& x : b.bytes) x = static_cast<std::uint8_t>(d.bits());
                m.args.emplace_back(std::move(b));
            }
        }
    }
    return m;
}

Check check_osc_roundtrip() {
    std::size_t mismatches = 0, misaligned = 0;
    constexpr std::size_t n = 1000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = random_message(99, i);
        const auto bytes = osc_encode(m);
        misaligned += bytes.size() % 4 != 0;
        mismatches += osc_decode(bytes) != m;
    }
    return {"osc.roundtrip", mismatches == 0 && misaligned == 0,
            fmt::format("{} mismatches, {} misaligned", mismatches, misaligned), "0 mismatches, 0 misaligned",
            fmt::format("{} fuzzed messages", n)};
}

RunConfig small_run(const RunConfig& base, const std::filesystem::path& dir, std::size_t workers) {
    RunConfig c;
    c.seed = base.seed;
    c.dataset.synthetic.rows = 3000;
    c.dataset.synthetic.channels = 64;
    c.dataset.synthetic.burst.n_bursts = 2;
    c.ecology.field_width = c.ecology.field_height = 128;
    c.ecology.agents_per_species = 2000;
    c.ecology.boids = 300;
    c.ecology.workers = workers;
    c.ecology_tick_rows = 100;
    c.output.dir = dir.string();
    return c;
}

Check check_determinism(const RunConfig& base) {
    Check c{"pipeline.determinism", false, "", "identical stream hashes", "3000-row replay, workers 1, 1, 2"};
    const auto root = std::filesystem::temp_directory_path() / fmt::format("neuroeco_verify_{}", ::getpid());
    std::vector<std::vector<std::string>> hashes;
    try {
        for (std::size_t workers : {1, 1, 2}) {
            const auto dir = root / fmt::format("run{}", hashes.size());
            const auto report = run_pipeline(small_run(base, dir, workers));
            std::vector<std::string> h;
            for (const auto& s : report.streams) h.push_back(s.name + "=" + s.fnv1a);
            hashes.push_back(std::move(h));
        }
        c.passed = hashes[0] == hashes[1] && hashes[0] == hashes[2];
        c.measured = c.passed ? "identical" : fmt::format("{} vs {} vs {}", hashes[0], hashes[1], hashes[2]);
    } catch (const std::exception& e) {
        c.measured = fmt::format("error: {}", e.what());
    }
    std::error_code ec;
    std::filesystem::remove_all(root, ec);
    return c;
}

Check check_burst_detection(const BurstParams& params) {
    // Square wave: low background with planted plateaus at full rate.
    const std::vector<std::pair<std::size_t, std::size_t>> truth{{1000, 1300}, {2500, 2600}, {4000, 4800}};
    std::vector<double> norm(6000, 0.05);
    for (const auto& [s, e] : truth) std::fill(norm.begin() + s, norm.begin() + e, 1.0);
    const auto found = detect_bursts(rate_from_norm(norm), params);
    std::size_t worst = 0;
    bool ok = found.size() == truth.size();
    for (std::size_t i = 0; ok && i < truth.size(); ++i) {
        const auto ds = std::max(found[i].start, truth[i].first) - std::min(found[i].start, truth[i].first);
        const auto de = std::max(found[i].end, truth[i].second) - std::min(found[i].end, truth[i].second);
        worst = std::max({worst, ds, de});
    }
    ok = ok && worst <= 1;
    return {"burst.detection", ok, fmt::format("{} bursts, worst boundary error {} rows", found.size(), worst),
            fmt::format("{} bursts, error <= 1 row", truth.size()), "planted square wave"};
}

Check check_spike_override() {
    SyntheticSpec spec;
    spec.rows = 4000;
    spec.channels = 64;
    spec.burst.n_bursts = 2;
    const auto data = gen_synthetic(spec);
    TrailField field(128, 128);
    auto agents = spawn_termites(spec.channels, field, 5);
    std::vector<DepositRecord> log;
    for (std::size_t r = 0; r < spec.rows; ++r) {
        step_termites(agents, field, data.raster.row(r), TermiteParams{}, 5, r, &log);
    }
    std::uint64_t spike_records = 0;
    std::uint64_t misses = 0;
    std::size_t li = 0;
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t ch = 0; ch < spec.channels; ++ch) {
            if (!data.raster.spike(r, ch)) continue;
            while (li < log.size() && (log[li].step < r || (log[li].step == r && log[li].agent < ch))) ++li;
            const bool hit = li < log.size() && log[li].step == r && log[li].agent == ch &&
                             log[li].reason == DepositReason::spike;
            misses += !hit;
        }
    }
    for (const auto& rec : log) spike_records += rec.reason == DepositReason::spike;
    const auto total = data.raster.total_spikes();
    return {"termite.spike_override", misses == 0 && spike_records == total,
            fmt::format("{} misses, {} spike deposits", misses, spike_records),
            fmt::format("0 misses, {} spike deposits", total), "every spike forces a deposit"};
}

Check check_refractory(const FabricProfile& profile) {
    SyntheticSpec spec;
    spec.rows = 20000;
    const auto data = gen_synthetic(spec);
    const auto rate = population_rate(data.raster);
    PlaybackConfig pc;
    const auto rows = schedule(pc, data.raster.rows(), data.raster.dt_ms());
    const auto order = backbone_order(data.meta);
    const auto report = strikes_from_spikes(data.raster, rows, order, profile, rate);
    std::vector<double> last(profile.solenoids, -1e300);
    double min_gap = 1e300;
    for (const auto& s : report.strikes) {
        min_gap = std::min(min_gap, s.onset_ms - last[s.solenoid_id]);
        last[s.solenoid_id] = s.onset_ms;
    }
    const bool balanced = report.strikes.size() + report.suppressed == report.backbone_spikes;
    return {"fabric.refractory", min_gap >= profile.refractory_ms && balanced,
            fmt::format("min gap {} ms, {} + {} = {}", min_gap, report.strikes.size(), report.suppressed,
                        report.backbone_spikes),
            fmt::format("gap >= {} ms, emitted + suppressed = backbone spikes", profile.refractory_ms),
            "20000-row replay"};
}

Check check_sync() {
    PlaybackConfig pc;
    const auto jitter = run_sync_harness(3, {0, 10, 0, 3}, pc, 5000);
    const auto zero = run_sync_harness(3, {}, pc, 5000);
    return {"sync.skew", jitter.max_skew_rows <= 1 && zero.max_skew_rows == 0,
            fmt::format("jitter skew {}, zero-latency skew {}", jitter.max_skew_rows, zero.max_skew_rows),
            "jitter skew <= 1, zero-latency skew 0", "3 subscribers, 30 ms rows, +-10 ms jitter"};
}

}  // namespace

std::vector<CheckResult> run_checks(const RunConfig& config) {
    return {check_mapping_endpoints(),
            check_mapping_monotonic(),
            check_mass_conservation(config.ecology.decay),
            check_osc_golden(),
            check_osc_roundtrip(),
            check_burst_detection(config.dataset.bursts),
            check_spike_override(),
            check_refractory(config.fabric),
            check_sync(),
            check_determinism(config)};
}

}  // namespace neuroeco
