#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "neuroeco/fabric.hpp"
#include "neuroeco/rng.hpp"

using namespace neuroeco;

namespace {

std::vector<std::uint32_t> identity_order(std::size_t n) {
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    return order;
}

std::vector<NeuronMeta> grid_meta(std::size_t n, std::size_t backbone) {
    std::vector<NeuronMeta> meta(n);
    for (std::size_t i = 0; i < n; ++i) {
        meta[i].id = static_cast<std::uint32_t>(i);
        meta[i].x = (i % 16 + 0.5) / 16;
        meta[i].y = (i / 16 % 16 + 0.5) / 16;
        meta[i].is_backbone = i < backbone;
    }
    return meta;
}

// Brute-force refractory oracle: walk spikes in time order per solenoid.
std::pair<std::uint64_t, std::uint64_t> oracle_counts(const SpikeRaster& raster, std::span<const RowEvent> rows,
                                                      std::span<const std::uint32_t> order, double refractory) {
    std::uint64_t emitted = 0, suppressed = 0;
    for (std::size_t id = 0; id < order.size(); ++id) {
        double last = -INFINITY;
        for (const auto& e : rows) {
            if (!raster.spike(e.row, order[id])) continue;
            if (e.t_sim_ms() - last < refractory) {
                ++suppressed;
            } else {
                ++emitted;
                last = e.t_sim_ms();
            }
        }
    }
    return {emitted, suppressed};
}

}  // namespace

TEST_CASE("strikes") {
    const FabricProfile profile;
    SUBCASE("no spikes, no strikes") {
        SpikeRaster raster(100, 40);
        const auto rate = rate_from_norm(std::vector<double>(100, 0.5));
        const auto rows = schedule(PlaybackConfig{}, 100, 1);
        const auto r = strikes_from_spikes(raster, rows, identity_order(27), profile, rate);
        CHECK(r.strikes.empty());
        CHECK(r.suppressed == 0);
    }
    SUBCASE("two spikes 10 ms apart with a 400 ms refractory give one strike") {
        SpikeRaster raster(100, 27);
        raster.set(20, 4);
        raster.set(30, 4);
        FabricProfile slow = profile;
        slow.refractory_ms = 400;
        const auto rate = rate_from_norm(std::vector<double>(100, 0.0));
        const auto rows = schedule(PlaybackConfig{}, 100, 1);
        const auto r = strikes_from_spikes(raster, rows, identity_order(27), slow, rate);
        REQUIRE(r.strikes.size() == 1);
        CHECK(r.suppressed == 1);
        CHECK(r.strikes[0].solenoid_id == 4);
        CHECK(r.strikes[0].onset_ms == 600);
        CHECK(r.strikes[0].velocity == 0.3);
        // With the default 40 ms refractory, 300 ms apart both fire.
        const auto both = strikes_from_spikes(raster, rows, identity_order(27), profile, rate);
        CHECK(both.strikes.size() == 2);
    }
    SUBCASE("velocity is affine in r_norm with a 0.3 floor") {
        SpikeRaster raster(3, 27);
        for (std::size_t r = 0; r < 3; ++r) raster.set(r, static_cast<std::size_t>(r));
        const auto rate = rate_from_norm({0.0, 0.5, 1.0});
        const auto rows = schedule(PlaybackConfig{}, 3, 1);
        const auto r = strikes_from_spikes(raster, rows, identity_order(27), profile, rate);
        REQUIRE(r.strikes.size() == 3);
        CHECK(r.strikes[0].velocity == 0.3);
        CHECK(r.strikes[1].velocity == doctest::Approx(0.65));
        CHECK(r.strikes[2].velocity == 1.0);
    }
    SUBCASE("solenoid ids follow the backbone order") {
        SpikeRaster raster(1, 100);
        raster.set(0, 90);
        std::vector<std::uint32_t> order(27);
        for (std::size_t i = 0; i < 27; ++i) order[i] = static_cast<std::uint32_t>(99 - i);
        const auto rate = rate_from_norm({1.0});
        const auto r = strikes_from_spikes(raster, schedule(PlaybackConfig{}, 1, 1), order, profile, rate);
        REQUIRE(r.strikes.size() == 1);
        CHECK(r.strikes[0].solenoid_id == 9);
    }
    SUBCASE("a backbone size other than the profile's is rejected") {
        const auto rate = rate_from_norm({1.0});
        CHECK_THROWS(StrikeMapper(identity_order(26), profile, rate));
        FabricProfile small = profile;
        small.solenoids = 26;
        CHECK_NOTHROW(StrikeMapper(identity_order(26), small, rate));
    }
    SUBCASE("refractory, ordering and conservation on random rasters") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Draws d(seed, 0, 0);
            const std::size_t n_rows = 3000, n_ch = 60;
            SpikeRaster raster(n_rows, n_ch);
            const double p = d.uniform(0.001, 0.2);
            for (std::size_t r = 0; r < n_rows; ++r) {
                for (std::size_t c = 0; c < n_ch; ++c) raster.set(r, c, Draws(seed, c, r + 1).chance(p));
            }
            FabricProfile prof = profile;
            prof.refractory_ms = d.uniform(0, 500);
            PlaybackConfig pc;
            pc.dilation = d.uniform(1, 60);
            std::vector<std::uint32_t> order(27);
            for (std::size_t i = 0; i < 27; ++i) order[i] = static_cast<std::uint32_t>((i * 7 + seed) % n_ch);
            std::sort(order.begin(), order.end());
            order.erase(std::unique(order.begin(), order.end()), order.end());
            prof.solenoids = order.size();
            const auto rate = population_rate(raster, 100);
            const auto rows = schedule(pc, n_rows, 1);
            const auto rep = strikes_from_spikes(raster, rows, order, prof, rate);

            std::uint64_t total = 0;
            for (const auto& e : rows) {
                for (auto ch : order) total += raster.spike(e.row, ch);
            }
            CHECK(rep.backbone_spikes == total);
            CHECK(rep.strikes.size() + rep.suppressed == total);
            const auto [emitted, suppressed] = oracle_counts(raster, rows, order, prof.refractory_ms);
            CHECK(rep.strikes.size() == emitted);
            CHECK(rep.suppressed == suppressed);
            std::vector<double> last(order.size(), -INFINITY);
            for (std::size_t i = 0; i < rep.strikes.size(); ++i) {
                const auto& s = rep.strikes[i];
                if (i) REQUIRE(rep.strikes[i - 1].onset_ms <= s.onset_ms);
                REQUIRE(s.solenoid_id < order.size());
                REQUIRE(s.onset_ms - last[s.solenoid_id] >= prof.refractory_ms);
                REQUIRE(s.velocity >= 0.3);
                REQUIRE(s.velocity <= 1.0);
                last[s.solenoid_id] = s.onset_ms;
            }
        }
    }
    SUBCASE("each looped pass re-arms every solenoid") {
        SpikeRaster raster(2, 27);
        raster.set(1, 0);
        PlaybackConfig pc;
        pc.loop = true;
        pc.passes = 3;
        FabricProfile slow = profile;
        slow.refractory_ms = 1e9;
        const auto rate = rate_from_norm({0.0, 0.0});
        const auto r = strikes_from_spikes(raster, schedule(pc, 2, 1), identity_order(27), slow, rate);
        CHECK(r.strikes.size() == 3);
    }
    SUBCASE("strike JSON line") {
        CHECK(to_json_line(SolenoidStrike{3, 1500, 0.65, 50}) == R"({"id":3,"onset_ms":1500,"velocity":0.65,"row":50})");
    }
}

TEST_CASE("LED cell mapping") {
    CHECK(led_cell(0.5, 0.5) == 8 * 16 + 8);
    CHECK(led_cell(0, 0) == 0);
    CHECK(led_cell(1.0, 1.0) == 255);
    CHECK(led_cell(0.99, 0.0) == 15);
    CHECK(led_cell(0.0, 0.0625) == 16);
    CHECK(led_cell(-1, 2) == 15 * 16);
}

TEST_CASE("LED frames") {
    const FabricProfile profile;
    SUBCASE("a silent raster renders black frames at a fixed cadence") {
        LedRenderer led(grid_meta(64, 27), profile);
        std::vector<LedFrame> out;
        const std::vector<std::uint8_t> none(64, 0);
        for (const auto& e : schedule(PlaybackConfig{}, 1000, 1)) led.on_row(e, none, out);
        led.flush(999 * 30'000, out);
        REQUIRE(out.size() % 2 == 0);
        const std::size_t frames = out.size() / 2;
        // 30 s of simulated time at 30 fps, frame 0 at t = 0.
        CHECK(frames == static_cast<std::size_t>(std::floor(999 * 30.0 / 1000 * 30)) + 1);
        for (std::size_t k = 0; k < frames; ++k) {
            CHECK(out[2 * k].matrix_id == 0);
            CHECK(out[2 * k + 1].matrix_id == 1);
            CHECK(out[2 * k].index == k);
            CHECK(out[2 * k].t_us == static_cast<std::int64_t>(std::floor(k * 1e6 / 30)));
            CHECK(std::all_of(out[2 * k].rgb.begin(), out[2 * k].rgb.end(), [](auto v) { return v == 0; }));
        }
    }
    SUBCASE("a spike lights its cell fully and decays as decay^k") {
        std::vector<NeuronMeta> meta(2);
        meta[0] = {0, 0.5, 0.5, true};
        meta[1] = {1, 0.1, 0.9, false};
        LedRenderer led(meta, profile);
        std::array<double, kLedPixels> full;
        full.fill(1.0);
        led.set_cluster_intensity(full);
        std::vector<LedFrame> out;
        const auto rows = schedule(PlaybackConfig{}, 200, 1);
        for (const auto& e : rows) {
            const std::vector<std::uint8_t> spikes{static_cast<std::uint8_t>(e.row == 0), 0};
            led.on_row(e, spikes, out);
        }
        led.flush(rows.back().t_sim_us, out);
        REQUIRE(out.size() >= 40);
        // Row 0 sits at t = 0, so the spike lands in frame 0.
        for (std::size_t k = 0; k < 20; ++k) {
            const auto expected = static_cast<std::uint8_t>(std::lround(255 * std::pow(0.85, k)));
            const auto p0 = out[2 * k].pixel(8, 8);
            const auto p1 = out[2 * k + 1].pixel(8, 8);
            CAPTURE(k);
            CHECK(p0 == std::array<std::uint8_t, 3>{expected, expected, expected});
            CHECK(p1 == std::array<std::uint8_t, 3>{expected, expected, expected});
            CHECK(out[2 * k].pixel(1, 14) == std::array<std::uint8_t, 3>{0, 0, 0});
        }
    }
    SUBCASE("matrix 1 shows backbone neurons only, green scaled by clustering") {
        std::vector<NeuronMeta> meta(2);
        meta[0] = {0, 0.05, 0.05, true};
        meta[1] = {1, 0.95, 0.95, false};
        LedRenderer led(meta, profile);
        std::array<double, kLedPixels> cluster{};
        cluster[0] = 0.5;
        led.set_cluster_intensity(cluster);
        std::vector<LedFrame> out;
        RowEvent e;
        const std::vector<std::uint8_t> both{1, 1};
        led.on_row(e, both, out);
        led.flush(0, out);
        REQUIRE(out.size() == 2);
        CHECK(out[0].pixel(0, 0) == std::array<std::uint8_t, 3>{255, 255, 255});
        CHECK(out[0].pixel(15, 15) == std::array<std::uint8_t, 3>{255, 255, 255});
        CHECK(out[1].pixel(0, 0) == std::array<std::uint8_t, 3>{255, 128, 255});
        CHECK(out[1].pixel(15, 15) == std::array<std::uint8_t, 3>{0, 0, 0});
    }
    SUBCASE("invalid profiles are rejected") {
        FabricProfile bad = profile;
        bad.led_fps = 0;
        CHECK_THROWS(LedRenderer(grid_meta(4, 1), bad));
        bad = profile;
        bad.led_decay = 1.5;
        CHECK_THROWS(LedRenderer(grid_meta(4, 1), bad));
    }
    SUBCASE("PPM dump and JSON summary") {
        LedFrame f;
        f.rgb[0] = 255;
        f.rgb[4] = 3;
        std::stringstream ppm;
        write_led_ppm(f, ppm);
        CHECK(ppm.str().rfind("P6\n16 16\n255\n", 0) == 0);
        CHECK(ppm.str().size() == 13 + 768);
        const auto line = to_json_line(f);
        CHECK(line.find(R"("lit":2,"sum":258)") != std::string::npos);
    }
}
