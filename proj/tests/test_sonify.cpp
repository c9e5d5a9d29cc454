#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "neuroeco/sonify.hpp"

using namespace neuroeco;

namespace {

// Poisson count check: |n - mu| <= 3 sqrt(mu).
bool within_3_sigma(double n, double mu) { return std::abs(n - mu) <= 3 * std::sqrt(mu); }

std::map<EventKind, std::size_t> count_kinds(const std::vector<ControlEvent>& events) {
    std::map<EventKind, std::size_t> n;
    for (const auto& e : events) ++n[e.kind];
    return n;
}

struct ConstantRun {
    RateSeries rate;
    PlaybackConfig playback;
    std::vector<ControlEvent> events;
    double seconds = 0;
};

ConstantRun constant_rate(double r, std::size_t rows, std::uint64_t seed, SonifyConfig cfg = {}) {
    ConstantRun run;
    run.rate = rate_from_norm(std::vector<double>(rows, r));
    run.events = gen_events(run.rate, {}, run.playback, HarmonicState::c_minor_phrygian(), seed, cfg);
    run.seconds = row_duration(run.playback, 1) * static_cast<double>(rows) / 1000.0;
    return run;
}

}  // namespace

TEST_CASE("rate mappings hit the stated endpoints exactly") {
    CHECK(sustain_density(0) == 0.21);
    CHECK(sustain_density(1) == 20.0);
    CHECK(granular_density(0) == 160.0);
    CHECK(granular_density(1) == 5.0);
    CHECK(grain_duration(0) == 6.25);
    CHECK(grain_duration(1) == 400.0);
    CHECK(kick_density(0) == 0.83);
    CHECK(kick_density(1) == 0.1);
}

TEST_CASE("rate mappings at interior points") {
    CHECK(sustain_density(0.25) == doctest::Approx(0.21 + 19.79 * 0.5).epsilon(1e-12));
    CHECK(std::abs(granular_density(0.5) - 21.91) <= 0.01);
    CHECK(grain_duration(0.5) == doctest::Approx(203.125).epsilon(1e-12));
    CHECK(kick_density(0.5) == doctest::Approx(0.465).epsilon(1e-12));
    // Closed forms at arbitrary points.
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        CHECK(sustain_density(r) == doctest::Approx(0.21 + 19.79 * std::sqrt(r)).epsilon(1e-12));
        CHECK(granular_density(r) == doctest::Approx(5 + 155 * (1 - std::pow(r, 1.0 / 6))).epsilon(1e-12));
        CHECK(grain_duration(r) == doctest::Approx(6.25 + 393.75 * r).epsilon(1e-12));
        CHECK(kick_density(r) == doctest::Approx(0.83 - 0.73 * r).epsilon(1e-12));
    }
}

TEST_CASE("rate mappings are strictly monotone and stay in range") {
    double prev[4] = {sustain_density(0), granular_density(0), grain_duration(0), kick_density(0)};
    for (int i = 1; i < 1000; ++i) {
        const double r = i / 999.0;
        const double cur[4] = {sustain_density(r), granular_density(r), grain_duration(r), kick_density(r)};
        REQUIRE(cur[0] > prev[0]);
        REQUIRE(cur[1] < prev[1]);
        REQUIRE(cur[2] > prev[2]);
        REQUIRE(cur[3] < prev[3]);
        REQUIRE(cur[0] >= 0.21);
        REQUIRE(cur[0] <= 20.0);
        REQUIRE(cur[1] >= 5.0);
        REQUIRE(cur[1] <= 160.0);
        REQUIRE(cur[2] >= 6.25);
        REQUIRE(cur[2] <= 400.0);
        REQUIRE(cur[3] >= 0.1);
        REQUIRE(cur[3] <= 0.83);
        std::copy(cur, cur + 4, prev);
    }
}

TEST_CASE("the inverse grain reading mirrors the rising one") {
    CHECK(grain_duration(0, false) == 400.0);
    CHECK(grain_duration(1, false) == 6.25);
    CHECK(grain_duration(0.3, false) == doctest::Approx(grain_duration(0.7)));
}

TEST_CASE("quantize_grain") {
    const double c3 = 130.81;
    const double period = 1000.0 / c3;
    CHECK(quantize_grain(period, c3) == doctest::Approx(period).epsilon(1e-15));
    CHECK(quantize_grain(100, c3) == doctest::Approx(13 * period).epsilon(1e-12));
    CHECK(quantize_grain(100, c3) == doctest::Approx(99.38).epsilon(1e-4));
    CHECK(quantize_grain(3, c3) == doctest::Approx(period).epsilon(1e-12));
    CHECK_THROWS(quantize_grain(0, c3));
    CHECK_THROWS(quantize_grain(10, -1));

    SUBCASE("error is at most half a period above one period") {
        for (int i = 0; i < 10'000; ++i) {
            const double hz = 60 + i % 400;
            const double d = 1000.0 / hz + (i * 0.137);
            const double q = quantize_grain(d, hz);
            const double p = 1000.0 / hz;
            REQUIRE(std::abs(q - d) <= 0.5 * p + 1e-9);
            REQUIRE(std::abs(q / p - std::round(q / p)) < 1e-9);
        }
    }
}

TEST_CASE("harmony") {
    SUBCASE("chord parsing") {
        CHECK(parse_chord("Cm").pitch_classes == std::vector<int>{0, 3, 7});
        CHECK(parse_chord("Ab").pitch_classes == std::vector<int>{8, 0, 3});
        CHECK(parse_chord("Db").pitch_classes == std::vector<int>{1, 5, 8});
        CHECK(parse_chord("Bbm").pitch_classes == std::vector<int>{10, 1, 5});
        CHECK(parse_chord("F#m").root == 6);
        CHECK_THROWS(parse_chord("H"));
        CHECK_THROWS(parse_chord("Cmaj7"));
        CHECK_THROWS(parse_chord(""));
    }
    SUBCASE("the default progression and its 52-entry pitch table") {
        const auto h = HarmonicState::c_minor_phrygian();
        REQUIRE(h.pitch_table().size() == 52);
        CHECK(h.current().root == 0);
        for (std::size_t i = 0; i < 52; ++i) {
            const auto& e = h.pitch_table()[i];
            CHECK(e.index == i);
            const auto& pcs = h.progression()[e.chord].pitch_classes;
            CHECK(std::find(pcs.begin(), pcs.end(), e.pitch_class) != pcs.end());
        }
        CHECK(h.root_hz() == doctest::Approx(130.81).epsilon(1e-4));
    }
    SUBCASE("advance cycles the progression") {
        auto h = HarmonicState::c_minor_phrygian();
        std::vector<int> roots;
        for (int i = 0; i < 5; ++i) {
            roots.push_back(h.current().root);
            h.advance();
        }
        CHECK(roots == std::vector<int>{0, 8, 1, 10, 0});
    }
    SUBCASE("progressions must be rooted on C and contain a D-flat chord") {
        CHECK_THROWS(HarmonicState({parse_chord("Ab"), parse_chord("Db")}));
        CHECK_THROWS(HarmonicState({parse_chord("Cm"), parse_chord("G")}));
        CHECK_THROWS(HarmonicState(std::vector<Chord>{}));
        CHECK_NOTHROW(HarmonicState({parse_chord("C"), parse_chord("Db")}));
    }
}

TEST_CASE("constant-rate event counts match Poisson expectations") {
    SonifyConfig single_kicks;
    single_kicks.kick_repeat_p = 0;
    // 33,334 rows of 30 ms: 1000.02 simulated seconds.
    for (double r : {0.0, 1.0}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto run = constant_rate(r, 33'334, seed, single_kicks);
            auto n = count_kinds(run.events);
            CAPTURE(r);
            CAPTURE(seed);
            CHECK(within_3_sigma(n[EventKind::sustain], sustain_density(r) * run.seconds));
            CHECK(within_3_sigma(n[EventKind::grain], granular_density(r) * run.seconds));
            CHECK(within_3_sigma(n[EventKind::kick], kick_density(r) * run.seconds));
        }
    }
}

TEST_CASE("thinning follows a time-varying rate") {
    // First half silent, second half at full rate.
    std::vector<double> norm(33'334, 0.0);
    std::fill(norm.begin() + 16'667, norm.end(), 1.0);
    const auto rate = rate_from_norm(norm);
    const auto events = gen_events(rate, {}, PlaybackConfig{}, HarmonicState::c_minor_phrygian(), 5);
    const double half_ms = 16'667 * 30.0;
    std::size_t early = 0, late = 0;
    for (const auto& e : events) {
        if (e.kind != EventKind::sustain) continue;
        (e.onset_ms < half_ms ? early : late)++;
    }
    CHECK(within_3_sigma(early, 0.21 * half_ms / 1000));
    CHECK(within_3_sigma(late, 20.0 * (33'334 * 30.0 - half_ms) / 1000));
}

TEST_CASE("half-speed flag frequency over 10,000 sustain events") {
    const auto run = constant_rate(1.0, 20'000, 11);
    std::size_t n = 0, half = 0;
    for (const auto& e : run.events) {
        if (e.kind != EventKind::sustain) continue;
        if (++n > 10'000) break;
        half += e.half_speed;
    }
    REQUIRE(n > 10'000);
    CHECK(std::abs(half / 10'000.0 - 0.5) <= 0.015);
}

TEST_CASE("event fields respect their ranges and routing") {
    const SonifyConfig cfg;
    std::vector<double> norm(40'000);
    for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = 0.5 + 0.5 * std::sin(i / 900.0);
    const auto rate = rate_from_norm(norm);
    const std::vector<BurstInterval> bursts{{1000, 1500}, {9000, 9100}, {20'000, 30'000}};
    const auto events = gen_events(rate, bursts, PlaybackConfig{}, HarmonicState::c_minor_phrygian(), 3, cfg);
    auto n = count_kinds(events);
    CHECK(n[EventKind::drone] > 0);
    CHECK(n[EventKind::chord_change] == 3);
    const double c3_period = 1000.0 / 130.81;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (i) REQUIRE(events[i - 1].onset_ms <= e.onset_ms);
        REQUIRE(e.onset_ms >= 0);
        REQUIRE(e.duration_ms >= 0);
        REQUIRE(e.amplitude >= 0);
        REQUIRE(e.amplitude <= 1);
        if (e.kind == EventKind::kick) {
            REQUIRE((e.channel == 16 || e.channel == 17));
            REQUIRE(e.pitch <= 1);
        } else {
            REQUIRE(e.channel < 16);
        }
        if (e.kind != EventKind::sustain) REQUIRE_FALSE(e.half_speed);
        switch (e.kind) {
            case EventKind::sustain: {
                const double k = e.half_speed ? 2 : 1;
                REQUIRE(e.pitch < 52);
                REQUIRE(e.attack_ms >= 50 * k);
                REQUIRE(e.attack_ms <= 800 * k);
                REQUIRE(e.decay_ms >= 200 * k);
                REQUIRE(e.decay_ms <= 2000 * k);
                REQUIRE(e.delay_ms >= 80);
                REQUIRE(e.delay_ms <= 900);
                break;
            }
            case EventKind::grain:
                REQUIRE(e.pitch < 52);
                // Quantization moves a duration by at most half a root period;
                // C3 is the longest root period in the progression.
                REQUIRE(e.duration_ms >= 6.25 - c3_period / 2);
                REQUIRE(e.duration_ms <= 400 + c3_period / 2);
                REQUIRE(e.attack_ms == e.decay_ms);
                REQUIRE(e.attack_ms <= 0.5 * e.duration_ms);
                break;
            case EventKind::drone:
                REQUIRE(e.attack_ms >= 5000);
                REQUIRE(e.decay_ms >= 5000);
                break;
            default:
                break;
        }
    }
}

TEST_CASE("drone onsets are 20 to 90 s apart") {
    const auto run = constant_rate(0.5, 100'000, 4);
    std::vector<double> onsets;
    for (const auto& e : run.events) {
        if (e.kind == EventKind::drone) onsets.push_back(e.onset_ms);
    }
    REQUIRE(onsets.size() >= 30);
    for (std::size_t i = 1; i < onsets.size(); ++i) {
        const double gap = onsets[i] - onsets[i - 1];
        REQUIRE(gap >= 20'000);
        REQUIRE(gap <= 90'000);
    }
}

TEST_CASE("kick repeats are articulated 250 ms apart") {
    SonifyConfig always;
    always.kick_repeat_p = 1;
    const auto run = constant_rate(0.0, 30'000, 8, always);
    std::vector<double> kicks;
    for (const auto& e : run.events) {
        if (e.kind == EventKind::kick) kicks.push_back(e.onset_ms);
    }
    REQUIRE(kicks.size() >= 2);
    // With repeats forced, every hit has a sibling exactly 250 ms before or after it.
    const auto has_hit_at = [&](double t) {
        const auto it = std::lower_bound(kicks.begin(), kicks.end(), t - 1e-6);
        return it != kicks.end() && *it <= t + 1e-6;
    };
    for (double t : kicks) REQUIRE((has_hit_at(t - 250) || has_hit_at(t + 250)));
}

TEST_CASE("burst ends cue exactly one chord change each at the dilated time") {
    const auto rate = rate_from_norm(std::vector<double>(1000, 0.2));
    const std::vector<BurstInterval> bursts{{100, 200}};
    const auto events = gen_events(rate, bursts, PlaybackConfig{}, HarmonicState::c_minor_phrygian(), 1);
    std::vector<ControlEvent> changes;
    for (const auto& e : events) {
        if (e.kind == EventKind::chord_change) changes.push_back(e);
    }
    REQUIRE(changes.size() == 1);
    CHECK(changes[0].onset_ms == 200 * 30.0);
    CHECK(changes[0].pitch == 1);
    // Events after the change draw their pitches from the new chord.
    const auto h = HarmonicState::c_minor_phrygian();
    for (const auto& e : events) {
        if (e.kind != EventKind::sustain && e.kind != EventKind::grain) continue;
        const auto chord = h.pitch_table()[e.pitch].chord;
        CHECK(chord == (e.onset_ms < 6000 ? 0u : 1u));
    }
}

TEST_CASE("bursts outside the playback range are ignored") {
    const auto rate = rate_from_norm(std::vector<double>(1000, 0.2));
    PlaybackConfig pc;
    pc.start_row = 300;
    pc.end_row = 900;
    const std::vector<BurstInterval> bursts{{100, 200}, {400, 500}, {950, 990}};
    const auto events = gen_events(rate, bursts, pc, HarmonicState::c_minor_phrygian(), 1);
    std::vector<double> onsets;
    for (const auto& e : events) {
        if (e.kind == EventKind::chord_change) onsets.push_back(e.onset_ms);
    }
    CHECK(onsets == std::vector<double>{(500 - 300) * 30.0});
}

TEST_CASE("the event log is deterministic and seed-dependent") {
    std::vector<double> norm(20'000);
    for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = (i / 1000) % 2 ? 0.9 : 0.1;
    const auto rate = rate_from_norm(norm);
    const std::vector<BurstInterval> bursts{{1000, 2000}, {3000, 4000}};
    const auto h = HarmonicState::c_minor_phrygian();
    const auto a = gen_events(rate, bursts, PlaybackConfig{}, h, 21);
    const auto b = gen_events(rate, bursts, PlaybackConfig{}, h, 21);
    const auto c = gen_events(rate, bursts, PlaybackConfig{}, h, 22);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("streaming compilation equals the batch result for any chunking") {
    std::vector<double> norm(10'000);
    for (std::size_t i = 0; i < norm.size(); ++i) norm[i] = std::fmod(i * 0.001, 1.0);
    const auto rate = rate_from_norm(norm);
    const std::vector<BurstInterval> bursts{{2000, 2500}, {7000, 7300}};
    const auto h = HarmonicState::c_minor_phrygian();
    const auto batch = gen_events(rate, bursts, PlaybackConfig{}, h, 9);
    const auto range = resolve(PlaybackConfig{}, rate.size(), 1);
    for (double chunk : {30.0, 1000.0, 77'777.0}) {
        EventCompiler compiler(rate, bursts, range, h, SonifyConfig{}, 9);
        std::vector<ControlEvent> streamed;
        for (double t = chunk; t < compiler.span_ms() + chunk; t += chunk) {
            const auto part = compiler.advance_to(t);
            for (const auto& e : part) REQUIRE(e.onset_ms < t);
            streamed.insert(streamed.end(), part.begin(), part.end());
        }
        CHECK(streamed == batch);
    }
}

TEST_CASE("control event JSON line") {
    ControlEvent e;
    e.kind = EventKind::kick;
    e.onset_ms = 12.5;
    e.channel = 17;
    e.duration_ms = 180;
    CHECK(to_json_line(e) ==
          R"({"kind":"kick","onset_ms":12.5,"pitch":0,"channel":17,"duration_ms":180,"attack_ms":0,"decay_ms":0,"amplitude":0,"half_speed":false,"delay_ms":0})");
}
