#pragma once

#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neuroeco/clock.hpp"
#include "neuroeco/dataset.hpp"

namespace neuroeco {

// --- rate mappings ------------------------------------------------------------

inline constexpr double kSustainMin = 0.21, kSustainMax = 20.0;   // events/s
inline constexpr double kGrainDensityMin = 5.0, kGrainDensityMax = 160.0;
inline constexpr double kGrainMinMs = 6.25, kGrainMaxMs = 400.0;
inline constexpr double kKickMin = 0.1, kKickMax = 0.83;

/// Square-root rise from 0.21 to 20 events/s.
double sustain_density(double r_norm);
/// Inverted sixth root: 160 events/s at silence, 5 at the peak rate.
double granular_density(double r_norm);
/// Linear from 6.25 ms to 400 ms; `rising = false` selects the inverse reading.
double grain_duration(double r_norm, bool rising = true);
/// Nearest positive whole number of root periods.
double quantize_grain(double duration_ms, double root_hz);
/// Linear fall from 0.83 to 0.1 events/s.
double kick_density(double r_norm);

// --- harmony ------------------------------------------------------------------

struct Chord {
    std::string name;
    int root = 0;                 // pitch class, C = 0
    std::vector<int> pitch_classes;
};

/// "C", "Cm", "Ab", "Db", "Bbm", "F#m" ... major or minor triads.
Chord parse_chord(std::string_view name);

struct PitchEntry {
    std::uint32_t index = 0;   // sample number 0..51
    int pitch_class = 0;
    std::uint32_t chord = 0;   // progression position the sample belongs to
    int octave = 0;

    int midi() const { return 12 * (octave + 1) + pitch_class; }
};

inline constexpr std::size_t kPitchTableSize = 52;

class HarmonicState {
public:
    /// Throws unless the first chord is rooted on C and some chord on D-flat.
    explicit HarmonicState(std::vector<Chord> progression);
    /// Cm, Ab, Db, Bbm, cycled.
    static HarmonicState c_minor_phrygian();

    std::span<const Chord> progression() const { return progression_; }
    std::span<const PitchEntry> pitch_table() const { return table_; }
    std::size_t chord_index() const { return chord_index_; }
    const Chord& current() const { return progression_[chord_index_]; }

    void advance() { chord_index_ = (chord_index_ + 1) % progression_.size(); }
    void set_chord_index(std::size_t i) { chord_index_ = i % progression_.size(); }

    /// Pitch-table entries belonging to the current chord, lowest first.
    std::vector<std::uint32_t> current_entries() const;
    /// Frequency of the current root in octave 3 (C3 = 130.81 Hz).
    double root_hz() const;

private:
    std::vector<Chord> progression_;
    std::vector<PitchEntry> table_;
    std::size_t chord_index_ = 0;
};

// --- control events -----------------------------------------------------------

enum class EventKind : std::uint8_t { sustain, grain, drone, kick, chord_change };
std::string_view to_string(EventKind kind);

inline constexpr std::uint32_t kMainChannels = 16;
inline constexpr std::uint32_t kSubChannelA = 16, kSubChannelB = 17;

struct ControlEvent {
    EventKind kind = EventKind::sustain;
    double onset_ms = 0;        // simulated timeline, from the start of the pass
    std::uint32_t pitch = 0;    // pitch-table index; pitch class for kicks; chord index for chord_change
    std::uint32_t channel = 0;  // 0..15 mains, 16..17 subwoofers
    double duration_ms = 0;
    double attack_ms = 0;
    double decay_ms = 0;
    double amplitude = 0;
    bool half_speed = false;
    double delay_ms = 0;

    bool operator==(const ControlEvent&) const = default;
};

std::string to_json_line(const ControlEvent& e);

struct Interval {
    double lo = 0;
    double hi = 0;
};

struct SonifyConfig {
    bool grain_rising = true;
    double half_speed_p = 0.5;
    Interval sustain_attack_ms{50, 800};
    Interval sustain_decay_ms{200, 2000};
    Interval sustain_delay_ms{80, 900};
    double sustain_amplitude = 0.8;
    double grain_amplitude = 0.5;
    Interval drone_gap_s{20, 90};
    Interval drone_attack_s{5, 15};
    Interval drone_sustain_s{10, 40};
    Interval drone_decay_s{5, 15};
    double drone_amplitude = 0.35;
    double kick_repeat_p = 0.15;
    std::uint32_t kick_repeat_min = 2;
    std::uint32_t kick_repeat_max = 4;
    double kick_spacing_ms = 250;
    double kick_duration_ms = 180;
    double kick_amplitude = 1.0;
};

/// Streams control events in onset order while playback advances. Each
/// stream is an inhomogeneous Poisson process (thinning against the
/// stream's peak density) evaluated on the dilated timeline; burst ends cue
/// chord changes.
class EventCompiler {
public:
    EventCompiler(const RateSeries& rate, std::span<const BurstInterval> bursts,
                  const PlaybackRange& range, HarmonicState harmonic, const SonifyConfig& config,
                  std::uint64_t seed);

    /// Every not-yet-emitted event with onset < horizon_ms, sorted.
    std::vector<ControlEvent> advance_to(double horizon_ms);
    /// Everything up to the end of the playback range.
    std::vector<ControlEvent> finish() { return advance_to(span_ms_); }

    double span_ms() const { return span_ms_; }
    /// Chord index in force at `t_ms`.
    std::size_t chord_at(double t_ms) const;

private:
    struct Pending {
        ControlEvent event;
        std::uint64_t order;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const;
    };
    struct Stream {
        EventKind kind;
        double peak;
        double next_ms = 0;
        std::uint64_t candidates = 0;
        std::uint64_t accepted = 0;
    };

    double r_norm_at(double t_ms) const;
    double density(EventKind kind, double r) const;
    void draw_next(Stream& s);
    void realise(Stream& s, double t_ms);
    void push(const ControlEvent& e);

    const RateSeries& rate_;
    PlaybackRange range_;
    double row_ms_;
    double span_ms_;
    HarmonicState harmonic_;
    std::size_t initial_chord_;
    SonifyConfig config_;
    std::uint64_t seed_;
    std::vector<double> chord_times_;
    std::size_t next_chord_ = 0;
    std::vector<Stream> streams_;
    double next_drone_ms_ = 0;
    std::uint64_t drones_ = 0;
    std::priority_queue<Pending, std::vector<Pending>, Later> pending_;
    std::uint64_t order_ = 0;
    double emitted_to_ = 0;
};

std::vector<ControlEvent> gen_events(const RateSeries& rate, std::span<const BurstInterval> bursts,
                                     const PlaybackConfig& config, const HarmonicState& harmonic,
                                     std::uint64_t seed, const SonifyConfig& sonify = {});

}  // namespace neuroeco
