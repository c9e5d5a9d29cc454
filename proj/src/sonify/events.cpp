#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "neuroeco/rng.hpp"
#include "neuroeco/sonify.hpp"

namespace neuroeco {
namespace {

constexpr std::uint64_t kDroneEntity = 0x5d'0000'0000ull;

std::uint64_t stream_entity(EventKind kind) {
    return 0x50'0000'0000ull + static_cast<std::uint64_t>(kind);
}

int tie_rank(EventKind kind) {
    return kind == EventKind::chord_change ? 0 : 1 + static_cast<int>(kind);
}

double draw(Draws& d, const Interval& i) { return d.uniform(i.lo, i.hi); }

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::sustain: return "sustain";
        case EventKind::grain: return "grain";
        case EventKind::drone: return "drone";
        case EventKind::kick: return "kick";
        case EventKind::chord_change: return "chord_change";
    }
    return "unknown";
}

std::string to_json_line(const ControlEvent& e) {
    return fmt::format(
        R"({{"kind":"{}","onset_ms":{},"pitch":{},"channel":{},"duration_ms":{},"attack_ms":{},"decay_ms":{},"amplitude":{},"half_speed":{},"delay_ms":{}}})",
        to_string(e.kind), e.onset_ms, e.pitch, e.channel, e.duration_ms, e.attack_ms, e.decay_ms,
        e.amplitude, e.half_speed, e.delay_ms);
}

bool EventCompiler::Later::operator()(const Pending& a, const Pending& b) const {
    if (a.event.onset_ms != b.event.onset_ms) return a.event.onset_ms > b.event.onset_ms;
    const int ra = tie_rank(a.event.kind), rb = tie_rank(b.event.kind);
    if (ra != rb) return ra > rb;
    return a.order > b.order;
}

EventCompiler::EventCompiler(const RateSeries& rate, std::span<const BurstInterval> bursts,
                             const PlaybackRange& range, HarmonicState harmonic,
                             const SonifyConfig& config, std::uint64_t seed)
    : rate_(rate),
      range_(range),
      row_ms_(static_cast<double>(range.row_us) / 1000.0),
      span_ms_(static_cast<double>(range.time_of(range.end)) / 1000.0),
      harmonic_(std::move(harmonic)),
      initial_chord_(harmonic_.chord_index()),
      config_(config),
      seed_(seed) {
    if (rate.size() < range.end) throw std::invalid_argument("rate series shorter than playback range");
    for (const auto& b : bursts) {
        if (b.end >= range.start && b.end < range.end) {
            chord_times_.push_back(static_cast<double>(range.time_of(b.end)) / 1000.0);
        }
    }
    std::sort(chord_times_.begin(), chord_times_.end());

    streams_ = {{EventKind::sustain, kSustainMax},
                {EventKind::grain, kGrainDensityMax},
                {EventKind::kick, kKickMax}};
    for (auto& s : streams_) draw_next(s);

    Draws d(seed_, kDroneEntity, ~0ull);
    next_drone_ms_ = d.uniform(0, config_.drone_gap_s.lo) * 1000.0;
}

std::size_t EventCompiler::chord_at(double t_ms) const {
    const auto changes = static_cast<std::size_t>(
        std::upper_bound(chord_times_.begin(), chord_times_.end(), t_ms) - chord_times_.begin());
    return (initial_chord_ + changes) % harmonic_.progression().size();
}

double EventCompiler::r_norm_at(double t_ms) const {
    auto offset = static_cast<std::size_t>(t_ms / row_ms_);
    const std::size_t row = std::min(range_.start + offset, range_.end - 1);
    return std::clamp(rate_.norm_at(row), 0.0, 1.0);
}

double EventCompiler::density(EventKind kind, double r) const {
    switch (kind) {
        case EventKind::sustain: return sustain_density(r);
        case EventKind::grain: return granular_density(r);
        case EventKind::kick: return kick_density(r);
        default: return 0;
    }
}

void EventCompiler::draw_next(Stream& s) {
    Draws d(seed_, stream_entity(s.kind), s.candidates);
    s.next_ms += d.exponential(s.peak) * 1000.0;
}

void EventCompiler::push(const ControlEvent& e) {
    if (e.onset_ms < span_ms_) pending_.push({e, order_++});
}

void EventCompiler::realise(Stream& s, double t_ms) {
    // Draw 0 of this candidate's stream was its gap; acceptance is draw 1.
    Draws d(seed_, stream_entity(s.kind), s.candidates);
    d.uniform();
    const double r = r_norm_at(t_ms);
    if (d.uniform() * s.peak >= density(s.kind, r)) return;
    ++s.accepted;

    harmonic_.set_chord_index(chord_at(t_ms));
    ControlEvent e;
    e.kind = s.kind;
    e.onset_ms = t_ms;
    switch (s.kind) {
        case EventKind::sustain: {
            const auto entries = harmonic_.current_entries();
            e.pitch = entries[d.below(entries.size())];
            e.half_speed = d.chance(config_.half_speed_p);
            e.attack_ms = draw(d, config_.sustain_attack_ms);
            e.decay_ms = draw(d, config_.sustain_decay_ms);
            e.delay_ms = draw(d, config_.sustain_delay_ms);
            e.channel = static_cast<std::uint32_t>(d.below(kMainChannels));
            if (e.half_speed) {
                e.attack_ms *= 2;
                e.decay_ms *= 2;
            }
            e.duration_ms = e.attack_ms + e.decay_ms;
            e.amplitude = config_.sustain_amplitude;
            push(e);
            break;
        }
        case EventKind::grain: {
            const auto entries = harmonic_.current_entries();
            e.pitch = entries[d.below(entries.size())];
            e.channel = static_cast<std::uint32_t>(d.below(kMainChannels));
            e.duration_ms = quantize_grain(grain_duration(r, config_.grain_rising), harmonic_.root_hz());
            e.attack_ms = e.decay_ms = 0.5 * e.duration_ms * std::sqrt(r);
            e.amplitude = config_.grain_amplitude;
            push(e);
            break;
        }
        case EventKind::kick: {
            e.pitch = static_cast<std::uint32_t>(d.below(2));  // 0 = C, 1 = D-flat
            e.channel = kSubChannelA + static_cast<std::uint32_t>(d.below(2));
            e.duration_ms = config_.kick_duration_ms;
            e.attack_ms = 2.0;
            e.decay_ms = config_.kick_duration_ms - 2.0;
            e.amplitude = config_.kick_amplitude;
            std::uint32_t count = 1;
            if (d.chance(config_.kick_repeat_p)) {
                const auto span = config_.kick_repeat_max - config_.kick_repeat_min + 1;
                count = config_.kick_repeat_min + static_cast<std::uint32_t>(d.below(span));
            }
            for (std::uint32_t k = 0; k < count; ++k) {
                ControlEvent hit = e;
                hit.onset_ms = t_ms + config_.kick_spacing_ms * k;
                push(hit);
            }
            break;
        }
        default:
            break;
    }
}

std::vector<ControlEvent> EventCompiler::advance_to(double horizon_ms) {
    horizon_ms = std::min(horizon_ms, span_ms_);
    if (horizon_ms < emitted_to_) horizon_ms = emitted_to_;

    while (next_chord_ < chord_times_.size() && chord_times_[next_chord_] < horizon_ms) {
        ControlEvent e;
        e.kind = EventKind::chord_change;
        e.onset_ms = chord_times_[next_chord_];
        e.pitch = static_cast<std::uint32_t>(chord_at(e.onset_ms));
        push(e);
        ++next_chord_;
    }
    for (auto& s : streams_) {
        while (s.next_ms < horizon_ms) {
            realise(s, s.next_ms);
            ++s.candidates;
            draw_next(s);
        }
    }
    while (next_drone_ms_ < horizon_ms) {
        Draws d(seed_, kDroneEntity, drones_++);
        harmonic_.set_chord_index(chord_at(next_drone_ms_));
        ControlEvent e;
        e.kind = EventKind::drone;
        e.onset_ms = next_drone_ms_;
        e.pitch = harmonic_.current_entries().front();
        e.channel = static_cast<std::uint32_t>(d.below(kMainChannels));
        e.attack_ms = draw(d, config_.drone_attack_s) * 1000.0;
        const double sustain = draw(d, config_.drone_sustain_s) * 1000.0;
        e.decay_ms = draw(d, config_.drone_decay_s) * 1000.0;
        e.duration_ms = e.attack_ms + sustain + e.decay_ms;
        e.amplitude = config_.drone_amplitude;
        push(e);
        next_drone_ms_ += draw(d, config_.drone_gap_s) * 1000.0;
    }

    std::vector<ControlEvent> out;
    while (!pending_.empty() && pending_.top().event.onset_ms < horizon_ms) {
        out.push_back(pending_.top().event);
        pending_.pop();
    }
    emitted_to_ = horizon_ms;
    return out;
}

std::vector<ControlEvent> gen_events(const RateSeries& rate, std::span<const BurstInterval> bursts,
                                     const PlaybackConfig& config, const HarmonicState& harmonic,
                                     std::uint64_t seed, const SonifyConfig& sonify) {
    const auto range = resolve(config, rate.size(), rate.dt_ms);
    EventCompiler compiler(rate, bursts, range, harmonic, sonify, seed);
    return compiler.finish();
}

}  // namespace neuroeco
