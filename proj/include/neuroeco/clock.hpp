#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace neuroeco {

enum class PlaybackMode { offline, realtime };

struct PlaybackConfig {
    double dilation = 30.0;
    std::size_t start_row = 0;
    std::size_t end_row = 0;  // 0 = end of the raster
    bool loop = false;
    std::size_t passes = 1;   // when looping; 0 = until stopped
    PlaybackMode mode = PlaybackMode::offline;
};

/// The playback range with end_row resolved and invariants checked.
struct PlaybackRange {
    std::size_t start = 0;
    std::size_t end = 0;
    std::int64_t row_us = 0;  // simulated duration of one row

    std::size_t rows() const { return end - start; }
    std::int64_t time_of(std::size_t row) const {
        return static_cast<std::int64_t>(row - start) * row_us;
    }
};

PlaybackRange resolve(const PlaybackConfig& config, std::size_t n_rows, std::uint32_t dt_ms);

/// Simulated milliseconds per row: dt x dilation.
double row_duration(const PlaybackConfig& config, std::uint32_t dt_ms);
/// Same, as integer microseconds (the unit t_sim is carried in).
std::int64_t row_duration_us(const PlaybackConfig& config, std::uint32_t dt_ms);

struct RowEvent {
    std::uint64_t seq = 0;   // strictly increasing across passes
    std::uint32_t pass = 0;
    std::size_t row = 0;
    std::int64_t t_sim_us = 0;  // restarts at 0 each pass

    double t_sim_ms() const { return static_cast<double>(t_sim_us) / 1000.0; }
    bool operator==(const RowEvent&) const = default;
};

std::string to_json_line(const RowEvent& e);

class RowSink {
public:
    virtual ~RowSink() = default;
    virtual void on_row(const RowEvent& event) = 0;
    /// Realtime only: `count` events starting at `first_seq` were skipped for
    /// this sink because it fell behind.
    virtual void on_dropped(std::uint64_t /*first_seq*/, std::uint64_t /*count*/) {}
};

struct PlaybackStats {
    std::uint64_t emitted = 0;
    std::int64_t max_lateness_us = 0;  // realtime: worst emission delay past deadline
};

/// Every event of the configured playback, in order. Offline and realtime
/// produce the same sequence; only pacing differs.
std::vector<RowEvent> schedule(const PlaybackConfig& config, std::size_t n_rows,
                               std::uint32_t dt_ms);

/// Emits the playback into `sink`. Realtime mode sleeps until absolute
/// deadlines start + seq x row_duration.
PlaybackStats play(const PlaybackConfig& config, std::size_t n_rows, std::uint32_t dt_ms,
                   RowSink& sink, std::stop_token stop = {});

/// Fans one ordered stream out to many consumers. In direct mode each
/// consumer is called inline. In queued mode every consumer runs on its own
/// thread behind a bounded FIFO; when the FIFO is full the event is dropped
/// for that consumer only and reported through on_dropped before its next
/// delivered event. Order is never changed.
class RowFanOut : public RowSink {
public:
    enum class Mode { direct, queued };

    explicit RowFanOut(Mode mode = Mode::direct, std::size_t queue_capacity = 256);
    ~RowFanOut() override;
    RowFanOut(const RowFanOut&) = delete;
    RowFanOut& operator=(const RowFanOut&) = delete;

    /// Consumers must outlive the fan-out or the call to drain().
    void add(RowSink& consumer);
    void on_row(const RowEvent& event) override;
    /// Waits until every lane is idle; drops still pending are reported first.
    void drain();

    std::uint64_t dropped_for(std::size_t consumer) const;

private:
    struct Lane;
    Mode mode_;
    std::size_t capacity_;
    std::vector<std::unique_ptr<Lane>> lanes_;
};

}  // namespace neuroeco
