#include "neuroeco/clock.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace neuroeco {

PlaybackRange resolve(const PlaybackConfig& config, std::size_t n_rows, std::uint32_t dt_ms) {
    if (!(config.dilation > 0) || !std::isfinite(config.dilation)) {
        throw std::invalid_argument("dilation must be positive");
    }
    PlaybackRange range;
    range.start = config.start_row;
    range.end = config.end_row == 0 ? n_rows : config.end_row;
    if (range.start >= range.end || range.end > n_rows) {
        throw std::invalid_argument(fmt::format("playback range [{}, {}) invalid for {} rows",
                                                range.start, range.end, n_rows));
    }
    range.row_us = row_duration_us(config, dt_ms);
    if (range.row_us <= 0) throw std::invalid_argument("row duration rounds to zero microseconds");
    return range;
}

double row_duration(const PlaybackConfig& config, std::uint32_t dt_ms) {
    return static_cast<double>(dt_ms) * config.dilation;
}

std::int64_t row_duration_us(const PlaybackConfig& config, std::uint32_t dt_ms) {
    return std::llround(static_cast<double>(dt_ms) * config.dilation * 1000.0);
}

std::string to_json_line(const RowEvent& e) {
    return fmt::format(R"({{"seq":{},"pass":{},"row":{},"t_sim_us":{}}})", e.seq, e.pass, e.row,
                       e.t_sim_us);
}

namespace {

template <typename Emit>
PlaybackStats run(const PlaybackConfig& config, std::size_t n_rows, std::uint32_t dt_ms,
                  std::stop_token stop, Emit&& emit) {
    const auto range = resolve(config, n_rows, dt_ms);
    const std::size_t passes = config.loop ? config.passes : 1;
    const bool paced = config.mode == PlaybackMode::realtime;
    const auto origin = std::chrono::steady_clock::now();

    PlaybackStats stats;
    RowEvent e;
    for (std::uint32_t pass = 0; passes == 0 || pass < passes; ++pass) {
        for (std::size_t row = range.start; row < range.end; ++row) {
            if (stop.stop_requested()) return stats;
            e.pass = pass;
            e.row = row;
            e.t_sim_us = range.time_of(row);
            if (paced) {
                const auto deadline =
                    origin + std::chrono::microseconds(static_cast<std::int64_t>(e.seq) * range.row_us);
                std::this_thread::sleep_until(deadline);
                const auto late = std::chrono::duration_cast<std::chrono::microseconds>(
                                      std::chrono::steady_clock::now() - deadline)
                                      .count();
                stats.max_lateness_us = std::max<std::int64_t>(stats.max_lateness_us, late);
            }
            emit(e);
            ++stats.emitted;
            ++e.seq;
        }
        if (passes == 0 && !paced) break;  // an unbounded offline loop would never end
    }
    return stats;
}

}  // namespace

std::vector<RowEvent> schedule(const PlaybackConfig& config, std::size_t n_rows,
                               std::uint32_t dt_ms) {
    PlaybackConfig offline = config;
    offline.mode = PlaybackMode::offline;
    std::vector<RowEvent> out;
    run(offline, n_rows, dt_ms, {}, [&](const RowEvent& e) { out.push_back(e); });
    return out;
}

PlaybackStats play(const PlaybackConfig& config, std::size_t n_rows, std::uint32_t dt_ms,
                   RowSink& sink, std::stop_token stop) {
    return run(config, n_rows, dt_ms, stop, [&](const RowEvent& e) { sink.on_row(e); });
}

// --- fan-out ------------------------------------------------------------------

struct RowFanOut::Lane {
    RowSink* sink = nullptr;
    std::mutex mu;
    std::condition_variable cv;
    struct Item {
        RowEvent event;
        std::uint64_t drop_first = 0;  // drops to report before `event`
        std::uint64_t drop_count = 0;
        bool has_event = true;  // false: trailing drop report only
    };
    std::deque<Item> queue;
    std::uint64_t pending_drop_first = 0;
    std::uint64_t pending_drop_count = 0;
    std::uint64_t dropped = 0;
    bool busy = false;
    std::jthread worker;

    void serve(std::stop_token stop) {
        std::unique_lock lock(mu);
        while (true) {
            cv.wait(lock, [&] { return stop.stop_requested() || !queue.empty(); });
            if (queue.empty()) return;
            const Item item = queue.front();
            queue.pop_front();
            busy = true;
            lock.unlock();
            if (item.drop_count > 0) sink->on_dropped(item.drop_first, item.drop_count);
            if (item.has_event) sink->on_row(item.event);
            lock.lock();
            busy = false;
            cv.notify_all();
        }
    }
};

RowFanOut::RowFanOut(Mode mode, std::size_t queue_capacity)
    : mode_(mode), capacity_(queue_capacity == 0 ? 1 : queue_capacity) {}

RowFanOut::~RowFanOut() {
    for (auto& lane : lanes_) {
        if (lane->worker.joinable()) {
            lane->worker.request_stop();
            lane->cv.notify_all();
        }
    }
}

void RowFanOut::add(RowSink& consumer) {
    auto lane = std::make_unique<Lane>();
    lane->sink = &consumer;
    if (mode_ == Mode::queued) {
        Lane* raw = lane.get();
        lane->worker = std::jthread([raw](std::stop_token st) { raw->serve(st); });
    }
    lanes_.push_back(std::move(lane));
}

void RowFanOut::on_row(const RowEvent& event) {
    for (auto& lane : lanes_) {
        if (mode_ == Mode::direct) {
            lane->sink->on_row(event);
            continue;
        }
        std::lock_guard lock(lane->mu);
        if (lane->queue.size() >= capacity_) {
            if (lane->pending_drop_count == 0) lane->pending_drop_first = event.seq;
            ++lane->pending_drop_count;
            ++lane->dropped;
            continue;
        }
        lane->queue.push_back({event, lane->pending_drop_first, lane->pending_drop_count});
        lane->pending_drop_count = 0;
        lane->cv.notify_all();
    }
}

void RowFanOut::drain() {
    for (auto& lane : lanes_) {
        if (mode_ == Mode::direct) continue;
        std::unique_lock lock(lane->mu);
        if (lane->pending_drop_count > 0) {
            lane->queue.push_back({RowEvent{}, lane->pending_drop_first, lane->pending_drop_count, false});
            lane->pending_drop_count = 0;
            lane->cv.notify_all();
        }
        lane->cv.wait(lock, [&] { return lane->queue.empty() && !lane->busy; });
    }
}

std::uint64_t RowFanOut::dropped_for(std::size_t consumer) const {
    auto& lane = *lanes_.at(consumer);
    std::lock_guard lock(lane.mu);
    return lane.dropped;
}

}  // namespace neuroeco
