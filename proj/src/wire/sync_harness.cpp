#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "neuroeco/wire.hpp"

namespace neuroeco {

SyncReport run_sync_harness(std::size_t n_subscribers, const LatencyModel& latency,
                            const PlaybackConfig& replay, std::size_t n_rows, std::uint32_t dt_ms) {
    if (n_subscribers == 0) throw WireError("sync harness needs at least one subscriber");
    const auto events = schedule(replay, n_rows, dt_ms);
    const double row_ms = row_duration(replay, dt_ms);

    SimulatedNetwork net(latency);
    SyncReport report;
    report.lag_rows.resize(n_subscribers);
    // -1 means nothing seen yet.
    std::vector<std::int64_t> last_seq(n_subscribers, -1);
    std::int64_t published_seq = -1;

    for (std::size_t i = 0; i < n_subscribers; ++i) {
        net.subscribe("simulacra/clock/row", [&, i](const TopicMessage& m) {
            const auto doc = nlohmann::json::parse(m.payload_text());
            last_seq[i] = doc.at("seq").get<std::int64_t>();
            report.lag_rows[i].push_back(published_seq - last_seq[i]);
        });
    }

    auto settle_instant = [&](double t) {
        net.advance_to(t);
        const auto [lo, hi] = std::minmax_element(last_seq.begin(), last_seq.end());
        report.max_skew_rows = std::max(report.max_skew_rows, *hi - *lo);
    };
    auto deliver_until = [&](double t) {
        while (auto next = net.next_delivery()) {
            if (*next > t) break;
            settle_instant(*next);
        }
    };

    for (const auto& e : events) {
        const double t = static_cast<double>(e.seq) * row_ms;
        deliver_until(t);
        net.set_now(t);
        published_seq = static_cast<std::int64_t>(e.seq);
        const auto payload = fmt::format(R"({{"row":{},"t_sim_ms":{},"seq":{},"pass":{}}})", e.row,
                                         e.t_sim_ms(), e.seq, e.pass);
        publish(make_topic_message("simulacra/clock/row", payload), net);
        ++report.published;
    }
    deliver_until(std::numeric_limits<double>::infinity());

    report.dropped = net.dropped();
    report.delivered = net.delivered();
    report.mean_latency_ms = report.delivered ? net.total_latency_ms() / static_cast<double>(report.delivered) : 0.0;
    return report;
}

}  // namespace neuroeco
