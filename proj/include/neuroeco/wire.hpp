#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "neuroeco/clock.hpp"

namespace neuroeco {

// --- OSC 1.0 messages -----------------------------------------------------------

struct Blob {
    std::vector<std::uint8_t> bytes;
    bool operator==(const Blob&) const = default;
};

using OscArg = std::variant<std::int32_t, float, std::string, Blob>;

struct OscMessage {
    std::string address;
    std::vector<OscArg> args;

    bool operator==(const OscMessage&) const = default;
};

enum class OscErrorKind {
    truncated,
    misaligned_padding,
    unknown_type_tag,
    bad_address,
    bad_argument,
    trailing_data,
};

std::string_view to_string(OscErrorKind kind);

class OscError : public std::runtime_error {
public:
    OscError(OscErrorKind kind, std::size_t offset, const std::string& detail = {});
    OscErrorKind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }

private:
    OscErrorKind kind_;
    std::size_t offset_;
};

/// Big-endian, 4-byte aligned. Bundles and time tags are not supported.
std::vector<std::uint8_t> osc_encode(const OscMessage& msg);
OscMessage osc_decode(std::span<const std::uint8_t> bytes);

// --- topic contract ----------------------------------------------------------------

enum class Qos { at_most_once };

struct TopicMessage {
    std::string topic;
    std::vector<std::uint8_t> payload;
    Qos qos = Qos::at_most_once;

    std::string_view payload_text() const {
        return {reinterpret_cast<const char*>(payload.data()), payload.size()};
    }
};

TopicMessage make_topic_message(std::string topic, std::string_view json_payload);

enum class FieldType { integer, number, string, boolean };

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::number;
    bool operator==(const FieldSpec&) const = default;
};

struct TopicContract {
    std::string pattern;  // MQTT filter syntax: '+' one level, trailing '#' any suffix
    std::string description;
    std::vector<FieldSpec> required;
    bool operator==(const TopicContract&) const = default;
};

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool topic_matches(std::string_view filter, std::string_view topic);

class TopicTable {
public:
    TopicTable() = default;
    explicit TopicTable(std::vector<TopicContract> contracts);

    /// clock/row, rate, burst, fab/solenoid, snd/#.
    static const TopicTable& defaults();
    static TopicTable from_json_text(std::string_view text);
    static TopicTable load(const std::filesystem::path& path);
    std::string to_json_text() const;

    std::span<const TopicContract> contracts() const { return contracts_; }
    const TopicContract* find(std::string_view topic) const;
    /// Throws WireError for unregistered topics, non-JSON payloads, missing
    /// or mistyped required fields.
    void validate(const TopicMessage& msg) const;

    bool operator==(const TopicTable&) const = default;

private:
    std::vector<TopicContract> contracts_;
};

// --- transports ----------------------------------------------------------------

using TopicHandler = std::function<void(const TopicMessage&)>;

struct Ack {
    std::size_t delivered = 0;  // subscribers the message reached (or was scheduled for)
    std::uint64_t seq = 0;      // transport-wide publish sequence number
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Returns the subscriber id.
    virtual std::size_t subscribe(std::string filter, TopicHandler handler) = 0;
    virtual Ack send(const TopicMessage& msg) = 0;
};

/// Validates against the contract table, then hands the message to the transport.
Ack publish(const TopicMessage& msg, Transport& transport,
            const TopicTable& table = TopicTable::defaults());

/// Synchronous, lossless, in-order delivery.
class LoopbackTransport : public Transport {
public:
    std::size_t subscribe(std::string filter, TopicHandler handler) override;
    Ack send(const TopicMessage& msg) override;

private:
    struct Sub {
        std::string filter;
        TopicHandler handler;
    };
    std::vector<Sub> subs_;
    std::uint64_t seq_ = 0;
};

struct LatencyModel {
    double fixed_ms = 0;
    double jitter_ms = 0;  // uniform in [-jitter, +jitter]
    double loss_p = 0;
    std::uint64_t seed = 1;
};

/// Delivers on a virtual clock: each copy arrives at send time + fixed +
/// jitter, never before the previous copy to the same subscriber (FIFO per
/// subscriber), unless lost.
class SimulatedNetwork : public Transport {
public:
    explicit SimulatedNetwork(const LatencyModel& model);

    std::size_t subscribe(std::string filter, TopicHandler handler) override;
    Ack send(const TopicMessage& msg) override;

    void set_now(double t_ms) { now_ms_ = t_ms; }
    double now() const { return now_ms_; }
    /// Runs every delivery due at or before t_ms, in time order. Returns the
    /// number delivered.
    std::size_t advance_to(double t_ms);
    /// Time of the earliest undelivered copy, if any.
    std::optional<double> next_delivery() const;

    std::uint64_t dropped() const { return dropped_; }
    std::uint64_t delivered() const { return delivered_; }
    double total_latency_ms() const { return latency_sum_; }
    /// Subscriber receiving the delivery currently being dispatched.
    std::size_t current_subscriber() const { return current_sub_; }
    double current_time() const { return current_time_; }

private:
    struct Sub {
        std::string filter;
        TopicHandler handler;
        double last_arrival = -1e300;
    };
    struct Flight {
        double at;
        std::uint64_t order;
        std::size_t sub;
        double sent;
        std::shared_ptr<const TopicMessage> msg;
    };
    struct Later {
        bool operator()(const Flight& a, const Flight& b) const {
            return a.at != b.at ? a.at > b.at : a.order > b.order;
        }
    };

    LatencyModel model_;
    std::vector<Sub> subs_;
    std::priority_queue<Flight, std::vector<Flight>, Later> flights_;
    double now_ms_ = 0;
    std::uint64_t seq_ = 0;
    std::uint64_t order_ = 0;
    std::uint64_t dropped_ = 0;
    std::uint64_t delivered_ = 0;
    double latency_sum_ = 0;
    std::size_t current_sub_ = 0;
    double current_time_ = 0;
};

// --- synchronization harness ---------------------------------------------------

struct SyncReport {
    std::vector<std::vector<std::int64_t>> lag_rows;  // per subscriber, sampled at each delivery
    std::int64_t max_skew_rows = 0;
    double mean_latency_ms = 0;
    std::uint64_t dropped = 0;
    std::uint64_t delivered = 0;
    std::uint64_t published = 0;
};

/// Replays the clock through a SimulatedNetwork as simulacra/clock/row
/// messages; subscribers decode the payload and track the last row seen.
/// Skew is the largest spread of last-seen sequence numbers across
/// subscribers after any instant's deliveries.
SyncReport run_sync_harness(std::size_t n_subscribers, const LatencyModel& latency,
                            const PlaybackConfig& replay, std::size_t n_rows,
                            std::uint32_t dt_ms = 1);

// --- OSC over UDP --------------------------------------------------------------

class UdpOscSocket {
public:
    /// bind_port 0 picks an ephemeral port. Throws WireError if binding fails.
    explicit UdpOscSocket(std::uint16_t bind_port = 0, std::string_view bind_host = "127.0.0.1");
    ~UdpOscSocket();
    UdpOscSocket(const UdpOscSocket&) = delete;
    UdpOscSocket& operator=(const UdpOscSocket&) = delete;

    std::uint16_t port() const { return port_; }
    void send_to(const OscMessage& msg, std::string_view host, std::uint16_t port);
    /// Waits up to timeout_ms for one datagram.
    std::optional<OscMessage> receive(int timeout_ms);

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

}  // namespace neuroeco
