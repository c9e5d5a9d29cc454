#include <algorithm>

#include "neuroeco/rng.hpp"
#include "neuroeco/wire.hpp"

namespace neuroeco {

Ack publish(const TopicMessage& msg, Transport& transport, const TopicTable& table) {
    table.validate(msg);
    return transport.send(msg);
}

std::size_t LoopbackTransport::subscribe(std::string filter, TopicHandler handler) {
    subs_.push_back({std::move(filter), std::move(handler)});
    return subs_.size() - 1;
}

Ack LoopbackTransport::send(const TopicMessage& msg) {
    Ack ack{0, seq_++};
    for (auto& s : subs_) {
        if (topic_matches(s.filter, msg.topic)) {
            s.handler(msg);
            ++ack.delivered;
        }
    }
    return ack;
}

SimulatedNetwork::SimulatedNetwork(const LatencyModel& model) : model_(model) {
    if (model.fixed_ms < 0 || model.jitter_ms < 0 || model.loss_p < 0 || model.loss_p > 1) {
        throw WireError("latency model needs fixed, jitter >= 0 and loss in [0, 1]");
    }
}

std::size_t SimulatedNetwork::subscribe(std::string filter, TopicHandler handler) {
    subs_.push_back({std::move(filter), std::move(handler)});
    return subs_.size() - 1;
}

Ack SimulatedNetwork::send(const TopicMessage& msg) {
    Ack ack{0, seq_};
    auto shared = std::make_shared<const TopicMessage>(msg);
    for (std::size_t i = 0; i < subs_.size(); ++i) {
        auto& s = subs_[i];
        if (!topic_matches(s.filter, msg.topic)) continue;
        Draws d(model_.seed, i, seq_);
        if (d.chance(model_.loss_p)) {
            ++dropped_;
            continue;
        }
        const double jitter = model_.jitter_ms > 0 ? d.uniform(-model_.jitter_ms, model_.jitter_ms) : 0.0;
        const double at = std::max(now_ms_ + std::max(0.0, model_.fixed_ms + jitter), s.last_arrival);
        s.last_arrival = at;
        flights_.push({at, order_++, i, now_ms_, shared});
        ++ack.delivered;
    }
    ++seq_;
    return ack;
}

std::size_t SimulatedNetwork::advance_to(double t_ms) {
    std::size_t n = 0;
    while (!flights_.empty() && flights_.top().at <= t_ms) {
        Flight f = flights_.top();
        flights_.pop();
        current_sub_ = f.sub;
        current_time_ = f.at;
        latency_sum_ += f.at - f.sent;
        ++delivered_;
        ++n;
        subs_[f.sub].handler(*f.msg);
    }
    now_ms_ = std::max(now_ms_, t_ms);
    return n;
}

std::optional<double> SimulatedNetwork::next_delivery() const {
    if (flights_.empty()) return std::nullopt;
    return flights_.top().at;
}

}  // namespace neuroeco
