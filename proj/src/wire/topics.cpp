#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "neuroeco/wire.hpp"

namespace neuroeco {
namespace {

using nlohmann::json;

std::string_view type_name(FieldType t) {
    switch (t) {
        case FieldType::integer: return "integer";
        case FieldType::number: return "number";
        case FieldType::string: return "string";
        case FieldType::boolean: return "boolean";
    }
    return "number";
}

FieldType parse_type(const std::string& s) {
    if (s == "integer") return FieldType::integer;
    if (s == "number") return FieldType::number;
    if (s == "string") return FieldType::string;
    if (s == "boolean") return FieldType::boolean;
    throw WireError(fmt::format("unknown field type '{}'", s));
}

bool type_ok(const json& v, FieldType t) {
    switch (t) {
        case FieldType::integer: return v.is_number_integer();
        case FieldType::number: return v.is_number();
        case FieldType::string: return v.is_string();
        case FieldType::boolean: return v.is_boolean();
    }
    return false;
}

std::vector<std::string_view> split_levels(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto slash = s.find('/', start);
        out.push_back(s.substr(start, slash == std::string_view::npos ? slash : slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return out;
}

}  // namespace

TopicMessage make_topic_message(std::string topic, std::string_view json_payload) {
    TopicMessage m;
    m.topic = std::move(topic);
    m.payload.assign(json_payload.begin(), json_payload.end());
    return m;
}

bool topic_matches(std::string_view filter, std::string_view topic) {
    const auto f = split_levels(filter);
    const auto t = split_levels(topic);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == "#") return i + 1 == f.size() && t.size() >= i;
        if (i >= t.size()) return false;
        if (f[i] != "+" && f[i] != t[i]) return false;
    }
    return f.size() == t.size();
}

TopicTable::TopicTable(std::vector<TopicContract> contracts) : contracts_(std::move(contracts)) {
    for (const auto& c : contracts_) {
        if (c.pattern.empty()) throw WireError("topic contract with empty pattern");
        const auto hash = c.pattern.find('#');
        if (hash != std::string::npos && hash + 1 != c.pattern.size()) {
            throw WireError(fmt::format("'#' must be the last level in '{}'", c.pattern));
        }
    }
}

const TopicTable& TopicTable::defaults() {
    static const TopicTable table({
        {"simulacra/clock/row", "one message per replayed row",
         {{"row", FieldType::integer}, {"t_sim_ms", FieldType::number}}},
        {"simulacra/rate", "population firing rate at a row",
         {{"row", FieldType::integer}, {"raw", FieldType::number}, {"norm", FieldType::number}}},
        {"simulacra/burst", "a detected burst interval, published at its end",
         {{"start_row", FieldType::integer}, {"end_row", FieldType::integer}}},
        {"simulacra/fab/solenoid", "one solenoid strike",
         {{"id", FieldType::integer}, {"onset_ms", FieldType::number}, {"velocity", FieldType::number}}},
        {"simulacra/snd/#", "sound control events, one subtopic per event kind",
         {{"kind", FieldType::string}, {"onset_ms", FieldType::number}}},
    });
    return table;
}

TopicTable TopicTable::from_json_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw WireError(fmt::format("topic table: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("topics") || !doc["topics"].is_array()) {
        throw WireError("topic table: expected an object with a 'topics' array");
    }
    std::vector<TopicContract> contracts;
    for (const auto& t : doc["topics"]) {
        TopicContract c;
        c.pattern = t.at("pattern").get<std::string>();
        c.description = t.value("description", "");
        for (const auto& f : t.value("required", json::array())) {
            c.required.push_back({f.at("name").get<std::string>(), parse_type(f.at("type").get<std::string>())});
        }
        contracts.push_back(std::move(c));
    }
    return TopicTable(std::move(contracts));
}

TopicTable TopicTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw WireError(fmt::format("cannot open topic table {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string TopicTable::to_json_text() const {
    json topics = json::array();
    for (const auto& c : contracts_) {
        json req = json::array();
        for (const auto& f : c.required) req.push_back({{"name", f.name}, {"type", type_name(f.type)}});
        topics.push_back({{"pattern", c.pattern}, {"description", c.description}, {"required", req}});
    }
    json doc = {{"qos", "at_most_once"}, {"topics", topics}};
    return doc.dump(2) + "\n";
}

const TopicContract* TopicTable::find(std::string_view topic) const {
    for (const auto& c : contracts_) {
        if (topic_matches(c.pattern, topic)) return &c;
    }
    return nullptr;
}

void TopicTable::validate(const TopicMessage& msg) const {
    const auto* contract = find(msg.topic);
    if (!contract) throw WireError(fmt::format("unregistered topic '{}'", msg.topic));
    json payload;
    try {
        payload = json::parse(msg.payload_text());
    } catch (const json::parse_error&) {
        throw WireError(fmt::format("payload on '{}' is not JSON", msg.topic));
    }
    if (!payload.is_object()) throw WireError(fmt::format("payload on '{}' is not a JSON object", msg.topic));
    for (const auto& f : contract->required) {
        const auto it = payload.find(f.name);
        if (it == payload.end()) {
            throw WireError(fmt::format("payload on '{}' is missing '{}'", msg.topic, f.name));
        }
        if (!type_ok(*it, f.type)) {
            throw WireError(fmt::format("field '{}' on '{}' must be {}", f.name, msg.topic, type_name(f.type)));
        }
    }
}

}  // namespace neuroeco
