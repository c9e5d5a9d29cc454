#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "neuroeco/app.hpp"

namespace neuroeco {
namespace {

using nlohmann::json;

json range_json(const ParamRange& r) { return json::array({r.min, r.max}); }
json interval_json(const Interval& r) { return json::array({r.lo, r.hi}); }

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<E, const char*>> names) {
    for (const auto& [e, n] : names) {
        if (e == v) return n;
    }
    return "?";
}

template <class E>
E enum_value(const json& j, std::string_view key, std::initializer_list<std::pair<E, const char*>> names) {
    const auto s = j.get<std::string>();
    for (const auto& [e, n] : names) {
        if (s == n) return e;
    }
    std::string allowed;
    for (const auto& [e, n] : names) allowed += fmt::format("{}'{}'", allowed.empty() ? "" : ", ", n);
    throw ConfigError(fmt::format("{}: '{}' is not one of {}", key, s, allowed));
}

const std::initializer_list<std::pair<RasterFormat, const char*>> kFormats{
    {RasterFormat::csv, "csv"}, {RasterFormat::packed, "packed"}};
const std::initializer_list<std::pair<PlaybackMode, const char*>> kModes{
    {PlaybackMode::offline, "offline"}, {PlaybackMode::realtime, "realtime"}};
const std::initializer_list<std::pair<NeighborSearch, const char*>> kSearch{
    {NeighborSearch::naive, "naive"}, {NeighborSearch::grid, "grid"}};

json species_mod_json(const SpeciesModulation& m) {
    return {{"sensor_angle", range_json(m.sensor_angle)},
            {"sensor_offset", range_json(m.sensor_offset)},
            {"step_size", range_json(m.step_size)},
            {"rotation_angle", range_json(m.rotation_angle)},
            {"deposit", range_json(m.deposit)}};
}

json to_json(const RunConfig& c) {
    const auto& d = c.dataset;
    const auto& e = c.ecology;
    const auto& s = c.sonify;
    json species = json::array();
    for (const auto& m : e.modulation.species) species.push_back(species_mod_json(m));
    return {
        {"seed", c.seed},
        {"dataset",
         {{"source", d.source},
          {"path", d.path},
          {"format", enum_name(d.format, kFormats)},
          {"synthetic",
           {{"seed", d.synthetic.seed},
            {"rows", d.synthetic.rows},
            {"channels", d.synthetic.channels},
            {"background_hz_lo", d.synthetic.background_hz_lo},
            {"background_hz_hi", d.synthetic.background_hz_hi},
            {"n_bursts", d.synthetic.burst.n_bursts},
            {"burst_rate_multiplier", d.synthetic.burst.burst_rate_multiplier},
            {"burst_len_ms", d.synthetic.burst.burst_len_ms},
            {"backbone_k", d.synthetic.burst.backbone_k}}},
          {"rate_window_ms", d.rate_window_ms},
          {"bursts",
           {{"theta_hi", d.bursts.theta_hi},
            {"theta_lo", d.bursts.theta_lo},
            {"min_dur_ms", d.bursts.min_dur_ms},
            {"min_gap_ms", d.bursts.min_gap_ms}}},
          {"backbone", d.backbone},
          {"backbone_k", d.backbone_k},
          {"backbone_bin_ms", d.backbone_bin_ms}}},
        {"playback",
         {{"dilation", c.playback.dilation},
          {"start_row", c.playback.start_row},
          {"end_row", c.playback.end_row},
          {"loop", c.playback.loop},
          {"passes", c.playback.passes},
          {"mode", enum_name(c.playback.mode, kModes)}}},
        {"ecology",
         {{"field_width", e.field_width},
          {"field_height", e.field_height},
          {"species", e.species},
          {"agents_per_species", e.agents_per_species},
          {"decay", e.decay},
          {"coupling_self", e.coupling_self},
          {"coupling_other", e.coupling_other},
          {"termite_field", e.termite_field},
          {"termite_decay", e.termite_decay},
          {"termites",
           {{"noise", e.termites.noise},
            {"probe_angle", e.termites.probe_angle},
            {"probe_distance", e.termites.probe_distance},
            {"turn_angle", e.termites.turn_angle},
            {"step_size", e.termites.step_size},
            {"deposit_threshold", e.termites.deposit_threshold},
            {"p_spontaneous", e.termites.p_spontaneous},
            {"deposit", e.termites.deposit}}},
          {"boids", e.boids},
          {"boid_params",
           {{"r_neighbor", e.boid_params.r_neighbor},
            {"r_sep", e.boid_params.r_sep},
            {"max_force", e.boid_params.max_force}}},
          {"boid_spike_gain", e.boid_spike_gain},
          {"boid_search", enum_name(e.boid_search, kSearch)},
          {"modulation",
           {{"species", species},
            {"boids",
             {{"w_coh", range_json(e.modulation.boids.w_coh)},
              {"w_sep", range_json(e.modulation.boids.w_sep)},
              {"w_ali", range_json(e.modulation.boids.w_ali)},
              {"max_speed", range_json(e.modulation.boids.max_speed)}}}}},
          {"workers", e.workers},
          {"audit_deposits", e.audit_deposits},
          {"tick_rows", c.ecology_tick_rows}}},
        {"sonify",
         {{"progression", c.progression},
          {"grain_rising", s.grain_rising},
          {"half_speed_p", s.half_speed_p},
          {"sustain_attack_ms", interval_json(s.sustain_attack_ms)},
          {"sustain_decay_ms", interval_json(s.sustain_decay_ms)},
          {"sustain_delay_ms", interval_json(s.sustain_delay_ms)},
          {"sustain_amplitude", s.sustain_amplitude},
          {"grain_amplitude", s.grain_amplitude},
          {"drone_gap_s", interval_json(s.drone_gap_s)},
          {"drone_attack_s", interval_json(s.drone_attack_s)},
          {"drone_sustain_s", interval_json(s.drone_sustain_s)},
          {"drone_decay_s", interval_json(s.drone_decay_s)},
          {"drone_amplitude", s.drone_amplitude},
          {"kick_repeat_p", s.kick_repeat_p},
          {"kick_repeat_min", s.kick_repeat_min},
          {"kick_repeat_max", s.kick_repeat_max},
          {"kick_spacing_ms", s.kick_spacing_ms},
          {"kick_duration_ms", s.kick_duration_ms},
          {"kick_amplitude", s.kick_amplitude}}},
        {"fabric",
         {{"solenoids", c.fabric.solenoids},
          {"refractory_ms", c.fabric.refractory_ms},
          {"velocity_floor", c.fabric.velocity_floor},
          {"led_fps", c.fabric.led_fps},
          {"led_decay", c.fabric.led_decay}}},
        {"wire",
         {{"osc_enabled", c.wire.osc_enabled},
          {"osc_host", c.wire.osc_host},
          {"osc_out_port", c.wire.osc_out_port},
          {"osc_in_port", c.wire.osc_in_port},
          {"osc_every_rows", c.wire.osc_every_rows},
          {"topics_enabled", c.wire.topics_enabled},
          {"topics_file", c.wire.topics_file}}},
        {"output",
         {{"dir", c.output.dir}, {"dump_every", c.output.dump_every}, {"led_ppm", c.output.led_ppm}}},
    };
}

std::string_view kind_of(const json& j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number_unsigned()) return "unsigned integer";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    if (j.is_object()) return "object";
    return "null";
}

bool compatible(const json& def, const json& v) {
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number_float()) return v.is_number();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
}

// Checks `v` against the shape of `def`; arrays are checked element-wise
// against the first default element.
void check_shape(const json& def, const json& v, const std::string& path) {
    if (!compatible(def, v)) {
        throw ConfigError(fmt::format("{}: expected {}, got {}", path, kind_of(def), kind_of(v)));
    }
    if (def.is_object()) {
        for (const auto& [k, val] : v.items()) {
            const auto it = def.find(k);
            const auto sub = path.empty() ? k : path + "." + k;
            if (it == def.end()) throw ConfigError(fmt::format("unknown key '{}'", sub));
            check_shape(*it, val, sub);
        }
    } else if (def.is_array() && !def.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            check_shape(def[0], v[i], fmt::format("{}[{}]", path, i));
        }
    }
}

void merge(json& into, const json& patch) {
    for (const auto& [k, v] : patch.items()) {
        if (v.is_object() && into[k].is_object()) merge(into[k], v);
        else into[k] = v;
    }
}

ParamRange get_range(const json& j, const std::string& key) {
    const auto& a = j.at(key);
    if (a.size() != 2) throw ConfigError(fmt::format("{} must be [min, max]", key));
    return {a[0].get<double>(), a[1].get<double>()};
}
Interval get_interval(const json& j, const std::string& key) {
    const auto r = get_range(j, key);
    return {r.min, r.max};
}

RunConfig from_json(const json& j) {
    RunConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();

    const auto& d = j.at("dataset");
    c.dataset.source = d.at("source").get<std::string>();
    c.dataset.path = d.at("path").get<std::string>();
    c.dataset.format = enum_value(d.at("format"), "dataset.format", kFormats);
    const auto& sy = d.at("synthetic");
    c.dataset.synthetic.seed = sy.at("seed").get<std::uint64_t>();
    c.dataset.synthetic.rows = sy.at("rows").get<std::size_t>();
    c.dataset.synthetic.channels = sy.at("channels").get<std::size_t>();
    c.dataset.synthetic.background_hz_lo = sy.at("background_hz_lo").get<double>();
    c.dataset.synthetic.background_hz_hi = sy.at("background_hz_hi").get<double>();
    c.dataset.synthetic.burst.n_bursts = sy.at("n_bursts").get<std::size_t>();
    c.dataset.synthetic.burst.burst_rate_multiplier = sy.at("burst_rate_multiplier").get<double>();
    c.dataset.synthetic.burst.burst_len_ms = sy.at("burst_len_ms").get<std::size_t>();
    c.dataset.synthetic.burst.backbone_k = sy.at("backbone_k").get<std::size_t>();
    c.dataset.rate_window_ms = d.at("rate_window_ms").get<std::size_t>();
    const auto& b = d.at("bursts");
    c.dataset.bursts = {b.at("theta_hi").get<double>(), b.at("theta_lo").get<double>(),
                        b.at("min_dur_ms").get<std::size_t>(), b.at("min_gap_ms").get<std::size_t>()};
    c.dataset.backbone = d.at("backbone").get<std::string>();
    c.dataset.backbone_k = d.at("backbone_k").get<std::size_t>();
    c.dataset.backbone_bin_ms = d.at("backbone_bin_ms").get<std::size_t>();

    const auto& p = j.at("playback");
    c.playback.dilation = p.at("dilation").get<double>();
    c.playback.start_row = p.at("start_row").get<std::size_t>();
    c.playback.end_row = p.at("end_row").get<std::size_t>();
    c.playback.loop = p.at("loop").get<bool>();
    c.playback.passes = p.at("passes").get<std::size_t>();
    c.playback.mode = enum_value(p.at("mode"), "playback.mode", kModes);

    const auto& e = j.at("ecology");
    auto& ec = c.ecology;
    ec.field_width = e.at("field_width").get<std::size_t>();
    ec.field_height = e.at("field_height").get<std::size_t>();
    ec.species = e.at("species").get<std::size_t>();
    ec.agents_per_species = e.at("agents_per_species").get<std::size_t>();
    ec.decay = e.at("decay").get<double>();
    ec.coupling_self = e.at("coupling_self").get<double>();
    ec.coupling_other = e.at("coupling_other").get<double>();
    ec.termite_field = e.at("termite_field").get<std::size_t>();
    ec.termite_decay = e.at("termite_decay").get<double>();
    const auto& t = e.at("termites");
    ec.termites.noise = t.at("noise").get<double>();
    ec.termites.probe_angle = t.at("probe_angle").get<double>();
    ec.termites.probe_distance = t.at("probe_distance").get<double>();
    ec.termites.turn_angle = t.at("turn_angle").get<double>();
    ec.termites.step_size = t.at("step_size").get<double>();
    ec.termites.deposit_threshold = t.at("deposit_threshold").get<double>();
    ec.termites.p_spontaneous = t.at("p_spontaneous").get<double>();
    ec.termites.deposit = t.at("deposit").get<double>();
    ec.boids = e.at("boids").get<std::size_t>();
    const auto& bp = e.at("boid_params");
    ec.boid_params.r_neighbor = bp.at("r_neighbor").get<double>();
    ec.boid_params.r_sep = bp.at("r_sep").get<double>();
    ec.boid_params.max_force = bp.at("max_force").get<double>();
    ec.boid_spike_gain = e.at("boid_spike_gain").get<double>();
    ec.boid_search = enum_value(e.at("boid_search"), "ecology.boid_search", kSearch);
    const auto& m = e.at("modulation");
    ec.modulation.species.clear();
    for (const auto& sm : m.at("species")) {
        SpeciesModulation s;
        s.sensor_angle = get_range(sm, "sensor_angle");
        s.sensor_offset = get_range(sm, "sensor_offset");
        s.step_size = get_range(sm, "step_size");
        s.rotation_angle = get_range(sm, "rotation_angle");
        s.deposit = get_range(sm, "deposit");
        ec.modulation.species.push_back(s);
    }
    const auto& mb = m.at("boids");
    ec.modulation.boids = {get_range(mb, "w_coh"), get_range(mb, "w_sep"), get_range(mb, "w_ali"),
                           get_range(mb, "max_speed")};
    ec.workers = e.at("workers").get<std::size_t>();
    ec.audit_deposits = e.at("audit_deposits").get<bool>();
    c.ecology_tick_rows = e.at("tick_rows").get<std::size_t>();

    const auto& s = j.at("sonify");
    c.progression = s.at("progression").get<std::vector<std::string>>();
    auto& sc = c.sonify;
    sc.grain_rising = s.at("grain_rising").get<bool>();
    sc.half_speed_p = s.at("half_speed_p").get<double>();
    sc.sustain_attack_ms = get_interval(s, "sustain_attack_ms");
    sc.sustain_decay_ms = get_interval(s, "sustain_decay_ms");
    sc.sustain_delay_ms = get_interval(s, "sustain_delay_ms");
    sc.sustain_amplitude = s.at("sustain_amplitude").get<double>();
    sc.grain_amplitude = s.at("grain_amplitude").get<double>();
    sc.drone_gap_s = get_interval(s, "drone_gap_s");
    sc.drone_attack_s = get_interval(s, "drone_attack_s");
    sc.drone_sustain_s = get_interval(s, "drone_sustain_s");
    sc.drone_decay_s = get_interval(s, "drone_decay_s");
    sc.drone_amplitude = s.at("drone_amplitude").get<double>();
    sc.kick_repeat_p = s.at("kick_repeat_p").get<double>();
    sc.kick_repeat_min = s.at("kick_repeat_min").get<std::uint32_t>();
    sc.kick_repeat_max = s.at("kick_repeat_max").get<std::uint32_t>();
    sc.kick_spacing_ms = s.at("kick_spacing_ms").get<double>();
    sc.kick_duration_ms = s.at("kick_duration_ms").get<double>();
    sc.kick_amplitude = s.at("kick_amplitude").get<double>();

    const auto& f = j.at("fabric");
    c.fabric = {f.at("solenoids").get<std::size_t>(), f.at("refractory_ms").get<double>(),
                f.at("velocity_floor").get<double>(), f.at("led_fps").get<double>(),
                f.at("led_decay").get<double>()};

    const auto& w = j.at("wire");
    c.wire.osc_enabled = w.at("osc_enabled").get<bool>();
    c.wire.osc_host = w.at("osc_host").get<std::string>();
    const auto port = [&](const char* key) {
        const auto v = w.at(key).get<std::uint64_t>();
        if (v > 65535) throw ConfigError(fmt::format("wire.{} must be a UDP port", key));
        return static_cast<std::uint16_t>(v);
    };
    c.wire.osc_out_port = port("osc_out_port");
    c.wire.osc_in_port = port("osc_in_port");
    c.wire.osc_every_rows = w.at("osc_every_rows").get<std::size_t>();
    c.wire.topics_enabled = w.at("topics_enabled").get<bool>();
    c.wire.topics_file = w.at("topics_file").get<std::string>();

    const auto& o = j.at("output");
    c.output.dir = o.at("dir").get<std::string>();
    c.output.dump_every = o.at("dump_every").get<std::size_t>();
    c.output.led_ppm = o.at("led_ppm").get<bool>();
    return c;
}

void collect_leaves(const json& j, const std::string& path, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) collect_leaves(v, path.empty() ? k : path + "." + k, out);
    } else {
        out.push_back(path);
    }
}

json::json_pointer pointer_for(const std::string& dotted) {
    std::string p = "/" + dotted;
    std::replace(p.begin(), p.end(), '.', '/');
    return json::json_pointer(p);
}

}  // namespace

EcologyConfig RunConfig::default_run_ecology() {
    EcologyConfig e;
    e.field_width = 512;
    e.field_height = 512;
    e.agents_per_species = 25'000;
    e.boids = 2000;
    return e;
}

std::string to_json_text(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig config_from_json_text(std::string_view text) {
    json patch;
    try {
        patch = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!patch.is_object()) throw ConfigError("config must be a JSON object");
    json merged = to_json(RunConfig{});
    check_shape(merged, patch, "");
    merge(merged, patch);
    try {
        return from_json(merged);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config: {}", e.what()));
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string env_name_for(std::string_view key_path) {
    std::string name = "SN_";
    for (char ch : key_path) {
        name.push_back(ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
    return name;
}

RunConfig apply_env_overrides(const RunConfig& config, char** envp) {
    if (!envp) return config;
    json current = to_json(config);
    std::vector<std::string> leaves;
    collect_leaves(current, "", leaves);
    std::map<std::string, std::string> by_env;
    for (const auto& leaf : leaves) by_env[env_name_for(leaf)] = leaf;

    json patch = json::object();
    bool any = false;
    for (char** e = envp; *e; ++e) {
        const char* eq = std::strchr(*e, '=');
        if (!eq || std::strncmp(*e, "SN_", 3) != 0) continue;
        const auto it = by_env.find(std::string(*e, static_cast<std::size_t>(eq - *e)));
        if (it == by_env.end()) continue;
        const std::string raw(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        patch[pointer_for(it->second)] = value;
        any = true;
    }
    if (!any) return config;
    check_shape(current, patch, "");
    merge(current, patch);
    try {
        return from_json(current);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("environment override: {}", e.what()));
    }
}

RunConfig apply_settings(const RunConfig& config, const std::vector<std::string>& assignments) {
    if (assignments.empty()) return config;
    json current = to_json(config);
    json patch = json::object();
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError(fmt::format("expected key=value, got '{}'", a));
        const auto key = a.substr(0, eq);
        const auto ptr = pointer_for(key);
        if (!current.contains(ptr)) throw ConfigError(fmt::format("unknown key '{}'", key));
        const auto raw = a.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        if (value.is_discarded()) value = raw;
        patch[ptr] = value;
    }
    check_shape(current, patch, "");
    merge(current, patch);
    try {
        return from_json(current);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("setting: {}", e.what()));
    }
}

void validate(const RunConfig& c) {
    auto require = [](bool ok, std::string_view what) {
        if (!ok) throw ConfigError(std::string(what));
    };
    require(c.dataset.source == "synthetic" || c.dataset.source == "file",
            "dataset.source must be 'synthetic' or 'file'");
    require(c.dataset.source != "file" || !c.dataset.path.empty(), "dataset.path is required for file sources");
    require(c.dataset.synthetic.rows > 0, "dataset.synthetic.rows must be positive");
    require(c.dataset.synthetic.channels > 0, "dataset.synthetic.channels must be positive");
    require(c.dataset.backbone == "meta" || c.dataset.backbone == "correlation",
            "dataset.backbone must be 'meta' or 'correlation'");
    require(c.dataset.rate_window_ms > 0, "dataset.rate_window_ms must be positive");
    require(c.playback.dilation > 0, "playback.dilation must be positive");
    require(c.ecology_tick_rows > 0, "ecology.tick_rows must be positive");
    require(c.ecology.workers > 0, "ecology.workers must be positive");
    require(c.ecology.species >= 1 && c.ecology.species <= kMaxSpecies, "ecology.species must be 1..4");
    require(c.ecology.modulation.species.size() >= c.ecology.species,
            "ecology.modulation.species needs one entry per species");
    require(c.ecology.field_width >= 3 && c.ecology.field_height >= 3, "ecology field must be at least 3x3");
    require(c.ecology.termite_field >= 3, "ecology.termite_field must be at least 3");
    require(!c.progression.empty(), "sonify.progression must not be empty");
    require(c.sonify.kick_repeat_min >= 1 && c.sonify.kick_repeat_min <= c.sonify.kick_repeat_max,
            "sonify kick repeat range is empty");
    require(c.fabric.solenoids > 0, "fabric.solenoids must be positive");
    require(c.fabric.led_fps > 0, "fabric.led_fps must be positive");
    require(c.wire.osc_every_rows > 0, "wire.osc_every_rows must be positive");
    require(!c.output.dir.empty(), "output.dir must not be empty");
}

}  // namespace neuroeco
