#include <chrono>
#include <fstream>
#include <map>
#include <memory>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "neuroeco/app.hpp"
#include "neuroeco/rng.hpp"

namespace neuroeco {
namespace {

/// JSON-lines file that counts its lines.
class LineLog {
public:
    LineLog(std::filesystem::path path) : path_(std::move(path)), out_(path_, std::ios::binary) {
        if (!out_) throw std::runtime_error(fmt::format("cannot write {}", path_.string()));
        out_.rdbuf()->pubsetbuf(buffer_.get(), kBuffer);
    }

    void line(std::string_view text) {
        out_.write(text.data(), static_cast<std::streamsize>(text.size()));
        out_.put('\n');
        ++lines_;
    }

    StreamFile close() {
        out_.close();
        if (!out_) throw std::runtime_error(fmt::format("error writing {}", path_.string()));
        return {path_.filename().string(), lines_, fnv1a_file(path_)};
    }

private:
    static constexpr std::size_t kBuffer = 1 << 16;
    std::filesystem::path path_;
    std::unique_ptr<char[]> buffer_ = std::make_unique<char[]>(kBuffer);
    std::ofstream out_;
    std::uint64_t lines_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Everything downstream of the clock, driven one row at a time.
class PipelineSink : public RowSink {
public:
    PipelineSink(const RunConfig& config, const Dataset& data, const RateSeries& rate,
                 const std::vector<BurstInterval>& bursts, const PlaybackRange& range,
                 const std::filesystem::path& dir, RunReport& report)
        : config_(config),
          data_(data),
          rate_(rate),
          bursts_(bursts),
          range_(range),
          dir_(dir),
          report_(report),
          order_(backbone_order(data.meta)),
          strikes_(order_, config.fabric, rate),
          led_(data.meta, config.fabric),
          ecology_(config.ecology, data.raster.channels(), rng::derive(config.seed, "ecology")),
          rows_(dir / "rows.jsonl"),
          events_(dir / "events.jsonl"),
          strikes_log_(dir / "strikes.jsonl"),
          led_log_(dir / "led.jsonl"),
          ecology_log_(dir / "ecology.jsonl"),
          row_ms_(static_cast<double>(range.row_us) / 1000.0) {
        for (const auto& b : bursts) burst_at_end_.emplace(b.end, b);
        if (config.wire.topics_enabled) {
            if (!config.wire.topics_file.empty()) table_ = TopicTable::load(config.wire.topics_file);
            loopback_.subscribe("#", [this](const TopicMessage&) { ++report_.topic_messages; });
        }
        if (config.wire.osc_enabled) {
            osc_ = std::make_unique<UdpOscSocket>(config.wire.osc_in_port, "0.0.0.0");
        }
        if (config.output.dump_every > 0 || config.output.led_ppm) {
            std::filesystem::create_directories(dir / "frames");
        }
    }

    void on_row(const RowEvent& row) override {
        if (row.pass != pass_ || !compiler_) start_pass(row.pass);
        const auto spikes = data_.raster.row(row.row);
        const double t_ms = row.t_sim_ms();

        rows_.line(to_json_line(row));
        if (config_.wire.topics_enabled) {
            publish_topic("simulacra/clock/row", fmt::format(R"({{"row":{},"t_sim_ms":{}}})", row.row, t_ms));
            publish_topic("simulacra/rate", fmt::format(R"({{"row":{},"raw":{},"norm":{}}})", row.row,
                                                        rate_.raw[row.row], rate_.norm[row.row]));
        }
        if (osc_ && row.seq % config_.wire.osc_every_rows == 0) {
            send_osc(osc_row(row));
            send_osc(osc_rate(static_cast<float>(rate_.norm[row.row])));
        }

        if (auto it = burst_at_end_.find(row.row); it != burst_at_end_.end() && config_.wire.topics_enabled) {
            publish_topic("simulacra/burst", fmt::format(R"({{"start_row":{},"end_row":{}}})",
                                                         it->second.start, it->second.end));
        }

        // Sound events whose onset falls inside this row.
        for (const auto& e : compiler_->advance_to(t_ms + row_ms_)) emit_event(e);

        strike_buf_.clear();
        strikes_.on_row(row, spikes, strike_buf_);
        for (const auto& s : strike_buf_) {
            strikes_log_.line(to_json_line(s));
            if (config_.wire.topics_enabled) publish_topic("simulacra/fab/solenoid", to_json_line(s));
            if (osc_) send_osc(osc_strike(s));
        }

        frame_buf_.clear();
        led_.on_row(row, spikes, frame_buf_);
        emit_frames();

        ecology_.on_row(spikes);
        const std::uint64_t done = row.seq + 1;
        if (done % config_.ecology_tick_rows == 0) {
            ecology_.tick(rate_.norm_at(row.row));
            write_ecology_summary(row);
            led_.set_cluster_intensity(ecology_.cluster_intensity());
        }
        if (config_.output.dump_every > 0 && done % config_.output.dump_every == 0) {
            const auto path = dir_ / "frames" / fmt::format("composite_{:07}.ppm", done);
            std::ofstream out(path, std::ios::binary);
            write_ppm_composite(ecology_.species_fields(), out);
            if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
            ++report_.dumps;
        }

        ++report_.rows;
        report_.last_t_sim_ms = t_ms;
        last_row_ = row;
    }

    void finish() {
        if (compiler_) end_pass();
        report_.strikes = strikes_.emitted();
        report_.strikes_suppressed = strikes_.suppressed();
        report_.backbone_spikes = strikes_.backbone_spikes();
        report_.ecology_ticks = ecology_.ticks();
        report_.streams.push_back(rows_.close());
        report_.streams.push_back(events_.close());
        report_.streams.push_back(strikes_log_.close());
        report_.streams.push_back(led_log_.close());
        report_.streams.push_back(ecology_log_.close());
    }

private:
    void start_pass(std::uint32_t pass) {
        if (compiler_) end_pass();
        pass_ = pass;
        auto harmonic = [&] {
            std::vector<Chord> chords;
            for (const auto& name : config_.progression) chords.push_back(parse_chord(name));
            return HarmonicState(std::move(chords));
        }();
        compiler_ = std::make_unique<EventCompiler>(rate_, bursts_, range_, std::move(harmonic), config_.sonify,
                                                    rng::prf(rng::derive(config_.seed, "sonify"), pass, 0, 0));
    }

    void end_pass() {
        for (const auto& e : compiler_->finish()) emit_event(e);
        frame_buf_.clear();
        led_.flush(range_.time_of(range_.end) - 1, frame_buf_);
        emit_frames();
        compiler_.reset();
    }

    void emit_event(const ControlEvent& e) {
        const auto line = to_json_line(e);
        events_.line(line);
        ++report_.events;
        if (config_.wire.topics_enabled) publish_topic(fmt::format("simulacra/snd/{}", to_string(e.kind)), line);
        if (osc_) send_osc(osc_event(e));
    }

    void emit_frames() {
        for (const auto& f : frame_buf_) {
            led_log_.line(to_json_line(f));
            ++report_.led_frames;
            if (osc_) send_osc(osc_led(f));
            if (config_.output.led_ppm) {
                std::ofstream out(dir_ / "frames" / fmt::format("led{}_{:07}.ppm", f.matrix_id, f.index),
                                  std::ios::binary);
                write_led_ppm(f, out);
            }
        }
    }

    void write_ecology_summary(const RowEvent& row) {
        const auto s = ecology_.summary();
        ecology_log_.line(fmt::format(
            R"({{"tick":{},"seq":{},"row":{},"species_mass":[{}],"termite_mass":{},"deposits":{{"sensed":{},"spontaneous":{},"spike":{}}},"boid_mean_velocity":[{},{}],"boid_mean_speed":{}}})",
            s.tick, row.seq, row.row, fmt::join(s.species_mass, ","), s.termite_mass, s.termite_deposits.sensed,
            s.termite_deposits.spontaneous, s.termite_deposits.spike, s.boid_mean_velocity.x,
            s.boid_mean_velocity.y, s.boid_mean_speed));
    }

    void publish_topic(std::string topic, std::string_view payload) {
        publish(make_topic_message(std::move(topic), payload), loopback_, table_);
    }

    void send_osc(const OscMessage& m) {
        osc_->send_to(m, config_.wire.osc_host, config_.wire.osc_out_port);
        ++report_.osc_messages;
    }

    const RunConfig& config_;
    const Dataset& data_;
    const RateSeries& rate_;
    const std::vector<BurstInterval>& bursts_;
    PlaybackRange range_;
    std::filesystem::path dir_;
    RunReport& report_;

    std::vector<std::uint32_t> order_;
    StrikeMapper strikes_;
    LedRenderer led_;
    Ecosystem ecology_;
    std::unique_ptr<EventCompiler> compiler_;
    std::uint32_t pass_ = 0;
    RowEvent last_row_;

    LineLog rows_, events_, strikes_log_, led_log_, ecology_log_;
    std::vector<SolenoidStrike> strike_buf_;
    std::vector<LedFrame> frame_buf_;
    std::map<std::size_t, BurstInterval> burst_at_end_;

    TopicTable table_ = TopicTable::defaults();
    LoopbackTransport loopback_;
    std::unique_ptr<UdpOscSocket> osc_;
    double row_ms_;
};

void write_bursts(const std::filesystem::path& path, const std::vector<BurstInterval>& bursts,
                  const PlaybackRange& range, RunReport& report) {
    LineLog log(path);
    for (const auto& b : bursts) {
        const bool in_range = b.end >= range.start && b.end < range.end;
        log.line(fmt::format(R"({{"start_row":{},"end_row":{},"end_ms":{}}})", b.start, b.end,
                             in_range ? fmt::format("{}", static_cast<double>(range.time_of(b.end)) / 1000.0)
                                      : std::string("null")));
    }
    report.streams.push_back(log.close());
    report.bursts = bursts.size();
}

}  // namespace

const StreamFile* RunReport::stream(std::string_view name) const {
    for (const auto& s : streams) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

std::string fnv1a_hex(std::string_view bytes) { return fmt::format("{:016x}", fnv1a(bytes)); }

std::string fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a({buf.data(), static_cast<std::size_t>(in.gcount())}, h);
    }
    return fmt::format("{:016x}", h);
}

OscMessage osc_row(const RowEvent& row) { return {"/sim/row", {static_cast<std::int32_t>(row.row)}}; }

OscMessage osc_rate(float norm) { return {"/sim/rate", {norm}}; }

OscMessage osc_event(const ControlEvent& e) {
    return {fmt::format("/snd/{}", to_string(e.kind)),
            {static_cast<float>(e.onset_ms), static_cast<std::int32_t>(e.pitch),
             static_cast<std::int32_t>(e.channel), static_cast<float>(e.duration_ms),
             static_cast<float>(e.attack_ms), static_cast<float>(e.decay_ms), static_cast<float>(e.amplitude),
             static_cast<std::int32_t>(e.half_speed), static_cast<float>(e.delay_ms)}};
}

OscMessage osc_strike(const SolenoidStrike& s) {
    return {"/fab/solenoid", {static_cast<std::int32_t>(s.solenoid_id), static_cast<float>(s.velocity)}};
}

OscMessage osc_led(const LedFrame& f) {
    return {fmt::format("/fab/led/{}", f.matrix_id), {Blob{{f.rgb.begin(), f.rgb.end()}}}};
}

Dataset load_dataset(const DatasetSource& source) {
    Dataset data;
    if (source.source == "synthetic") {
        data = gen_synthetic(source.synthetic);
    } else {
        data = load_raster(source.path, source.format);
    }
    if (source.backbone == "correlation") {
        const auto selection = select_backbone(data.raster, source.backbone_k, source.backbone_bin_ms);
        apply_backbone(data.meta, selection);
    }
    return data;
}

RunReport run_pipeline(const RunConfig& config) {
    validate(config);
    const auto started = std::chrono::steady_clock::now();
    const std::filesystem::path dir(config.output.dir);
    std::filesystem::create_directories(dir);

    const Dataset data = load_dataset(config.dataset);
    const auto& raster = data.raster;
    const RateSeries rate = population_rate(raster, config.dataset.rate_window_ms);
    const auto bursts = detect_bursts(rate, config.dataset.bursts);
    const PlaybackRange range = resolve(config.playback, raster.rows(), raster.dt_ms());

    RunReport report;
    write_bursts(dir / "bursts.jsonl", bursts, range, report);
    {
        PipelineSink sink(config, data, rate, bursts, range, dir, report);
        play(config.playback, raster.rows(), raster.dt_ms(), sink);
        sink.finish();
    }

    std::string streams;
    for (const auto& s : report.streams) {
        streams += fmt::format(R"({}"{}":{{"lines":{},"fnv1a":"{}"}})", streams.empty() ? "" : ",", s.name,
                               s.lines, s.fnv1a);
    }
    std::ofstream manifest(dir / "manifest.json");
    manifest << fmt::format(R"({{"streams":{{{}}},"rows":{},"events":{},"strikes":{},"strikes_suppressed":{},)"
                            R"("led_frames":{},"ecology_ticks":{},"bursts":{},"last_t_sim_ms":{},"config":{}}})",
                            streams, report.rows, report.events, report.strikes, report.strikes_suppressed,
                            report.led_frames, report.ecology_ticks, report.bursts, report.last_t_sim_ms,
                            to_json_text(config))
             << '\n';
    std::ofstream(dir / "config.effective.json") << to_json_text(config);
    if (!manifest) throw std::runtime_error("cannot write manifest.json");

    report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace neuroeco
