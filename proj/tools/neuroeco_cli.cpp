// Command-line front end: gen-data, run, verify, bench, sync.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "neuroeco/app.hpp"
#include "neuroeco/kernels.hpp"

extern char** environ;

namespace {

using namespace neuroeco;

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kVerifyFailed = 3 };

struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> settings;

    RunConfig resolve() const {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
        c = apply_env_overrides(c, environ);
        return apply_settings(c, settings);
    }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "JSON config file (unset keys keep their defaults)");
    cmd->add_option("--set", args.settings, "Override one key, e.g. --set playback.dilation=15")
        ->type_name("KEY=VALUE");
}

int cmd_gen_data(const SyntheticSpec& spec, const std::string& out, const std::string& format) {
    if (spec.rows == 0 || spec.channels == 0) throw ConfigError("--rows and --channels must be positive");
    const auto fmt_value = format == "csv" ? RasterFormat::csv : RasterFormat::packed;
    const auto data = gen_synthetic(spec);
    save_raster(data, out, fmt_value);

    const auto rate = population_rate(data.raster);
    const auto bursts = detect_bursts(rate);
    const double seconds = static_cast<double>(data.raster.rows() * data.raster.dt_ms()) / 1000.0;
    const auto spikes = data.raster.total_spikes();
    std::size_t backbone = 0;
    for (const auto& m : data.meta) backbone += m.is_backbone;
    fmt::print("raster      {} ({})\n", out, format);
    fmt::print("meta        {}\n", meta_path_for(out).string());
    fmt::print("rows        {}\nchannels    {}\nspikes      {}\n", data.raster.rows(), data.raster.channels(), spikes);
    fmt::print("mean rate   {:.4f} Hz per channel\n",
               static_cast<double>(spikes) / seconds / static_cast<double>(data.raster.channels()));
    fmt::print("backbone    {} channels\nbursts      {} planted, {} detected\n", backbone,
               planted_bursts(spec).size(), bursts.size());
    fmt::print("bytes       {}\nfnv1a       {}\n", std::filesystem::file_size(out), fnv1a_file(out));
    return kOk;
}

int cmd_run(RunConfig config) {
    validate(config);
    fmt::print(stderr, "replaying {} into {} ({})\n",
               config.dataset.source == "file" ? config.dataset.path : std::string("synthetic dataset"),
               config.output.dir, kernels::active().name);
    const auto report = run_pipeline(config);
    for (const auto& s : report.streams) fmt::print("{:<14} {:>9} lines  {}\n", s.name, s.lines, s.fnv1a);
    fmt::print("rows {}  last t_sim {} ms  events {}  strikes {} (+{} suppressed)  led frames {}\n", report.rows,
               report.last_t_sim_ms, report.events, report.strikes, report.strikes_suppressed, report.led_frames);
    fmt::print("ecology ticks {}  composites {}  topic messages {}  osc messages {}  wall {:.2f} s\n",
               report.ecology_ticks, report.dumps, report.topic_messages, report.osc_messages, report.wall_s);
    return kOk;
}

int cmd_verify(const RunConfig& config) {
    const auto checks = run_checks(config);
    std::size_t failed = 0;
    for (const auto& c : checks) {
        failed += !c.passed;
        fmt::print("{} {:<24} measured: {}\n     {:<24} expected: {}  [{}]\n", c.passed ? "PASS" : "FAIL", c.id,
                   c.measured, "", c.expected, c.detail);
    }
    fmt::print("{} of {} checks passed\n", checks.size() - failed, checks.size());
    return failed ? kVerifyFailed : kOk;
}

int cmd_bench(const BenchOptions& options, const std::string& out) {
    const auto csv = bench_csv(run_bench(options));
    if (out.empty() || out == "-") {
        fmt::print("{}", csv);
    } else {
        std::ofstream f(out);
        f << csv;
        if (!f) throw std::runtime_error(fmt::format("cannot write {}", out));
        fmt::print(stderr, "wrote {}\n", out);
    }
    return kOk;
}

int cmd_sync(std::size_t subscribers, const LatencyModel& latency, const PlaybackConfig& playback,
             std::size_t rows) {
    if (subscribers == 0) throw ConfigError("--subscribers must be at least 1");
    const auto r = run_sync_harness(subscribers, latency, playback, rows);
    fmt::print(R"({{"subscribers":{},"published":{},"delivered":{},"dropped":{},"max_skew_rows":{},"mean_latency_ms":{:.4f}}})"
               "\n",
               subscribers, r.published, r.delivered, r.dropped, r.max_skew_rows, r.mean_latency_ms);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Organoid-driven ecology, sonification and fabrication control replay"};
    app.require_subcommand(1);
    std::string simd = "auto";
    app.add_option("--simd", simd, "Kernel set: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    SyntheticSpec spec;
    std::string gen_out, gen_format = "packed";
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic spike raster and its metadata sidecar");
    gen->add_option("--seed", spec.seed);
    gen->add_option("--rows", spec.rows);
    gen->add_option("--channels", spec.channels);
    gen->add_option("--bursts", spec.burst.n_bursts);
    gen->add_option("--backbone", spec.burst.backbone_k);
    gen->add_option("--format", gen_format)->check(CLI::IsMember({"csv", "packed"}));
    gen->add_option("-o,--out", gen_out, "Raster path")->required();

    ConfigArgs run_args;
    std::string run_out;
    std::size_t dump_every = 0, rows_limit = 0, workers = 0;
    bool realtime = false, osc = false;
    auto* run = app.add_subcommand("run", "Replay the dataset through every module and write JSON-lines logs");
    add_config_options(run, run_args);
    run->add_option("-o,--out", run_out, "Output directory");
    run->add_option("--dump-every", dump_every, "Rows between PPM composites of the trail fields");
    run->add_option("--rows", rows_limit, "Replay only the first N rows of the range");
    run->add_option("--workers", workers, "Ecology worker threads");
    run->add_flag("--realtime", realtime, "Pace rows against the wall clock");
    run->add_flag("--osc", osc, "Send OSC over UDP");

    ConfigArgs verify_args;
    auto* verify = app.add_subcommand("verify", "Run the invariant suite");
    add_config_options(verify, verify_args);

    BenchOptions bench_opts;
    std::string bench_out;
    bool quick = false;
    auto* bench = app.add_subcommand("bench", "Throughput table as CSV");
    bench->add_option("-o,--out", bench_out, "CSV path (default stdout)");
    bench->add_option("--workers", bench_opts.workers);
    bench->add_option("--field", bench_opts.field);
    bench->add_option("--min-seconds", bench_opts.min_seconds);
    bench->add_flag("--quick", quick, "Shorter measurements");

    std::size_t subs = 3, sync_rows = 180'000;
    LatencyModel latency{0, 10, 0, 1};
    PlaybackConfig sync_playback;
    auto* sync = app.add_subcommand("sync", "Replay the row clock to simulated subscribers and report skew");
    sync->add_option("--subscribers", subs);
    sync->add_option("--latency-ms", latency.fixed_ms);
    sync->add_option("--jitter-ms", latency.jitter_ms);
    sync->add_option("--loss", latency.loss_p);
    sync->add_option("--seed", latency.seed);
    sync->add_option("--rows", sync_rows);
    sync->add_option("--dilation", sync_playback.dilation);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (simd != "auto" && !kernels::select(simd == "scalar" ? kernels::Isa::scalar : kernels::Isa::avx2)) {
            throw ConfigError("AVX2 kernels are not supported on this CPU");
        }
        if (*gen) return cmd_gen_data(spec, gen_out, gen_format);
        if (*run) {
            RunConfig c = run_args.resolve();
            if (!run_out.empty()) c.output.dir = run_out;
            if (run->count("--dump-every")) c.output.dump_every = dump_every;
            if (rows_limit) c.playback.end_row = c.playback.start_row + rows_limit;
            if (workers) c.ecology.workers = workers;
            if (realtime) c.playback.mode = PlaybackMode::realtime;
            if (osc) c.wire.osc_enabled = true;
            return cmd_run(c);
        }
        if (*verify) return cmd_verify(verify_args.resolve());
        if (*bench) {
            if (quick) {
                bench_opts.min_seconds = 0.05;
            }
            return cmd_bench(bench_opts, bench_out);
        }
        if (*sync) return cmd_sync(subs, latency, sync_playback, sync_rows);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kRuntime;
    }
    return kOk;
}
