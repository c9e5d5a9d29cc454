#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "neuroeco/clock.hpp"
#include "neuroeco/dataset.hpp"
#include "neuroeco/ecology.hpp"
#include "neuroeco/fabric.hpp"
#include "neuroeco/sonify.hpp"
#include "neuroeco/wire.hpp"

namespace neuroeco {

// --- run configuration ---------------------------------------------------------

/// Bad configuration or arguments (exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSource {
    std::string source = "synthetic";  // "synthetic" or "file"
    std::string path;
    RasterFormat format = RasterFormat::packed;
    SyntheticSpec synthetic;
    std::size_t rate_window_ms = 1000;
    BurstParams bursts;
    std::string backbone = "meta";  // "meta" flags, or "correlation" to recompute
    std::size_t backbone_k = 27;
    std::size_t backbone_bin_ms = 10;
};

struct WireConfig {
    bool osc_enabled = false;
    std::string osc_host = "127.0.0.1";
    std::uint16_t osc_out_port = 9000;
    std::uint16_t osc_in_port = 9001;
    std::size_t osc_every_rows = 1;  // row-message decimation
    bool topics_enabled = true;      // publish every stream through the contract table
    std::string topics_file;         // empty: built-in table
};

struct OutputConfig {
    std::string dir = "out";
    std::size_t dump_every = 0;  // rows between PPM composites; 0 = none
    bool led_ppm = false;        // also write every LED frame as PPM
};

struct RunConfig {
    std::uint64_t seed = 7;
    DatasetSource dataset;
    PlaybackConfig playback;
    EcologyConfig ecology = default_run_ecology();
    std::size_t ecology_tick_rows = 300;  // raster rows per ecology frame
    std::vector<std::string> progression{"Cm", "Ab", "Db", "Bbm"};
    SonifyConfig sonify;
    FabricProfile fabric;
    WireConfig wire;
    OutputConfig output;

    /// Desk-scale ecology sized so a full offline replay stays well under a minute.
    static EcologyConfig default_run_ecology();
};

/// The effective config as JSON text. Reloading it gives an identical config.
std::string to_json_text(const RunConfig& config);
/// Starts from the defaults and applies `text`. Unknown keys and wrong types
/// raise ConfigError naming the key path.
RunConfig config_from_json_text(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Applies SN_<PATH> environment overrides, e.g. SN_PLAYBACK_DILATION=15 or
/// SN_ECOLOGY_AGENTS_PER_SPECIES=1000. Values are parsed as JSON, falling
/// back to a plain string.
RunConfig apply_env_overrides(const RunConfig& config, char** envp);
/// Applies "dotted.key=value" assignments (values parsed like env overrides).
RunConfig apply_settings(const RunConfig& config, const std::vector<std::string>& assignments);
/// Environment variable name for a dotted key path.
std::string env_name_for(std::string_view key_path);
/// Structural checks (positive sizes, known enum values); throws ConfigError.
void validate(const RunConfig& config);

// --- pipeline ---------------------------------------------------------------

struct StreamFile {
    std::string name;
    std::uint64_t lines = 0;
    std::string fnv1a;  // 64-bit hash of the file bytes, hex
};

struct RunReport {
    std::vector<StreamFile> streams;
    std::uint64_t rows = 0;
    std::uint64_t events = 0;
    std::uint64_t strikes = 0;
    std::uint64_t strikes_suppressed = 0;
    std::uint64_t backbone_spikes = 0;
    std::uint64_t led_frames = 0;
    std::uint64_t ecology_ticks = 0;
    std::uint64_t dumps = 0;
    std::uint64_t topic_messages = 0;
    std::uint64_t osc_messages = 0;
    std::uint64_t bursts = 0;
    double last_t_sim_ms = 0;
    double wall_s = 0;

    const StreamFile* stream(std::string_view name) const;
};

/// Materializes the configured dataset (synthetic or file) with backbone flags.
Dataset load_dataset(const DatasetSource& source);

/// Replays the dataset and writes rows, bursts, events, strikes, led and
/// ecology JSON-lines logs plus manifest.json into config.output.dir.
RunReport run_pipeline(const RunConfig& config);

std::string fnv1a_hex(std::string_view bytes);
std::string fnv1a_file(const std::filesystem::path& path);

// OSC address space of the live outputs.
OscMessage osc_row(const RowEvent& row);
OscMessage osc_rate(float norm);
OscMessage osc_event(const ControlEvent& e);  // /snd/<kind>
OscMessage osc_strike(const SolenoidStrike& s);
OscMessage osc_led(const LedFrame& f);        // /fab/led/<matrix>, 768-byte blob

// --- verify -------------------------------------------------------------------

struct CheckResult {
    std::string id;
    bool passed = false;
    std::string measured;
    std::string expected;
    std::string detail;
};

/// Invariant suite at small scale, parameterized by the config where the
/// check exercises a configurable quantity (e.g. ecology.decay).
std::vector<CheckResult> run_checks(const RunConfig& config);

// --- bench --------------------------------------------------------------------

struct BenchRow {
    std::string model;
    std::size_t count = 0;
    std::size_t field = 0;
    std::size_t steps = 0;
    double seconds_per_step = 0;
    double items_per_second = 0;
};

struct BenchOptions {
    std::vector<std::size_t> physarum_counts{10'000, 100'000, 1'000'000};
    std::vector<std::size_t> boid_counts{1'000, 5'000, 10'000};
    std::size_t field = 1024;
    std::size_t workers = 1;
    double min_seconds = 0.2;  // per measurement
    std::uint64_t seed = 7;
};

/// One row per (model, count): physarum, boids_naive and boids_grid.
std::vector<BenchRow> run_bench(const BenchOptions& options);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Seconds per call of `fn`, the best of repeated batches lasting at least
/// `min_seconds` overall.
double time_per_call(const std::function<void()>& fn, double min_seconds);

}  // namespace neuroeco
