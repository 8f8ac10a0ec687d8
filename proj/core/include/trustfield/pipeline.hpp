#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trustfield/fields.hpp"
#include "trustfield/logittrust.hpp"
#include "trustfield/netsim.hpp"
#include "trustfield/trajdata.hpp"

namespace trustfield::pipeline {

/// dynamic: trust is estimated per sensing window from observed forwarding
/// behavior. static_: each vehicle carries one fixed seeded score for the
/// whole run, as a field-construction baseline.
enum class TrustMode { dynamic, static_ };

std::string to_string(TrustMode mode);
TrustMode parse_trust_mode(const std::string& text);  // "dynamic" | "static"

struct PipelineConfig {
    /// Input trajectories: a CSV path, or (when absent) the synthetic
    /// generator settings below.
    std::optional<std::filesystem::path> input_csv;
    trajdata::ColumnMap columns;
    trajdata::SynthConfig synth;

    double resample_period_s = 0.1;
    netsim::SimConfig sim;
    logittrust::TrustParams trust;

    double dx_ft = 80.0;
    double dt_s = 15.0;
    fields::TrustAveraging trust_averaging = fields::TrustAveraging::per_sample;

    TrustMode mode = TrustMode::dynamic;
    std::filesystem::path out_dir = ".";
    /// Master seed; every stochastic stage derives its own stream from it.
    std::uint64_t seed = 1;
    bool write_events = false;
    /// Worker threads for the per-window trust fits. Results are identical
    /// for any value; > 1 only changes wall time.
    int threads = 1;
};

struct RunSummary {
    std::size_t vehicles = 0;
    std::size_t samples = 0;
    int windows = 0;
    std::size_t metric_rows = 0;
    std::size_t trust_rows = 0;
    std::size_t pairs = 0;
    std::vector<std::string> files;  // names written under out_dir, sorted
};

/// One row of the per-window trust log.
struct TrustRow {
    int window_index = 0;
    int observer_id = 0;
    int subject_id = 0;
    double theta = 0.5;
    int s = 0;
    bool converged = false;
    int iterations_used = 0;
};

std::vector<TrustRow> read_trust_csv(const std::filesystem::path& path);

struct StaticTrust {
    int vehicle_id = 0;
    double theta = 0.5;
};

std::vector<StaticTrust> read_static_trust_csv(const std::filesystem::path& path);

/// Generates a synthetic corridor and writes it in the trajectory CSV
/// schema. Zero vehicles is allowed (header-only output plus a warning).
void cmd_synth(const trajdata::SynthConfig& config, const std::filesystem::path& out_csv);

/// Trajectories -> forwarding behavior. Writes metrics.csv and policies.csv
/// (and events.csv when requested) under out_dir.
void cmd_simulate(const std::filesystem::path& traj_csv, const trajdata::ColumnMap& columns,
                  double resample_period_s, const netsim::SimConfig& sim,
                  const std::filesystem::path& out_dir, bool write_events);

/// Metrics log -> per-window trust log. Rows are processed in file order;
/// rows sharing a window_index must be contiguous and unique per
/// (observer, subject) pair.
void cmd_trust(const std::filesystem::path& metrics_csv,
               const logittrust::TrustParams& params, const std::filesystem::path& out_csv,
               int threads = 1);

/// Trajectories plus a trust log (exactly one of trust_csv/static_csv) ->
/// density, speed, flow and trust fields with PGM heatmaps under out_dir.
/// Reproduces the pipeline's field outputs byte for byte from its logs.
void cmd_fields(const std::filesystem::path& traj_csv, const trajdata::ColumnMap& columns,
                double resample_period_s, const std::optional<std::filesystem::path>& trust_csv,
                const std::optional<std::filesystem::path>& static_csv, double window_s,
                double dx_ft, double dt_s, fields::TrustAveraging averaging,
                const std::filesystem::path& out_dir);

/// End to end: trajectories (parsed or generated) -> simulation -> trust ->
/// fields -> run_manifest.json. On failure the partially written outputs of
/// this run are removed.
RunSummary cmd_pipeline(const PipelineConfig& config);

}  // namespace trustfield::pipeline
