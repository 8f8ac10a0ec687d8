#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trustfield::trajdata {

/// One row of microscopic trajectory data: where a vehicle was, in which
/// lane, and how fast it was moving. Positions are longitudinal feet along
/// the study corridor; times are seconds from dataset start.
struct TraceSample {
    int vehicle_id = 0;
    double time_s = 0.0;
    double position_ft = 0.0;
    int lane = 0;
    double speed_ftps = 0.0;
};

struct VehicleTrace {
    int vehicle_id = 0;
    std::vector<TraceSample> samples;  // strictly increasing time_s

    double start_time_s() const { return samples.front().time_s; }
    double end_time_s() const { return samples.back().time_s; }
    bool active_at(double time_s) const {
        return !samples.empty() && time_s >= start_time_s() && time_s <= end_time_s();
    }

    /// Linear interpolation within the trace's time span; nullopt outside it.
    std::optional<double> position_at(double time_s) const;
    std::optional<double> speed_at(double time_s) const;
};

/// Immutable after construction; safe to share across concurrent readers.
struct TrajectoryDataset {
    std::map<int, VehicleTrace> traces;
    double corridor_length_ft = 0.0;
    double duration_s = 0.0;
    double sample_period_s = 0.0;  // 0 when unknown or non-uniform

    std::size_t total_samples() const;
};

/// Column names of the NGSIM-style input schema. Time comes from
/// global_time_ms (milliseconds) when that column exists, otherwise from
/// frame_id at 0.1 s per frame.
struct ColumnMap {
    std::string vehicle_id = "Vehicle_ID";
    std::string global_time_ms = "Global_Time";
    std::string frame_id = "Frame_ID";
    std::string position = "Local_Y";
    std::string speed = "v_Vel";
    std::string lane = "Lane_ID";
};

struct SynthConfig {
    int n_vehicles = 100;
    double duration_s = 900.0;
    double corridor_length_ft = 2100.0;
    double speed_mean_ftps = 30.0;
    double speed_jitter_ftps = 3.0;
    double entry_rate_veh_per_s = 0.15;
    std::uint64_t seed = 1;
};

/// Native sampling cadence of NGSIM-style data and of the synthetic
/// generator, in seconds.
inline constexpr double kNativeSamplePeriodS = 0.1;

/// Parses an NGSIM-style trajectory CSV. Traces come back sorted by time
/// with duplicate (vehicle, time) rows collapsed keeping the first; times are
/// rebased so the earliest sample is at 0. corridor_length_ft and duration_s
/// are the observed maxima. Throws DataError on a missing column (naming
/// it), a non-numeric cell (with its line number), or an empty file.
TrajectoryDataset parse_trajectory_csv(const std::filesystem::path& path,
                                       const ColumnMap& columns = {});

/// Writes the mirror-image CSV of the input schema (both Frame_ID and
/// Global_Time columns are emitted).
void write_trajectory_csv(const TrajectoryDataset& dataset, const std::filesystem::path& path,
                          const ColumnMap& columns = {});

struct ResampleResult {
    TrajectoryDataset dataset;
    /// Vehicles whose traces were too short to interpolate (single sample,
    /// or no grid point inside the span) and were kept unchanged.
    std::vector<int> kept_as_is;
};

/// Linear interpolation of every trace onto the grid {0, p, 2p, ...}
/// restricted to the trace's original time span.
ResampleResult resample_uniform(const TrajectoryDataset& dataset, double period_s);

struct NeighborQuery {
    /// False when the queried vehicle is unknown or not active at the query
    /// time; distinguishes that case from "active with zero neighbors".
    bool subject_active = false;
    std::vector<int> neighbor_ids;  // ascending
};

/// Every other vehicle active at time_s whose longitudinal separation from
/// the queried vehicle is at most range_ft. Lanes are ignored.
NeighborQuery neighbors_within_range(const TrajectoryDataset& dataset, int vehicle_id,
                                     double time_s, double range_ft);

/// Seeded synthetic corridor: vehicles enter at position 0 at exponential
/// intervals, hold a per-vehicle constant speed, and exit at the corridor
/// end. Output is fully determined by the seed.
TrajectoryDataset generate_synthetic(const SynthConfig& config);

}  // namespace trustfield::trajdata
