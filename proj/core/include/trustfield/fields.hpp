#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "trustfield/trajdata.hpp"

namespace trustfield::fields {

/// Space-time binning over a corridor of length L feet and a horizon of T
/// seconds. Bin (i, j) covers [i*dx, (i+1)*dx) x [j*dt, (j+1)*dt); samples
/// landing exactly on the far corridor or horizon edge fold into the last bin.
struct GridSpec {
    double dx_ft = 80.0;
    double dt_s = 15.0;
    double corridor_length_ft = 0.0;
    double duration_s = 0.0;
    std::size_t n_x = 0;
    std::size_t n_t = 0;

    static GridSpec create(double dx_ft, double dt_s, double corridor_length_ft,
                           double duration_s);

    std::size_t position_bin(double position_ft) const;
    std::size_t time_bin(double time_s) const;
};

/// Scalar field on a GridSpec, row-major with position as the slow axis.
/// Absent cells hold NaN; quantity names what the values are (density,
/// speed, flow, trust, ...).
struct Field {
    GridSpec grid;
    std::string quantity;
    std::vector<double> values;

    double& at(std::size_t ix, std::size_t it) { return values[ix * grid.n_t + it]; }
    double at(std::size_t ix, std::size_t it) const { return values[ix * grid.n_t + it]; }
};

Field make_field(const GridSpec& grid, std::string quantity, double fill);

/// One trust observation attached to a trajectory sample.
struct TrustTracePoint {
    int vehicle_id = 0;
    double time_s = 0.0;
    double position_ft = 0.0;
    double theta = 0.5;
};

enum class TrustAveraging {
    per_sample,   // mean over every trace point in the bin
    per_vehicle,  // mean of per-vehicle means within the bin
};

/// Generalized (Edie) density: total vehicle-time in each bin divided by the
/// bin area dx*dt. Requires a dataset with a known uniform sample period.
/// Bins no vehicle touched are absent.
Field compute_density_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid);

/// Generalized (Edie) speed: total distance over total time per bin. Bins
/// with no vehicle presence are absent; a bin of stopped traffic is 0.
Field compute_speed_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid);

/// Flow = density * speed, elementwise; absent wherever either input is.
/// The inputs must be a density and a speed field on the same grid.
Field compute_flow_field(const Field& density, const Field& speed);

/// Mean trust per bin over the trace points that fall in it.
Field compute_trust_field(const std::vector<TrustTracePoint>& points, const GridSpec& grid,
                          TrustAveraging averaging = TrustAveraging::per_sample);

/// Number of trajectory samples per bin (diagnostic; every in-domain sample
/// lands in exactly one bin).
Field sample_count_field(const trajdata::TrajectoryDataset& dataset, const GridSpec& grid);

/// Writes a field as CSV: '#'-prefixed header lines recording the quantity
/// name, grid geometry and row orientation, then one row per position bin
/// (bin 0 first) with one column per time bin. Absent cells are written as
/// "nan".
void export_field_csv(const Field& field, const std::filesystem::path& path);

/// Reads a field written by export_field_csv.
Field import_field_csv(const std::filesystem::path& path);

/// Renders a field as a plain-text PGM (P2) heatmap: one pixel per bin,
/// min-max scaled to 0..255 over present cells, absent cells black, constant
/// fields mid-gray. Time runs left to right, position bottom to top.
void export_heatmap(const Field& field, const std::filesystem::path& path);

}  // namespace trustfield::fields
