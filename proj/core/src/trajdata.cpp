#include "trustfield/trajdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "trustfield/csv.hpp"
#include "trustfield/errors.hpp"
#include "trustfield/rng.hpp"

namespace trustfield::trajdata {

namespace {

double interpolate(const std::vector<TraceSample>& samples, double time_s,
                   double TraceSample::* field) {
    // Caller guarantees time_s lies within [front.time_s, back.time_s].
    auto it = std::lower_bound(samples.begin(), samples.end(), time_s,
                               [](const TraceSample& s, double t) { return s.time_s < t; });
    if (it == samples.begin()) {
        return samples.front().*field;
    }
    if (it == samples.end()) {
        return samples.back().*field;
    }
    const TraceSample& hi = *it;
    const TraceSample& lo = *(it - 1);
    if (hi.time_s == time_s) {
        return hi.*field;
    }
    const double w = (time_s - lo.time_s) / (hi.time_s - lo.time_s);
    return lo.*field + w * (hi.*field - lo.*field);
}

}  // namespace

std::optional<double> VehicleTrace::position_at(double time_s) const {
    if (!active_at(time_s)) {
        return std::nullopt;
    }
    return interpolate(samples, time_s, &TraceSample::position_ft);
}

std::optional<double> VehicleTrace::speed_at(double time_s) const {
    if (!active_at(time_s)) {
        return std::nullopt;
    }
    return interpolate(samples, time_s, &TraceSample::speed_ftps);
}

std::size_t TrajectoryDataset::total_samples() const {
    std::size_t n = 0;
    for (const auto& [id, trace] : traces) {
        n += trace.samples.size();
    }
    return n;
}

namespace {

double require_double(const csv::Table& table, std::size_t row, std::size_t col,
                      const std::string& column_name) {
    auto value = csv::parse_double(table.row(row)[col]);
    if (!value) {
        throw DataError("non-numeric value in column " + column_name + " at line " +
                        std::to_string(table.line_number(row)));
    }
    return *value;
}

/// Median positive gap between consecutive samples, 0 when there is none.
double infer_sample_period(const std::map<int, VehicleTrace>& traces) {
    std::vector<double> gaps;
    for (const auto& [id, trace] : traces) {
        for (std::size_t k = 1; k < trace.samples.size(); ++k) {
            double gap = trace.samples[k].time_s - trace.samples[k - 1].time_s;
            if (gap > 0.0) {
                gaps.push_back(gap);
            }
        }
    }
    if (gaps.empty()) {
        return 0.0;
    }
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

}  // namespace

TrajectoryDataset parse_trajectory_csv(const std::filesystem::path& path,
                                       const ColumnMap& columns) {
    const csv::Table table = csv::Table::load(path);
    if (table.header().empty() || table.empty()) {
        throw DataError("empty dataset: " + path.string() + " has no data rows");
    }

    auto require_column = [&](const std::string& name) {
        auto col = table.column(name);
        if (!col) {
            throw DataError("missing column " + name + " in " + path.string());
        }
        return *col;
    };
    const std::size_t col_id = require_column(columns.vehicle_id);
    const std::size_t col_pos = require_column(columns.position);
    const std::size_t col_speed = require_column(columns.speed);
    const std::size_t col_lane = require_column(columns.lane);

    const auto col_time = table.column(columns.global_time_ms);
    const auto col_frame = table.column(columns.frame_id);
    if (!col_time && !col_frame) {
        throw DataError("missing column " + columns.global_time_ms + " or " + columns.frame_id +
                        " in " + path.string());
    }

    TrajectoryDataset dataset;
    double min_time = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        TraceSample sample;
        sample.vehicle_id = static_cast<int>(require_double(table, r, col_id, columns.vehicle_id));
        if (col_time) {
            sample.time_s = require_double(table, r, *col_time, columns.global_time_ms) / 1000.0;
        } else {
            sample.time_s =
                require_double(table, r, *col_frame, columns.frame_id) * kNativeSamplePeriodS;
        }
        sample.position_ft = require_double(table, r, col_pos, columns.position);
        sample.lane = static_cast<int>(require_double(table, r, col_lane, columns.lane));
        sample.speed_ftps = require_double(table, r, col_speed, columns.speed);
        min_time = std::min(min_time, sample.time_s);

        auto& trace = dataset.traces[sample.vehicle_id];
        trace.vehicle_id = sample.vehicle_id;
        trace.samples.push_back(sample);
    }

    for (auto& [id, trace] : dataset.traces) {
        for (auto& sample : trace.samples) {
            sample.time_s -= min_time;
        }
        std::stable_sort(trace.samples.begin(), trace.samples.end(),
                         [](const TraceSample& a, const TraceSample& b) {
                             return a.time_s < b.time_s;
                         });
        // Duplicate timestamps collapse to the first row.
        trace.samples.erase(std::unique(trace.samples.begin(), trace.samples.end(),
                                        [](const TraceSample& a, const TraceSample& b) {
                                            return a.time_s == b.time_s;
                                        }),
                            trace.samples.end());
        for (const auto& sample : trace.samples) {
            dataset.corridor_length_ft = std::max(dataset.corridor_length_ft, sample.position_ft);
            dataset.duration_s = std::max(dataset.duration_s, sample.time_s);
        }
    }
    dataset.sample_period_s = infer_sample_period(dataset.traces);
    return dataset;
}

void write_trajectory_csv(const TrajectoryDataset& dataset, const std::filesystem::path& path,
                          const ColumnMap& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open file for writing: " + path.string());
    }
    out << columns.vehicle_id << ',' << columns.frame_id << ',' << columns.global_time_ms << ','
        << columns.position << ',' << columns.speed << ',' << columns.lane << '\n';
    for (const auto& [id, trace] : dataset.traces) {
        for (const auto& s : trace.samples) {
            out << s.vehicle_id << ',' << std::llround(s.time_s / kNativeSamplePeriodS) << ','
                << csv::format_double(s.time_s * 1000.0) << ',' << csv::format_double(s.position_ft)
                << ',' << csv::format_double(s.speed_ftps) << ',' << s.lane << '\n';
        }
    }
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

ResampleResult resample_uniform(const TrajectoryDataset& dataset, double period_s) {
    if (period_s <= 0.0) {
        throw ConfigError("resample period must be positive");
    }
    ResampleResult result;
    result.dataset.corridor_length_ft = dataset.corridor_length_ft;
    result.dataset.duration_s = dataset.duration_s;
    result.dataset.sample_period_s = period_s;

    constexpr double kGridTolS = 1e-9;
    for (const auto& [id, trace] : dataset.traces) {
        if (trace.samples.size() < 2) {
            result.dataset.traces[id] = trace;
            result.kept_as_is.push_back(id);
            continue;
        }
        const double t0 = trace.start_time_s();
        const double t1 = trace.end_time_s();
        const auto k_first = static_cast<long long>(std::ceil((t0 - kGridTolS) / period_s));
        const auto k_last = static_cast<long long>(std::floor((t1 + kGridTolS) / period_s));
        if (k_first > k_last) {
            result.dataset.traces[id] = trace;
            result.kept_as_is.push_back(id);
            continue;
        }
        VehicleTrace resampled;
        resampled.vehicle_id = id;
        resampled.samples.reserve(static_cast<std::size_t>(k_last - k_first + 1));
        std::size_t cursor = 0;
        for (long long k = k_first; k <= k_last; ++k) {
            const double t = std::clamp(static_cast<double>(k) * period_s, t0, t1);
            while (cursor + 1 < trace.samples.size() && trace.samples[cursor + 1].time_s < t) {
                ++cursor;
            }
            const TraceSample& lo = trace.samples[cursor];
            const TraceSample& hi = trace.samples[std::min(cursor + 1, trace.samples.size() - 1)];
            TraceSample s;
            s.vehicle_id = id;
            s.time_s = t;
            s.lane = lo.lane;
            if (hi.time_s <= t || hi.time_s == lo.time_s) {
                s.position_ft = hi.time_s <= t ? hi.position_ft : lo.position_ft;
                s.speed_ftps = hi.time_s <= t ? hi.speed_ftps : lo.speed_ftps;
            } else {
                const double w = (t - lo.time_s) / (hi.time_s - lo.time_s);
                s.position_ft = lo.position_ft + w * (hi.position_ft - lo.position_ft);
                s.speed_ftps = lo.speed_ftps + w * (hi.speed_ftps - lo.speed_ftps);
            }
            resampled.samples.push_back(s);
        }
        result.dataset.traces[id] = std::move(resampled);
    }
    return result;
}

NeighborQuery neighbors_within_range(const TrajectoryDataset& dataset, int vehicle_id,
                                     double time_s, double range_ft) {
    NeighborQuery query;
    auto it = dataset.traces.find(vehicle_id);
    if (it == dataset.traces.end()) {
        return query;
    }
    auto subject_position = it->second.position_at(time_s);
    if (!subject_position) {
        return query;
    }
    query.subject_active = true;
    for (const auto& [id, trace] : dataset.traces) {
        if (id == vehicle_id) {
            continue;
        }
        auto position = trace.position_at(time_s);
        if (position && std::abs(*position - *subject_position) <= range_ft) {
            query.neighbor_ids.push_back(id);
        }
    }
    return query;
}

TrajectoryDataset generate_synthetic(const SynthConfig& config) {
    if (config.n_vehicles < 0) {
        throw ConfigError("synthetic: vehicle count must be non-negative");
    }
    if (!(config.duration_s > 0.0) || !(config.corridor_length_ft > 0.0)) {
        throw ConfigError("synthetic: duration and corridor length must be positive");
    }
    if (!(config.speed_mean_ftps > 0.0) || config.speed_jitter_ftps < 0.0) {
        throw ConfigError("synthetic: speed mean must be positive and jitter non-negative");
    }
    if (!(config.entry_rate_veh_per_s > 0.0)) {
        throw ConfigError("synthetic: entry rate must be positive");
    }
    TrajectoryDataset dataset;
    dataset.corridor_length_ft = config.corridor_length_ft;
    dataset.duration_s = config.duration_s;
    dataset.sample_period_s = kNativeSamplePeriodS;
    if (config.n_vehicles <= 0) {
        return dataset;
    }

    Rng rng(config.seed);
    double entry_time = 0.0;
    for (int v = 1; v <= config.n_vehicles; ++v) {
        entry_time += rng.exponential(config.entry_rate_veh_per_s);
        const double speed = std::max(
            0.1, config.speed_mean_ftps +
                     rng.uniform(-config.speed_jitter_ftps, config.speed_jitter_ftps));
        const int lane = static_cast<int>(rng.uniform_index(5)) + 1;
        if (entry_time > config.duration_s) {
            continue;
        }
        VehicleTrace trace;
        trace.vehicle_id = v;
        for (long long k = 0;; ++k) {
            const double offset = static_cast<double>(k) * kNativeSamplePeriodS;
            const double t = entry_time + offset;
            const double pos = speed * offset;
            if (pos > config.corridor_length_ft || t > config.duration_s) {
                break;
            }
            trace.samples.push_back({v, t, pos, lane, speed});
        }
        if (!trace.samples.empty()) {
            dataset.traces[v] = std::move(trace);
        }
    }
    return dataset;
}

}  // namespace trustfield::trajdata
