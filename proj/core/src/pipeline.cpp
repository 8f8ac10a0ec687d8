#include "trustfield/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "trustfield/csv.hpp"
#include "trustfield/errors.hpp"
#include "trustfield/rng.hpp"
#include "trustfield/version.hpp"

namespace fs = std::filesystem;

namespace trustfield::pipeline {
namespace {

template <typename F>
decltype(auto) stage(const char* name, F&& fn) {
    try {
        return std::forward<F>(fn)();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + ": " + e.what());
    }
}

/// Removes the files this run created unless commit() was reached, so a
/// failed run does not leave a half-written output directory behind.
class OutputGuard {
public:
    explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {}
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard() {
        if (committed_) return;
        for (const auto& name : names_) {
            std::error_code ec;
            fs::remove(dir_ / name, ec);
        }
    }

    void add(std::string name) { names_.push_back(std::move(name)); }
    void commit() { committed_ = true; }
    std::vector<std::string> sorted_names() const {
        auto out = names_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

class TrustLogWriter {
public:
    explicit TrustLogWriter(const fs::path& path) : out_(path), path_(path) {
        if (!out_) throw DataError("cannot open file for writing: " + path.string());
        out_ << "window_index,observer_id,subject_id,theta,s,converged,iterations_used\n";
    }

    void append(const TrustRow& row) {
        out_ << row.window_index << ',' << row.observer_id << ',' << row.subject_id << ','
             << csv::format_double(row.theta) << ',' << row.s << ','
             << (row.converged ? 1 : 0) << ',' << row.iterations_used << '\n';
        if (!out_) throw DataError("write failed: " + path_.string());
    }

private:
    std::ofstream out_;
    fs::path path_;
};

struct PairUpdate {
    logittrust::TrustEstimate estimate;
    int label = -1;  // -1 when the window carried no new evidence
};

/// Owns the per-pair evidence histories and advances them one window at a
/// time. Within a window every row touches a distinct pair, so the fits can
/// run on worker threads without changing the results.
class TrustEngine {
public:
    TrustEngine(const logittrust::TrustParams& params, int threads)
        : params_(params), threads_(std::max(1, threads)) {}

    std::vector<PairUpdate> process_window(const netsim::WindowMetrics* rows, std::size_t n) {
        std::vector<logittrust::EvidenceHistory*> hist(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = histories_.try_emplace(
                std::pair<int, int>{rows[i].observer_id, rows[i].subject_id});
            if (inserted) {
                it->second.observer_id = rows[i].observer_id;
                it->second.subject_id = rows[i].subject_id;
                it->second.capacity = params_.history_capacity;
            }
            hist[i] = &it->second;
        }

        std::vector<PairUpdate> out(n);
        const auto work = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                PairUpdate update;
                update.estimate = logittrust::update_step(*hist[i], rows[i], params_);
                if (!update.estimate.stale) update.label = hist[i]->records.back().s;
                out[i] = update;
            }
        };

        int workers = threads_;
        if (workers > 1) {
            // A duplicated pair within one window would make two workers
            // race on the same history; fall back to one thread then.
            std::unordered_set<const void*> seen(2 * n);
            for (const auto* h : hist) {
                if (!seen.insert(h).second) {
                    workers = 1;
                    break;
                }
            }
        }
        if (workers <= 1 || n < 32) {
            work(0, n);
            return out;
        }

        const std::size_t chunks = static_cast<std::size_t>(workers);
        std::vector<std::exception_ptr> errors(chunks);
        std::vector<std::thread> pool;
        pool.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t lo = n * c / chunks;
            const std::size_t hi = n * (c + 1) / chunks;
            pool.emplace_back([&, c, lo, hi] {
                try {
                    work(lo, hi);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& error : errors) {
            if (error) std::rethrow_exception(error);
        }
        return out;
    }

    std::size_t pair_count() const { return histories_.size(); }

private:
    logittrust::TrustParams params_;
    int threads_;
    std::map<std::pair<int, int>, logittrust::EvidenceHistory> histories_;
};

void write_policies_csv(const netsim::PolicyMap& policies, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << "vehicle_id,kind,drop_probability,delay_low_s,delay_high_s\n";
    for (const auto& [id, policy] : policies) {
        out << id << ','
            << (policy.kind == netsim::NodePolicy::Kind::malicious ? "malicious" : "honest")
            << ',' << csv::format_double(policy.drop_probability) << ','
            << csv::format_double(policy.delay_low_s) << ','
            << csv::format_double(policy.delay_high_s) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

void write_static_trust_csv(const std::vector<StaticTrust>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    out << "vehicle_id,theta\n";
    for (const auto& row : rows) {
        out << row.vehicle_id << ',' << csv::format_double(row.theta) << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

struct ThetaAcc {
    double sum = 0.0;
    int count = 0;
};

std::uint64_t subject_window_key(int subject, int window) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(subject)) << 32) |
           static_cast<std::uint32_t>(window);
}

/// Trust points for the dynamic mode: every resampled sample of a subject in
/// window w carries that subject's window-w mean trust (over observers).
std::vector<fields::TrustTracePoint> dynamic_trace_points(
    const trajdata::TrajectoryDataset& dataset,
    const std::unordered_map<std::uint64_t, ThetaAcc>& theta_bar, double window_s) {
    std::vector<fields::TrustTracePoint> points;
    for (const auto& [id, trace] : dataset.traces) {
        for (const auto& sample : trace.samples) {
            const int w = static_cast<int>(std::floor(sample.time_s / window_s));
            const auto it = theta_bar.find(subject_window_key(id, w));
            if (it == theta_bar.end()) continue;
            points.push_back({id, sample.time_s, sample.position_ft,
                              it->second.sum / it->second.count});
        }
    }
    return points;
}

std::vector<fields::TrustTracePoint> static_trace_points(
    const trajdata::TrajectoryDataset& dataset, const std::map<int, double>& theta_by_vehicle) {
    std::vector<fields::TrustTracePoint> points;
    points.reserve(dataset.total_samples());
    for (const auto& [id, trace] : dataset.traces) {
        const auto it = theta_by_vehicle.find(id);
        if (it == theta_by_vehicle.end()) continue;
        for (const auto& sample : trace.samples) {
            points.push_back({id, sample.time_s, sample.position_ft, it->second});
        }
    }
    return points;
}

/// Density, speed, flow and trust fields plus their heatmaps.
void write_field_outputs(const trajdata::TrajectoryDataset& dataset,
                         const std::vector<fields::TrustTracePoint>& points,
                         const fields::GridSpec& grid, fields::TrustAveraging averaging,
                         const fs::path& out_dir, OutputGuard* guard) {
    const fields::Field density = fields::compute_density_field(dataset, grid);
    const fields::Field speed = fields::compute_speed_field(dataset, grid);
    const fields::Field flow = fields::compute_flow_field(density, speed);
    const fields::Field trust = fields::compute_trust_field(points, grid, averaging);
    for (const fields::Field* field : {&density, &speed, &flow, &trust}) {
        const std::string csv_name = field->quantity + "_field.csv";
        const std::string pgm_name = field->quantity + "_field.pgm";
        if (guard) guard->add(csv_name);
        fields::export_field_csv(*field, out_dir / csv_name);
        if (guard) guard->add(pgm_name);
        fields::export_heatmap(*field, out_dir / pgm_name);
    }
}

void warn_kept_as_is(const trajdata::ResampleResult& result) {
    if (!result.kept_as_is.empty()) {
        std::cerr << "warning: " << result.kept_as_is.size()
                  << " trace(s) too short to resample; kept as-is\n";
    }
}

int require_column(const csv::Table& table, const char* name, const fs::path& path) {
    const auto col = table.column(name);
    if (!col) {
        throw DataError(std::string("missing column ") + name + " in " + path.string());
    }
    return static_cast<int>(*col);
}

}  // namespace

std::string to_string(TrustMode mode) {
    return mode == TrustMode::dynamic ? "dynamic" : "static";
}

TrustMode parse_trust_mode(const std::string& text) {
    if (text == "dynamic") return TrustMode::dynamic;
    if (text == "static") return TrustMode::static_;
    throw ConfigError("unknown trust mode '" + text + "' (expected dynamic or static)");
}

std::vector<TrustRow> read_trust_csv(const fs::path& path) {
    const csv::Table table = csv::Table::load(path);
    const int c_window = require_column(table, "window_index", path);
    const int c_obs = require_column(table, "observer_id", path);
    const int c_subj = require_column(table, "subject_id", path);
    const int c_theta = require_column(table, "theta", path);
    const int c_s = require_column(table, "s", path);
    const int c_conv = require_column(table, "converged", path);
    const int c_iter = require_column(table, "iterations_used", path);
    std::vector<TrustRow> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const auto cell = [&](int c, const char* name) {
            const auto v = csv::parse_double(table.row(r)[static_cast<std::size_t>(c)]);
            if (!v) {
                throw DataError(std::string("non-numeric value in column ") + name +
                                " at line " + std::to_string(table.line_number(r)) + " of " +
                                path.string());
            }
            return *v;
        };
        TrustRow row;
        row.window_index = static_cast<int>(cell(c_window, "window_index"));
        row.observer_id = static_cast<int>(cell(c_obs, "observer_id"));
        row.subject_id = static_cast<int>(cell(c_subj, "subject_id"));
        row.theta = cell(c_theta, "theta");
        row.s = static_cast<int>(cell(c_s, "s"));
        row.converged = cell(c_conv, "converged") != 0.0;
        row.iterations_used = static_cast<int>(cell(c_iter, "iterations_used"));
        rows.push_back(row);
    }
    return rows;
}

std::vector<StaticTrust> read_static_trust_csv(const fs::path& path) {
    const csv::Table table = csv::Table::load(path);
    const int c_id = require_column(table, "vehicle_id", path);
    const int c_theta = require_column(table, "theta", path);
    std::vector<StaticTrust> rows;
    rows.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const auto id = csv::parse_int(table.row(r)[static_cast<std::size_t>(c_id)]);
        const auto theta = csv::parse_double(table.row(r)[static_cast<std::size_t>(c_theta)]);
        if (!id || !theta) {
            throw DataError("non-numeric value at line " +
                            std::to_string(table.line_number(r)) + " of " + path.string());
        }
        rows.push_back({static_cast<int>(*id), *theta});
    }
    return rows;
}

void cmd_synth(const trajdata::SynthConfig& config, const fs::path& out_csv) {
    const trajdata::TrajectoryDataset dataset = trajdata::generate_synthetic(config);
    if (dataset.traces.empty()) {
        std::cerr << "warning: synthetic dataset is empty; writing a header-only file\n";
    }
    trajdata::write_trajectory_csv(dataset, out_csv);
}

void cmd_simulate(const fs::path& traj_csv, const trajdata::ColumnMap& columns,
                  double resample_period_s, const netsim::SimConfig& sim,
                  const fs::path& out_dir, bool write_events) {
    const trajdata::TrajectoryDataset parsed = trajdata::parse_trajectory_csv(traj_csv, columns);
    auto resampled = trajdata::resample_uniform(parsed, resample_period_s);
    warn_kept_as_is(resampled);
    const trajdata::TrajectoryDataset& dataset = resampled.dataset;

    fs::create_directories(out_dir);
    const netsim::PolicyMap policies = netsim::assign_policies(dataset, sim);
    write_policies_csv(policies, out_dir / "policies.csv");

    netsim::MetricsLogWriter metrics(out_dir / "metrics.csv");
    std::optional<netsim::EventLogWriter> events;
    if (write_events) events.emplace(out_dir / "events.csv");
    netsim::for_each_window(
        dataset, policies, sim,
        [&](int window_index, const netsim::WindowResult& result) {
            metrics.append(result.metrics);
            if (events) events->append(window_index, result.events);
        },
        write_events);
}

void cmd_trust(const fs::path& metrics_csv, const logittrust::TrustParams& params,
               const fs::path& out_csv, int threads) {
    const std::vector<netsim::WindowMetrics> rows = netsim::read_metrics_csv(metrics_csv);
    TrustLogWriter log(out_csv);
    TrustEngine engine(params, threads);
    std::size_t start = 0;
    while (start < rows.size()) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].window_index == rows[start].window_index) ++end;
        const auto updates = engine.process_window(rows.data() + start, end - start);
        for (std::size_t i = 0; i < updates.size(); ++i) {
            const auto& row = rows[start + i];
            const auto& update = updates[i];
            log.append({row.window_index, row.observer_id, row.subject_id,
                        update.estimate.theta, update.label, update.estimate.converged,
                        update.estimate.iterations_used});
        }
        start = end;
    }
}

void cmd_fields(const fs::path& traj_csv, const trajdata::ColumnMap& columns,
                double resample_period_s, const std::optional<fs::path>& trust_csv,
                const std::optional<fs::path>& static_csv, double window_s, double dx_ft,
                double dt_s, fields::TrustAveraging averaging, const fs::path& out_dir) {
    if (trust_csv.has_value() == static_csv.has_value()) {
        throw ConfigError("fields: exactly one of the per-window and static trust logs "
                          "must be given");
    }
    const fs::path& trust_path = trust_csv ? *trust_csv : *static_csv;
    if (!fs::exists(trust_path)) {
        throw DataError("trust log not found: " + trust_path.string() +
                        " (run the pipeline or trust command first)");
    }
    const trajdata::TrajectoryDataset parsed = trajdata::parse_trajectory_csv(traj_csv, columns);
    auto resampled = trajdata::resample_uniform(parsed, resample_period_s);
    warn_kept_as_is(resampled);
    const trajdata::TrajectoryDataset& dataset = resampled.dataset;
    const fields::GridSpec grid =
        fields::GridSpec::create(dx_ft, dt_s, dataset.corridor_length_ft, dataset.duration_s);

    std::vector<fields::TrustTracePoint> points;
    if (trust_csv) {
        if (!(window_s > 0.0)) throw ConfigError("fields: window length must be positive");
        std::unordered_map<std::uint64_t, ThetaAcc> theta_bar;
        for (const auto& row : read_trust_csv(*trust_csv)) {
            auto& acc = theta_bar[subject_window_key(row.subject_id, row.window_index)];
            acc.sum += row.theta;
            ++acc.count;
        }
        points = dynamic_trace_points(dataset, theta_bar, window_s);
    } else {
        std::map<int, double> theta_by_vehicle;
        for (const auto& row : read_static_trust_csv(*static_csv)) {
            theta_by_vehicle[row.vehicle_id] = row.theta;
        }
        points = static_trace_points(dataset, theta_by_vehicle);
    }

    fs::create_directories(out_dir);
    write_field_outputs(dataset, points, grid, averaging, out_dir, nullptr);
}

RunSummary cmd_pipeline(const PipelineConfig& config) {
    if (!(config.resample_period_s > 0.0)) {
        throw ConfigError("pipeline: resample period must be positive");
    }
    fs::create_directories(config.out_dir);
    OutputGuard guard(config.out_dir);
    RunSummary summary;

    const trajdata::TrajectoryDataset parsed = stage("input", [&] {
        if (config.input_csv) {
            return trajdata::parse_trajectory_csv(*config.input_csv, config.columns);
        }
        trajdata::SynthConfig synth = config.synth;
        synth.seed = derive_seed(config.seed, "synth");
        const fs::path path = config.out_dir / "traj.csv";
        guard.add("traj.csv");
        cmd_synth(synth, path);
        // Re-parse our own file so later field rebuilds from it see exactly
        // the doubles the rest of this run uses.
        return trajdata::parse_trajectory_csv(path, trajdata::ColumnMap{});
    });

    const trajdata::TrajectoryDataset dataset = stage("resample", [&] {
        auto result = trajdata::resample_uniform(parsed, config.resample_period_s);
        warn_kept_as_is(result);
        return std::move(result.dataset);
    });
    summary.vehicles = dataset.traces.size();
    summary.samples = dataset.total_samples();

    const fields::GridSpec grid = stage("fields", [&] {
        return fields::GridSpec::create(config.dx_ft, config.dt_s, dataset.corridor_length_ft,
                                        dataset.duration_s);
    });

    nlohmann::json manifest;
    std::vector<fields::TrustTracePoint> points;

    if (config.mode == TrustMode::static_) {
        stage("static-trust", [&] {
            Rng rng(derive_seed(config.seed, "static-trust"));
            std::vector<StaticTrust> rows;
            std::map<int, double> theta_by_vehicle;
            rows.reserve(dataset.traces.size());
            for (const auto& [id, trace] : dataset.traces) {
                const double theta = rng.uniform01();
                rows.push_back({id, theta});
                theta_by_vehicle[id] = theta;
            }
            guard.add("static_trust.csv");
            write_static_trust_csv(rows, config.out_dir / "static_trust.csv");
            points = static_trace_points(dataset, theta_by_vehicle);
        });
    } else {
        netsim::SimConfig sim = config.sim;
        sim.seed = derive_seed(config.seed, "netsim");

        const netsim::PolicyMap policies = stage("simulate", [&] {
            auto p = netsim::assign_policies(dataset, sim);
            guard.add("policies.csv");
            write_policies_csv(p, config.out_dir / "policies.csv");
            return p;
        });

        std::unordered_map<std::uint64_t, ThetaAcc> theta_bar;
        TrustEngine engine(config.trust, config.threads);
        stage("simulate", [&] {
            guard.add("metrics.csv");
            netsim::MetricsLogWriter metrics(config.out_dir / "metrics.csv");
            std::optional<netsim::EventLogWriter> events;
            if (config.write_events) {
                guard.add("events.csv");
                events.emplace(config.out_dir / "events.csv");
            }
            guard.add("trust.csv");
            TrustLogWriter trust_log(config.out_dir / "trust.csv");

            netsim::for_each_window(
                dataset, policies, sim,
                [&](int window_index, const netsim::WindowResult& result) {
                    metrics.append(result.metrics);
                    if (events) events->append(window_index, result.events);
                    summary.metric_rows += result.metrics.size();
                    const auto updates = stage("trust", [&] {
                        return engine.process_window(result.metrics.data(),
                                                     result.metrics.size());
                    });
                    for (std::size_t i = 0; i < updates.size(); ++i) {
                        const auto& row = result.metrics[i];
                        const auto& update = updates[i];
                        trust_log.append({row.window_index, row.observer_id, row.subject_id,
                                          update.estimate.theta, update.label,
                                          update.estimate.converged,
                                          update.estimate.iterations_used});
                        ++summary.trust_rows;
                        auto& acc =
                            theta_bar[subject_window_key(row.subject_id, row.window_index)];
                        acc.sum += update.estimate.theta;
                        ++acc.count;
                    }
                },
                config.write_events);
        });
        summary.windows = netsim::window_count(dataset, sim);
        summary.pairs = engine.pair_count();
        points = dynamic_trace_points(dataset, theta_bar, sim.window_s);

        manifest["sim"] = {{"window_s", sim.window_s},
                           {"radio_range_ft", sim.radio_range_ft},
                           {"max_hops", sim.max_hops},
                           {"malicious_fraction", sim.malicious_fraction},
                           {"honest_delay_low_s", sim.honest_delay_low_s},
                           {"honest_delay_high_s", sim.honest_delay_high_s}};
        manifest["trust"] = {
            {"nu0", config.trust.nu0},
            {"threshold", config.trust.threshold},
            {"max_iterations", config.trust.max_iterations},
            {"convergence_tol", config.trust.convergence_tol},
            {"ridge", config.trust.ridge},
            {"history_capacity", config.trust.history_capacity},
            {"pfd_scale", config.trust.pfd_scale},
            {"labeler", config.trust.labeler == logittrust::Labeler::pfr_rule
                            ? "pfr_rule"
                            : "self_threshold"}};
    }

    stage("fields", [&] {
        write_field_outputs(dataset, points, grid, config.trust_averaging, config.out_dir,
                            &guard);
    });

    stage("manifest", [&] {
        manifest["version"] = std::string(kVersion);
        manifest["mode"] = to_string(config.mode);
        manifest["seed"] = config.seed;
        manifest["resample_period_s"] = config.resample_period_s;
        manifest["trust_averaging"] =
            config.trust_averaging == fields::TrustAveraging::per_vehicle ? "per_vehicle"
                                                                          : "per_sample";
        if (config.input_csv) {
            manifest["input"] = config.input_csv->string();
        } else {
            manifest["synth"] = {{"n_vehicles", config.synth.n_vehicles},
                                 {"duration_s", config.synth.duration_s},
                                 {"corridor_length_ft", config.synth.corridor_length_ft},
                                 {"speed_mean_ftps", config.synth.speed_mean_ftps},
                                 {"speed_jitter_ftps", config.synth.speed_jitter_ftps},
                                 {"entry_rate_veh_per_s", config.synth.entry_rate_veh_per_s}};
        }
        manifest["grid"] = {{"dx_ft", grid.dx_ft},
                            {"dt_s", grid.dt_s},
                            {"corridor_length_ft", grid.corridor_length_ft},
                            {"duration_s", grid.duration_s},
                            {"n_x", grid.n_x},
                            {"n_t", grid.n_t}};
        manifest["stats"] = {{"vehicles", summary.vehicles},
                             {"samples", summary.samples},
                             {"windows", summary.windows},
                             {"metric_rows", summary.metric_rows},
                             {"trust_rows", summary.trust_rows},
                             {"pairs", summary.pairs}};
        manifest["outputs"] = guard.sorted_names();

        guard.add("run_manifest.json");
        std::ofstream out(config.out_dir / "run_manifest.json");
        if (!out) {
            throw DataError("cannot open file for writing: " +
                            (config.out_dir / "run_manifest.json").string());
        }
        out << manifest.dump(2) << '\n';
        if (!out) {
            throw DataError("write failed: " + (config.out_dir / "run_manifest.json").string());
        }
    });

    summary.files = guard.sorted_names();
    guard.commit();
    return summary;
}

}  // namespace trustfield::pipeline
