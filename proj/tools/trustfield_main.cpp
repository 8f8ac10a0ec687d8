// Command line front end: synth, simulate, trust, fields, and the end-to-end
// pipeline. Exit codes: 0 ok, 2 configuration, 3 data, 4 numerical.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trustfield/errors.hpp"
#include "trustfield/pipeline.hpp"
#include "trustfield/version.hpp"

namespace tf = trustfield;

namespace {

struct ColumnFlags {
    tf::trajdata::ColumnMap map;

    void attach(CLI::App* cmd) {
        cmd->add_option("--col-vehicle", map.vehicle_id, "Vehicle id column name");
        cmd->add_option("--col-time", map.global_time_ms, "Global time (ms) column name");
        cmd->add_option("--col-frame", map.frame_id, "Frame id column name");
        cmd->add_option("--col-position", map.position, "Longitudinal position column name");
        cmd->add_option("--col-speed", map.speed, "Speed column name");
        cmd->add_option("--col-lane", map.lane, "Lane column name");
    }
};

void attach_synth(CLI::App* cmd, tf::trajdata::SynthConfig* synth) {
    cmd->add_option("--vehicles", synth->n_vehicles, "Number of vehicles to generate");
    cmd->add_option("--duration", synth->duration_s, "Scenario length [s]");
    cmd->add_option("--corridor", synth->corridor_length_ft, "Corridor length [ft]");
    cmd->add_option("--speed-mean", synth->speed_mean_ftps, "Mean vehicle speed [ft/s]");
    cmd->add_option("--speed-jitter", synth->speed_jitter_ftps,
                    "Half-width of the per-vehicle speed draw [ft/s]");
    cmd->add_option("--entry-rate", synth->entry_rate_veh_per_s, "Vehicle entries per second");
}

void attach_sim(CLI::App* cmd, tf::netsim::SimConfig* sim) {
    cmd->add_option("--window", sim->window_s, "Sensing-window length [s]");
    cmd->add_option("--range", sim->radio_range_ft, "Radio range [ft]");
    cmd->add_option("--hops", sim->max_hops, "Maximum forwarding hops");
    cmd->add_option("--malicious-frac", sim->malicious_fraction,
                    "Fraction of vehicles behaving maliciously");
    cmd->add_option("--honest-delay-low", sim->honest_delay_low_s,
                    "Honest forwarding delay lower bound [s]");
    cmd->add_option("--honest-delay-high", sim->honest_delay_high_s,
                    "Honest forwarding delay upper bound [s]");
}

void attach_trust(CLI::App* cmd, tf::logittrust::TrustParams* trust, std::string* labeler) {
    cmd->add_option("--nu0", trust->nu0, "Student-t degrees of freedom");
    cmd->add_option("--threshold", trust->threshold, "Trustworthiness threshold on theta");
    cmd->add_option("--max-iterations", trust->max_iterations, "IRLS iteration cap");
    cmd->add_option("--tol", trust->convergence_tol, "IRLS convergence tolerance");
    cmd->add_option("--ridge", trust->ridge, "Ridge regularizer");
    cmd->add_option("--history", trust->history_capacity, "Evidence records kept per pair");
    cmd->add_option("--pfd-scale", trust->pfd_scale, "PFD squashing scale [1/s]");
    cmd->add_option("--labeler", *labeler, "Evidence labeler: self or pfr")
        ->check(CLI::IsMember({"self", "pfr"}));
}

tf::logittrust::Labeler parse_labeler(const std::string& text) {
    return text == "pfr" ? tf::logittrust::Labeler::pfr_rule
                         : tf::logittrust::Labeler::self_threshold;
}

tf::fields::TrustAveraging parse_averaging(const std::string& text) {
    if (text == "per_vehicle") return tf::fields::TrustAveraging::per_vehicle;
    return tf::fields::TrustAveraging::per_sample;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("trustfield ") + std::string(tf::kVersion) +
                 ": vehicular trust-field simulation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI/TOML file (flags win)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic trajectory CSV");
    tf::trajdata::SynthConfig synth;
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "Output trajectory CSV")->required();
    attach_synth(synth_cmd, &synth);
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run packet forwarding over trajectories");
    std::string sim_traj, sim_out_dir;
    double sim_period = 0.1;
    bool sim_events = false;
    tf::netsim::SimConfig sim;
    ColumnFlags sim_cols;
    sim_cmd->add_option("--traj", sim_traj, "Trajectory CSV")->required();
    sim_cmd->add_option("--out", sim_out_dir, "Output directory")->required();
    sim_cmd->add_option("--period", sim_period, "Resample period [s]");
    sim_cmd->add_option("--seed", sim.seed, "Simulation seed");
    sim_cmd->add_flag("--events", sim_events, "Also write the packet event log");
    attach_sim(sim_cmd, &sim);
    sim_cols.attach(sim_cmd);

    // trust
    auto* trust_cmd = app.add_subcommand("trust", "Estimate per-window trust from metrics");
    std::string trust_metrics, trust_out, trust_labeler = "self";
    int trust_threads = 1;
    tf::logittrust::TrustParams trust;
    trust_cmd->add_option("--metrics", trust_metrics, "metrics.csv from simulate")->required();
    trust_cmd->add_option("--out", trust_out, "Output trust CSV")->required();
    trust_cmd->add_option("--threads", trust_threads, "Worker threads for the fits");
    attach_trust(trust_cmd, &trust, &trust_labeler);

    // fields
    auto* fields_cmd =
        app.add_subcommand("fields", "Build trust/density/speed/flow fields from logs");
    std::string fields_traj, fields_out_dir, fields_averaging = "per_sample";
    std::optional<std::string> fields_trust, fields_static;
    double fields_period = 0.1, fields_window = 1.0, fields_dx = 80.0, fields_dt = 15.0;
    ColumnFlags fields_cols;
    fields_cmd->add_option("--traj", fields_traj, "Trajectory CSV")->required();
    fields_cmd->add_option("--out", fields_out_dir, "Output directory")->required();
    auto* trust_opt =
        fields_cmd->add_option("--trust", fields_trust, "Per-window trust CSV (dynamic)");
    fields_cmd->add_option("--static-trust", fields_static, "Per-vehicle trust CSV (static)")
        ->excludes(trust_opt);
    fields_cmd->add_option("--period", fields_period, "Resample period [s]");
    fields_cmd->add_option("--window", fields_window, "Sensing-window length [s]");
    fields_cmd->add_option("--dx", fields_dx, "Position bin size [ft]");
    fields_cmd->add_option("--dt", fields_dt, "Time bin size [s]");
    fields_cmd->add_option("--averaging", fields_averaging, "per_sample or per_vehicle")
        ->check(CLI::IsMember({"per_sample", "per_vehicle"}));
    fields_cols.attach(fields_cmd);

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Full run: input -> fields + manifest");
    tf::pipeline::PipelineConfig pipe;
    std::string pipe_out_dir, pipe_mode = "dynamic", pipe_averaging = "per_sample";
    std::string pipe_labeler = "self";
    std::optional<std::string> pipe_input;
    ColumnFlags pipe_cols;
    pipe_cmd->add_option("--out", pipe_out_dir, "Output directory")->required();
    pipe_cmd->add_option("--input", pipe_input,
                         "Trajectory CSV (omit to generate synthetic input)");
    pipe_cmd->add_option("--mode", pipe_mode, "Trust mode: dynamic or static")
        ->check(CLI::IsMember({"dynamic", "static"}));
    pipe_cmd->add_option("--seed", pipe.seed, "Master seed for every stage");
    pipe_cmd->add_option("--period", pipe.resample_period_s, "Resample period [s]");
    pipe_cmd->add_option("--dx", pipe.dx_ft, "Position bin size [ft]");
    pipe_cmd->add_option("--dt", pipe.dt_s, "Time bin size [s]");
    pipe_cmd->add_option("--averaging", pipe_averaging, "per_sample or per_vehicle")
        ->check(CLI::IsMember({"per_sample", "per_vehicle"}));
    pipe_cmd->add_flag("--events", pipe.write_events, "Also write the packet event log");
    pipe_cmd->add_option("--threads", pipe.threads, "Worker threads for the trust fits");
    attach_synth(pipe_cmd, &pipe.synth);
    attach_sim(pipe_cmd, &pipe.sim);
    attach_trust(pipe_cmd, &pipe.trust, &pipe_labeler);
    pipe_cols.attach(pipe_cmd);

    try {
        app.parse(argc, argv);

        if (app.got_subcommand(synth_cmd)) {
            tf::pipeline::cmd_synth(synth, synth_out);
            std::cout << "wrote " << synth_out << "\n";
        } else if (app.got_subcommand(sim_cmd)) {
            tf::pipeline::cmd_simulate(sim_traj, sim_cols.map, sim_period, sim, sim_out_dir,
                                       sim_events);
            std::cout << "wrote " << sim_out_dir << "/metrics.csv\n";
        } else if (app.got_subcommand(trust_cmd)) {
            trust.labeler = parse_labeler(trust_labeler);
            tf::pipeline::cmd_trust(trust_metrics, trust, trust_out, trust_threads);
            std::cout << "wrote " << trust_out << "\n";
        } else if (app.got_subcommand(fields_cmd)) {
            std::optional<std::filesystem::path> trust_path, static_path;
            if (fields_trust) trust_path = *fields_trust;
            if (fields_static) static_path = *fields_static;
            tf::pipeline::cmd_fields(fields_traj, fields_cols.map, fields_period, trust_path,
                                     static_path, fields_window, fields_dx, fields_dt,
                                     parse_averaging(fields_averaging), fields_out_dir);
            std::cout << "wrote fields under " << fields_out_dir << "\n";
        } else if (app.got_subcommand(pipe_cmd)) {
            pipe.out_dir = pipe_out_dir;
            pipe.mode = tf::pipeline::parse_trust_mode(pipe_mode);
            pipe.trust_averaging = parse_averaging(pipe_averaging);
            pipe.trust.labeler = parse_labeler(pipe_labeler);
            pipe.columns = pipe_cols.map;
            if (pipe_input) pipe.input_csv = *pipe_input;
            const auto summary = tf::pipeline::cmd_pipeline(pipe);
            std::cout << "vehicles=" << summary.vehicles << " samples=" << summary.samples
                      << " windows=" << summary.windows << " pairs=" << summary.pairs
                      << " files=" << summary.files.size() << "\n";
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const tf::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tf::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const tf::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
