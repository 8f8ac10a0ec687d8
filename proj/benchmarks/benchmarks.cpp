// Microbenchmarks for the hot paths: Student-t evaluation, the IRLS fit, one
// packet-forwarding window, and density binning.

#include <benchmark/benchmark.h>

#include "trustfield/fields.hpp"
#include "trustfield/logittrust.hpp"
#include "trustfield/netsim.hpp"
#include "trustfield/trajdata.hpp"

namespace {

using namespace trustfield;

void BM_StudentTCdfInteger(benchmark::State& state) {
    double x = -8.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(logittrust::student_t_cdf(x, 5.0));
        x += 0.01;
        if (x > 8.0) x = -8.0;
    }
}
BENCHMARK(BM_StudentTCdfInteger);

void BM_StudentTCdfFractional(benchmark::State& state) {
    double x = -8.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(logittrust::student_t_cdf(x, 4.5));
        x += 0.01;
        if (x > 8.0) x = -8.0;
    }
}
BENCHMARK(BM_StudentTCdfFractional);

logittrust::EvidenceHistory mixed_history(int records) {
    logittrust::EvidenceHistory history;
    for (int w = 0; w < records; ++w) {
        const double x1 = 0.5 * (w % 5 - 2);
        const double x2 = 0.5 * ((2 * w) % 5 - 2);
        history.append({w, logittrust::BehaviorVector{x1, x2, 0.0, 0.0}, w % 2});
    }
    return history;
}

void BM_FitBeta(benchmark::State& state) {
    const auto history = mixed_history(static_cast<int>(state.range(0)));
    const logittrust::TrustParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(logittrust::fit_beta(history, params));
    }
}
BENCHMARK(BM_FitBeta)->Arg(8)->Arg(50);

trajdata::TrajectoryDataset platoon(int vehicles) {
    trajdata::TrajectoryDataset dataset;
    dataset.corridor_length_ft = 100.0 * vehicles;
    dataset.duration_s = 1.0;
    dataset.sample_period_s = 0.1;
    for (int v = 1; v <= vehicles; ++v) {
        trajdata::VehicleTrace trace;
        trace.vehicle_id = v;
        for (int k = 0; k < 10; ++k) {
            trace.samples.push_back({v, 0.1 * k, 100.0 * (v - 1), 1, 0.0});
        }
        dataset.traces[v] = trace;
    }
    return dataset;
}

void BM_RunWindow(benchmark::State& state) {
    const auto dataset = platoon(static_cast<int>(state.range(0)));
    netsim::SimConfig config;
    const auto policies = netsim::assign_policies(dataset, config);
    for (auto _ : state) {
        benchmark::DoNotOptimize(netsim::run_window(dataset, policies, 0, config));
    }
}
BENCHMARK(BM_RunWindow)->Arg(20)->Arg(100);

void BM_DensityField(benchmark::State& state) {
    trajdata::SynthConfig synth;
    synth.n_vehicles = 100;
    synth.duration_s = 300.0;
    synth.corridor_length_ft = 2100.0;
    synth.entry_rate_veh_per_s = 0.5;
    synth.seed = 7;
    const auto dataset = trajdata::generate_synthetic(synth);
    const auto grid = fields::GridSpec::create(80.0, 15.0, 2100.0, 300.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fields::compute_density_field(dataset, grid));
    }
}
BENCHMARK(BM_DensityField);

}  // namespace

BENCHMARK_MAIN();
