#include "trustfield/trajdata.hpp"

#include <cmath>

#include "doctest.h"
#include "test_support.hpp"
#include "trustfield/errors.hpp"

using namespace trustfield;
using trajdata::TrajectoryDataset;

namespace {

TrajectoryDataset two_vehicle_dataset() {
    // Vehicle 1 moves 0 -> 100 ft over [0, 2] s; vehicle 2 sits at 500 ft.
    TrajectoryDataset dataset;
    trajdata::VehicleTrace a;
    a.vehicle_id = 1;
    a.samples = {{1, 0.0, 0.0, 2, 50.0}, {1, 1.0, 50.0, 2, 50.0}, {1, 2.0, 100.0, 2, 50.0}};
    trajdata::VehicleTrace b;
    b.vehicle_id = 2;
    b.samples = {{2, 0.0, 500.0, 1, 0.0}, {2, 2.0, 500.0, 1, 0.0}};
    dataset.traces[1] = a;
    dataset.traces[2] = b;
    dataset.corridor_length_ft = 500.0;
    dataset.duration_s = 2.0;
    dataset.sample_period_s = 1.0;
    return dataset;
}

}  // namespace

TEST_CASE("parsing sorts, deduplicates and rebases an NGSIM style table") {
    testsup::TempDir dir("trajdata_parse");
    const auto path = dir / "traj.csv";
    // Out of order rows, a duplicate timestamp for vehicle 7 (second copy
    // must lose), and a clock that starts at 3000 ms.
    testsup::write_file(path,
                        "Vehicle_ID,Frame_ID,Global_Time,Local_Y,v_Vel,Lane_ID\n"
                        "7,32,3200,24.5,11.0,3\n"
                        "7,30,3000,20.0,10.0,3\n"
                        "7,30,3000,99.0,99.0,9\n"
                        "8,31,3100,310.0,0.0,1\n");
    const auto dataset = trajdata::parse_trajectory_csv(path);

    REQUIRE(dataset.traces.size() == 2);
    const auto& v7 = dataset.traces.at(7);
    REQUIRE(v7.samples.size() == 2);
    CHECK(v7.samples[0].time_s == 0.0);
    CHECK(v7.samples[0].position_ft == 20.0);  // first duplicate wins
    CHECK(v7.samples[0].lane == 3);
    CHECK(v7.samples[1].time_s == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(v7.samples[1].speed_ftps == 11.0);
    CHECK(dataset.traces.at(8).samples[0].time_s == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dataset.corridor_length_ft == 310.0);
    CHECK(dataset.duration_s == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("frame numbers stand in when the millisecond clock is absent") {
    testsup::TempDir dir("trajdata_frames");
    const auto path = dir / "traj.csv";
    testsup::write_file(path,
                        "Vehicle_ID,Frame_ID,Local_Y,v_Vel,Lane_ID\n"
                        "1,10,5.0,30.0,1\n"
                        "1,11,8.0,30.0,1\n");
    const auto dataset = trajdata::parse_trajectory_csv(path);
    const auto& trace = dataset.traces.at(1);
    CHECK(trace.samples[0].time_s == 0.0);
    CHECK(trace.samples[1].time_s == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(dataset.sample_period_s == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("parse errors name the missing column or the bad line") {
    testsup::TempDir dir("trajdata_errors");

    const auto no_pos = dir / "no_pos.csv";
    testsup::write_file(no_pos, "Vehicle_ID,Frame_ID,v_Vel,Lane_ID\n1,1,30.0,1\n");
    CHECK_THROWS_WITH_AS(trajdata::parse_trajectory_csv(no_pos),
                         doctest::Contains("Local_Y"), DataError);

    const auto bad_cell = dir / "bad_cell.csv";
    testsup::write_file(bad_cell,
                        "Vehicle_ID,Frame_ID,Local_Y,v_Vel,Lane_ID\n"
                        "1,1,5.0,30.0,1\n"
                        "1,2,oops,30.0,1\n");
    CHECK_THROWS_WITH_AS(trajdata::parse_trajectory_csv(bad_cell),
                         doctest::Contains("line 3"), DataError);

    const auto header_only = dir / "empty.csv";
    testsup::write_file(header_only, "Vehicle_ID,Frame_ID,Local_Y,v_Vel,Lane_ID\n");
    CHECK_THROWS_AS(trajdata::parse_trajectory_csv(header_only), DataError);
}

TEST_CASE("trace interpolation is linear inside the span and absent outside") {
    const auto dataset = two_vehicle_dataset();
    const auto& trace = dataset.traces.at(1);
    CHECK(*trace.position_at(0.5) == doctest::Approx(25.0).epsilon(1e-12));
    CHECK(*trace.position_at(1.0) == 50.0);
    CHECK(*trace.speed_at(1.75) == 50.0);
    CHECK_FALSE(trace.position_at(-0.1).has_value());
    CHECK_FALSE(trace.position_at(2.1).has_value());
}

TEST_CASE("write then parse reproduces every sample exactly") {
    TrajectoryDataset dataset;
    trajdata::VehicleTrace t;
    t.vehicle_id = 3;
    // Whole-second times survive the millisecond conversion exactly; the
    // other fields go through the shortest round-trip formatter.
    t.samples = {{3, 0.0, 1.0 / 3.0, 4, 29.987654321},
                 {3, 1.0, 2107.3, 4, 0.1 + 0.2},
                 {3, 2.0, 2100.0, 4, 31.0}};
    dataset.traces[3] = t;
    dataset.corridor_length_ft = 2107.3;
    dataset.duration_s = 2.0;

    testsup::TempDir dir("trajdata_roundtrip");
    const auto path = dir / "traj.csv";
    trajdata::write_trajectory_csv(dataset, path);
    const auto back = trajdata::parse_trajectory_csv(path);

    const auto& rt = back.traces.at(3);
    REQUIRE(rt.samples.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(rt.samples[k].time_s == t.samples[k].time_s);
        CHECK(rt.samples[k].position_ft == t.samples[k].position_ft);
        CHECK(rt.samples[k].speed_ftps == t.samples[k].speed_ftps);
        CHECK(rt.samples[k].lane == t.samples[k].lane);
    }
}

TEST_CASE("uniform resampling lands on the grid and keeps short traces") {
    TrajectoryDataset dataset;
    trajdata::VehicleTrace a;
    a.vehicle_id = 1;
    a.samples = {{1, 0.25, 10.0, 1, 50.0}, {1, 0.85, 40.0, 1, 50.0}};
    trajdata::VehicleTrace lone;
    lone.vehicle_id = 2;
    lone.samples = {{2, 0.3, 5.0, 1, 1.0}};
    trajdata::VehicleTrace narrow;
    narrow.vehicle_id = 3;
    narrow.samples = {{3, 0.45, 1.0, 1, 1.0}, {3, 0.55, 2.0, 1, 1.0}};
    dataset.traces[1] = a;
    dataset.traces[2] = lone;
    dataset.traces[3] = narrow;
    dataset.corridor_length_ft = 40.0;
    dataset.duration_s = 0.85;

    const auto result = trajdata::resample_uniform(dataset, 0.2);
    const auto& r1 = result.dataset.traces.at(1);
    REQUIRE(r1.samples.size() == 3);
    CHECK(r1.samples[0].time_s == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r1.samples[0].position_ft == doctest::Approx(17.5).epsilon(1e-12));
    CHECK(r1.samples[1].position_ft == doctest::Approx(27.5).epsilon(1e-12));
    CHECK(r1.samples[2].position_ft == doctest::Approx(37.5).epsilon(1e-12));

    CHECK(result.kept_as_is == std::vector<int>{2, 3});
    CHECK(result.dataset.traces.at(2).samples.size() == 1);
    CHECK(result.dataset.traces.at(3).samples.size() == 2);
    CHECK(result.dataset.sample_period_s == 0.2);
    CHECK(result.dataset.corridor_length_ft == 40.0);
    CHECK(result.dataset.duration_s == 0.85);

    CHECK_THROWS_AS(trajdata::resample_uniform(dataset, 0.0), ConfigError);
}

TEST_CASE("resampling onto the native grid reuses the samples exactly") {
    TrajectoryDataset dataset;
    trajdata::VehicleTrace t;
    t.vehicle_id = 1;
    for (int k = 0; k <= 20; ++k) {
        const double time = static_cast<double>(k) * 0.1;
        t.samples.push_back({1, time, 7.0 * time + 0.5, 1, 7.0});
    }
    dataset.traces[1] = t;
    dataset.corridor_length_ft = 20.0;
    dataset.duration_s = 2.0;

    const auto result = trajdata::resample_uniform(dataset, 0.1);
    const auto& r = result.dataset.traces.at(1);
    REQUIRE(r.samples.size() == t.samples.size());
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
        CHECK(r.samples[k].time_s == t.samples[k].time_s);
        CHECK(r.samples[k].position_ft == t.samples[k].position_ft);
    }
    CHECK(result.kept_as_is.empty());
}

TEST_CASE("neighbor queries respect range and activity") {
    const auto dataset = two_vehicle_dataset();
    // At t = 1 vehicle 1 sits at 50 ft, vehicle 2 at 500 ft.
    auto q = trajdata::neighbors_within_range(dataset, 1, 1.0, 450.0);
    CHECK(q.subject_active);
    CHECK(q.neighbor_ids == std::vector<int>{2});  // exactly at range counts

    q = trajdata::neighbors_within_range(dataset, 1, 1.0, 449.0);
    CHECK(q.subject_active);
    CHECK(q.neighbor_ids.empty());

    q = trajdata::neighbors_within_range(dataset, 99, 1.0, 1000.0);
    CHECK_FALSE(q.subject_active);

    q = trajdata::neighbors_within_range(dataset, 1, 5.0, 1000.0);
    CHECK_FALSE(q.subject_active);
}

TEST_CASE("synthetic generation is seeded and respects its bounds") {
    trajdata::SynthConfig config;
    config.n_vehicles = 20;
    config.duration_s = 120.0;
    config.corridor_length_ft = 800.0;
    config.speed_mean_ftps = 30.0;
    config.speed_jitter_ftps = 3.0;
    config.entry_rate_veh_per_s = 0.2;
    config.seed = 42;

    const auto a = trajdata::generate_synthetic(config);
    const auto b = trajdata::generate_synthetic(config);
    REQUIRE(!a.traces.empty());
    CHECK(a.total_samples() == b.total_samples());
    CHECK(a.traces.begin()->second.samples.front().time_s ==
          b.traces.begin()->second.samples.front().time_s);

    config.seed = 43;
    const auto c = trajdata::generate_synthetic(config);
    CHECK(a.traces.begin()->second.samples.front().time_s !=
          c.traces.begin()->second.samples.front().time_s);

    CHECK(a.corridor_length_ft == 800.0);
    CHECK(a.duration_s == 120.0);
    CHECK(a.sample_period_s == trajdata::kNativeSamplePeriodS);
    for (const auto& [id, trace] : a.traces) {
        CHECK(id >= 1);
        CHECK(id <= config.n_vehicles);
        const double speed = trace.samples.front().speed_ftps;
        CHECK(speed >= 27.0);
        CHECK(speed <= 33.0);
        for (const auto& s : trace.samples) {
            CHECK(s.time_s >= 0.0);
            CHECK(s.time_s <= a.duration_s);
            CHECK(s.position_ft >= 0.0);
            CHECK(s.position_ft <= a.corridor_length_ft);
            CHECK(s.speed_ftps == speed);  // constant per vehicle
            CHECK(s.lane >= 1);
            CHECK(s.lane <= 5);
        }
    }
}

TEST_CASE("synthetic generation validates its configuration") {
    trajdata::SynthConfig config;

    config.n_vehicles = -1;
    CHECK_THROWS_AS(trajdata::generate_synthetic(config), ConfigError);

    config = {};
    config.duration_s = 0.0;
    CHECK_THROWS_AS(trajdata::generate_synthetic(config), ConfigError);

    config = {};
    config.entry_rate_veh_per_s = 0.0;
    CHECK_THROWS_AS(trajdata::generate_synthetic(config), ConfigError);

    config = {};
    config.n_vehicles = 0;
    const auto dataset = trajdata::generate_synthetic(config);
    CHECK(dataset.traces.empty());
    CHECK(dataset.duration_s == config.duration_s);
}
