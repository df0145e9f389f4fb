#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "plcmac/config.hpp"
#include "plcmac/equilibrium.hpp"
#include "plcmac/simulator.hpp"

using namespace plcmac;

TEST_CASE("lone station: no collisions, renewal throughput") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    TimingParams timing;
    SimulationReport rep = run_simulation(ca1, 1, timing, 100000, 5);
    CHECK(rep.collision_slots == 0);
    CHECK(rep.idle_slots + rep.success_slots == rep.total_slots);
    CHECK(rep.gamma_est == 0.0);
    CHECK(rep.deferral_jumps == 0);
    const double tau0 = 2.0 / 9.0;
    double expect = tau0 * timing.frame_d /
                    (tau0 * timing.t_success() +
                     (1.0 - tau0) * timing.slot_sigma);
    CHECK(std::fabs(rep.throughput - expect) / expect < 0.02);
}

TEST_CASE("slot accounting and stage occupancy are consistent") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep = run_simulation(ca1, 6, TimingParams{}, 200000, 11);
    CHECK(rep.idle_slots + rep.success_slots + rep.collision_slots ==
          rep.total_slots);
    double occ = 0;
    for (double v : rep.stage_occupancy) occ += v;
    CHECK(occ == doctest::Approx(1.0).epsilon(1e-9));
    std::int64_t attempts = 0, succ = 0;
    for (const auto& s : rep.per_station) {
        attempts += s.attempts;
        succ += s.successes;
    }
    CHECK(succ == rep.success_slots);
    CHECK(succ == static_cast<std::int64_t>(rep.success_ids.size()));
    CHECK(attempts >= succ);
}

TEST_CASE("simulator tracks the analytic collision share at N = 6") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep = run_simulation(ca1, 6, TimingParams{}, 1000000, 21);
    EquilibriumSolution sol = solve_equilibrium(ca1, 6.0);
    CHECK(std::fabs(rep.gamma_est - sol.gamma) < 0.02);
}

TEST_CASE("identical seeds reproduce identical runs") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport a = run_simulation(ca1, 4, TimingParams{}, 50000, 77);
    SimulationReport b = run_simulation(ca1, 4, TimingParams{}, 50000, 77);
    CHECK(a.success_ids == b.success_ids);
    CHECK(a.idle_slots == b.idle_slots);
    CHECK(a.throughput == b.throughput);
    SimulationReport c = run_simulation(ca1, 4, TimingParams{}, 50000, 78);
    CHECK(a.success_ids != c.success_ids);
}

TEST_CASE("infinite deferral disables deferral jumps entirely") {
    ProtocolConfig w{{8, 16, 32, 64},
                    {kInfiniteDeferral, kInfiniteDeferral, kInfiniteDeferral,
                     kInfiniteDeferral}};
    SimulationReport rep = run_simulation(w, 3, TimingParams{}, 100000, 3);
    CHECK(rep.deferral_jumps == 0);
}

TEST_CASE("autocorrelation of synthetic identity sequences") {
    std::vector<int> alternating;
    for (int i = 0; i < 1000; ++i) alternating.push_back(i % 2);
    AcfResult alt = acf(alternating, 3);
    CHECK(alt.values[0] == doctest::Approx(-1.0).epsilon(1e-2));
    CHECK(!alt.zero_variance);

    std::vector<int> constant(500, 1);
    AcfResult flat = acf(constant, 3);
    CHECK(flat.zero_variance);
    for (double v : flat.values) CHECK(v == 0.0);

    CHECK_THROWS_AS(acf(constant, 500), std::invalid_argument);
}

TEST_CASE("positive short-lag correlation of the winner sequence at N = 2") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep = run_simulation(ca1, 2, TimingParams{}, 300000, 9);
    REQUIRE(rep.success_ids.size() > 50000);
    AcfResult r = acf(rep.success_ids, 14);
    for (double v : r.values) CHECK(v > 0.0);
}

TEST_CASE("fairness metrics") {
    std::vector<int> alternating;
    for (int i = 0; i < 200; ++i) alternating.push_back(i % 2);
    FairnessSummary alt = fairness_summary(alternating, 2);
    CHECK(alt.mean_run_length == doctest::Approx(1.0));
    CHECK(alt.max_run_length == 1);
    CHECK(alt.jain_mean == doctest::Approx(1.0));

    std::vector<int> solo(120, 0);
    FairnessSummary s = fairness_summary(solo, 1);
    CHECK(s.max_run_length == 120);
    CHECK(s.mean_run_length == doctest::Approx(120.0));

    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep = run_simulation(ca1, 2, TimingParams{}, 200000, 13);
    FairnessSummary f = fairness_summary(rep.success_ids, 2);
    CHECK(f.mean_run_length > 2.0);  // short-term unfairness
    CHECK(f.jain_mean < 1.0);
}

TEST_CASE("windowed idle trace and CSV writers") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep =
        run_simulation(ca1, 5, TimingParams{}, 10000, 1, 500);
    CHECK(rep.pe_trace.size() == 20);
    for (double v : rep.pe_trace) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    std::ostringstream s1, s2, s3;
    write_summary_csv(s1, rep);
    write_pe_trace_csv(s2, rep);
    write_success_ids_csv(s3, rep);
    CHECK(s1.str().find("N,seed,slots,throughput") == 0);
    CHECK(s2.str().find("window_index,pe") == 0);
    CHECK(s3.str().find("index,station") == 0);
}

TEST_CASE("per-slot stage trace accumulates expected station counts") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    SimulationReport rep =
        run_simulation(ca1, 7, TimingParams{}, 1000, 17, 500, 100);
    REQUIRE(rep.stage_trace.size() == 100);
    for (const auto& row : rep.stage_trace) {
        double mass = 0;
        for (double v : row) mass += v;
        CHECK(mass == doctest::Approx(7.0));
    }
    // everyone starts at stage 0
    CHECK(rep.stage_trace[0][0] == doctest::Approx(7.0));
}
