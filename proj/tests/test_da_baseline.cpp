#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plcmac/config.hpp"
#include "plcmac/da_baseline.hpp"
#include "plcmac/equilibrium.hpp"
#include "plcmac/simulator.hpp"

using namespace plcmac;

TEST_CASE("decoupling is exact for a single station") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    TimingParams timing;
    DaSolution da = solve_da(ca1, 1, timing);
    CHECK(da.p == 0.0);
    EquilibriumSolution drift = solve_equilibrium(ca1, 1.0, timing);
    CHECK(std::fabs(da.throughput - drift.throughput) < 1e-9);
    CHECK(std::fabs(da.pe - drift.pe) < 1e-9);
}

TEST_CASE("single-p model is self-consistent") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    for (int N : {2, 5, 10}) {
        DaSolution da = solve_da(ca1, N);
        CHECK(std::fabs(1.0 - std::pow(1.0 - da.tau_avg, N - 1) - da.p) <
              1e-9);
        CHECK(std::fabs(da.pe - std::pow(1.0 - da.tau_avg, N)) < 1e-12);
        double occ = 0;
        for (double v : da.stage_occupancy) occ += v;
        CHECK(occ == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(da.gamma == da.p);
        CHECK(da.p_success + da.p_collision + da.pe ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("coupled model beats the single-p baseline at small N") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    TimingParams timing;
    SimulationReport sim = run_simulation(ca1, 2, timing, 1000000, 31);
    double s_drift = solve_equilibrium(ca1, 2.0, timing).throughput;
    double s_da = solve_da(ca1, 2, timing).throughput;
    CHECK(std::fabs(s_da - sim.throughput) >
          std::fabs(s_drift - sim.throughput));
}

TEST_CASE("baseline becomes accurate when deferral values are large") {
    // geometric family with f = 4 and d0 = 3 grows the deferral values fast
    ProtocolConfig big = family_config(8, 3, 4.0, 4);
    TimingParams timing;
    SimulationReport sim = run_simulation(big, 5, timing, 1000000, 41);
    DaSolution da = solve_da(big, 5, timing);
    CHECK(std::fabs(da.throughput - sim.throughput) / sim.throughput < 0.05);
}

TEST_CASE("classic no-deferral reduction has a unique single-p root") {
    ProtocolConfig w{{8, 16, 32, 64},
                    {kInfiniteDeferral, kInfiniteDeferral, kInfiniteDeferral,
                     kInfiniteDeferral}};
    DaSolution da = solve_da(w, 6);
    CHECK(da.p > 0.0);
    CHECK(da.p < 1.0);
    // tau_avg(p) is decreasing, so g(p) = 1-(1-tau_avg)^{N-1}-p crosses
    // zero exactly once on a grid
    int crossings = 0;
    double prev_sign = 0;
    for (int g = 0; g <= 200; ++g) {
        double p = g / 200.0;
        std::vector<double> occ;
        double tau_avg = 0;
        detail::da_station(w, p, occ, tau_avg);
        double val = 1.0 - std::pow(1.0 - tau_avg, 5.0) - p;
        double sign = val > 0 ? 1.0 : (val < 0 ? -1.0 : 0.0);
        if (prev_sign != 0 && sign != 0 && sign != prev_sign) ++crossings;
        if (sign != 0) prev_sign = sign;
    }
    CHECK(crossings == 1);
}
