#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plcmac/config.hpp"
#include "plcmac/stage_math.hpp"

using namespace plcmac;

namespace {
ProtocolConfig one_stage(int cw, Deferral d) {
    return ProtocolConfig{{cw}, {d}};
}
}  // namespace

TEST_CASE("busy-jump CDF endpoints and an exact binomial point") {
    CHECK(busy_jump_cdf(8, Deferral{0}, 0.0, 5) == 0.0);
    CHECK(busy_jump_cdf(8, Deferral{0}, 1.0, 5) == 1.0);
    // P(Bin(2, 0.5) > 1) = P(= 2) = 0.25
    CHECK(busy_jump_cdf(8, Deferral{1}, 0.5, 2) ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK(busy_jump_cdf(8, kInfiniteDeferral, 0.9, 7) == 0.0);
    CHECK(busy_jump_cdf(8, Deferral{3}, 0.5, 3) == 0.0);  // k <= d
}

TEST_CASE("first-stage endpoints of the stock best-effort class") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    StagePoint p0 = stage_point(ca1, 0, 0.0);
    CHECK(p0.bc == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(p0.tau == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
    CHECK(p0.beta == 0.0);
    CHECK(p0.big_b == doctest::Approx(3.5).epsilon(1e-14));

    StagePoint p1 = stage_point(ca1, 0, 1.0);
    CHECK(p1.big_b == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(p1.tau == doctest::Approx(0.125).epsilon(1e-14));
}

TEST_CASE("closed-form endpoints hold for every stock stage to 1e-12") {
    for (Preset pr : {Preset::CA0_CA1, Preset::CA2_CA3}) {
        ProtocolConfig cfg = builtin_config(pr);
        for (int i = 0; i < cfg.stages(); ++i) {
            StagePoint at0 = stage_point(cfg, i, 0.0);
            CHECK(std::fabs(at0.tau - 2.0 / (cfg.cw[i] + 1)) < 1e-12);
            StagePoint at1 = stage_point(cfg, i, 1.0);
            double expect_b = cfg.cw[i] - *cfg.dc[i] / 2.0 - 1.0;
            CHECK(std::fabs(at1.big_b - expect_b) < 1e-12);
        }
    }
}

TEST_CASE("tau + beta = 1/bc identity and direct-sum consistency") {
    ProtocolConfig ca1 = builtin_config(Preset::CA0_CA1);
    for (int i = 0; i < ca1.stages(); ++i)
        for (int g = 0; g <= 20; ++g) {
            double p = g / 20.0;
            StagePoint sp = stage_point(ca1, i, p);
            CHECK(std::fabs(sp.tau + sp.beta - 1.0 / sp.bc) < 1e-12);
            CHECK(std::fabs(sp.bc - bc_direct(ca1, i, p)) < 1e-12);
            CHECK(sp.tau > 0.0);
            CHECK(sp.beta >= 0.0);
            CHECK(sp.t <= 1.0 + 1e-15);
        }
}

TEST_CASE("inactive deferral collapses to the classic backoff stage") {
    // d >= cw-1 means the deferral counter can never expire before the
    // backoff counter does.
    for (double p : {0.0, 0.3, 0.8, 1.0}) {
        StagePoint inf = stage_point(one_stage(16, kInfiniteDeferral), 0, p);
        StagePoint big = stage_point(one_stage(16, Deferral{15}), 0, p);
        for (const StagePoint& sp : {inf, big}) {
            CHECK(sp.bc == doctest::Approx(8.5).epsilon(1e-14));
            CHECK(sp.t == 1.0);
            CHECK(sp.beta == 0.0);
            CHECK(sp.tau == doctest::Approx(2.0 / 17.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("Monte-Carlo stage oracle: degenerate cases") {
    StageOracleResult r0 = stage_oracle(8, Deferral{0}, 0.0, 100000, 42);
    CHECK(std::fabs(r0.tau - 2.0 / 9.0) <= 3.0 * r0.se_tau + 1e-12);
    CHECK(r0.beta == 0.0);

    StageOracleResult rinf = stage_oracle(8, kInfiniteDeferral, 0.7, 100000, 7);
    CHECK(rinf.beta == 0.0);
    CHECK(rinf.se_beta == 0.0);

    CHECK_THROWS_AS(stage_oracle(8, Deferral{0}, 0.5, 100, 1),
                    std::invalid_argument);
}

TEST_CASE("Monte-Carlo stage oracle agrees with the analytic stage point") {
    struct Probe {
        int cw;
        Deferral d;
        double p;
    };
    for (const Probe& pr : {Probe{16, Deferral{3}, 0.4},
                            Probe{4, Deferral{1}, 0.5},
                            Probe{32, Deferral{7}, 0.8}}) {
        ProtocolConfig cfg = one_stage(pr.cw, pr.d);
        StagePoint sp = stage_point(cfg, 0, pr.p);
        StageOracleResult mc = stage_oracle(pr.cw, pr.d, pr.p, 1000000, 12345);
        CHECK(std::fabs(sp.tau - mc.tau) <= 3.0 * mc.se_tau + 1e-12);
        CHECK(std::fabs(sp.beta - mc.beta) <= 3.0 * mc.se_beta + 1e-12);
        CHECK(std::fabs(sp.bc - mc.bc) <= 3.0 * mc.se_bc + 1e-12);
    }
}

TEST_CASE("numeric monotonicity check on the stock classes") {
    auto v1 = check_cond_numeric(builtin_config(Preset::CA0_CA1), 101);
    for (auto v : v1) CHECK(v == Verdict::Pass);

    auto v3 = check_cond_numeric(builtin_config(Preset::CA2_CA3), 101);
    CHECK(v3[0] == Verdict::Pass);
    CHECK(v3[1] == Verdict::Fail);
    CHECK(v3[2] == Verdict::Pass);

    ProtocolConfig same{{8, 8}, {Deferral{0}, Deferral{0}}};
    CHECK(check_cond_numeric(same, 11)[0] == Verdict::Fail);

    CHECK(satisfies_cond(builtin_config(Preset::CA0_CA1)));
    CHECK(!satisfies_cond(builtin_config(Preset::CA2_CA3)));
    CHECK(!satisfies_cond(builtin_config(Preset::COUNTEREXAMPLE_3EQ)));
}
