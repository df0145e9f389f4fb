#ifndef PLCMAC_DA_BASELINE_HPP
#define PLCMAC_DA_BASELINE_HPP

#include <cmath>
#include <vector>

#include "plcmac/config.hpp"
#include "plcmac/equilibrium.hpp"
#include "plcmac/roots.hpp"
#include "plcmac/stage_math.hpp"

namespace plcmac {

/// Reconstructed decoupling-assumption model: every station sees a single
/// time-invariant busy/collision probability p. Comparison target only.
struct DaSolution {
    double p = 0;
    double tau_avg = 0;
    std::vector<double> stage_occupancy;
    double pe = 0;
    double p_success = 0;
    double p_collision = 0;
    double throughput = 0;
    double gamma = 0;  // equals p
};

namespace detail {

/// Time-weighted stage occupancy and average transmission probability of
/// one station when every stage sees the same busy probability p.
inline void da_station(const ProtocolConfig& cfg, double p,
                       std::vector<double>& occupancy, double& tau_avg) {
    const int m = cfg.stages();
    std::vector<StageAtPe> st(m);
    for (int i = 0; i < m; ++i) {
        StagePoint sp = stage_point(cfg, i, p);
        st[i].tau = sp.tau;
        st[i].beta = sp.beta;
        st[i].p = p;
    }
    occupancy = occupancy_from_k(k_factors_of(st), 1.0);
    tau_avg = 0.0;
    for (int i = 0; i < m; ++i) tau_avg += occupancy[i] * st[i].tau;
}

}  // namespace detail

/// Fixed point of p = 1 - (1 - tau_avg(p))^(N-1).
inline DaSolution solve_da(const ProtocolConfig& cfg, int N,
                           const TimingParams& timing = {},
                           double tol = 1e-12) {
    cfg.validate();
    if (N < 1) throw std::invalid_argument("solve_da: N must be >= 1");
    DaSolution sol;
    if (N == 1) {
        sol.p = 0.0;
        detail::da_station(cfg, 0.0, sol.stage_occupancy, sol.tau_avg);
    } else {
        auto g = [&](double p) {
            std::vector<double> occ;
            double ta;
            detail::da_station(cfg, p, occ, ta);
            return 1.0 - std::pow(1.0 - ta, N - 1) - p;
        };
        sol.p = g(0.0) <= 0.0 ? 0.0 : find_root(g, 0.0, 1.0, 1e-16, tol);
        detail::da_station(cfg, sol.p, sol.stage_occupancy, sol.tau_avg);
    }
    sol.gamma = sol.p;
    sol.pe = std::pow(1.0 - sol.tau_avg, N);
    sol.p_success = N * sol.tau_avg * std::pow(1.0 - sol.tau_avg, N - 1);
    sol.p_collision = 1.0 - sol.pe - sol.p_success;
    sol.throughput = sol.p_success * timing.frame_d /
                     (sol.p_success * timing.t_success() +
                      sol.p_collision * timing.t_collision() +
                      sol.pe * timing.slot_sigma);
    return sol;
}

}  // namespace plcmac

#endif
