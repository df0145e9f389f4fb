#ifndef PLCMAC_EQUILIBRIUM_HPP
#define PLCMAC_EQUILIBRIUM_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plcmac/config.hpp"
#include "plcmac/roots.hpp"
#include "plcmac/stage_math.hpp"

namespace plcmac {

struct CondViolation : std::runtime_error {
    CondViolation(const std::string& what) : std::runtime_error(what) {}
};

/// Stage quantities expressed as functions of the idle probability p_e.
struct StageAtPe {
    double tau = 0;
    double p = 0;
    double beta = 0;
};

/// Largest transmission probability in the system (stage 0 at p = 0);
/// p_e ranges over [0, 1 - tau_max].
inline double tau_max(const ProtocolConfig& cfg) {
    return 2.0 / (cfg.cw[0] + 1);
}

/// Solves the scalar fixed point tau = tau_i(1 - pe/(1-tau)) for one
/// stage. The bracket is [tau_i(p=1), tau_i(p=0)]; the induced busy
/// probability is clamped to [0,1].
inline StageAtPe stage_at_pe(const ProtocolConfig& cfg, int stage, double pe,
                             double tol = 1e-13) {
    auto induced_p = [pe](double tau) {
        double p = 1.0 - pe / (1.0 - tau);
        return std::clamp(p, 0.0, 1.0);
    };
    const double tau_lo = stage_point(cfg, stage, 1.0).tau;
    const double tau_hi = stage_point(cfg, stage, 0.0).tau;

    StageAtPe out;
    if (tau_hi - tau_lo < 1e-15) {  // constant-tau stage (inactive deferral)
        out.tau = tau_hi;
    } else {
        auto h = [&](double tau) {
            return stage_point(cfg, stage, induced_p(tau)).tau - tau;
        };
        double h_lo = h(tau_lo);
        double h_hi = h(tau_hi);
        if (h_lo <= 0.0) {
            out.tau = tau_lo;
        } else if (h_hi >= 0.0) {
            out.tau = tau_hi;
        } else {
            out.tau = find_root(h, tau_lo, tau_hi, 1e-16, tol);
        }
    }
    out.p = induced_p(out.tau);
    out.beta = stage_point(cfg, stage, out.p).beta;
    return out;
}

namespace detail {

/// Normalizes cumulative products of the K factors into stage occupancies
/// summing to `total`. Log-space so that an infinite K (last-stage
/// denominator vanishing at pe = 0) pushes all mass to that stage instead
/// of producing NaNs.
inline std::vector<double> occupancy_from_k(const std::vector<double>& k_factors,
                                            double total) {
    const int m = static_cast<int>(k_factors.size());
    std::vector<double> logcp(m);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        acc += std::log(k_factors[i]);
        logcp[i] = acc;
    }
    double mx = *std::max_element(logcp.begin(), logcp.end());
    std::vector<double> occ(m, 0.0);
    if (std::isinf(mx)) {
        // all mass at the last stage with infinite cumulative product
        for (int i = m - 1; i >= 0; --i)
            if (std::isinf(logcp[i]) && logcp[i] > 0) {
                occ[i] = total;
                return occ;
            }
    }
    double denom = 0.0;
    for (int i = 0; i < m; ++i) denom += std::exp(logcp[i] - mx);
    for (int i = 0; i < m; ++i) occ[i] = total * std::exp(logcp[i] - mx) / denom;
    return occ;
}

inline std::vector<double> k_factors_of(const std::vector<StageAtPe>& st) {
    const int m = static_cast<int>(st.size());
    std::vector<double> k(m, 1.0);
    for (int i = 1; i <= m - 2; ++i)
        k[i] = (st[i - 1].tau * st[i - 1].p + st[i - 1].beta) /
               (st[i].tau + st[i].beta);
    if (m >= 2)
        k[m - 1] = (st[m - 2].tau * st[m - 2].p + st[m - 2].beta) /
                   (st[m - 1].tau * (1.0 - st[m - 1].p));
    return k;
}

}  // namespace detail

struct PeEvaluation {
    double pe = 0;
    std::vector<StageAtPe> stages;
    std::vector<double> k_factors;
    std::vector<double> n_hat;
    double phi = 0;
};

/// Evaluates the per-stage solution, equilibrium stage distribution and
/// Phi(pe) = prod_k (1 - tau_k)^{n_hat_k} at a candidate idle probability.
inline PeEvaluation evaluate_pe(const ProtocolConfig& cfg, double N, double pe) {
    PeEvaluation ev;
    ev.pe = pe;
    const int m = cfg.stages();
    ev.stages.reserve(m);
    for (int i = 0; i < m; ++i) ev.stages.push_back(stage_at_pe(cfg, i, pe));
    ev.k_factors = detail::k_factors_of(ev.stages);
    ev.n_hat = detail::occupancy_from_k(ev.k_factors, N);
    double lg = 0.0;
    for (int i = 0; i < m; ++i)
        lg += ev.n_hat[i] * std::log1p(-ev.stages[i].tau);
    ev.phi = std::exp(lg);
    return ev;
}

inline double phi(const ProtocolConfig& cfg, double N, double pe) {
    return evaluate_pe(cfg, N, pe).phi;
}

struct EquilibriumSolution {
    double N = 0;
    double pe = 0;
    std::vector<double> p;
    std::vector<double> tau;
    std::vector<double> beta;
    std::vector<double> n_hat;
    std::vector<double> k_factors;
    double p_success = 0;
    double p_collision = 0;
    double throughput = 0;
    double gamma = 0;
    double residual = 0;
};

namespace detail {

inline EquilibriumSolution fill_solution(const ProtocolConfig& cfg, double N,
                                         const TimingParams& timing,
                                         const PeEvaluation& ev) {
    const int m = cfg.stages();
    EquilibriumSolution sol;
    sol.N = N;
    sol.pe = ev.pe;
    sol.n_hat = ev.n_hat;
    sol.k_factors = ev.k_factors;
    sol.p.resize(m);
    sol.tau.resize(m);
    sol.beta.resize(m);
    // A lone station never senses the medium busy, whatever its stage.
    // The coupled per-stage relation p_i = 1 - pe/(1 - tau_i) removes one
    // stage-i station from the idle product, which is counterfactual for
    // stages no station occupies, so for N = 1 the exact values are used.
    const bool lone = (N == 1.0);
    double ps = 0, num_gamma = 0, den_gamma = 0;
    for (int i = 0; i < m; ++i) {
        if (lone) {
            StagePoint sp = stage_point(cfg, i, 0.0);
            sol.p[i] = 0.0;
            sol.tau[i] = sp.tau;
            sol.beta[i] = sp.beta;
            ps += ev.n_hat[i] * sol.tau[i];
            den_gamma += ev.n_hat[i] * sol.tau[i];
            continue;
        }
        sol.p[i] = ev.stages[i].p;
        sol.tau[i] = ev.stages[i].tau;
        sol.beta[i] = ev.stages[i].beta;
        ps += ev.n_hat[i] * sol.tau[i] * (1.0 - sol.p[i]);
        num_gamma += ev.n_hat[i] * sol.tau[i] * sol.p[i];
        den_gamma += ev.n_hat[i] * sol.tau[i];
    }
    sol.p_success = ps;
    sol.p_collision = 1.0 - sol.pe - ps;
    sol.gamma = den_gamma > 0 ? num_gamma / den_gamma : 0.0;
    sol.throughput = ps * timing.frame_d /
                     (ps * timing.t_success() +
                      sol.p_collision * timing.t_collision() +
                      sol.pe * timing.slot_sigma);
    sol.residual = std::fabs(ev.phi - ev.pe);
    return sol;
}

}  // namespace detail

/// Solves p_e = Phi(p_e) on [0, 1 - tau_max]. Phi is strictly decreasing
/// for configurations satisfying the uniqueness condition, which is
/// checked first; configurations that fail it must go through
/// scan_fixed_points instead.
inline EquilibriumSolution solve_equilibrium(const ProtocolConfig& cfg, double N,
                                             const TimingParams& timing = {},
                                             double tol = 1e-12,
                                             bool check_cond = true) {
    cfg.validate();
    if (N < 1) throw std::invalid_argument("solve_equilibrium: N must be >= 1");
    if (check_cond && cfg.stages() > 1 && !satisfies_cond(cfg))
        throw CondViolation(
            "configuration fails the tau-monotonicity condition; the fixed "
            "point may not be unique -- use scan_fixed_points");
    auto g = [&](double pe) { return phi(cfg, N, pe) - pe; };
    double hi = 1.0 - tau_max(cfg);
    double pe = find_root(g, 0.0, hi, 1e-16, tol);
    return detail::fill_solution(cfg, N, timing, evaluate_pe(cfg, N, pe));
}

/// All fixed points of Phi on [0, 1 - tau_max], located by bracketing
/// sign changes of Phi(pe) - pe on a uniform grid and refining each one.
inline std::vector<std::pair<double, double>> scan_fixed_points(
    const ProtocolConfig& cfg, double N, int grid = 1000, double tol = 1e-12) {
    cfg.validate();
    if (grid < 100) throw std::invalid_argument("scan_fixed_points: grid < 100");
    auto g = [&](double pe) { return phi(cfg, N, pe) - pe; };
    const double hi = 1.0 - tau_max(cfg);
    std::vector<std::pair<double, double>> roots;
    double prev_x = 0.0;
    double prev_g = g(prev_x);
    for (int i = 1; i < grid; ++i) {
        double x = hi * i / (grid - 1);
        double gx = g(x);
        if (prev_g == 0.0) {
            roots.emplace_back(prev_x, 0.0);
        } else if ((prev_g > 0.0) != (gx > 0.0)) {
            double r = find_root(g, prev_x, x, 1e-16, tol);
            roots.emplace_back(r, std::fabs(g(r)));
        }
        prev_x = x;
        prev_g = gx;
    }
    if (prev_g == 0.0) roots.emplace_back(prev_x, 0.0);
    // a root landing exactly on a grid point is reported by both adjacent
    // intervals; keep one copy
    std::vector<std::pair<double, double>> out;
    for (const auto& r : roots) {
        if (!out.empty() && r.first - out.back().first <= hi * 1e-9) {
            if (r.second < out.back().second) out.back() = r;
        } else {
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace plcmac

#endif
