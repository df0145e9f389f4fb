#ifndef PLCMAC_DYNAMICS_HPP
#define PLCMAC_DYNAMICS_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <vector>

#include "plcmac/config.hpp"
#include "plcmac/csv.hpp"
#include "plcmac/equilibrium.hpp"
#include "plcmac/rng.hpp"
#include "plcmac/roots.hpp"
#include "plcmac/stage_math.hpp"

namespace plcmac {

/// Expected station counts per backoff stage.
struct StateVector {
    std::vector<double> n;
    std::int64_t time_slot = 0;

    double total() const { return std::accumulate(n.begin(), n.end(), 0.0); }
};

struct PeState {
    double pe = 0;
    std::vector<StageAtPe> stages;
};

/// Self-consistent idle probability at an arbitrary (not necessarily
/// equilibrium) stage distribution n: solves
/// prod_k (1 - tau_k(pe))^{n_k} = pe, which has a unique root on [0,1]
/// because each tau_k is increasing in pe.
inline PeState solve_pe_given_n(const ProtocolConfig& cfg,
                                const std::vector<double>& n,
                                double tol = 1e-12) {
    const int m = cfg.stages();
    if (static_cast<int>(n.size()) != m)
        throw std::invalid_argument("solve_pe_given_n: wrong state size");
    auto psi = [&](double pe) {
        double lg = 0.0;
        for (int i = 0; i < m; ++i)
            if (n[i] != 0.0)
                lg += n[i] * std::log1p(-stage_at_pe(cfg, i, pe).tau);
        return std::exp(lg) - pe;
    };
    PeState st;
    st.pe = find_root(psi, 0.0, 1.0, 1e-16, tol);
    st.stages.reserve(m);
    for (int i = 0; i < m; ++i) st.stages.push_back(stage_at_pe(cfg, i, st.pe));
    return st;
}

/// One-slot expected change of the stage distribution (the drift F).
inline std::vector<double> drift_at(const std::vector<double>& n,
                                    const PeState& st) {
    const int m = static_cast<int>(n.size());
    std::vector<double> f(m, 0.0);
    if (m == 1) return f;
    const auto& s = st.stages;
    for (int k = 1; k < m; ++k)
        f[0] += n[k] * s[k].tau * (1.0 - s[k].p);
    f[0] -= n[0] * s[0].tau * s[0].p + n[0] * s[0].beta;
    for (int i = 1; i < m - 1; ++i)
        f[i] = n[i - 1] * (s[i - 1].tau * s[i - 1].p + s[i - 1].beta) -
               n[i] * (s[i].tau + s[i].beta);
    f[m - 1] = n[m - 2] * (s[m - 2].tau * s[m - 2].p + s[m - 2].beta) -
               n[m - 1] * s[m - 1].tau * (1.0 - s[m - 1].p);
    return f;
}

inline std::vector<double> drift(const ProtocolConfig& cfg,
                                 const std::vector<double>& n) {
    return drift_at(n, solve_pe_given_n(cfg, n));
}

struct TrajectoryPoint {
    std::int64_t step = 0;
    std::vector<double> n;
    double pe = 0;
    double residual = 0;  // max |F_i|
};

struct TransientReport {
    bool converged = false;
    std::int64_t steps = 0;
    std::vector<double> final_n;
    double final_pe = 0;
    double residual = 0;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<double> pe_tail;  // recent pe values, oscillation diagnosis
};

/// Iterates the discrete map n(t+1) = n(t) + F(n(t)) until max|F| < eps
/// or max_steps. Non-convergence is reported, not thrown: configurations
/// with multiple equilibria legitimately cycle.
inline TransientReport iterate_transient(const ProtocolConfig& cfg,
                                         StateVector n0,
                                         std::int64_t max_steps = 100000,
                                         double eps = 1e-8) {
    TransientReport rep;
    std::vector<double> n = n0.n;
    const std::int64_t decim =
        std::max<std::int64_t>(1, (max_steps + 4999) / 5000);
    const std::size_t tail_cap = 256;
    for (std::int64_t step = 0;; ++step) {
        PeState st = solve_pe_given_n(cfg, n);
        std::vector<double> f = drift_at(n, st);
        double res = 0.0;
        for (double v : f) res = std::fmax(res, std::fabs(v));
        if (step % decim == 0 || res < eps || step == max_steps)
            rep.trajectory.push_back({step, n, st.pe, res});
        rep.pe_tail.push_back(st.pe);
        if (rep.pe_tail.size() > tail_cap)
            rep.pe_tail.erase(rep.pe_tail.begin());
        if (res < eps) {
            rep.converged = true;
            rep.steps = step;
            rep.final_n = n;
            rep.final_pe = st.pe;
            rep.residual = res;
            return rep;
        }
        if (step == max_steps) {
            rep.steps = step;
            rep.final_n = n;
            rep.final_pe = st.pe;
            rep.residual = res;
            return rep;
        }
        for (std::size_t i = 0; i < n.size(); ++i) n[i] += f[i];
    }
}

/// CSV export: step,n_0,...,n_{m-1},pe,residual
inline void write_trajectory_csv(std::ostream& os, const TransientReport& rep,
                                 int m) {
    os << "step";
    for (int i = 0; i < m; ++i) os << ",n_" << i;
    os << ",pe,residual\n";
    for (const auto& tp : rep.trajectory) {
        os << tp.step;
        for (double v : tp.n) os << ',' << csv_num(v);
        os << ',' << csv_num(tp.pe) << ',' << csv_num(tp.residual) << '\n';
    }
}

/// Fractions of stations per stage in the large-N limit.
struct MeanFieldState {
    std::vector<double> y;
    double rho = 0;
    double time = 0;
};

/// Solves rho = 1 - exp(-sum_k y_k tau_k(rho)); the right-hand side is
/// decreasing in rho, so the root on [0,1] is unique.
inline double mean_field_rho(const ProtocolConfig& cfg,
                             const std::vector<double>& y,
                             double tol = 1e-12) {
    auto g = [&](double rho) {
        double s = 0.0;
        for (int i = 0; i < cfg.stages(); ++i)
            if (y[i] != 0.0) s += y[i] * stage_point(cfg, i, rho).tau;
        return 1.0 - std::exp(-s) - rho;
    };
    if (g(0.0) <= 0.0) return 0.0;
    return find_root(g, 0.0, 1.0, 1e-16, tol);
}

namespace detail {

inline std::vector<double> ode_rhs(const ProtocolConfig& cfg,
                                   const std::vector<double>& y) {
    const int m = cfg.stages();
    double rho = mean_field_rho(cfg, y);
    std::vector<double> tau(m), beta(m);
    for (int i = 0; i < m; ++i) {
        StagePoint sp = stage_point(cfg, i, rho);
        tau[i] = sp.tau;
        beta[i] = sp.beta;
    }
    std::vector<double> d(m, 0.0);
    if (m == 1) return d;
    for (int k = 1; k < m; ++k) d[0] += y[k] * tau[k] * (1.0 - rho);
    d[0] -= y[0] * (tau[0] * rho + beta[0]);
    for (int i = 1; i < m - 1; ++i)
        d[i] = y[i - 1] * (tau[i - 1] * rho + beta[i - 1]) -
               y[i] * (tau[i] + beta[i]);
    // last stage fed by stage m-2, drained by successful transmissions
    d[m - 1] = y[m - 2] * (tau[m - 2] * rho + beta[m - 2]) -
               y[m - 1] * tau[m - 1] * (1.0 - rho);
    return d;
}

}  // namespace detail

struct OdeTrajectory {
    std::vector<MeanFieldState> points;
    double dt_used = 0;
};

/// Classic fixed-step RK4 on the mean-field system, with rho re-solved at
/// every stage evaluation. If a step drives some fraction below -1e-9 the
/// step size is halved (at most 10 times over the whole run).
inline OdeTrajectory integrate_ode(const ProtocolConfig& cfg,
                                   std::vector<double> y, double t_end,
                                   double dt) {
    const int m = cfg.stages();
    if (static_cast<int>(y.size()) != m)
        throw std::invalid_argument("integrate_ode: wrong state size");
    if (!(dt > 0)) throw std::invalid_argument("integrate_ode: dt must be > 0");
    OdeTrajectory traj;
    int halvings = 0;
    double t = 0.0;
    auto rho0 = mean_field_rho(cfg, y);
    traj.points.push_back({y, rho0, t});
    const std::int64_t est_steps =
        static_cast<std::int64_t>(std::ceil(t_end / dt));
    const std::int64_t decim = std::max<std::int64_t>(1, est_steps / 5000);
    std::int64_t step_index = 0;
    while (t < t_end - 1e-12) {
        double h = std::min(dt, t_end - t);
        auto k1 = detail::ode_rhs(cfg, y);
        std::vector<double> tmp(m);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        auto k2 = detail::ode_rhs(cfg, tmp);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        auto k3 = detail::ode_rhs(cfg, tmp);
        for (int i = 0; i < m; ++i) tmp[i] = y[i] + h * k3[i];
        auto k4 = detail::ode_rhs(cfg, tmp);
        std::vector<double> ynew(m);
        bool ok = true;
        for (int i = 0; i < m; ++i) {
            ynew[i] =
                y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            if (ynew[i] < -1e-9) ok = false;
        }
        if (!ok) {
            if (++halvings > 10)
                throw ConvergenceError("integrate_ode: step kept failing");
            dt *= 0.5;
            continue;
        }
        y = std::move(ynew);
        t += h;
        ++step_index;
        if (step_index % decim == 0 || t >= t_end - 1e-12)
            traj.points.push_back({y, mean_field_rho(cfg, y), t});
    }
    traj.dt_used = dt;
    return traj;
}

struct StabilitySummary {
    int trials = 0;
    int converged = 0;
    std::int64_t max_steps_seen = 0;
    std::vector<int> failed_trials;
};

/// Uniform random composition of total into m non-negative parts
/// (stars and bars: m-1 distinct cuts in {1..total+m-1}).
inline std::vector<double> random_simplex_state(int m, int total, Rng& rng) {
    if (m == 1) return {static_cast<double>(total)};
    std::vector<int> cuts;
    while (static_cast<int>(cuts.size()) < m - 1) {
        int c = 1 + static_cast<int>(rng.below(total + m - 1));
        bool dup = false;
        for (int v : cuts) dup |= (v == c);
        if (!dup) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> n(m);
    int prev = 0;
    for (int i = 0; i < m - 1; ++i) {
        n[i] = cuts[i] - prev - 1;
        prev = cuts[i];
    }
    n[m - 1] = total + m - 1 - prev;
    return n;
}

/// Repeats iterate_transient from random initial points for each
/// configuration and aggregates convergence statistics.
inline std::vector<StabilitySummary> stability_probe(
    const std::vector<ProtocolConfig>& configs, int trials_per_config,
    double eps, std::uint64_t seed, int n_stations = 20,
    std::int64_t max_steps = 100000) {
    std::vector<StabilitySummary> out;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        StabilitySummary s;
        s.trials = trials_per_config;
        for (int trial = 0; trial < trials_per_config; ++trial) {
            Rng rng(derive_seed(seed, c * 1000003ULL + trial));
            StateVector n0;
            n0.n = random_simplex_state(configs[c].stages(), n_stations, rng);
            TransientReport rep =
                iterate_transient(configs[c], n0, max_steps, eps);
            if (rep.converged) {
                ++s.converged;
                s.max_steps_seen = std::max(s.max_steps_seen, rep.steps);
            } else {
                s.failed_trials.push_back(trial);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace plcmac

#endif
