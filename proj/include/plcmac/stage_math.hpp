#ifndef PLCMAC_STAGE_MATH_HPP
#define PLCMAC_STAGE_MATH_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "plcmac/config.hpp"
#include "plcmac/rng.hpp"

namespace plcmac {

/// Renewal quantities of one backoff stage evaluated at a busy
/// probability p: the deferral-jump CDF x_k, expected slots bc, expected
/// attempts t, per-slot transmission probability tau = t/bc, per-slot
/// deferral-jump probability beta = (1-t)/bc, and B = 1/tau - 1.
struct StagePoint {
    int stage = 0;
    double p = 0.0;
    std::vector<double> x;  // x_k for k = d+1 .. cw-1; empty if no jump possible
    double bc = 0.0;
    double t = 0.0;
    double tau = 0.0;
    double beta = 0.0;
    double big_b = 0.0;
};

namespace detail {

/// True when the stage can never jump via the deferral counter: infinite
/// d, or a finite d no draw from {0..cw-1} can exhaust.
inline bool deferral_inactive(int cw, const Deferral& d) {
    return !d.has_value() || *d >= cw - 1;
}

}  // namespace detail

/// P(Bin(k, p) > d): probability that a station at a stage with deferral
/// value d jumps within k slots. Zero when k <= d or d is infinite.
inline double busy_jump_cdf(int cw, const Deferral& d, double p, int k) {
    if (k < 0 || k > cw - 1)
        throw std::invalid_argument("busy_jump_cdf: k out of [0, cw-1]");
    if (!d.has_value() || k <= *d) return 0.0;
    int di = *d;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    // forward recurrence over the binomial pmf, from j = d+1 up to k
    double coeff = 1.0;  // C(k, d+1)
    for (int j = 1; j <= di + 1; ++j)
        coeff *= static_cast<double>(k - j + 1) / j;
    double term =
        coeff * std::pow(p, di + 1) * std::pow(1.0 - p, k - di - 1);
    double sum = term;
    for (int j = di + 1; j < k; ++j) {
        term *= (static_cast<double>(k - j) / (j + 1)) * (p / (1.0 - p));
        sum += term;
    }
    return sum < 1.0 ? sum : 1.0;
}

/// Evaluates all renewal quantities of stage `stage` at busy probability p.
/// Runs in O(cw) via the increment recurrence
/// x_j - x_{j-1} = C(j-1, d) p^{d+1} (1-p)^{j-d-1}.
inline StagePoint stage_point(const ProtocolConfig& cfg, int stage, double p) {
    if (stage < 0 || stage >= cfg.stages())
        throw std::invalid_argument("stage_point: stage out of range");
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("stage_point: p out of [0,1]");
    const int cw = cfg.cw[stage];
    const Deferral& d = cfg.dc[stage];

    StagePoint sp;
    sp.stage = stage;
    sp.p = p;

    if (detail::deferral_inactive(cw, d)) {
        sp.bc = (cw + 1) / 2.0;
        sp.t = 1.0;
        sp.tau = 2.0 / (cw + 1);
        sp.beta = 0.0;
        sp.big_b = (cw - 1) / 2.0;
        return sp;
    }

    const int di = *d;
    sp.x.resize(cw - 1 - di);
    double inc = std::pow(p, di + 1);  // x_{d+1}
    double xk = inc;
    double sum_x = 0.0;   // sum of x_k
    double sum_cum = 0.0; // sum over k of (sum_{j<=k} x_j)
    double cum = 0.0;
    for (int k = di + 1; k <= cw - 1; ++k) {
        if (k > di + 1) {
            inc *= (1.0 - p) * static_cast<double>(k - 1) / (k - 1 - di);
            xk += inc;
            if (xk > 1.0) xk = 1.0;
        }
        sp.x[k - di - 1] = xk;
        sum_x += xk;
        cum += xk;
        sum_cum += cum;
    }

    sp.bc = (cw + 1) / 2.0 - sum_cum / cw;
    sp.t = 1.0 - sum_x / cw;
    sp.tau = sp.t / sp.bc;
    sp.beta = (1.0 - sp.t) / sp.bc;
    sp.big_b = 1.0 / sp.tau - 1.0;
    return sp;
}

/// Expected slots per stage visit, computed directly from the original
/// case-by-case sum (transmission at slot k+1 with probability 1-x_k,
/// deferral exit at slot j with probability x_j - x_{j-1}). Reference
/// route for testing the simplified form used by stage_point.
inline double bc_direct(const ProtocolConfig& cfg, int stage, double p) {
    const int cw = cfg.cw[stage];
    const Deferral& d = cfg.dc[stage];
    if (detail::deferral_inactive(cw, d)) return (cw + 1) / 2.0;
    const int di = *d;
    double total = 0.0;
    for (int k = di + 1; k <= cw - 1; ++k) {
        double xk = busy_jump_cdf(cw, d, p, k);
        double term = (k + 1) * (1.0 - xk);
        double prev = busy_jump_cdf(cw, d, p, di);  // = 0
        for (int j = di + 1; j <= k; ++j) {
            double xj = busy_jump_cdf(cw, d, p, j);
            term += j * (xj - prev);
            prev = xj;
        }
        total += term;
    }
    total /= cw;
    total += (di + 1) * (di + 2) / (2.0 * cw);
    return total;
}

struct StageOracleResult {
    double bc = 0, t = 0, tau = 0, beta = 0;
    double se_bc = 0, se_t = 0, se_tau = 0, se_beta = 0;
    std::int64_t replications = 0;
};

/// Monte-Carlo estimate of the stage renewal quantities by direct
/// simulation of single stage visits: draw BC uniformly, mark each of the
/// first BC slots busy with probability p, exit via deferral at the
/// (d+1)-th busy slot or via transmission at slot BC+1. Ratio-of-means
/// estimators with delta-method standard errors.
inline StageOracleResult stage_oracle(int cw, const Deferral& d, double p,
                                      std::int64_t replications,
                                      std::uint64_t seed) {
    if (replications < 10000)
        throw std::invalid_argument("stage_oracle: need >= 1e4 replications");
    Rng rng(seed);
    double sum_s = 0, sum_r = 0, sum_ss = 0, sum_rr = 0, sum_sr = 0;
    const bool inactive = detail::deferral_inactive(cw, d);
    for (std::int64_t rep = 0; rep < replications; ++rep) {
        int k = static_cast<int>(rng.below(static_cast<std::uint32_t>(cw)));
        int slots = k + 1;
        double reward = 1.0;
        if (!inactive && k > *d) {
            int busy = 0;
            for (int j = 1; j <= k; ++j) {
                if (rng.bernoulli(p)) {
                    if (++busy == *d + 1) {
                        slots = j;
                        reward = 0.0;
                        break;
                    }
                }
            }
        }
        sum_s += slots;
        sum_r += reward;
        sum_ss += static_cast<double>(slots) * slots;
        sum_rr += reward * reward;
        sum_sr += slots * reward;
    }
    const double n = static_cast<double>(replications);
    StageOracleResult res;
    res.replications = replications;
    res.bc = sum_s / n;
    res.t = sum_r / n;
    res.tau = res.t / res.bc;
    res.beta = (1.0 - res.t) / res.bc;
    double var_s = (sum_ss - n * res.bc * res.bc) / (n - 1);
    double var_r = (sum_rr - n * res.t * res.t) / (n - 1);
    double cov_sr = (sum_sr - n * res.bc * res.t) / (n - 1);
    res.se_bc = std::sqrt(var_s / n);
    res.se_t = std::sqrt(var_r / n);
    // delta method for the ratios r/s and (1-r)/s
    double vt = var_r - 2.0 * res.tau * cov_sr + res.tau * res.tau * var_s;
    double vb = var_r + 2.0 * res.beta * cov_sr + res.beta * res.beta * var_s;
    res.se_tau = std::sqrt(std::fmax(vt, 0.0) / n) / res.bc;
    res.se_beta = std::sqrt(std::fmax(vb, 0.0) / n) / res.bc;
    return res;
}

/// Numeric check of the uniqueness hypothesis: tau_i(p) > tau_{i+1}(p) at
/// every point of a uniform closed grid over p in [0,1].
inline std::vector<Verdict> check_cond_numeric(const ProtocolConfig& cfg,
                                               int grid = 101) {
    cfg.validate();
    if (grid < 2) throw std::invalid_argument("check_cond_numeric: grid < 2");
    std::vector<Verdict> out;
    for (int i = 0; i + 1 < cfg.stages(); ++i) {
        bool ok = true;
        for (int g = 0; g < grid; ++g) {
            double p = static_cast<double>(g) / (grid - 1);
            if (!(stage_point(cfg, i, p).tau > stage_point(cfg, i + 1, p).tau)) {
                ok = false;
                break;
            }
        }
        out.push_back(ok ? Verdict::Pass : Verdict::Fail);
    }
    return out;
}

inline bool satisfies_cond(const ProtocolConfig& cfg, int grid = 101) {
    for (Verdict v : check_cond_numeric(cfg, grid))
        if (v != Verdict::Pass) return false;
    return true;
}

}  // namespace plcmac

#endif
