#ifndef PLCMAC_CONFIG_HPP
#define PLCMAC_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace plcmac {

/// Initial deferral-counter value for a backoff stage; nullopt means the
/// deferral never expires (802.11-style stage that only advances on
/// collisions).
using Deferral = std::optional<int>;

inline constexpr Deferral kInfiniteDeferral = std::nullopt;

struct ConfigError : std::invalid_argument {
    ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Per-stage contention windows CW_i and initial deferral values d_i.
struct ProtocolConfig {
    std::vector<int> cw;
    std::vector<Deferral> dc;

    int stages() const { return static_cast<int>(cw.size()); }

    void validate() const {
        if (cw.empty()) throw ConfigError("config needs at least one stage");
        if (cw.size() != dc.size())
            throw ConfigError("cw and dc must have the same length");
        for (std::size_t i = 0; i < cw.size(); ++i) {
            if (cw[i] < 2)
                throw ConfigError("cw[" + std::to_string(i) + "] must be >= 2");
            if (dc[i] && *dc[i] < 0)
                throw ConfigError("dc[" + std::to_string(i) + "] must be >= 0");
        }
    }
};

/// Slot/frame durations in microseconds plus the derived busy-period costs.
struct TimingParams {
    double slot_sigma = 35.84;
    double prs = 35.84;
    double cifs = 100.00;
    double rifs = 140.00;
    double preamble = 110.48;
    double ack = 110.48;
    double frame_d = 2500.00;
    double eifs = 2920.64;

    double t_success() const {
        return 2 * prs + preamble + frame_d + rifs + ack + cifs;
    }
    double t_collision() const { return eifs; }
};

enum class Preset { CA0_CA1, CA2_CA3, COUNTEREXAMPLE_3EQ };

inline ProtocolConfig builtin_config(Preset name) {
    ProtocolConfig cfg;
    switch (name) {
        case Preset::CA0_CA1:
            cfg.cw = {8, 16, 32, 64};
            cfg.dc = {0, 1, 3, 15};
            break;
        case Preset::CA2_CA3:
            cfg.cw = {8, 16, 16, 32};
            cfg.dc = {0, 1, 3, 15};
            break;
        case Preset::COUNTEREXAMPLE_3EQ:
            // 60 stages: 4 x {32,3}, 50 x {4,inf}, 6 x {64,3}
            for (int i = 0; i < 4; ++i) {
                cfg.cw.push_back(32);
                cfg.dc.push_back(3);
            }
            for (int i = 4; i < 54; ++i) {
                cfg.cw.push_back(4);
                cfg.dc.push_back(kInfiniteDeferral);
            }
            for (int i = 54; i < 60; ++i) {
                cfg.cw.push_back(64);
                cfg.dc.push_back(3);
            }
            break;
    }
    return cfg;
}

/// CW_i = 2^i * cw_min, d_i = floor(f^i * (d0+1)) - 1.
inline ProtocolConfig family_config(int cw_min, int d0, double f, int m) {
    if (cw_min < 2) throw ConfigError("cw_min must be >= 2");
    if (d0 < 0) throw ConfigError("d0 must be >= 0");
    if (!(f > 0)) throw ConfigError("f must be positive");
    if (m < 1) throw ConfigError("m must be >= 1");
    ProtocolConfig cfg;
    for (int i = 0; i < m; ++i) {
        double w = std::ldexp(static_cast<double>(cw_min), i);
        if (w > static_cast<double>(std::numeric_limits<int>::max()))
            throw ConfigError("cw overflows at stage " + std::to_string(i));
        cfg.cw.push_back(static_cast<int>(w));
        double d = std::floor(std::pow(f, i) * (d0 + 1)) - 1.0;
        if (d > static_cast<double>(std::numeric_limits<int>::max()))
            throw ConfigError("dc overflows at stage " + std::to_string(i));
        cfg.dc.push_back(static_cast<int>(d));
    }
    return cfg;
}

/// CW_i = floor(alpha^i * 8), d_i = ceil(alpha^i - 1); stage 0 uses
/// exponent 0, so the first stage is always CW=8, d=0.
inline ProtocolConfig alpha_config(double alpha, int m) {
    if (!(alpha > 0)) throw ConfigError("alpha must be positive");
    if (m < 1) throw ConfigError("m must be >= 1");
    ProtocolConfig cfg;
    for (int i = 0; i < m; ++i) {
        double a = std::pow(alpha, i);
        int w = static_cast<int>(std::floor(a * 8.0));
        if (w < 2)
            throw ConfigError("alpha too small: cw[" + std::to_string(i) +
                              "] < 2");
        cfg.cw.push_back(w);
        cfg.dc.push_back(static_cast<int>(std::ceil(a - 1.0)));
    }
    return cfg;
}

enum class Verdict { Pass, Fail, Undecided };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        default: return "UNDECIDED";
    }
}

/// Sufficient per-transition condition on (CW_i, d_i) for a decreasing
/// transmission-probability sequence: CW_{i+1} > CW_i when d_{i+1} = d_i,
/// otherwise CW_{i+1} > 2 CW_i - d_i - 1. Transitions where exactly one
/// deferral is infinite are reported Undecided; the numeric check decides.
inline std::vector<Verdict> check_theorem3(const ProtocolConfig& cfg) {
    cfg.validate();
    std::vector<Verdict> out;
    for (int i = 0; i + 1 < cfg.stages(); ++i) {
        const Deferral& di = cfg.dc[i];
        const Deferral& dn = cfg.dc[i + 1];
        if (di.has_value() != dn.has_value()) {
            out.push_back(Verdict::Undecided);
            continue;
        }
        bool equal_d = (!di && !dn) || (di && dn && *di == *dn);
        bool ok;
        if (equal_d) {
            ok = cfg.cw[i + 1] > cfg.cw[i];
        } else {
            ok = cfg.cw[i + 1] > 2 * cfg.cw[i] - *di - 1;
        }
        out.push_back(ok ? Verdict::Pass : Verdict::Fail);
    }
    return out;
}

}  // namespace plcmac

#endif
