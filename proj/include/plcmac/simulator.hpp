#ifndef PLCMAC_SIMULATOR_HPP
#define PLCMAC_SIMULATOR_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "plcmac/config.hpp"
#include "plcmac/csv.hpp"
#include "plcmac/rng.hpp"

namespace plcmac {

struct StationState {
    int stage = 0;
    int bc = 0;
    Deferral dc;
};

struct StationStats {
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    std::int64_t collisions = 0;
};

struct SimulationReport {
    std::int64_t idle_slots = 0;
    std::int64_t success_slots = 0;
    std::int64_t collision_slots = 0;
    std::int64_t total_slots = 0;
    std::vector<StationStats> per_station;
    double throughput = 0;
    double gamma_est = 0;          // collided transmissions / transmissions
    std::vector<double> pe_trace;  // idle fraction per window
    int pe_window = 500;
    std::vector<int> success_ids;
    std::map<int, std::int64_t> run_lengths;  // run length -> count
    std::vector<double> stage_occupancy;      // time-averaged fraction per stage
    std::int64_t deferral_jumps = 0;
    std::uint64_t seed = 0;
    int n_stations = 0;
    // per-slot mean station count per stage for the first
    // stage_trace_slots slots, row-major [slot][stage]
    std::vector<std::vector<double>> stage_trace;
};

/// Slot-level simulation of N saturated stations.
///
/// Each contention slot: stations with BC = 0 transmit. No transmitter ->
/// idle slot, everyone decrements BC. One transmitter -> success, it
/// re-enters stage 0. Two or more -> collision, each advances a stage
/// (capped at m-1). On every busy slot, each non-transmitting station
/// with DC = 0 jumps a stage without transmitting (full re-entry: BC
/// redrawn, DC reset); otherwise it decrements DC and BC. Real-time costs
/// of busy slots enter only through the timing weights.
inline SimulationReport run_simulation(const ProtocolConfig& cfg, int N,
                                       const TimingParams& timing,
                                       std::int64_t total_slots,
                                       std::uint64_t seed, int pe_window = 500,
                                       std::int64_t stage_trace_slots = 0) {
    cfg.validate();
    if (N < 1) throw std::invalid_argument("run_simulation: N must be >= 1");
    if (total_slots < 1)
        throw std::invalid_argument("run_simulation: total_slots must be >= 1");
    const int m = cfg.stages();
    Rng rng(seed);

    auto enter_stage = [&](StationState& st, int stage) {
        st.stage = stage;
        st.bc = static_cast<int>(
            rng.below(static_cast<std::uint32_t>(cfg.cw[stage])));
        st.dc = cfg.dc[stage];
    };

    std::vector<StationState> stations(N);
    for (auto& st : stations) enter_stage(st, 0);

    SimulationReport rep;
    rep.seed = seed;
    rep.n_stations = N;
    rep.pe_window = pe_window;
    rep.per_station.resize(N);
    rep.total_slots = total_slots;
    std::vector<double> occupancy_sum(m, 0.0);
    if (stage_trace_slots > 0)
        rep.stage_trace.assign(stage_trace_slots, std::vector<double>(m, 0.0));

    std::int64_t window_idle = 0;
    std::int64_t window_fill = 0;
    std::int64_t total_tx = 0;
    std::int64_t collided_tx = 0;
    std::vector<int> transmitters;
    transmitters.reserve(N);

    for (std::int64_t slot = 0; slot < total_slots; ++slot) {
        for (int i = 0; i < N; ++i) occupancy_sum[stations[i].stage] += 1.0;
        if (slot < stage_trace_slots)
            for (int i = 0; i < N; ++i)
                rep.stage_trace[slot][stations[i].stage] += 1.0;

        transmitters.clear();
        for (int i = 0; i < N; ++i)
            if (stations[i].bc == 0) transmitters.push_back(i);

        if (transmitters.empty()) {
            ++rep.idle_slots;
            ++window_idle;
            for (auto& st : stations) --st.bc;
        } else {
            const bool collision = transmitters.size() >= 2;
            total_tx += static_cast<std::int64_t>(transmitters.size());
            if (collision) {
                ++rep.collision_slots;
                collided_tx += static_cast<std::int64_t>(transmitters.size());
                for (int i : transmitters) {
                    ++rep.per_station[i].attempts;
                    ++rep.per_station[i].collisions;
                    enter_stage(stations[i],
                                std::min(stations[i].stage + 1, m - 1));
                }
            } else {
                ++rep.success_slots;
                int winner = transmitters.front();
                ++rep.per_station[winner].attempts;
                ++rep.per_station[winner].successes;
                rep.success_ids.push_back(winner);
                enter_stage(stations[winner], 0);
            }
            // busy-slot bookkeeping for the non-transmitters
            std::size_t t = 0;
            for (int i = 0; i < N; ++i) {
                if (t < transmitters.size() && transmitters[t] == i) {
                    ++t;
                    continue;
                }
                StationState& st = stations[i];
                if (st.dc && *st.dc == 0) {
                    ++rep.deferral_jumps;
                    enter_stage(st, std::min(st.stage + 1, m - 1));
                } else {
                    if (st.dc) --*st.dc;
                    if (st.bc > 0) --st.bc;
                }
            }
        }

        if (++window_fill == pe_window) {
            rep.pe_trace.push_back(static_cast<double>(window_idle) /
                                   pe_window);
            window_idle = 0;
            window_fill = 0;
        }
    }

    rep.stage_occupancy.resize(m);
    for (int i = 0; i < m; ++i)
        rep.stage_occupancy[i] =
            occupancy_sum[i] / (static_cast<double>(total_slots) * N);

    rep.throughput =
        rep.success_slots * timing.frame_d /
        (rep.idle_slots * timing.slot_sigma +
         rep.success_slots * timing.t_success() +
         rep.collision_slots * timing.t_collision());
    rep.gamma_est =
        total_tx > 0 ? static_cast<double>(collided_tx) / total_tx : 0.0;

    // consecutive-success run lengths
    int run = 0;
    int prev = -1;
    for (int id : rep.success_ids) {
        if (id == prev) {
            ++run;
        } else {
            if (run > 0) ++rep.run_lengths[run];
            run = 1;
            prev = id;
        }
    }
    if (run > 0) ++rep.run_lengths[run];
    return rep;
}

struct AcfResult {
    std::vector<double> values;  // lags 1..max_lag
    bool zero_variance = false;
};

/// Sample autocorrelation (biased estimator) of the success-identity
/// sequence. A constant sequence has zero variance; by convention the
/// ACF is reported as all zeros with the flag set.
inline AcfResult acf(const std::vector<int>& ids, int max_lag) {
    if (max_lag < 1 || static_cast<int>(ids.size()) <= max_lag)
        throw std::invalid_argument("acf: need length > max_lag >= 1");
    const std::size_t n = ids.size();
    double mean = 0.0;
    for (int v : ids) mean += v + 1;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int v : ids) {
        double d = (v + 1) - mean;
        var += d * d;
    }
    AcfResult res;
    if (var == 0.0) {
        res.zero_variance = true;
        res.values.assign(max_lag, 0.0);
        return res;
    }
    for (int lag = 1; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            s += ((ids[i] + 1) - mean) * ((ids[i + lag] + 1) - mean);
        res.values.push_back(s / var);
    }
    return res;
}

struct FairnessSummary {
    double mean_run_length = 0;
    int max_run_length = 0;
    std::vector<double> per_station_mean_run;
    std::vector<int> per_station_max_run;
    std::vector<double> jain_windows;  // Jain index per 50-success window
    double jain_mean = 1.0;
};

/// Run-length statistics and the Jain fairness index over non-overlapping
/// windows of 50 successes.
inline FairnessSummary fairness_summary(const std::vector<int>& ids,
                                        int n_stations = 0,
                                        int window = 50) {
    if (ids.empty())
        throw std::invalid_argument("fairness_summary: empty sequence");
    if (n_stations <= 0)
        for (int id : ids) n_stations = std::max(n_stations, id + 1);
    FairnessSummary fs;
    fs.per_station_mean_run.assign(n_stations, 0.0);
    fs.per_station_max_run.assign(n_stations, 0);
    std::vector<std::int64_t> run_count(n_stations, 0);
    std::vector<std::int64_t> run_total(n_stations, 0);
    int run = 0, prev = -1;
    auto close_run = [&] {
        if (run > 0) {
            ++run_count[prev];
            run_total[prev] += run;
            fs.per_station_max_run[prev] =
                std::max(fs.per_station_max_run[prev], run);
            fs.max_run_length = std::max(fs.max_run_length, run);
        }
    };
    for (int id : ids) {
        if (id == prev) {
            ++run;
        } else {
            close_run();
            run = 1;
            prev = id;
        }
    }
    close_run();
    std::int64_t nruns = 0;
    for (int s = 0; s < n_stations; ++s) {
        nruns += run_count[s];
        if (run_count[s] > 0)
            fs.per_station_mean_run[s] =
                static_cast<double>(run_total[s]) / run_count[s];
    }
    fs.mean_run_length = static_cast<double>(ids.size()) / nruns;

    for (std::size_t w = 0; w + window <= ids.size(); w += window) {
        std::vector<int> counts(n_stations, 0);
        for (int i = 0; i < window; ++i) ++counts[ids[w + i]];
        double s1 = 0, s2 = 0;
        for (int c : counts) {
            s1 += c;
            s2 += static_cast<double>(c) * c;
        }
        fs.jain_windows.push_back(s1 * s1 / (n_stations * s2));
    }
    if (!fs.jain_windows.empty()) {
        double s = 0;
        for (double j : fs.jain_windows) s += j;
        fs.jain_mean = s / fs.jain_windows.size();
    }
    return fs;
}

inline void write_summary_csv(std::ostream& os, const SimulationReport& rep) {
    os << "N,seed,slots,throughput,gamma,idle_slots,success_slots,"
          "collision_slots\n";
    os << rep.n_stations << ',' << rep.seed << ',' << rep.total_slots << ','
       << csv_num(rep.throughput) << ',' << csv_num(rep.gamma_est) << ','
       << rep.idle_slots << ',' << rep.success_slots << ','
       << rep.collision_slots << '\n';
}

inline void write_pe_trace_csv(std::ostream& os, const SimulationReport& rep) {
    os << "window_index,pe\n";
    for (std::size_t i = 0; i < rep.pe_trace.size(); ++i)
        os << i << ',' << csv_num(rep.pe_trace[i]) << '\n';
}

inline void write_success_ids_csv(std::ostream& os,
                                  const SimulationReport& rep) {
    os << "index,station\n";
    for (std::size_t i = 0; i < rep.success_ids.size(); ++i)
        os << i << ',' << rep.success_ids[i] << '\n';
}

}  // namespace plcmac

#endif
