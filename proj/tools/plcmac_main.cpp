// Command-line front end: equilibrium solving, fixed-point scans,
// transient iteration, mean-field ODE runs, slot-level simulation and
// model comparison, with CSV (and optional JSON) outputs.
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plcmac/config_io.hpp"
#include "plcmac/csv.hpp"
#include "plcmac/plcmac.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plcmac;

namespace {

struct CommonOpts {
    std::string preset;
    std::string config_path;
    std::string n_spec = "1";
    std::string out_dir;
    double tol = 1e-12;
    bool emit_json = false;
};

ProtocolConfig resolve_config(const CommonOpts& opts, TimingParams& timing) {
    if (!opts.config_path.empty()) return load_config_file(opts.config_path, &timing);
    std::string p = opts.preset;
    for (char& c : p) c = static_cast<char>(std::tolower(c));
    if (p == "ca1" || p == "ca0ca1" || p == "ca0_ca1")
        return builtin_config(Preset::CA0_CA1);
    if (p == "ca3" || p == "ca2ca3" || p == "ca2_ca3")
        return builtin_config(Preset::CA2_CA3);
    if (p == "counterexample" || p == "counterexample_3eq")
        return builtin_config(Preset::COUNTEREXAMPLE_3EQ);
    throw ConfigError("unknown preset: " + opts.preset +
                      " (expected ca1, ca3, or counterexample)");
}

// "5", "1..10", or "2,5,10"
std::vector<long long> parse_range_spec(const std::string& spec) {
    std::vector<long long> out;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        std::string tok = spec.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t dots = tok.find("..");
        if (dots != std::string::npos) {
            long long lo = std::stoll(tok.substr(0, dots));
            long long hi = std::stoll(tok.substr(dots + 2));
            for (long long v = lo; v <= hi; ++v) out.push_back(v);
        } else if (!tok.empty()) {
            out.push_back(std::stoll(tok));
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty range spec: " + spec);
    return out;
}

fs::path output_dir(const CommonOpts& opts) {
    std::string dir = opts.out_dir;
    if (dir.empty()) {
        if (const char* env = std::getenv("PLCMAC_DEFAULT_OUT")) dir = env;
        else dir = ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

/// Runs fn(i) for i in [0, count) across at most `jobs` threads; results
/// land in caller-owned slots, so aggregation is order-independent.
template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    unsigned nthreads = std::min<std::size_t>(jobs, count);
    for (unsigned t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count;
                 i = next.fetch_add(1))
                fn(i);
        });
    for (auto& th : pool) th.join();
}

int cmd_check(const CommonOpts& opts) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto t3 = check_theorem3(cfg);
    auto cn = check_cond_numeric(cfg);
    for (std::size_t i = 0; i < t3.size(); ++i)
        std::printf("transition %zu->%zu: theorem3=%s numeric=%s\n", i, i + 1,
                    to_string(t3[i]), to_string(cn[i]));
    bool all = satisfies_cond(cfg);
    std::printf("uniqueness condition: %s\n", all ? "PASS" : "FAIL");
    if (opts.emit_json) {
        json j;
        for (std::size_t i = 0; i < t3.size(); ++i)
            j["transitions"].push_back({{"from", i},
                                        {"to", i + 1},
                                        {"theorem3", to_string(t3[i])},
                                        {"numeric", to_string(cn[i])}});
        j["cond"] = all;
        write_file(output_dir(opts) / "check.json", j.dump(2) + "\n");
    }
    return 0;
}

int cmd_solve(const CommonOpts& opts) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto ns = parse_range_spec(opts.n_spec);
    std::string csv = "N,pe,S,gamma,p_s,p_c";
    for (int i = 0; i < cfg.stages(); ++i) csv += ",n_" + std::to_string(i);
    csv += "\n";
    json jout = json::array();
    for (long long N : ns) {
        EquilibriumSolution sol =
            solve_equilibrium(cfg, static_cast<double>(N), timing, opts.tol);
        csv += std::to_string(N) + ',' + csv_num(sol.pe) + ',' +
               csv_num(sol.throughput) + ',' + csv_num(sol.gamma) + ',' +
               csv_num(sol.p_success) + ',' + csv_num(sol.p_collision);
        for (double v : sol.n_hat) csv += ',' + csv_num(v);
        csv += '\n';
        jout.push_back({{"N", N},
                        {"pe", sol.pe},
                        {"S", sol.throughput},
                        {"gamma", sol.gamma},
                        {"p_s", sol.p_success},
                        {"p_c", sol.p_collision},
                        {"n_hat", sol.n_hat}});
    }
    fs::path dir = output_dir(opts);
    write_file(dir / "equilibrium.csv", csv);
    if (opts.emit_json)
        write_file(dir / "equilibrium.json", jout.dump(2) + "\n");
    std::printf("wrote %s (%zu rows)\n",
                (dir / "equilibrium.csv").string().c_str(), ns.size());
    return 0;
}

int cmd_scan(const CommonOpts& opts, int grid) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto ns = parse_range_spec(opts.n_spec);
    std::string csv = "N,root_index,pe,residual\n";
    json jout = json::array();
    for (long long N : ns) {
        auto roots =
            scan_fixed_points(cfg, static_cast<double>(N), grid, opts.tol);
        std::printf("N=%lld: %zu fixed point(s):", N, roots.size());
        for (std::size_t i = 0; i < roots.size(); ++i) {
            std::printf(" %.6g", roots[i].first);
            csv += std::to_string(N) + ',' + std::to_string(i) + ',' +
                   csv_num(roots[i].first) + ',' + csv_num(roots[i].second) +
                   '\n';
            jout.push_back({{"N", N},
                            {"pe", roots[i].first},
                            {"residual", roots[i].second}});
        }
        std::printf("\n");
    }
    fs::path dir = output_dir(opts);
    write_file(dir / "roots.csv", csv);
    if (opts.emit_json) write_file(dir / "roots.json", jout.dump(2) + "\n");
    return 0;
}

int cmd_transient(const CommonOpts& opts, const std::string& init,
                  long long max_steps, double eps) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto ns = parse_range_spec(opts.n_spec);
    long long N = ns.front();
    StateVector n0;
    if (init.empty()) {
        n0.n.assign(cfg.stages(), 0.0);
        n0.n[0] = static_cast<double>(N);
    } else {
        for (long long v : parse_range_spec(init))
            n0.n.push_back(static_cast<double>(v));
        if (static_cast<int>(n0.n.size()) != cfg.stages())
            throw ConfigError("--init length must equal the stage count");
    }
    TransientReport rep = iterate_transient(cfg, n0, max_steps, eps);
    fs::path dir = output_dir(opts);
    std::ostringstream os;
    write_trajectory_csv(os, rep, cfg.stages());
    write_file(dir / "trajectory.csv", os.str());
    std::printf("%s after %lld steps, residual %.3g, pe %.9g\n",
                rep.converged ? "converged" : "NOT converged",
                static_cast<long long>(rep.steps), rep.residual, rep.final_pe);
    if (opts.emit_json) {
        json j{{"converged", rep.converged},
               {"steps", rep.steps},
               {"residual", rep.residual},
               {"pe", rep.final_pe},
               {"final_n", rep.final_n},
               {"pe_tail", rep.pe_tail}};
        write_file(dir / "trajectory.json", j.dump(2) + "\n");
    }
    return 0;
}

int cmd_ode(const CommonOpts& opts, double t_end, double dt) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    std::vector<double> y0(cfg.stages(), 0.0);
    y0[0] = 1.0;
    OdeTrajectory traj = integrate_ode(cfg, y0, t_end, dt);
    std::string csv = "time";
    for (int i = 0; i < cfg.stages(); ++i) csv += ",y_" + std::to_string(i);
    csv += ",rho\n";
    for (const auto& pt : traj.points) {
        csv += csv_num(pt.time);
        for (double v : pt.y) csv += ',' + csv_num(v);
        csv += ',' + csv_num(pt.rho) + '\n';
    }
    fs::path dir = output_dir(opts);
    write_file(dir / "ode.csv", csv);
    const auto& last = traj.points.back();
    std::printf("integrated to t=%.6g, rho=%.9g\n", last.time, last.rho);
    return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& seeds_spec,
                 long long slots, int pe_window, unsigned jobs) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto ns = parse_range_spec(opts.n_spec);
    auto seeds = parse_range_spec(seeds_spec);
    fs::path dir = output_dir(opts);

    struct Task {
        long long N, seed;
    };
    std::vector<Task> tasks;
    for (long long N : ns)
        for (long long seed : seeds) tasks.push_back({N, seed});
    const bool many = tasks.size() > 1;
    std::mutex io_mutex;
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const Task& tk = tasks[i];
        SimulationReport rep = run_simulation(
            cfg, static_cast<int>(tk.N), timing, slots,
            static_cast<std::uint64_t>(tk.seed), pe_window);
        std::string prefix =
            many ? "n" + std::to_string(tk.N) + "_s" + std::to_string(tk.seed) +
                       "_"
                 : "";
        std::ostringstream s1, s2, s3;
        write_summary_csv(s1, rep);
        write_pe_trace_csv(s2, rep);
        write_success_ids_csv(s3, rep);
        std::lock_guard<std::mutex> lock(io_mutex);
        write_file(dir / (prefix + "summary.csv"), s1.str());
        write_file(dir / (prefix + "pe_trace.csv"), s2.str());
        write_file(dir / (prefix + "success_ids.csv"), s3.str());
        if (opts.emit_json) {
            json j{{"N", tk.N},
                   {"seed", tk.seed},
                   {"slots", rep.total_slots},
                   {"throughput", rep.throughput},
                   {"gamma", rep.gamma_est},
                   {"idle_slots", rep.idle_slots},
                   {"success_slots", rep.success_slots},
                   {"collision_slots", rep.collision_slots},
                   {"deferral_jumps", rep.deferral_jumps},
                   {"stage_occupancy", rep.stage_occupancy}};
            write_file(dir / (prefix + "summary.json"), j.dump(2) + "\n");
        }
        std::printf("N=%lld seed=%lld: S=%.6g gamma=%.6g\n", tk.N, tk.seed,
                    rep.throughput, rep.gamma_est);
    });
    return 0;
}

int cmd_compare(const CommonOpts& opts, const std::string& seeds_spec,
                long long slots, unsigned jobs) {
    TimingParams timing;
    ProtocolConfig cfg = resolve_config(opts, timing);
    auto ns = parse_range_spec(opts.n_spec);
    auto seeds = parse_range_spec(seeds_spec);

    struct Row {
        double s_sim = 0, s_sim_se = 0, s_drift = 0, s_da = 0;
        double gamma_sim = 0, gamma_drift = 0;
    };
    std::vector<Row> rows(ns.size());
    struct Task {
        std::size_t row;
        long long N, seed;
    };
    std::vector<Task> tasks;
    for (std::size_t r = 0; r < ns.size(); ++r)
        for (long long seed : seeds) tasks.push_back({r, ns[r], seed});
    std::vector<double> sim_s(tasks.size()), sim_g(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        SimulationReport rep = run_simulation(
            cfg, static_cast<int>(tasks[i].N), timing, slots,
            static_cast<std::uint64_t>(tasks[i].seed));
        sim_s[i] = rep.throughput;
        sim_g[i] = rep.gamma_est;
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        rows[tasks[i].row].s_sim += sim_s[i];
        rows[tasks[i].row].gamma_sim += sim_g[i];
    }
    const double nseeds = static_cast<double>(seeds.size());
    for (std::size_t r = 0; r < ns.size(); ++r) {
        rows[r].s_sim /= nseeds;
        rows[r].gamma_sim /= nseeds;
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        double d = sim_s[i] - rows[tasks[i].row].s_sim;
        rows[tasks[i].row].s_sim_se += d * d;
    }
    for (std::size_t r = 0; r < ns.size(); ++r) {
        rows[r].s_sim_se = seeds.size() > 1
                               ? std::sqrt(rows[r].s_sim_se /
                                           (nseeds * (nseeds - 1)))
                               : 0.0;
        EquilibriumSolution drift = solve_equilibrium(
            cfg, static_cast<double>(ns[r]), timing, opts.tol);
        DaSolution da = solve_da(cfg, static_cast<int>(ns[r]), timing);
        rows[r].s_drift = drift.throughput;
        rows[r].gamma_drift = drift.gamma;
        rows[r].s_da = da.throughput;
    }
    std::string csv = "N,S_sim,S_sim_stderr,S_drift,S_da,gamma_sim,gamma_drift\n";
    json jout = json::array();
    for (std::size_t r = 0; r < ns.size(); ++r) {
        csv += std::to_string(ns[r]) + ',' + csv_num(rows[r].s_sim) + ',' +
               csv_num(rows[r].s_sim_se) + ',' + csv_num(rows[r].s_drift) +
               ',' + csv_num(rows[r].s_da) + ',' + csv_num(rows[r].gamma_sim) +
               ',' + csv_num(rows[r].gamma_drift) + '\n';
        jout.push_back({{"N", ns[r]},
                        {"S_sim", rows[r].s_sim},
                        {"S_sim_stderr", rows[r].s_sim_se},
                        {"S_drift", rows[r].s_drift},
                        {"S_da", rows[r].s_da},
                        {"gamma_sim", rows[r].gamma_sim},
                        {"gamma_drift", rows[r].gamma_drift}});
        std::printf("N=%lld: S_sim=%.6g S_drift=%.6g S_da=%.6g\n", ns[r],
                    rows[r].s_sim, rows[r].s_drift, rows[r].s_da);
    }
    fs::path dir = output_dir(opts);
    write_file(dir / "compare.csv", csv);
    if (opts.emit_json) write_file(dir / "compare.json", jout.dump(2) + "\n");
    return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_n = true) {
    auto* preset = cmd->add_option("--preset", opts.preset,
                                   "builtin config: ca1, ca3, counterexample");
    auto* file = cmd->add_option("--config", opts.config_path,
                                 "JSON config file");
    preset->excludes(file);
    if (with_n) cmd->add_option("--n", opts.n_spec, "station count(s): 5, 1..10, or 2,5,10");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--tol", opts.tol, "solver tolerance");
    cmd->add_flag("--json", opts.emit_json, "also write JSON outputs");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IEEE 1901 CSMA/CA drift-model toolkit"};
    app.require_subcommand(1);

    CommonOpts o_check, o_solve, o_scan, o_transient, o_ode, o_sim, o_cmp;
    int scan_grid = 1000;
    std::string tr_init;
    long long tr_max_steps = 100000;
    double tr_eps = 1e-8;
    double ode_t_end = 100.0, ode_dt = 0.1;
    std::string sim_seeds = "1", cmp_seeds = "1..10";
    long long sim_slots = 1000000, cmp_slots = 1000000;
    int pe_window = 500;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* c_check = app.add_subcommand("check", "config condition verdicts");
    add_common(c_check, o_check, false);

    auto* c_solve = app.add_subcommand("solve", "steady-state equilibrium");
    add_common(c_solve, o_solve);

    auto* c_scan = app.add_subcommand("scan", "all fixed points of Phi");
    add_common(c_scan, o_scan);
    c_scan->add_option("--grid", scan_grid, "scan grid points");

    auto* c_tr = app.add_subcommand("transient", "discrete drift iteration");
    add_common(c_tr, o_transient);
    c_tr->add_option("--init", tr_init, "initial stage counts, e.g. 20,0,0,0");
    c_tr->add_option("--max-steps", tr_max_steps, "iteration cap");
    c_tr->add_option("--eps", tr_eps, "drift convergence threshold");

    auto* c_ode = app.add_subcommand("ode", "mean-field ODE integration");
    add_common(c_ode, o_ode, false);
    c_ode->add_option("--t-end", ode_t_end, "integration horizon");
    c_ode->add_option("--dt", ode_dt, "step size");

    auto* c_sim = app.add_subcommand("simulate", "slot-level simulation");
    add_common(c_sim, o_sim);
    c_sim->add_option("--slots", sim_slots, "contention slots to simulate");
    c_sim->add_option("--seeds", sim_seeds, "seed(s): 7, 1..10, or 1,2,5");
    c_sim->add_option("--pe-window", pe_window, "slots per pe-trace window");
    c_sim->add_option("--jobs", jobs, "parallel runs");

    auto* c_cmp = app.add_subcommand("compare", "simulation vs drift vs D.A.");
    add_common(c_cmp, o_cmp);
    c_cmp->add_option("--slots", cmp_slots, "contention slots per run");
    c_cmp->add_option("--seeds", cmp_seeds, "simulation seeds");
    c_cmp->add_option("--jobs", jobs, "parallel runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_check->parsed()) return cmd_check(o_check);
        if (c_solve->parsed()) return cmd_solve(o_solve);
        if (c_scan->parsed()) return cmd_scan(o_scan, scan_grid);
        if (c_tr->parsed())
            return cmd_transient(o_transient, tr_init, tr_max_steps, tr_eps);
        if (c_ode->parsed()) return cmd_ode(o_ode, ode_t_end, ode_dt);
        if (c_sim->parsed())
            return cmd_simulate(o_sim, sim_seeds, sim_slots, pe_window, jobs);
        if (c_cmp->parsed()) return cmd_compare(o_cmp, cmp_seeds, cmp_slots, jobs);
    } catch (const CondViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
