// cdal: command-line front end for the CDAL MPC solver.
//
//   cdal solve <config> [--verify]
//   cdal simulate <config>
//   cdal bench afti16|cstr
//   cdal ablation
//   cdal check [--seed N] [--count M]
//
// Exit codes: 0 ok, 1 usage/config error, 2 solver divergence, 3 oracle failure.

#include "cdal/config.hpp"
#include "cdal/errors.hpp"
#include "cdal/oracle.hpp"
#include "cdal/plants.hpp"
#include "cdal/simulation.hpp"
#include "cdal/solver.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>

namespace {

using namespace cdal;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitOracle = 3;

struct Overrides {
    std::optional<double> rho, eps_in, eps_out;
    std::optional<int> max_outer, max_inner;
    bool no_accel = false, no_reverse = false, no_precond = false;

    SolverSettings apply(SolverSettings s) const {
        if (rho) s.rho = *rho;
        if (eps_in) s.eps_in = *eps_in;
        if (eps_out) s.eps_out = *eps_out;
        if (max_outer) s.max_outer = *max_outer;
        if (max_inner) s.max_inner = *max_inner;
        if (no_accel) s.use_acceleration = false;
        if (no_reverse) s.use_reverse = false;
        if (no_precond) s.use_precond = false;
        s.validate();
        return s;
    }
};

std::string num(double v) { return fmt::format("{:.9g}", v); }

// --out path, or stdout when empty
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ConfigError("--out: cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    bool to_stdout() const { return !file_.is_open(); }

private:
    std::ofstream file_;
};

void print_summary(std::ostream& os, const std::string& label, const BenchSummary& s) {
    os << fmt::format("{}: avg/max inner {:.1f}/{}  avg/max outer {:.2f}/{}  avg/max ms {:.3f}/{:.3f}  "
                      "cost {:.4f}",
                      label, s.avg_inner, s.max_inner, s.avg_outer, s.max_outer, s.avg_ms, s.max_ms, s.cost);
    if (s.unconverged > 0) os << fmt::format("  ({} samples hit the iteration cap)", s.unconverged);
    os << '\n';
}

struct OracleDiff {
    double du = 0.0;
    double objective_rel = 0.0;
};

OracleDiff compare_with_oracle(const AugmentedModel& m, const PrimalDualIterate& it) {
    const oracle::ExplicitQp qp = oracle::build_qp(m);
    const oracle::ReferenceResult ref = oracle::solve_qp_reference(qp);
    const PrimalDualIterate r = oracle::unpack(ref.z, m);
    OracleDiff d;
    for (int t = 0; t < m.horizon; ++t) d.du = std::max(d.du, (r.U[t] - it.U[t]).cwiseAbs().maxCoeff());
    const double f_ref = qp.objective(ref.z);
    d.objective_rel = std::abs(mpc_objective(m, it) - f_ref) / std::max(1.0, std::abs(f_ref));
    return d;
}

// Controller problem of the first closed-loop sample.
AugmentedModel first_sample_model(const SimConfig& cfg) {
    if (cfg.kind == SimConfig::Kind::cstr) {
        const CstrModel& m = cfg.cstr;
        const Eigen::Vector2d x(m.CA0, m.T0);
        const double u_prev = cstr_steady_coolant(m, x, m.inlet_temperature(0.0));
        return augment(cstr_mpc_problem(m, x, u_prev, 0.0, cfg.cstr_scenario.reference));
    }
    MpcProblem p = cfg.problem;
    p.r = cfg.scenario.reference_at(1);
    return augment(p);
}

int run_solve(const std::string& path, bool verify, const Overrides& ov, const std::string& out_path) {
    const SimConfig cfg = load_config(path);
    const SolverSettings settings = ov.apply(cfg.solver);
    const AugmentedModel m = first_sample_model(cfg);

    const double x0_excess = std::max((m.xh0 - m.xh_max).maxCoeff(), (m.xh_min - m.xh0).maxCoeff());
    PrimalDualIterate it = cold_start(m);
    const SolveReport rep = solve(m, it, settings);

    std::cout << fmt::format("outer iterations   {}\n", rep.outer_iters);
    std::cout << fmt::format("inner passes       {}\n", rep.inner_iters_total);
    std::cout << fmt::format("converged          {}\n", rep.converged ? "yes" : "no (iteration cap)");
    std::cout << fmt::format("dual gap           {:.3e}\n", rep.dual_gap);
    std::cout << fmt::format("dynamics residual  {:.3e}\n", dynamics_residual(m, it));
    std::cout << fmt::format("objective          {}\n", num(rep.objective));
    std::string u0;
    for (Eigen::Index i = 0; i < it.U[0].size(); ++i) u0 += (i ? ", " : "") + num(it.U[0][i]);
    std::cout << "first increment    [" << u0 << "]\n";
    if (x0_excess > 0.0) {
        std::cout << fmt::format("note: initial state lies outside the state box by {} "
                                 "(informational, x0 is a fixed parameter)\n",
                                 num(x0_excess));
    }

    if (!out_path.empty()) {
        Output out(out_path);
        std::ostream& os = out.stream();
        os << "stage";
        for (int i = 0; i < m.nxh(); ++i) os << ",xh" << i + 1;
        for (int i = 0; i < m.nu(); ++i) os << ",du" << i + 1;
        os << '\n';
        for (int t = 0; t <= m.horizon; ++t) {
            os << t;
            for (int i = 0; i < m.nxh(); ++i) os << ',' << num(it.X[t][i]);
            for (int i = 0; i < m.nu(); ++i) os << ',' << (t < m.horizon ? num(it.U[t][i]) : "");
            os << '\n';
        }
    }

    if (verify) {
        const OracleDiff d = compare_with_oracle(m, it);
        std::cout << fmt::format("oracle: max |dU| {:.3e}, objective rel. diff {:.3e}\n", d.du, d.objective_rel);
        if (d.du > 1e-3 || d.objective_rel > 1e-4) {
            std::cout << "oracle: mismatch beyond 1e-3 (U) / 1e-4 (objective)\n";
            return kExitOracle;
        }
    }
    return kExitOk;
}

int run_simulate(const std::string& path, const Overrides& ov, const std::string& out_path) {
    const SimConfig cfg = load_config(path);
    const SolverSettings settings = ov.apply(cfg.solver);
    Output out(out_path);
    ClosedLoopLog log;
    if (cfg.kind == SimConfig::Kind::cstr) {
        log = simulate_lpv_cstr(cfg.cstr, cfg.cstr_scenario, settings);
        write_cstr_csv(out.stream(), log);
    } else {
        log = simulate_lti(cfg.problem, cfg.scenario, settings);
        write_lti_csv(out.stream(), log);
    }
    if (!out.to_stdout() && !log.records.empty()) print_summary(std::cout, "closed loop", summarize(log));
    return kExitOk;
}

int run_bench(const std::string& which, const Overrides& ov, const std::string& out_path) {
    ClosedLoopLog log;
    SolverSettings defaults;
    if (which == "afti16") {
        defaults.rho = 1.0;
        const Afti16Model afti = Afti16Model::standard();
        const SolverSettings s = ov.apply(defaults);
        log = simulate_lti(afti.mpc_problem(), afti16_scenario(), s);
        print_summary(std::cout, fmt::format("afti16 rho={}", s.rho), summarize(log));
        if (!out_path.empty()) {
            Output out(out_path);
            write_lti_csv(out.stream(), log);
        }
    } else {
        defaults.rho = 0.01;
        const SolverSettings s = ov.apply(defaults);
        log = simulate_lpv_cstr(CstrModel::standard(), CstrScenario{}, s);
        const BenchSummary sum = summarize(log);
        print_summary(std::cout, fmt::format("cstr rho={}", s.rho), sum);
        double avg_total = 0.0, max_total = 0.0;
        for (const auto& r : log.records) {
            avg_total += r.total_ms;
            max_total = std::max(max_total, r.total_ms);
        }
        std::cout << fmt::format("construction + solution: avg/max ms {:.3f}/{:.3f}\n",
                                 avg_total / static_cast<double>(std::max<std::size_t>(1, log.records.size())),
                                 max_total);
        if (!out_path.empty()) {
            Output out(out_path);
            write_cstr_csv(out.stream(), log);
        }
    }
    return kExitOk;
}

int run_ablation_cmd(const Overrides& ov, const std::string& out_path) {
    SolverSettings defaults;
    defaults.rho = 1.0;
    const SolverSettings s = ov.apply(defaults);
    const Afti16Model afti = Afti16Model::standard();
    const auto rows = run_ablation(afti.mpc_problem(), afti16_scenario(), s);
    Output out(out_path);
    write_bench_csv(out.stream(), rows);
    if (!out.to_stdout()) {
        for (const auto& row : rows) print_summary(std::cout, row.scheme, row.summary);
    }
    return kExitOk;
}

int run_check(std::uint64_t seed, int count, const Overrides& ov) {
    SolverSettings defaults;
    defaults.rho = 0.1;
    defaults.eps_out = 1e-8;
    defaults.eps_in = 1e-10;
    const SolverSettings s = ov.apply(defaults);
    std::mt19937_64 rng(seed);
    int failures = 0;
    double worst_du = 0.0, worst_rel = 0.0;
    for (int i = 0; i < count; ++i) {
        const AugmentedModel m = augment(oracle::random_problem(rng));
        PrimalDualIterate it = cold_start(m);
        const SolveReport rep = solve(m, it, s);
        const OracleDiff d = compare_with_oracle(m, it);
        worst_du = std::max(worst_du, d.du);
        worst_rel = std::max(worst_rel, d.objective_rel);
        if (d.du > 1e-3 || d.objective_rel > 1e-4) {
            ++failures;
            std::cout << fmt::format("instance {}: max |dU| {:.3e}, objective rel. diff {:.3e}, "
                                     "outer {}{}, residual {:.2e}\n",
                                     i, d.du, d.objective_rel, rep.outer_iters,
                                     rep.converged ? "" : " (cap)", dynamics_residual(m, it));
        }
    }
    std::cout << fmt::format("{} instances (seed {}): {} mismatches, worst |dU| {:.3e}, worst rel. objective {:.3e}\n",
                             count, seed, failures, worst_du, worst_rel);
    return failures == 0 ? kExitOk : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CDAL model predictive control solver"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides ov;
    std::string out_path;
    std::uint64_t seed = 1;
    double rho = 0, eps_in = 0, eps_out = 0;
    int max_outer = 0, max_inner = 0;
    auto* o_rho = app.add_option("--rho", rho, "penalty parameter");
    auto* o_eps_in = app.add_option("--eps-in", eps_in, "inner tolerance on the pass movement");
    auto* o_eps_out = app.add_option("--eps-out", eps_out, "outer tolerance on the dual change");
    auto* o_max_outer = app.add_option("--max-outer", max_outer, "outer iteration cap");
    auto* o_max_inner = app.add_option("--max-inner", max_inner, "inner passes per outer iteration");
    app.add_flag("--no-accel", ov.no_accel, "disable Nesterov acceleration");
    app.add_flag("--no-reverse", ov.no_reverse, "sweep in forward cyclic order");
    app.add_flag("--no-precond", ov.no_precond, "disable diagonal preconditioning");
    app.add_option("--out", out_path, "output CSV path");
    app.add_option("--seed", seed, "random seed for `check`");

    std::string config_path;
    bool verify = false;
    auto* solve_cmd = app.add_subcommand("solve", "one-shot solve of the first sample of a config");
    solve_cmd->add_option("config", config_path, "JSON config")->required();
    solve_cmd->add_flag("--verify", verify, "compare against the dense reference oracle");

    auto* sim_cmd = app.add_subcommand("simulate", "closed-loop simulation, CSV log");
    sim_cmd->add_option("config", config_path, "JSON config")->required();

    std::string bench_name;
    auto* bench_cmd = app.add_subcommand("bench", "built-in benchmark");
    bench_cmd->add_option("problem", bench_name, "afti16 or cstr")
        ->required()
        ->check(CLI::IsMember({"afti16", "cstr"}));

    auto* ablation_cmd = app.add_subcommand("ablation", "AFTI-16 grid over acceleration/reverse/preconditioning");

    int count = 200;
    auto* check_cmd = app.add_subcommand("check", "random instances against the reference oracle");
    check_cmd->add_option("--count", count, "number of instances")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*o_rho) ov.rho = rho;
    if (*o_eps_in) ov.eps_in = eps_in;
    if (*o_eps_out) ov.eps_out = eps_out;
    if (*o_max_outer) ov.max_outer = max_outer;
    if (*o_max_inner) ov.max_inner = max_inner;

    try {
        if (*solve_cmd) return run_solve(config_path, verify, ov, out_path);
        if (*sim_cmd) return run_simulate(config_path, ov, out_path);
        if (*bench_cmd) return run_bench(bench_name, ov, out_path);
        if (*ablation_cmd) return run_ablation_cmd(ov, out_path);
        if (*check_cmd) return run_check(seed, count, ov);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const OracleError& e) {
        std::cerr << "oracle failure: " << e.what() << '\n';
        return kExitOracle;
    }
    return kExitUsage;
}
