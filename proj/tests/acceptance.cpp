// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "cdal/cd_kernel.hpp"
#include "cdal/errors.hpp"
#include "cdal/plants.hpp"
#include "cdal/simulation.hpp"
#include "cdal/solver.hpp"
#include "test_util.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>

using namespace cdal;
using namespace cdal::testing;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
    if (!pass) ++failures;
    fmt::print("[{}] criterion {}: {} ({:.1f} s)\n", pass ? "PASS" : "FAIL", id, detail, seconds);
    std::fflush(stdout);
}

double timed(const std::function<void()>& body) {
    const auto t0 = Clock::now();
    body();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverSettings oracle_grade() {
    SolverSettings s;
    s.rho = 0.1;
    s.eps_out = 1e-8;
    s.eps_in = 1e-10;
    return s;
}

struct Match {
    double du = 0.0;
    double obj_rel = 0.0;
};

Match against_oracle(const AugmentedModel& m, const PrimalDualIterate& it) {
    const oracle::ExplicitQp qp = oracle::build_qp(m);
    const Vector z = oracle::solve_qp_reference(qp).z;
    const PrimalDualIterate ref = oracle::unpack(z, m);
    const double f_ref = qp.objective(z);
    return {max_abs_diff(it.U, ref.U), std::abs(mpc_objective(m, it) - f_ref) / std::max(1.0, std::abs(f_ref))};
}

void criterion1() {
    int mismatches = 0, capped = 0;
    Match worst;
    const double secs = timed([&] {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 200; ++i) {
            const AugmentedModel m = augment(oracle::random_problem(rng));
            PrimalDualIterate it = cold_start(m);
            const SolveReport rep = solve(m, it, oracle_grade());
            if (!rep.converged) ++capped;
            const Match d = against_oracle(m, it);
            worst.du = std::max(worst.du, d.du);
            worst.obj_rel = std::max(worst.obj_rel, d.obj_rel);
            if (d.du > 1e-3 || d.obj_rel > 1e-4) ++mismatches;
        }
    });
    report(1, mismatches == 0 && secs < 60.0,
           fmt::format("oracle equivalence, 200 instances: {} outside tolerance, worst |dU| {:.2e} (tol 1e-3), "
                       "worst rel. objective {:.2e} (tol 1e-4), {} at the outer cap",
                       mismatches, worst.du, worst.obj_rel, capped),
           secs);
}

void criterion2() {
    double worst_increase = -kInf;
    long passes = 0;
    const double secs = timed([&] {
        std::mt19937_64 rng(2);
        for (int i = 0; i < 50; ++i) {
            const AugmentedModel m = augment(oracle::random_problem(rng));
            const double rho = 0.1;
            const CdWorkspace ws = CdWorkspace::build(m, rho);
            const auto lh = random_duals(m, rng);
            PrimalDualIterate it = random_iterate(m, lh, rng);
            const oracle::ExplicitQp qp = oracle::build_qp(m);
            const Vector lam = oracle::pack_multipliers(lh);
            double f = oracle::eval_F_rho(qp, oracle::pack(it), lam, rho);
            for (int pass = 0; pass < 100; ++pass) {
                cd_full_pass(ws, it, pass % 2 ? SweepOrder::forward : SweepOrder::reverse);
                const double next = oracle::eval_F_rho(qp, oracle::pack(it), lam, rho);
                worst_increase = std::max(worst_increase, next - f);
                f = next;
                ++passes;
            }
        }
    });
    report(2, worst_increase <= 1e-10,
           fmt::format("monotone inner descent over {} passes: largest F_rho change {:.2e} (tol +1e-10)", passes,
                       worst_increase),
           secs);
}

void criterion3() {
    double worst = 0.0;
    long blocks = 0;
    const double secs = timed([&] {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 20; ++i) {
            const AugmentedModel m = augment(oracle::random_problem(rng));
            const CdWorkspace ws = CdWorkspace::build(m, 0.1);
            const auto lh = random_duals(m, rng);
            PrimalDualIterate it = random_iterate(m, lh, rng);
            const int T = m.horizon;
            double sigma = 0.0;
            auto check = [&] {
                worst = std::max(worst, coupling_error(m, it, lh));
                ++blocks;
            };
            const SweepOrder order = i % 2 ? SweepOrder::forward : SweepOrder::reverse;
            if (order == SweepOrder::reverse) {
                ccd_terminal_state(ws, it, sigma, order);
                check();
                ccd_input_block(T - 1, ws, it, sigma, order);
                check();
                for (int t = T - 2; t >= 0; --t) {
                    ccd_state_block(t, ws, it, sigma, order);
                    check();
                    ccd_input_block(t, ws, it, sigma, order);
                    check();
                }
            } else {
                for (int t = 0; t < T - 1; ++t) {
                    ccd_input_block(t, ws, it, sigma, order);
                    check();
                    ccd_state_block(t, ws, it, sigma, order);
                    check();
                }
                ccd_input_block(T - 1, ws, it, sigma, order);
                check();
                ccd_terminal_state(ws, it, sigma, order);
                check();
            }
        }
    });
    report(3, worst <= 1e-10,
           fmt::format("coupling invariant after {} block updates in 20 passes: worst error {:.2e} (tol 1e-10)",
                       blocks, worst),
           secs);
}

void criterion4() {
    const Afti16Model afti = Afti16Model::standard();
    const MpcProblem p = afti.mpc_problem();
    struct Case {
        double rho, target;
    };
    for (const Case c : {Case{1.0, 42.5}, Case{0.01, 42.618}}) {
        ClosedLoopLog log;
        SolverSettings s;
        s.rho = c.rho;
        const double secs = timed([&] { log = simulate_lti(p, afti16_scenario(), s); });
        const double cost = closed_loop_cost(log);
        double max_u = 0.0, max_y1 = 0.0;
        for (const auto& r : log.records) {
            max_u = std::max(max_u, r.u.cwiseAbs().maxCoeff());
            max_y1 = std::max(max_y1, std::abs(r.y[0]));
        }
        const bool cost_ok = std::abs(cost - c.target) <= 0.01 * c.target;
        report(4, cost_ok && max_u <= 25.0 && max_y1 <= 0.5 + 1e-2 && secs < 30.0,
               fmt::format("AFTI-16 rho={}: cost {:.4f} (target {} +-1%), max |u| {:.6f} (<= 25), "
                           "max |y1| {:.4f} (<= 0.51)",
                           c.rho, cost, c.target, max_u, max_y1),
               secs);
    }
}

void criterion5() {
    std::vector<AblationRow> rows;
    SolverSettings s;
    s.rho = 1.0;
    const double secs =
        timed([&] { rows = run_ablation(Afti16Model::standard().mpc_problem(), afti16_scenario(), s); });
    auto row = [&](const std::string& name) -> const BenchSummary& {
        for (const auto& r : rows)
            if (r.scheme == name) return r.summary;
        throw std::logic_error("missing scheme " + name);
    };
    for (const auto& r : rows) {
        fmt::print("    {:<9} avg outer {:7.2f}  avg inner {:8.1f}  cost {:.4f}\n", r.scheme, r.summary.avg_outer,
                   r.summary.avg_inner, r.summary.cost);
    }
    const double p_plain = row("0-CDAL").avg_outer / row("P-0-CDAL").avg_outer;
    const double p_accel = row("AR-CDAL").avg_outer / row("CDAL").avg_outer;
    const bool a = p_plain >= 2.0 && p_accel >= 2.0;

    const double a_plain = row("R-CDAL").avg_outer / row("AR-CDAL").avg_outer;
    const double a_prec = row("P-R-CDAL").avg_outer / row("CDAL").avg_outer;
    const bool b = a_plain >= 3.0 && a_prec >= 3.0;

    const std::pair<const char*, const char*> reverse_pairs[] = {
        {"0-CDAL", "R-CDAL"}, {"A-CDAL", "AR-CDAL"}, {"P-0-CDAL", "P-R-CDAL"}, {"P-A-CDAL", "CDAL"}};
    bool c = true;
    std::string c_detail;
    for (const auto& [fwd, rev] : reverse_pairs) {
        const double f = row(fwd).avg_inner, r = row(rev).avg_inner;
        c = c && r < f;
        c_detail += fmt::format(" {}->{} {:.0f}->{:.0f};", fwd, rev, f, r);
    }

    double lo = kInf, hi = -kInf;
    for (const auto& r : rows) {
        lo = std::min(lo, r.summary.cost);
        hi = std::max(hi, r.summary.cost);
    }
    const double spread = (hi - lo) / lo;
    const bool d = spread <= 0.01;

    fmt::print("    (a) preconditioning speed-up in outer iterations: {:.2f}x without, {:.2f}x with acceleration "
               "(need >= 2): {}\n",
               p_plain, p_accel, a ? "ok" : "no");
    fmt::print("    (b) acceleration speed-up in outer iterations: {:.2f}x without, {:.2f}x with preconditioning "
               "(need >= 3): {}\n",
               a_plain, a_prec, b ? "ok" : "no");
    fmt::print("    (c) reverse order lowers average inner passes:{} {}\n", c_detail, c ? "ok" : "no");
    fmt::print("    (d) cost spread across schemes {:.3f}% (need <= 1%): {}\n", 100 * spread, d ? "ok" : "no");
    report(5, a && b && c && d && secs < 180.0,
           fmt::format("ablation orderings (a) {} (b) {} (c) {} (d) {}", a ? "ok" : "FAIL", b ? "ok" : "FAIL",
                       c ? "ok" : "FAIL", d ? "ok" : "FAIL"),
           secs);
}

void criterion6() {
    const CstrModel model = CstrModel::standard();
    const CstrScenario scenario;
    SolverSettings s = oracle_grade();
    s.rho = 0.01;

    int mismatches = 0;
    Match worst;
    int worst_step = -1;
    double oracle_secs = 0.0;
    SimulationOptions opts;
    opts.observer = [&](int k, const AugmentedModel& m, const PrimalDualIterate& it) {
        oracle_secs += timed([&] {
            const Match d = against_oracle(m, it);
            if (d.du > 1e-3 || d.obj_rel > 1e-4) ++mismatches;
            if (d.du > worst.du || d.obj_rel > worst.obj_rel) worst_step = k;
            worst.du = std::max(worst.du, d.du);
            worst.obj_rel = std::max(worst.obj_rel, d.obj_rel);
        });
    };
    ClosedLoopLog log;
    const double total_secs = timed([&] { log = simulate_lpv_cstr(model, scenario, s, opts); });
    const double sim_secs = total_secs - oracle_secs;

    const double cost = closed_loop_cost(log);
    double max_du = 0.0;
    int unconverged = 0;
    for (const auto& r : log.records) {
        max_du = std::max(max_du, std::abs(r.du[0]));
        unconverged += r.converged ? 0 : 1;
    }
    // Settling is judged over the last inlet-temperature period.
    const int period = static_cast<int>(std::ceil(2.0 * std::numbers::pi / model.Ti_frequency / model.Ts));
    const int n = static_cast<int>(log.records.size());
    const int from = std::max(0, n - period);
    double mean = 0.0, band = 0.0;
    for (int k = from; k < n; ++k) {
        mean += log.records[k].x[0];
        band = std::max(band, std::abs(log.records[k].x[0] - scenario.reference));
    }
    mean /= static_cast<double>(n - from);
    const double tol = 0.02 * scenario.reference;

    const bool cost_ok = std::abs(cost - 0.02202) <= 0.1 * 0.02202;
    const bool du_ok = max_du <= 1.0;
    const bool band_ok = band <= tol;
    const bool mean_ok = std::abs(mean - scenario.reference) <= tol;
    const bool oracle_ok = mismatches == 0;
    const bool primary = cost_ok && du_ok && band_ok;
    const bool fallback = mean_ok && du_ok && oracle_ok;

    fmt::print("    cost {:.5f} (target 0.02202 +-10%): {}\n", cost, cost_ok ? "ok" : "no");
    fmt::print("    max |du| {:.6f} (<= 1): {}\n", max_du, du_ok ? "ok" : "no");
    fmt::print("    last {} samples: max |C_A - 2| {:.4f}, mean C_A {:.4f} (2% = {:.2f}): band {}, mean {}\n", period,
               band, mean, tol, band_ok ? "ok" : "no", mean_ok ? "ok" : "no");
    fmt::print("    per-step oracle match over {} steps: {} outside tolerance, worst |dU| {:.2e}, worst rel. "
               "objective {:.2e} (step {}), {} steps at the outer cap: {}\n",
               n, mismatches, worst.du, worst.obj_rel, worst_step, unconverged, oracle_ok ? "ok" : "no");
    report(6, (primary || fallback) && sim_secs < 30.0,
           fmt::format("CSTR rho=0.01: primary {}, fallback {}; closed loop {:.1f} s (< 30 s), oracle checks {:.1f} s",
                       primary ? "ok" : "FAIL", fallback ? "ok" : "FAIL", sim_secs, oracle_secs),
           total_secs);
}

void criterion7() {
    double worst = 0.0, residual = 0.0;
    int capped = 0;
    SolverSettings s;
    s.rho = 0.1;
    const double tol = 10.0 * s.eps_out;
    const double secs = timed([&] {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 50; ++i) {
            const AugmentedModel m = augment(oracle::random_problem(rng));
            PrimalDualIterate on = cold_start(m), off = cold_start(m);
            s.use_precond = true;
            capped += solve(m, on, s).converged ? 0 : 1;
            s.use_precond = false;
            capped += solve(m, off, s).converged ? 0 : 1;
            worst = std::max(worst, max_abs_diff(on.U, off.U));
            residual = std::max({residual, dynamics_residual(m, on), dynamics_residual(m, off)});
        }
    });
    report(7, worst <= tol,
           fmt::format("preconditioner equivalence, 50 instances at eps_out {:.0e}: worst |dU| {:.2e} (tol {:.0e}), "
                       "{} solves at the outer cap, worst dynamics residual {:.2e}",
                       s.eps_out, worst, tol, capped, residual),
           secs);
}

void criterion8() {
    double worst = 0.0;
    bool bound = true;
    const double secs = timed([&] {
        double a = 1.0;
        long double direct = 1.0L;
        for (int k = 1; k <= 100; ++k) {
            worst = std::max(worst, std::abs(a - static_cast<double>(direct)) / static_cast<double>(direct));
            bound = bound && a >= (k + 1) / 2.0;
            a = nesterov_alpha(a);
            direct = (1.0L + std::sqrt(1.0L + 4.0L * direct * direct)) / 2.0L;
        }
    });
    report(8, worst <= 1e-12 && bound,
           fmt::format("Nesterov sequence: worst rel. deviation {:.2e} (tol 1e-12), alpha_k >= (k+1)/2: {}", worst,
                       bound ? "yes" : "no"),
           secs);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    fmt::print("{} criterion line(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
