#include "cdal/simulation.hpp"

#include "cdal/cd_kernel.hpp"
#include "cdal/errors.hpp"
#include "cdal/log.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>

namespace cdal {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

double box_excess(const Vector& v, const Vector& lo, const Vector& hi) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        worst = std::max(worst, v[i] - hi[i]);
        worst = std::max(worst, lo[i] - v[i]);
    }
    return worst;
}

std::string num(double v) { return fmt::format("{:.9g}", v); }

}  // namespace

Vector Scenario::reference_at(int k) const {
    Vector r;
    int best = -1;
    for (const auto& change : references) {
        if (change.step <= k && change.step >= best) {
            best = change.step;
            r = change.r;
        }
    }
    return r;
}

Scenario afti16_scenario() {
    Scenario s;
    s.steps = 400;
    s.sample_time = 0.05;
    s.x0 = Vector::Zero(4);
    s.u_prev = Vector::Zero(2);
    s.references.push_back({0, Eigen::Vector2d(0.0, 10.0)});
    s.references.push_back({100, Eigen::Vector2d(0.0, 0.0)});
    return s;
}

ClosedLoopLog simulate_lti(const MpcProblem& base, const Scenario& scenario,
                           const SolverSettings& settings, const SimulationOptions& opts) {
    settings.validate();
    ClosedLoopLog log;
    log.W_y = base.W_y;
    log.W_u = base.W_u;
    log.W_du = base.W_du;
    log.records.reserve(scenario.steps);

    const Vector e = base.e.size() == 0 ? Vector::Zero(base.nx()) : base.e;
    Vector x = scenario.x0;
    Vector u_prev = scenario.u_prev;
    std::optional<DiagonalScaling> scaling;
    PrimalDualIterate it;

    for (int k = 0; k < scenario.steps; ++k) {
        const auto t0 = Clock::now();
        MpcProblem p = base;
        p.x0 = x;
        p.u_prev = u_prev;
        p.r = scenario.reference_at(k + 1);
        p.u_ref = scenario.u_ref;
        const AugmentedModel m = augment(p);
        if (k == 0 || !opts.warm_start) {
            it = cold_start(m);
        } else {
            it = shift_warm_start(it, m.xh0, m);
        }
        if (settings.use_precond && !scaling) scaling = compute_scaling(m);

        const auto t1 = Clock::now();
        SolveReport report;
        try {
            report = solve(m, it, settings, scaling ? &*scaling : nullptr);
        } catch (const DivergenceError& err) {
            throw DivergenceError("sample " + std::to_string(k) + ": " + err.what(), k);
        }
        const auto t2 = Clock::now();
        if (opts.observer) opts.observer(k, m, it);

        // The u box binds the next augmented state, so u_prev + du_0 can overshoot
        // it by the dynamics residual; the applied input is projected.
        StageRecord rec;
        rec.u = u_prev + it.U[0];
        for (Eigen::Index i = 0; i < rec.u.size(); ++i) rec.u[i] = clamp(rec.u[i], base.u_min[i], base.u_max[i]);
        rec.du = rec.u - u_prev;
        x = base.A * x + base.B * rec.u + e;
        rec.time = (k + 1) * scenario.sample_time;
        rec.x = x;
        rec.y = base.C * x;
        rec.r = p.r;
        rec.u_ref = p.u_ref.size() == 0 ? u_prev : p.u_ref;
        rec.outer_iters = report.outer_iters;
        rec.inner_iters = report.inner_iters_total;
        rec.converged = report.converged;
        rec.solve_ms = ms_between(t1, t2);
        rec.total_ms = ms_between(t0, t2);
        rec.u_violation = box_excess(rec.u, base.u_min, base.u_max);
        rec.du_violation = box_excess(rec.du, base.du_min, base.du_max);
        rec.state_violation = box_excess(x, base.x_min, base.x_max);
        log.records.push_back(std::move(rec));
        u_prev = log.records.back().u;
    }
    return log;
}

MpcProblem cstr_mpc_problem(const CstrModel& model, const Eigen::Vector2d& x, double u_prev,
                            double t, double reference, double* model_defect) {
    const double Ti = model.inlet_temperature(t);
    const CstrLinearization lin = linearize_cstr(model, x, u_prev, Ti);
    const DiscreteModel d = euler_discretize(lin.Ac, lin.Bc, lin.ec, model.Ts);
    if (model_defect) {
        const Eigen::Vector2d f = cstr_derivatives(model, x, u_prev, Ti);
        *model_defect = (f - (lin.Ac * x + lin.Bc.col(0) * u_prev + lin.ec)).cwiseAbs().maxCoeff();
    }

    MpcProblem p = MpcProblem::unconstrained(2, 1, 1, model.horizon);
    p.A = d.A;
    p.B = d.B;
    p.e = d.e;
    p.C << 1.0, 0.0;
    p.W_y(0, 0) = model.W_y;
    p.W_u(0, 0) = model.W_u;
    p.W_du(0, 0) = model.W_du;
    p.du_min[0] = -model.du_limit;
    p.du_max[0] = model.du_limit;
    p.r = Vector::Constant(1, reference);
    p.x0 = x;
    p.u_prev = Vector::Constant(1, u_prev);
    return p;
}

ClosedLoopLog simulate_lpv_cstr(const CstrModel& model, const CstrScenario& scenario,
                                const SolverSettings& settings, const SimulationOptions& opts) {
    settings.validate();
    ClosedLoopLog log;
    log.W_y = Matrix::Constant(1, 1, model.W_y);
    log.W_u = Matrix::Constant(1, 1, model.W_u);
    log.W_du = Matrix::Constant(1, 1, model.W_du);
    log.records.reserve(scenario.steps);

    Eigen::Vector2d x(model.CA0, model.T0);
    double t = 0.0;
    double u_prev = cstr_steady_coolant(model, x, model.inlet_temperature(0.0));
    PrimalDualIterate it;

    for (int k = 0; k < scenario.steps; ++k) {
        const auto t0 = Clock::now();
        double defect = 0.0;
        const MpcProblem p = cstr_mpc_problem(model, x, u_prev, t, scenario.reference, &defect);
        const AugmentedModel m = augment(p);
        if (k == 0 || !opts.warm_start) {
            it = cold_start(m);
        } else {
            it = shift_warm_start(it, m.xh0, m);
        }

        const auto t1 = Clock::now();
        SolveReport report;
        try {
            report = solve(m, it, settings);
        } catch (const DivergenceError& err) {
            throw DivergenceError("sample " + std::to_string(k) + ": " + err.what(), k);
        }
        const auto t2 = Clock::now();
        if (opts.observer) opts.observer(k, m, it);

        StageRecord rec;
        rec.du = it.U[0];
        rec.u = Vector::Constant(1, u_prev + rec.du[0]);
        x = cstr_plant_step(model, x, rec.u[0], t);
        t += model.Ts;
        if (!x.allFinite()) {
            throw DivergenceError("sample " + std::to_string(k) + ": reactor state blew up", k);
        }
        if (x[0] < 0.0 || x[1] <= 0.0) {
            log_info("sample {}: non-physical reactor state ({}, {})", k, x[0], x[1]);
        }
        rec.time = t;
        rec.x = x;
        rec.y = Vector::Constant(1, x[0]);
        rec.r = p.r;
        rec.u_ref = p.u_prev;
        rec.outer_iters = report.outer_iters;
        rec.inner_iters = report.inner_iters_total;
        rec.converged = report.converged;
        rec.solve_ms = ms_between(t1, t2);
        rec.total_ms = ms_between(t0, t2);
        rec.du_violation = box_excess(rec.du, p.du_min, p.du_max);
        rec.model_defect = defect;
        u_prev = rec.u[0];
        log.records.push_back(std::move(rec));
    }
    return log;
}

BenchSummary summarize(const ClosedLoopLog& log) {
    BenchSummary s;
    if (log.records.empty()) return s;
    for (const auto& r : log.records) {
        s.avg_inner += static_cast<double>(r.inner_iters);
        s.max_inner = std::max(s.max_inner, r.inner_iters);
        s.avg_outer += r.outer_iters;
        s.max_outer = std::max(s.max_outer, r.outer_iters);
        s.avg_ms += r.solve_ms;
        s.max_ms = std::max(s.max_ms, r.solve_ms);
        s.avg_total_ms += r.total_ms;
        s.max_total_ms = std::max(s.max_total_ms, r.total_ms);
        if (!r.converged) ++s.unconverged;
    }
    const auto n = static_cast<double>(log.records.size());
    s.avg_inner /= n;
    s.avg_outer /= n;
    s.avg_ms /= n;
    s.avg_total_ms /= n;
    s.cost = closed_loop_cost(log);
    return s;
}

std::vector<AblationRow> run_ablation(const MpcProblem& base, const Scenario& scenario,
                                      const SolverSettings& base_settings) {
    struct Scheme {
        const char* name;
        bool accel, reverse, precond;
    };
    static constexpr Scheme kSchemes[] = {
        {"0-CDAL", false, false, false},  {"R-CDAL", false, true, false},
        {"A-CDAL", true, false, false},   {"AR-CDAL", true, true, false},
        {"P-0-CDAL", false, false, true}, {"P-R-CDAL", false, true, true},
        {"P-A-CDAL", true, false, true},  {"CDAL", true, true, true},
    };
    std::vector<AblationRow> rows;
    for (const auto& scheme : kSchemes) {
        SolverSettings s = base_settings;
        s.use_acceleration = scheme.accel;
        s.use_reverse = scheme.reverse;
        s.use_precond = scheme.precond;
        AblationRow row;
        row.scheme = scheme.name;
        row.acceleration = scheme.accel;
        row.reverse = scheme.reverse;
        row.precondition = scheme.precond;
        row.summary = summarize(simulate_lti(base, scenario, s));
        log_info("ablation {}: avg outer {:.1f}, avg inner {:.1f}, cost {:.4f}", row.scheme,
                 row.summary.avg_outer, row.summary.avg_inner, row.summary.cost);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_lti_csv(std::ostream& os, const ClosedLoopLog& log) {
    if (log.records.empty()) return;
    const auto& first = log.records.front();
    std::string header = "t";
    for (Eigen::Index i = 0; i < first.x.size(); ++i) header += fmt::format(",x{}", i + 1);
    for (Eigen::Index i = 0; i < first.y.size(); ++i) header += fmt::format(",y{}", i + 1);
    for (Eigen::Index i = 0; i < first.u.size(); ++i) header += fmt::format(",u{}", i + 1);
    for (Eigen::Index i = 0; i < first.du.size(); ++i) header += fmt::format(",du{}", i + 1);
    for (Eigen::Index i = 0; i < first.r.size(); ++i) header += fmt::format(",r{}", i + 1);
    header += ",outer_iters,inner_iters,solve_ms";
    os << header << '\n';
    for (const auto& rec : log.records) {
        std::string line = num(rec.time);
        for (const Vector* v : {&rec.x, &rec.y, &rec.u, &rec.du, &rec.r})
            for (Eigen::Index i = 0; i < v->size(); ++i) line += "," + num((*v)[i]);
        line += fmt::format(",{},{},{}", rec.outer_iters, rec.inner_iters, num(rec.solve_ms));
        os << line << '\n';
    }
}

void write_cstr_csv(std::ostream& os, const ClosedLoopLog& log) {
    os << "t,C_A,T,Tc,dTc,r,outer_iters,inner_iters\n";
    for (const auto& rec : log.records) {
        os << fmt::format("{},{},{},{},{},{},{},{}\n", num(rec.time), num(rec.x[0]),
                          num(rec.x[1]), num(rec.u[0]), num(rec.du[0]), num(rec.r[0]),
                          rec.outer_iters, rec.inner_iters);
    }
}

void write_bench_csv(std::ostream& os, const std::vector<AblationRow>& rows) {
    os << "scheme,acceleration,reverse,precondition,avg_inner,max_inner,avg_outer,max_outer,"
          "avg_ms,max_ms,cost\n";
    for (const auto& row : rows) {
        const auto& s = row.summary;
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", row.scheme, int(row.acceleration),
                          int(row.reverse), int(row.precondition), num(s.avg_inner), s.max_inner,
                          num(s.avg_outer), s.max_outer, num(s.avg_ms), num(s.max_ms), num(s.cost));
    }
}

}  // namespace cdal
