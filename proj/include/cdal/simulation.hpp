#pragma once

#include "cdal/plants.hpp"
#include "cdal/problem.hpp"
#include "cdal/solver.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdal {

/// Piecewise-constant reference: `r` applies from sample `step` onwards.
struct ReferenceChange {
    int step = 0;
    Vector r;
};

struct Scenario {
    int steps = 0;
    double sample_time = 1.0;  // only used to timestamp records
    Vector x0;
    Vector u_prev;
    Vector u_ref;  // empty: defaults to u_prev at every sample
    std::vector<ReferenceChange> references;

    /// Reference in force at sample k; zero-sized if none was given.
    Vector reference_at(int k) const;
};

/// Pitch reference 0 -> 10 -> 0 deg used for the aircraft benchmark.
Scenario afti16_scenario();

/// Called after every controller solve with the (unscaled) model and solution.
using StepObserver =
    std::function<void(int step, const AugmentedModel& model, const PrimalDualIterate& solution)>;

struct SimulationOptions {
    bool warm_start = true;
    StepObserver observer;
};

/// Closed loop with an LTI prediction model that is also the plant.
///
/// At sample k the controller tracks reference_at(k + 1); the applied input is
/// u_k = u_{k-1} + du_0, projected onto the u box, and the plant advances with
/// base.A, base.B, base.e. The logged du is u_k - u_{k-1}.
/// Throws DivergenceError (with the sample index as iteration) on solver failure.
ClosedLoopLog simulate_lti(const MpcProblem& base, const Scenario& scenario,
                           const SolverSettings& settings, const SimulationOptions& opts = {});

struct CstrScenario {
    int steps = 360;  // 180 min, more than one inlet-temperature period after the transient
    double reference = 2.0;  // C_A target, kgmol/m^3
};

/// Controller problem at one sample: linearized at (x, u_prev, Ti(t)), Euler
/// discretized, tracking `reference`. If `model_defect` is given it receives
/// |f(x,u) - (Ac x + Bc u + ec)|_inf at the linearization point.
MpcProblem cstr_mpc_problem(const CstrModel& model, const Eigen::Vector2d& x, double u_prev,
                            double t, double reference, double* model_defect = nullptr);

/// Successive-linearization closed loop on the nonlinear reactor.
///
/// Each sample linearizes at (x_k, u_{k-1}, Ti(t_k)), discretizes with forward
/// Euler and solves; the plant itself is integrated with RK4. StageRecord::x
/// holds (C_A, T) and the record's model_defect the linearization check
/// |f(x,u) - (Ac x + Bc u + ec)|_inf at the linearization point.
ClosedLoopLog simulate_lpv_cstr(const CstrModel& model, const CstrScenario& scenario,
                                const SolverSettings& settings, const SimulationOptions& opts = {});

struct BenchSummary {
    double avg_inner = 0.0;
    long max_inner = 0;
    double avg_outer = 0.0;
    int max_outer = 0;
    double avg_ms = 0.0;
    double max_ms = 0.0;
    double avg_total_ms = 0.0;
    double max_total_ms = 0.0;
    double cost = 0.0;
    int unconverged = 0;
};

BenchSummary summarize(const ClosedLoopLog& log);

struct AblationRow {
    std::string scheme;
    bool acceleration = false;
    bool reverse = false;
    bool precondition = false;
    BenchSummary summary;
};

/// The eight {acceleration, reverse, preconditioning} combinations on the
/// given LTI problem; other fields of `base_settings` are kept.
std::vector<AblationRow> run_ablation(const MpcProblem& base, const Scenario& scenario,
                                      const SolverSettings& base_settings);

void write_lti_csv(std::ostream& os, const ClosedLoopLog& log);
void write_cstr_csv(std::ostream& os, const ClosedLoopLog& log);
void write_bench_csv(std::ostream& os, const std::vector<AblationRow>& rows);

}  // namespace cdal
