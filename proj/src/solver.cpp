#include "cdal/solver.hpp"

#include "cdal/cd_kernel.hpp"
#include "cdal/errors.hpp"
#include "cdal/log.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace cdal {

void SolverSettings::validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho: must be positive");
    if (!(eps_out > 0.0)) throw ConfigError("eps_out: must be positive");
    if (!(eps_in > 0.0)) throw ConfigError("eps_in: must be positive");
    if (max_outer < 1) throw ConfigError("max_outer: must be >= 1");
    if (max_inner < 1) throw ConfigError("max_inner: must be >= 1");
}

double nesterov_alpha(double alpha_k) {
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha_k * alpha_k));
}

void dual_refresh(const AugmentedModel& m, PrimalDualIterate& it) {
    for (int t = 0; t < m.horizon; ++t) {
        Vector& lam = it.Lambda[t];
        lam.noalias() += m.A_hat * it.X[t];
        lam.noalias() += m.B_hat * it.U[t];
        lam += m.e_hat;
        lam -= it.X[t + 1];
    }
}

namespace {

void check_shape(const AugmentedModel& m, const PrimalDualIterate& it) {
    const auto T = static_cast<size_t>(m.horizon);
    if (it.U.size() != T || it.X.size() != T + 1 || it.Lambda.size() != T) {
        throw ConfigError("iterate: sequence lengths do not match the horizon");
    }
    for (const auto& u : it.U)
        if (u.size() != m.nu()) throw ConfigError("iterate: input block has wrong size");
    for (const auto& x : it.X)
        if (x.size() != m.nxh()) throw ConfigError("iterate: state block has wrong size");
    for (const auto& l : it.Lambda)
        if (l.size() != m.nxh()) throw ConfigError("iterate: multiplier block has wrong size");
}

bool all_finite(const std::vector<Vector>& seq) {
    for (const auto& v : seq)
        if (!v.allFinite()) return false;
    return true;
}

double squared_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    double d = 0.0;
    for (size_t t = 0; t < a.size(); ++t) d += (a[t] - b[t]).squaredNorm();
    return d;
}

}  // namespace

SolveReport solve(const AugmentedModel& m, PrimalDualIterate& it, const SolverSettings& settings,
                  const DiagonalScaling* cached_scaling) {
    settings.validate();
    check_shape(m, it);
    const int T = m.horizon;
    it.X[0] = m.xh0;

    std::optional<DiagonalScaling> own_scaling;
    std::optional<AugmentedModel> scaled;
    const DiagonalScaling* scaling = nullptr;
    if (settings.use_precond) {
        if (cached_scaling == nullptr) own_scaling = compute_scaling(m);
        scaling = cached_scaling != nullptr ? cached_scaling : &*own_scaling;
        scaled = apply_scaling(m, *scaling);
        for (auto& x : it.X) x = scaling->E_diag.cwiseProduct(x);
        for (auto& l : it.Lambda) l = scaling->E_inv_diag.cwiseProduct(l);
    }
    const AugmentedModel& work = scaled ? *scaled : m;
    const CdWorkspace ws = CdWorkspace::build(work, settings.rho);
    const SweepOrder order = settings.use_reverse ? SweepOrder::reverse : SweepOrder::forward;

    SolveReport report;
    std::vector<Vector> lambda_hat = it.Lambda;
    std::vector<Vector> lambda_prev = it.Lambda;
    double alpha = 1.0;

    for (int k = 1; k <= settings.max_outer; ++k) {
        report.outer_iters = k;
        it.Lambda = lambda_hat;
        dual_refresh(work, it);

        for (int pass = 0; pass < settings.max_inner; ++pass) {
            const PassResult pr = cd_full_pass(ws, it, order);
            ++report.inner_iters_total;
            if (!std::isfinite(pr.sigma)) {
                throw DivergenceError(
                    "non-finite coordinate update at outer iteration " + std::to_string(k), k);
            }
            if (pr.sigma <= settings.eps_in) break;
        }

        report.dual_gap = squared_distance(it.Lambda, lambda_hat);
        if (!std::isfinite(report.dual_gap) || !all_finite(it.X) || !all_finite(it.U)) {
            throw DivergenceError("non-finite iterate at outer iteration " + std::to_string(k), k);
        }
        log_trace("outer {}: gap {:.3e}, inner total {}", k, report.dual_gap,
                  report.inner_iters_total);
        if (report.dual_gap <= settings.eps_out) {
            report.converged = true;
            break;
        }

        const double alpha_next = nesterov_alpha(alpha);
        if (settings.use_acceleration) {
            const double beta = (alpha - 1.0) / alpha_next;
            for (int t = 0; t < T; ++t) {
                lambda_hat[t] = it.Lambda[t] + beta * (it.Lambda[t] - lambda_prev[t]);
            }
        } else {
            lambda_hat = it.Lambda;
        }
        lambda_prev = it.Lambda;
        alpha = alpha_next;
    }

    it.Lambda_prev = lambda_prev;
    if (scaling != nullptr) {
        it.X = unscale_states(it.X, *scaling);
        for (auto& l : it.Lambda) l = scaling->E_diag.cwiseProduct(l);
        for (auto& l : it.Lambda_prev) l = scaling->E_diag.cwiseProduct(l);
    }
    report.objective = mpc_objective(m, it);
    if (!report.converged) {
        log_info("solve: not converged after {} outer iterations (gap {:.3e})",
                 report.outer_iters, report.dual_gap);
    }
    return report;
}

}  // namespace cdal
