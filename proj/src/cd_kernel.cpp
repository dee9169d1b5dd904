#include "cdal/cd_kernel.hpp"

#include "cdal/errors.hpp"

namespace cdal {

CdWorkspace CdWorkspace::build(const AugmentedModel& m, double rho) {
    if (!(rho > 0.0)) throw ConfigError("rho: must be positive");
    const int n = m.nxh();
    CdWorkspace ws;
    ws.model = &m;
    ws.rho = rho;
    ws.Q_rho = m.Q / rho;
    ws.R_rho = m.R / rho;
    ws.q_rho = m.q_lin / rho;
    ws.phi1 = ws.R_rho + m.B_hat.transpose() * m.B_hat;
    ws.phi6 = ws.Q_rho + Matrix::Identity(n, n);
    ws.phi3 = ws.phi6 + m.A_hat.transpose() * m.A_hat;
    ws.diag1 = ws.phi1.diagonal();
    ws.diag3 = ws.phi3.diagonal();
    ws.diag6 = ws.phi6.diagonal();
    return ws;
}

void ccd_input_block(int t, const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                     SweepOrder order) {
    const AugmentedModel& m = *ws.model;
    const int nu = m.nu();
    Vector& u = it.U[t];
    Vector& lam = it.Lambda[t];
    for (int k = 0; k < nu; ++k) {
        const int i = order == SweepOrder::reverse ? nu - 1 - k : k;
        const double s = ws.R_rho.col(i).dot(u) + m.B_hat.col(i).dot(lam);
        const double theta = clamp(u[i] - s / ws.diag1[i], m.uh_min[i], m.uh_max[i]);
        const double delta = theta - u[i];
        if (delta == 0.0) continue;
        sigma += delta * delta;
        u[i] = theta;
        lam.noalias() += delta * m.B_hat.col(i);
    }
}

void ccd_state_block(int t, const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                     SweepOrder order) {
    const AugmentedModel& m = *ws.model;
    const int n = m.nxh();
    Vector& x = it.X[t + 1];
    Vector& lam = it.Lambda[t];
    Vector& lam_next = it.Lambda[t + 1];
    for (int k = 0; k < n; ++k) {
        const int i = order == SweepOrder::reverse ? n - 1 - k : k;
        const double s = ws.Q_rho.col(i).dot(x) + ws.q_rho[i] - lam[i] +
                         m.A_hat.col(i).dot(lam_next);
        const double theta = clamp(x[i] - s / ws.diag3[i], m.xh_min[i], m.xh_max[i]);
        const double delta = theta - x[i];
        if (delta == 0.0) continue;
        sigma += delta * delta;
        x[i] = theta;
        lam[i] -= delta;
        lam_next.noalias() += delta * m.A_hat.col(i);
    }
}

void ccd_terminal_state(const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                        SweepOrder order) {
    const AugmentedModel& m = *ws.model;
    const int n = m.nxh();
    const int T = m.horizon;
    Vector& x = it.X[T];
    Vector& lam = it.Lambda[T - 1];
    for (int k = 0; k < n; ++k) {
        const int i = order == SweepOrder::reverse ? n - 1 - k : k;
        const double s = ws.Q_rho.col(i).dot(x) + ws.q_rho[i] - lam[i];
        const double theta = clamp(x[i] - s / ws.diag6[i], m.xh_min[i], m.xh_max[i]);
        const double delta = theta - x[i];
        if (delta == 0.0) continue;
        sigma += delta * delta;
        x[i] = theta;
        lam[i] -= delta;
    }
}

PassResult cd_full_pass(const CdWorkspace& ws, PrimalDualIterate& it, SweepOrder order) {
    const AugmentedModel& m = *ws.model;
    const int T = m.horizon;
    PassResult res;
    double sigma = 0.0;
    if (order == SweepOrder::reverse) {
        ccd_terminal_state(ws, it, sigma, order);
        ccd_input_block(T - 1, ws, it, sigma, order);
        for (int t = T - 2; t >= 0; --t) {
            ccd_state_block(t, ws, it, sigma, order);
            ccd_input_block(t, ws, it, sigma, order);
        }
    } else {
        for (int t = 0; t < T - 1; ++t) {
            ccd_input_block(t, ws, it, sigma, order);
            ccd_state_block(t, ws, it, sigma, order);
        }
        ccd_input_block(T - 1, ws, it, sigma, order);
        ccd_terminal_state(ws, it, sigma, order);
    }
    res.sigma = sigma;
    res.updates = static_cast<long>(T) * (m.nxh() + m.nu());
    return res;
}

}  // namespace cdal
