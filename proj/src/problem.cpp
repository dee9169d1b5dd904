#include "cdal/problem.hpp"

#include "cdal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdal {

namespace {

void require_shape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (M.rows() != rows || M.cols() != cols) {
        throw ConfigError(std::string(name) + ": expected " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                          std::to_string(M.cols()));
    }
}

void require_size(const Vector& v, Eigen::Index n, const char* name) {
    if (v.size() != n) {
        throw ConfigError(std::string(name) + ": expected length " + std::to_string(n) + ", got " +
                          std::to_string(v.size()));
    }
}

void require_finite(const Vector& v, const char* name) {
    if (!v.allFinite()) throw ConfigError(std::string(name) + ": entries must be finite");
}

void require_symmetric(const Matrix& M, const char* name) {
    if (!M.allFinite()) throw ConfigError(std::string(name) + ": entries must be finite");
    const double tol = 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw ConfigError(std::string(name) + ": must be symmetric");
    }
}

void require_ordered(const Vector& lo, const Vector& hi, const char* name) {
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (std::isnan(lo[i]) || std::isnan(hi[i])) {
            throw ConfigError(std::string(name) + ": NaN bound at index " + std::to_string(i));
        }
        if (lo[i] > hi[i]) {
            throw ConfigError(std::string(name) + ": lower bound exceeds upper bound at index " +
                              std::to_string(i));
        }
    }
}

Vector clamp_vec(const Vector& v, const Vector& lo, const Vector& hi) {
    return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

MpcProblem MpcProblem::unconstrained(int nx, int nu, int ny, int horizon) {
    MpcProblem p;
    p.A = Matrix::Zero(nx, nx);
    p.B = Matrix::Zero(nx, nu);
    p.C = Matrix::Zero(ny, nx);
    p.W_y = Matrix::Zero(ny, ny);
    p.W_u = Matrix::Zero(nu, nu);
    p.W_du = Matrix::Identity(nu, nu);
    p.horizon = horizon;
    p.x_min = Vector::Constant(nx, -kInf);
    p.x_max = Vector::Constant(nx, kInf);
    p.u_min = Vector::Constant(nu, -kInf);
    p.u_max = Vector::Constant(nu, kInf);
    p.du_min = Vector::Constant(nu, -kInf);
    p.du_max = Vector::Constant(nu, kInf);
    p.r = Vector::Zero(ny);
    p.x0 = Vector::Zero(nx);
    p.u_prev = Vector::Zero(nu);
    p.e = Vector::Zero(nx);
    return p;
}

void apply_output_bounds(MpcProblem& p, const Vector& y_min, const Vector& y_max) {
    require_size(y_min, p.ny(), "y_min");
    require_size(y_max, p.ny(), "y_max");
    require_ordered(y_min, y_max, "y bounds");
    for (int row = 0; row < p.ny(); ++row) {
        if (!std::isfinite(y_min[row]) && !std::isfinite(y_max[row])) continue;
        int selected = -1;
        for (int j = 0; j < p.nx(); ++j) {
            const double c = p.C(row, j);
            if (c == 0.0) continue;
            if (c != 1.0 || selected >= 0) {
                throw ConfigError("output bounds: row " + std::to_string(row) +
                                  " of C is not a unit vector; only state-selecting outputs can be bounded");
            }
            selected = j;
        }
        if (selected < 0) {
            throw ConfigError("output bounds: row " + std::to_string(row) + " of C is zero");
        }
        p.x_min[selected] = std::max(p.x_min[selected], y_min[row]);
        p.x_max[selected] = std::min(p.x_max[selected], y_max[row]);
        if (p.x_min[selected] > p.x_max[selected]) {
            throw ConfigError("output bounds: empty box for state " + std::to_string(selected));
        }
    }
}

AugmentedModel augment(const MpcProblem& p) {
    const int nx = p.nx();
    if (nx == 0 || p.A.cols() != nx) throw ConfigError("A: must be square and non-empty");
    const int nu = p.nu();
    if (nu == 0) throw ConfigError("B: must have at least one column");
    const int ny = p.ny();
    if (p.horizon < 1) throw ConfigError("horizon: must be >= 1");

    require_shape(p.B, nx, nu, "B");
    require_shape(p.C, ny, nx, "C");
    require_shape(p.W_y, ny, ny, "W_y");
    require_shape(p.W_u, nu, nu, "W_u");
    require_shape(p.W_du, nu, nu, "W_du");
    if (!p.A.allFinite()) throw ConfigError("A: entries must be finite");
    if (!p.B.allFinite()) throw ConfigError("B: entries must be finite");
    if (!p.C.allFinite()) throw ConfigError("C: entries must be finite");
    require_symmetric(p.W_y, "W_y");
    require_symmetric(p.W_u, "W_u");
    require_symmetric(p.W_du, "W_du");
    if (Eigen::LLT<Matrix>(p.W_du).info() != Eigen::Success) {
        throw ConfigError("W_du: must be positive definite");
    }

    require_size(p.x_min, nx, "x_min");
    require_size(p.x_max, nx, "x_max");
    require_size(p.u_min, nu, "u_min");
    require_size(p.u_max, nu, "u_max");
    require_size(p.du_min, nu, "du_min");
    require_size(p.du_max, nu, "du_max");
    require_ordered(p.x_min, p.x_max, "x bounds");
    require_ordered(p.u_min, p.u_max, "u bounds");
    require_ordered(p.du_min, p.du_max, "du bounds");

    require_size(p.r, ny, "r");
    require_finite(p.r, "r");
    require_size(p.x0, nx, "x0");
    require_finite(p.x0, "x0");
    require_size(p.u_prev, nu, "u_prev");
    require_finite(p.u_prev, "u_prev");

    Vector u_ref = p.u_ref;
    if (u_ref.size() == 0) {
        if (!p.W_u.isZero(0.0)) throw ConfigError("u_ref: required when W_u is nonzero");
        u_ref = p.u_prev;
    }
    require_size(u_ref, nu, "u_ref");
    require_finite(u_ref, "u_ref");

    Vector e = p.e.size() == 0 ? Vector::Zero(nx) : p.e;
    require_size(e, nx, "e");
    require_finite(e, "e");

    const int nxh = nx + nu;
    AugmentedModel m;
    m.horizon = p.horizon;

    m.A_hat = Matrix::Zero(nxh, nxh);
    m.A_hat.topLeftCorner(nx, nx) = p.A;
    m.A_hat.topRightCorner(nx, nu) = p.B;
    m.A_hat.bottomRightCorner(nu, nu).setIdentity();

    m.B_hat.resize(nxh, nu);
    m.B_hat.topRows(nx) = p.B;
    m.B_hat.bottomRows(nu).setIdentity();

    Matrix C_hat = Matrix::Zero(ny + nu, nxh);
    C_hat.topLeftCorner(ny, nx) = p.C;
    C_hat.bottomRightCorner(nu, nu).setIdentity();
    Matrix W_hat = Matrix::Zero(ny + nu, ny + nu);
    W_hat.topLeftCorner(ny, ny) = p.W_y;
    W_hat.bottomRightCorner(nu, nu) = p.W_u;
    Vector r_hat(ny + nu);
    r_hat << p.r, u_ref;

    m.Q = C_hat.transpose() * W_hat * C_hat;
    m.Q = 0.5 * (m.Q + m.Q.transpose());
    m.R = p.W_du;
    m.q_lin = -(C_hat.transpose() * (W_hat * r_hat));
    m.stage_constant = 0.5 * r_hat.dot(W_hat * r_hat);

    m.xh_min.resize(nxh);
    m.xh_min << p.x_min, p.u_min;
    m.xh_max.resize(nxh);
    m.xh_max << p.x_max, p.u_max;
    m.uh_min = p.du_min;
    m.uh_max = p.du_max;

    m.e_hat = Vector::Zero(nxh);
    m.e_hat.head(nx) = e;
    m.xh0.resize(nxh);
    m.xh0 << p.x0, p.u_prev;
    return m;
}

PrimalDualIterate cold_start(const AugmentedModel& m) {
    const int T = m.horizon;
    PrimalDualIterate it;
    it.U.assign(T, Vector::Zero(m.nu()));
    it.Lambda.assign(T, Vector::Zero(m.nxh()));
    it.Lambda_prev = it.Lambda;
    it.X.reserve(T + 1);
    it.X.push_back(m.xh0);
    Vector x = m.xh0;
    for (int t = 0; t < T; ++t) {
        x = m.A_hat * x + m.e_hat;
        x = clamp_vec(x, m.xh_min, m.xh_max);
        it.X.push_back(x);
    }
    return it;
}

PrimalDualIterate shift_warm_start(const PrimalDualIterate& prev, const Vector& new_xh0,
                                   const AugmentedModel& m) {
    const int T = prev.horizon();
    PrimalDualIterate it;
    it.U.reserve(T);
    it.Lambda.reserve(T);
    for (int t = 0; t < T; ++t) {
        const int src = std::min(t + 1, T - 1);
        it.U.push_back(clamp_vec(prev.U[src], m.uh_min, m.uh_max));
        it.Lambda.push_back(prev.Lambda[src]);
    }
    it.X.reserve(T + 1);
    it.X.push_back(new_xh0);
    for (int t = 1; t <= T; ++t) {
        const int src = std::min(t + 1, T);
        it.X.push_back(clamp_vec(prev.X[src], m.xh_min, m.xh_max));
    }
    it.Lambda_prev = it.Lambda;
    return it;
}

double mpc_objective(const AugmentedModel& m, const PrimalDualIterate& it) {
    double f = 0.0;
    for (int t = 0; t < m.horizon; ++t) {
        const Vector& u = it.U[t];
        const Vector& x = it.X[t + 1];
        f += 0.5 * u.dot(m.R * u) + 0.5 * x.dot(m.Q * x) + m.q_lin.dot(x) + m.stage_constant;
    }
    return f;
}

double dynamics_residual(const AugmentedModel& m, const PrimalDualIterate& it) {
    double worst = 0.0;
    for (int t = 0; t < m.horizon; ++t) {
        const Vector res = m.A_hat * it.X[t] + m.B_hat * it.U[t] + m.e_hat - it.X[t + 1];
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

double closed_loop_cost(const ClosedLoopLog& log) {
    if (log.records.empty()) throw std::invalid_argument("closed_loop_cost: empty log");
    double total = 0.0;
    for (const auto& rec : log.records) {
        const Vector ey = rec.y - rec.r;
        const Vector eu = rec.u - rec.u_ref;
        total += ey.dot(log.W_y * ey) + eu.dot(log.W_u * eu) + rec.du.dot(log.W_du * rec.du);
    }
    return total / static_cast<double>(log.records.size());
}

}  // namespace cdal
