#include "cdal/oracle.hpp"

#include "cdal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdal::oracle {

namespace {

int block_size(const AugmentedModel& m) { return m.nxh() + m.nu(); }
int u_offset(const AugmentedModel& m, int t) { return t * block_size(m); }
int x_offset(const AugmentedModel& m, int t) { return (t - 1) * block_size(m) + m.nu(); }  // t >= 1

}  // namespace

ExplicitQp build_qp(const AugmentedModel& m) {
    const int T = m.horizon;
    const int n = m.nxh();
    const int nu = m.nu();
    const int nz = T * (n + nu);

    ExplicitQp qp;
    qp.nxh = n;
    qp.nu = nu;
    qp.horizon = T;
    qp.H = Matrix::Zero(nz, nz);
    qp.h = Vector::Zero(nz);
    qp.G = Matrix::Zero(T * n, nz);
    qp.g = Vector::Zero(T * n);
    qp.lo.resize(nz);
    qp.hi.resize(nz);
    qp.cost_offset = T * m.stage_constant;

    for (int t = 0; t < T; ++t) {
        const int iu = u_offset(m, t);
        const int ix = x_offset(m, t + 1);
        qp.H.block(iu, iu, nu, nu) = m.R;
        qp.H.block(ix, ix, n, n) = m.Q;
        qp.h.segment(ix, n) = m.q_lin;
        qp.lo.segment(iu, nu) = m.uh_min;
        qp.hi.segment(iu, nu) = m.uh_max;
        qp.lo.segment(ix, n) = m.xh_min;
        qp.hi.segment(ix, n) = m.xh_max;

        const int row = t * n;
        if (t > 0) qp.G.block(row, x_offset(m, t), n, n) = m.A_hat;
        qp.G.block(row, iu, n, nu) = m.B_hat;
        qp.G.block(row, ix, n, n) = -Matrix::Identity(n, n);
        qp.g.segment(row, n) = -m.e_hat;
    }
    qp.g.head(n) -= m.A_hat * m.xh0;
    return qp;
}

Vector pack(const PrimalDualIterate& it) {
    const int T = it.horizon();
    const int nu = static_cast<int>(it.U[0].size());
    const int n = static_cast<int>(it.X[0].size());
    Vector z(T * (n + nu));
    for (int t = 0; t < T; ++t) {
        z.segment(t * (n + nu), nu) = it.U[t];
        z.segment(t * (n + nu) + nu, n) = it.X[t + 1];
    }
    return z;
}

Vector pack_multipliers(const std::vector<Vector>& Lambda) {
    const auto n = Lambda.empty() ? 0 : Lambda[0].size();
    Vector out(static_cast<Eigen::Index>(Lambda.size()) * n);
    for (size_t t = 0; t < Lambda.size(); ++t) out.segment(static_cast<Eigen::Index>(t) * n, n) = Lambda[t];
    return out;
}

PrimalDualIterate unpack(const Vector& z, const AugmentedModel& m) {
    const int T = m.horizon;
    PrimalDualIterate it;
    it.X.push_back(m.xh0);
    for (int t = 0; t < T; ++t) {
        it.U.push_back(z.segment(u_offset(m, t), m.nu()));
        it.X.push_back(z.segment(x_offset(m, t + 1), m.nxh()));
    }
    it.Lambda.assign(T, Vector::Zero(m.nxh()));
    it.Lambda_prev = it.Lambda;
    return it;
}

double eval_F_rho(const ExplicitQp& qp, const Vector& z, const Vector& lambda_hat, double rho) {
    const Vector Gz = qp.G * z;
    const double quad = z.dot(qp.H * z) / rho + Gz.squaredNorm();
    const double lin = qp.h.dot(z) / rho + Gz.dot(lambda_hat) - Gz.dot(qp.g);
    return 0.5 * quad + lin;
}

Vector grad_F_rho(const ExplicitQp& qp, const Vector& z, const Vector& lambda_hat, double rho) {
    return qp.H * z / rho + qp.G.transpose() * (qp.G * z + lambda_hat - qp.g) + qp.h / rho;
}

Vector solve_box_qp(const Matrix& P, const Vector& c, const Vector& lo, const Vector& hi,
                    const Vector& z0) {
    const Eigen::Index n = P.rows();
    // -1: held at lower bound, +1: held at upper bound, 0: free
    std::vector<int> status(n, 0);
    Vector z = z0.cwiseMax(lo).cwiseMin(hi);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (z[i] == lo[i]) status[i] = -1;
        else if (z[i] == hi[i]) status[i] = 1;
    }

    const long budget = 50 * n + 1000;
    for (long iter = 0; iter < budget; ++iter) {
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i)
            if (status[i] == 0) free.push_back(i);

        if (!free.empty()) {
            const auto nf = static_cast<Eigen::Index>(free.size());
            Matrix Pff(nf, nf);
            Vector rhs(nf);
            const Vector grad = P * z + c;
            for (Eigen::Index a = 0; a < nf; ++a) {
                rhs[a] = -grad[free[a]];
                for (Eigen::Index b = 0; b < nf; ++b) Pff(a, b) = P(free[a], free[b]);
            }
            const Vector step = Pff.ldlt().solve(rhs);

            double alpha = 1.0;
            Eigen::Index blocking = -1;
            int side = 0;
            for (Eigen::Index a = 0; a < nf; ++a) {
                const Eigen::Index i = free[a];
                if (step[a] < 0.0 && std::isfinite(lo[i])) {
                    const double ai = (lo[i] - z[i]) / step[a];
                    if (ai < alpha) { alpha = ai; blocking = i; side = -1; }
                } else if (step[a] > 0.0 && std::isfinite(hi[i])) {
                    const double ai = (hi[i] - z[i]) / step[a];
                    if (ai < alpha) { alpha = ai; blocking = i; side = 1; }
                }
            }
            alpha = std::max(alpha, 0.0);
            for (Eigen::Index a = 0; a < nf; ++a) z[free[a]] += alpha * step[a];
            if (blocking >= 0) {
                z[blocking] = side < 0 ? lo[blocking] : hi[blocking];
                status[blocking] = side;
                continue;
            }
        }

        const Vector grad = P * z + c;
        const double tol = 1e-13 * (1.0 + grad.cwiseAbs().maxCoeff());
        Eigen::Index release = -1;
        double worst = tol;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (status[i] == 0 || lo[i] == hi[i]) continue;
            // multiplier sign: at lower we need grad >= 0, at upper grad <= 0
            const double violation = status[i] < 0 ? -grad[i] : grad[i];
            if (violation > worst) { worst = violation; release = i; }
        }
        if (release < 0) return z;
        status[release] = 0;
    }
    throw OracleError("box QP active-set iteration budget exhausted");
}

Vector solve_al_subproblem(const ExplicitQp& qp, const Vector& lambda_hat, double rho) {
    const Matrix P = qp.H / rho + qp.G.transpose() * qp.G;
    const Vector c = qp.h / rho + qp.G.transpose() * (lambda_hat - qp.g);
    return solve_box_qp(P, c, qp.lo, qp.hi, Vector::Zero(qp.nz()));
}

ReferenceResult solve_qp_reference(const ExplicitQp& qp, double rho, double tol, int max_outer) {
    const Matrix P = qp.H / rho + qp.G.transpose() * qp.G;
    const double scale = std::max(1.0, qp.g.cwiseAbs().maxCoeff());
    ReferenceResult res;
    res.lambda = Vector::Zero(qp.G.rows());
    res.z = Vector::Zero(qp.nz());
    for (int k = 1; k <= max_outer; ++k) {
        const Vector c = qp.h / rho + qp.G.transpose() * (res.lambda - qp.g);
        const Vector z = solve_box_qp(P, c, qp.lo, qp.hi, res.z);
        const Vector residual = qp.G * z - qp.g;
        res.lambda += residual;
        const double dz = (z - res.z).cwiseAbs().maxCoeff();
        res.z = z;
        res.outer_iters = k;
        if (!residual.allFinite()) throw OracleError("reference solve produced non-finite values");
        if (residual.cwiseAbs().maxCoeff() <= tol * scale &&
            dz <= tol * std::max(1.0, z.cwiseAbs().maxCoeff())) {
            return res;
        }
    }
    throw OracleError("reference solve did not converge in " + std::to_string(max_outer) +
                      " multiplier updates");
}

MpcProblem random_problem(std::mt19937_64& rng, const RandomInstanceOptions& opts) {
    std::uniform_int_distribution<int> nx_dist(1, opts.nx_max);
    std::uniform_int_distribution<int> nu_dist(1, opts.nu_max);
    std::uniform_int_distribution<int> T_dist(1, opts.horizon_max);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> margin(opts.min_margin, 0.5);

    const int nx = nx_dist(rng);
    const int nu = nu_dist(rng);
    std::uniform_int_distribution<int> ny_dist(1, nx);
    const int ny = ny_dist(rng);
    const int T = T_dist(rng);

    auto randn = [&](int r, int c) {
        Matrix M(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) M(i, j) = normal(rng);
        return M;
    };
    auto randv = [&](int n, double s) { return Vector(s * randn(n, 1)); };

    MpcProblem p = MpcProblem::unconstrained(nx, nu, ny, T);
    p.A = randn(nx, nx);
    const double radius = p.A.eigenvalues().cwiseAbs().maxCoeff();
    p.A *= (0.5 + 0.7 * unit(rng)) / std::max(radius, 1e-6);
    p.B = randn(nx, nu);
    p.C = randn(ny, nx);

    const Matrix Ly = randn(ny, ny);
    p.W_y = Ly * Ly.transpose();
    if (unit(rng) < 0.5) {
        const Matrix Lu = randn(nu, nu);
        p.W_u = 0.3 * Lu * Lu.transpose();
        p.u_ref = randv(nu, 1.0);
    }
    const Matrix Ld = randn(nu, nu);
    p.W_du = 0.5 * Ld * Ld.transpose() + 0.1 * Matrix::Identity(nu, nu);

    p.x0 = randv(nx, 1.0);
    p.u_prev = randv(nu, 1.0);
    p.r = randv(ny, 2.0);
    if (opts.affine_offset && unit(rng) < 0.5) p.e = randv(nx, 0.3);

    // Rolled-out reference trajectory that the bounds are built around.
    Vector x = p.x0;
    Vector u = p.u_prev;
    Vector xlo = Vector::Constant(nx, kInf), xhi = Vector::Constant(nx, -kInf);
    Vector ulo = Vector::Constant(nu, kInf), uhi = Vector::Constant(nu, -kInf);
    Vector dlo = Vector::Constant(nu, kInf), dhi = Vector::Constant(nu, -kInf);
    for (int t = 0; t < T; ++t) {
        const Vector du = randv(nu, 0.5);
        u += du;
        x = p.A * x + p.B * u + p.e;
        xlo = xlo.cwiseMin(x);
        xhi = xhi.cwiseMax(x);
        ulo = ulo.cwiseMin(u);
        uhi = uhi.cwiseMax(u);
        dlo = dlo.cwiseMin(du);
        dhi = dhi.cwiseMax(du);
    }
    auto widen = [&](const Vector& lo, const Vector& hi, Vector& out_lo, Vector& out_hi) {
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            const double margin_lo = unit(rng) < opts.zero_margin_probability ? 0.0 : margin(rng);
            const double margin_hi = unit(rng) < opts.zero_margin_probability ? 0.0 : margin(rng);
            out_lo[i] = unit(rng) < opts.infinite_bound_probability ? -kInf : lo[i] - margin_lo;
            out_hi[i] = unit(rng) < opts.infinite_bound_probability ? kInf : hi[i] + margin_hi;
        }
    };
    widen(xlo, xhi, p.x_min, p.x_max);
    widen(ulo, uhi, p.u_min, p.u_max);
    widen(dlo, dhi, p.du_min, p.du_max);
    return p;
}

}  // namespace cdal::oracle
