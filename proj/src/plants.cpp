#include "cdal/plants.hpp"

#include "cdal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cdal {

DiscreteModel zoh_discretize(const Matrix& Ac, const Matrix& Bc, double Ts) {
    if (!(Ts > 0.0)) throw ConfigError("Ts: must be positive");
    const Eigen::Index n = Ac.rows();
    const Eigen::Index m = Bc.cols();
    if (Ac.cols() != n || Bc.rows() != n) throw ConfigError("zoh_discretize: dimension mismatch");

    Matrix M = Matrix::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = Ac * Ts;
    M.topRightCorner(n, m) = Bc * Ts;

    // exp(M) = exp(M / 2^s)^(2^s), with the series evaluated on the scaled matrix
    const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    M /= std::ldexp(1.0, squarings);

    Matrix sum = Matrix::Identity(n + m, n + m);
    Matrix term = Matrix::Identity(n + m, n + m);
    bool converged = false;
    for (int k = 1; k <= 200; ++k) {
        term = term * M / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, sum.cwiseAbs().maxCoeff())) {
            converged = true;
            break;
        }
    }
    if (!converged) throw std::runtime_error("zoh_discretize: series did not converge in 200 terms");
    for (int i = 0; i < squarings; ++i) sum = sum * sum;

    DiscreteModel d;
    d.A = sum.topLeftCorner(n, n);
    d.B = sum.topRightCorner(n, m);
    d.e = Vector::Zero(n);
    return d;
}

DiscreteModel euler_discretize(const Matrix& Ac, const Matrix& Bc, const Vector& ec, double Ts) {
    DiscreteModel d;
    d.A = Matrix::Identity(Ac.rows(), Ac.cols()) + Ts * Ac;
    d.B = Ts * Bc;
    d.e = Ts * ec;
    return d;
}

Afti16Model Afti16Model::standard() {
    Afti16Model m;
    m.Ac.resize(4, 4);
    m.Ac << -0.0151, -60.5651, 0, -32.174,
            -0.0001, -1.3411, 0.9929, 0,
            0.00018, 43.2541, -0.86939, 0,
            0, 0, 1, 0;
    m.Bc.resize(4, 2);
    m.Bc << -2.516, -13.136,
            -0.1689, -0.2514,
            -17.251, -1.5766,
            0, 0;
    m.C.resize(2, 4);
    m.C << 0, 1, 0, 0,
           0, 0, 0, 1;
    m.W_y = Eigen::Vector2d(10.0, 10.0).asDiagonal();
    m.W_u = Matrix::Zero(2, 2);
    m.W_du = Eigen::Vector2d(0.1, 0.1).asDiagonal();
    return m;
}

MpcProblem Afti16Model::mpc_problem() const {
    const DiscreteModel d = zoh_discretize(Ac, Bc, Ts);
    MpcProblem p = MpcProblem::unconstrained(4, 2, 2, horizon);
    p.A = d.A;
    p.B = d.B;
    p.C = C;
    p.W_y = W_y;
    p.W_u = W_u;
    p.W_du = W_du;
    p.u_min = Vector::Constant(2, -u_limit);
    p.u_max = Vector::Constant(2, u_limit);
    apply_output_bounds(p, Eigen::Vector2d(-y1_limit, -y2_limit), Eigen::Vector2d(y1_limit, y2_limit));
    return p;
}

double CstrModel::inlet_temperature(double t) const {
    return Ti_mean + Ti_amplitude * std::sin(Ti_frequency * t);
}

double CstrModel::rate(double T) const { return k0 * std::exp(EaR / T); }

Eigen::Vector2d cstr_derivatives(const CstrModel& m, const Eigen::Vector2d& x, double Tc, double Ti) {
    const double CA = x[0];
    const double T = x[1];
    const double reaction = m.rate(T) * CA;
    return {m.CAi - CA - reaction, Ti + 0.3 * Tc - 1.3 * T + 11.92 * reaction};
}

CstrLinearization linearize_cstr(const CstrModel& m, const Eigen::Vector2d& x, double Tc, double Ti) {
    const double CA = x[0];
    const double T = x[1];
    const double k = m.rate(T);
    const double dk_dT = -k * m.EaR / (T * T);

    CstrLinearization lin;
    lin.Ac.resize(2, 2);
    lin.Ac << -1.0 - k, -dk_dT * CA,
              11.92 * k, -1.3 + 11.92 * dk_dT * CA;
    lin.Bc.resize(2, 1);
    lin.Bc << 0.0, 0.3;
    const Eigen::Vector2d f = cstr_derivatives(m, x, Tc, Ti);
    lin.ec = f - lin.Ac * x - lin.Bc.col(0) * Tc;
    return lin;
}

Eigen::Vector2d cstr_plant_step(const CstrModel& m, const Eigen::Vector2d& x0, double Tc, double t0) {
    const double h = m.Ts / m.rk4_substeps;
    Eigen::Vector2d x = x0;
    double t = t0;
    for (int i = 0; i < m.rk4_substeps; ++i) {
        const double Ti0 = m.inlet_temperature(t);
        const double Ti_mid = m.inlet_temperature(t + 0.5 * h);
        const double Ti1 = m.inlet_temperature(t + h);
        const Eigen::Vector2d k1 = cstr_derivatives(m, x, Tc, Ti0);
        const Eigen::Vector2d k2 = cstr_derivatives(m, x + 0.5 * h * k1, Tc, Ti_mid);
        const Eigen::Vector2d k3 = cstr_derivatives(m, x + 0.5 * h * k2, Tc, Ti_mid);
        const Eigen::Vector2d k4 = cstr_derivatives(m, x + h * k3, Tc, Ti1);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return x;
}

double cstr_steady_coolant(const CstrModel& m, const Eigen::Vector2d& x, double Ti) {
    return (1.3 * x[1] - Ti - 11.92 * m.rate(x[1]) * x[0]) / 0.3;
}

}  // namespace cdal
