#pragma once

#include "cdal/problem.hpp"

#include <utility>

namespace cdal {

struct DiscreteModel {
    Matrix A, B;
    Vector e;
};

/// Zero-order-hold discretization via a scaled Taylor series of the
/// exponential of [[Ac, Bc], [0, 0]] * Ts. Throws std::runtime_error if the
/// series has not converged to 1e-12 after 200 terms.
DiscreteModel zoh_discretize(const Matrix& Ac, const Matrix& Bc, double Ts);

/// A_d = I + Ts A_c, B_d = Ts B_c, e_d = Ts e_c
DiscreteModel euler_discretize(const Matrix& Ac, const Matrix& Bc, const Vector& ec, double Ts);

/// Linearized AFTI-16 aircraft (4 states, 2 inputs, 2 outputs).
struct Afti16Model {
    Matrix Ac, Bc, C;
    double Ts = 0.05;
    double u_limit = 25.0;
    double y1_limit = 0.5;
    double y2_limit = 100.0;
    Matrix W_y, W_u, W_du;
    int horizon = 5;

    static Afti16Model standard();

    /// Discretized tracking problem with all bounds applied, at the origin.
    MpcProblem mpc_problem() const;
};

/// Continuously stirred tank reactor, states (C_A, T), input coolant temperature T_c.
struct CstrModel {
    double k0 = 34930800.0;  // 1/min
    double EaR = -5963.6;    // K
    double CAi = 10.0;       // kgmol/m^3
    double Ti_mean = 298.15;
    double Ti_amplitude = 5.0;
    double Ti_frequency = 0.05;  // rad/min
    double Ts = 0.5;             // min
    double CA0 = 8.57;
    double T0 = 311.0;
    int rk4_substeps = 10;

    double W_y = 1.0;
    double W_u = 0.0;
    double W_du = 0.1;
    double du_limit = 1.0;
    int horizon = 10;

    static CstrModel standard() { return {}; }

    /// Inlet temperature at time t (minutes).
    double inlet_temperature(double t) const;
    /// k0 * exp(EaR / T)
    double rate(double T) const;
};

/// f(x, u, Ti) of the reactor equations.
Eigen::Vector2d cstr_derivatives(const CstrModel& m, const Eigen::Vector2d& x, double Tc, double Ti);

struct CstrLinearization {
    Matrix Ac;  // 2x2
    Matrix Bc;  // 2x1
    Vector ec;  // f(x,u) - Ac x - Bc u
};

/// Analytic Jacobians at (x, u, Ti).
CstrLinearization linearize_cstr(const CstrModel& m, const Eigen::Vector2d& x, double Tc, double Ti);

/// Integrate the nonlinear reactor over one sample [t, t + Ts] with fixed-step RK4.
Eigen::Vector2d cstr_plant_step(const CstrModel& m, const Eigen::Vector2d& x, double Tc, double t);

/// Coolant temperature that makes dT/dt = 0 at x.
double cstr_steady_coolant(const CstrModel& m, const Eigen::Vector2d& x, double Ti);

}  // namespace cdal
