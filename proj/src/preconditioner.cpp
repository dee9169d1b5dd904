#include "cdal/preconditioner.hpp"

#include "cdal/errors.hpp"
#include "cdal/log.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdal {

namespace {
constexpr double kMinScale = 1e-8;
constexpr double kMaxScale = 1e8;

// Bounds scale like the states; infinite entries stay infinite.
Vector scale_bounds(const Vector& b, const Vector& E) {
    Vector out = b;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (std::isfinite(b[i])) out[i] = E[i] * b[i];
    }
    return out;
}
}  // namespace

DiagonalScaling compute_scaling(const AugmentedModel& m) {
    const int n = m.nxh();
    DiagonalScaling s;
    s.E_diag.resize(n);
    s.E_inv_diag.resize(n);
    for (int i = 0; i < n; ++i) {
        const double radicand = m.Q(i, i) + m.A_hat.col(i).squaredNorm();
        if (!(radicand > 0.0)) {
            throw ConfigError("unscalable coordinate " + std::to_string(i));
        }
        double e = std::sqrt(radicand);
        if (e < kMinScale || e > kMaxScale || !std::isfinite(e)) {
            log_info("preconditioner: clamping scale of coordinate {} ({:g})", i, e);
            e = std::clamp(std::isfinite(e) ? e : kMaxScale, kMinScale, kMaxScale);
        }
        s.E_diag[i] = e;
        s.E_inv_diag[i] = 1.0 / e;
    }
    return s;
}

AugmentedModel apply_scaling(const AugmentedModel& m, const DiagonalScaling& s) {
    const int n = m.nxh();
    if (s.E_diag.size() != n || s.E_inv_diag.size() != n) {
        throw ConfigError("scaling: dimension does not match model state size");
    }
    const auto E = s.E_diag.asDiagonal();
    const auto E_inv = s.E_inv_diag.asDiagonal();

    AugmentedModel out = m;
    out.A_hat = E * m.A_hat * E_inv;
    out.B_hat = E * m.B_hat;
    out.Q = E_inv * m.Q * E_inv;
    out.q_lin = E_inv * m.q_lin;
    out.xh_min = scale_bounds(m.xh_min, s.E_diag);
    out.xh_max = scale_bounds(m.xh_max, s.E_diag);
    out.e_hat = E * m.e_hat;
    out.xh0 = E * m.xh0;
    return out;
}

std::vector<Vector> unscale_states(const std::vector<Vector>& X_bar, const DiagonalScaling& s) {
    std::vector<Vector> X;
    X.reserve(X_bar.size());
    for (const auto& x : X_bar) X.push_back(s.E_inv_diag.cwiseProduct(x));
    return X;
}

}  // namespace cdal
