#pragma once

#include "cdal/problem.hpp"

#include <vector>

namespace cdal {

/// Diagonal change of state variables x_bar = E x_hat.
struct DiagonalScaling {
    Vector E_diag;
    Vector E_inv_diag;
};

/// E_ii = sqrt(Q_ii + ||A_hat(:, i)||^2), clamped to [1e-8, 1e8].
/// Throws ConfigError("unscalable coordinate i") when the radicand is zero.
DiagonalScaling compute_scaling(const AugmentedModel& m);

/// Model in the scaled coordinates. Dynamics, cost, bounds, offset and the
/// initial state are all transformed so the scaled problem has the same
/// input minimizer as the original one.
AugmentedModel apply_scaling(const AugmentedModel& m, const DiagonalScaling& s);

/// x_hat = E^{-1} x_bar for every stage.
std::vector<Vector> unscale_states(const std::vector<Vector>& X_bar, const DiagonalScaling& s);

}  // namespace cdal
