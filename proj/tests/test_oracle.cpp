#include "cdal/errors.hpp"
#include "cdal/plants.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <limits>

using namespace cdal;
using namespace cdal::testing;

namespace {

// Minimum of the QP by enumerating every {lower, upper, free} pattern and
// solving the equality-constrained problem on the free coordinates.
Vector brute_force(const oracle::ExplicitQp& qp) {
    const int n = qp.nz();
    const auto rows = qp.G.rows();
    int patterns = 1;
    for (int i = 0; i < n; ++i) patterns *= 3;
    double best = std::numeric_limits<double>::infinity();
    Vector best_z;
    for (int code = 0; code < patterns; ++code) {
        Vector fixed = Vector::Zero(n);
        std::vector<int> free_idx;
        bool usable = true;
        for (int i = 0, c = code; i < n; ++i, c /= 3) {
            const int s = c % 3;
            if (s == 2) {
                free_idx.push_back(i);
            } else {
                const double v = s == 0 ? qp.lo[i] : qp.hi[i];
                if (!std::isfinite(v)) usable = false;
                fixed[i] = v;
            }
        }
        if (!usable) continue;
        const int k = static_cast<int>(free_idx.size());
        Matrix Hf(k, k), Gf(rows, k);
        Vector hf(k);
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) Hf(a, b) = qp.H(free_idx[a], free_idx[b]);
            Gf.col(a) = qp.G.col(free_idx[a]);
            hf[a] = qp.h[free_idx[a]] + qp.H.row(free_idx[a]).dot(fixed);
        }
        Matrix K = Matrix::Zero(k + rows, k + rows);
        K.topLeftCorner(k, k) = Hf;
        K.topRightCorner(k, rows) = Gf.transpose();
        K.bottomLeftCorner(rows, k) = Gf;
        Vector rhs(k + rows);
        rhs << -hf, qp.g - qp.G * fixed;
        const Eigen::FullPivLU<Matrix> lu(K);
        const Vector sol = lu.solve(rhs);
        if ((K * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
        Vector z = fixed;
        for (int a = 0; a < k; ++a) z[free_idx[a]] = sol[a];
        if (((z - qp.lo).array() < -1e-9).any() || ((qp.hi - z).array() < -1e-9).any()) continue;
        if ((qp.G * z - qp.g).cwiseAbs().maxCoeff() > 1e-9) continue;
        const double f = qp.objective(z);
        if (f < best) {
            best = f;
            best_z = z;
        }
    }
    return best_z;
}

}  // namespace

TEST_CASE("solve_box_qp: separable cases") {
    const Matrix P = Matrix::Identity(3, 3);
    const Vector h = Eigen::Vector3d(1.0, -2.0, 0.5);
    const Vector inf = Vector::Constant(3, kInf);
    const Vector z = oracle::solve_box_qp(P, h, -inf, inf, Vector::Zero(3));
    CHECK((z + h).cwiseAbs().maxCoeff() < 1e-12);

    const Vector z0 = oracle::solve_box_qp(P, h, Vector::Zero(3), inf, Vector::Zero(3));
    CHECK((z0 - (-h).cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_box_qp: KKT conditions on random problems") {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 8;
        Matrix M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = normal(rng);
        const Matrix P = M * M.transpose() + 0.1 * Matrix::Identity(n, n);
        Vector c(n), lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
            c[i] = 3.0 * normal(rng);
            lo[i] = trial % 3 == 0 ? -kInf : -std::abs(normal(rng));
            hi[i] = std::abs(normal(rng));
        }
        const Vector z = oracle::solve_box_qp(P, c, lo, hi, Vector::Zero(n));
        const Vector grad = P * z + c;
        for (int i = 0; i < n; ++i) {
            REQUIRE(z[i] >= lo[i]);
            REQUIRE(z[i] <= hi[i]);
            if (z[i] > lo[i] + 1e-12 && z[i] < hi[i] - 1e-12) CHECK(std::abs(grad[i]) < 1e-9);
            else if (z[i] <= lo[i] + 1e-12) CHECK(grad[i] > -1e-9);
            else CHECK(grad[i] < 1e-9);
        }
    }
}

TEST_CASE("build_qp: scalar model, one step") {
    MpcProblem p = MpcProblem::unconstrained(1, 1, 1, 1);
    p.A(0, 0) = 0.5;
    p.B(0, 0) = 1.0;
    p.C(0, 0) = 1.0;
    p.W_y(0, 0) = 2.0;
    p.x0[0] = 2.0;
    p.u_prev[0] = -1.0;
    p.e = Vector();
    const AugmentedModel m = augment(p);
    const oracle::ExplicitQp qp = oracle::build_qp(m);
    Matrix G(2, 3);
    G << 1, -1, 0, 1, 0, -1;
    CHECK(qp.G == G);
    CHECK(qp.g[0] == doctest::Approx(-(0.5 * 2.0 - 1.0)));
    CHECK(qp.g[1] == doctest::Approx(1.0));
    CHECK(qp.H(0, 0) == 1.0);
    CHECK(qp.H(1, 1) == 2.0);
    CHECK(qp.H(2, 2) == 0.0);
}

TEST_CASE("build_qp: AFTI-16 dimensions") {
    MpcProblem p = Afti16Model::standard().mpc_problem();
    p.r = Vector::Zero(2);
    p.x0 = Vector::Zero(4);
    p.u_prev = Vector::Zero(2);
    const oracle::ExplicitQp qp = oracle::build_qp(augment(p));
    CHECK(qp.nz() == 40);
    CHECK(qp.G.rows() == 30);
    CHECK(qp.G.cols() == 40);
}

TEST_CASE("build_qp: rolled-out trajectories are feasible and costed term by term") {
    std::mt19937_64 rng(52);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const MpcProblem p = oracle::random_problem(rng);
        const AugmentedModel m = augment(p);
        std::vector<Vector> dU;
        for (int t = 0; t < p.horizon; ++t) {
            Vector du(p.nu());
            for (int i = 0; i < p.nu(); ++i) du[i] = normal(rng);
            dU.push_back(du);
        }
        const oracle::ExplicitQp qp = oracle::build_qp(m);
        const Vector z = oracle::pack(rollout(m, dU));
        CHECK((qp.G * z - qp.g).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(qp.objective(z) == doctest::Approx(rollout_cost(p, dU)).epsilon(1e-10));

        const PrimalDualIterate back = oracle::unpack(z, m);
        CHECK(oracle::pack(back) == z);
        CHECK(back.X[0] == m.xh0);
    }
}

TEST_CASE("eval_F_rho and its gradient") {
    std::mt19937_64 rng(53);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const AugmentedModel m = augment(oracle::random_problem(rng));
        const oracle::ExplicitQp qp = oracle::build_qp(m);
        const double rho = 0.7;
        Vector lam(qp.G.rows()), z(qp.nz());
        for (auto i = 0; i < lam.size(); ++i) lam[i] = normal(rng);
        for (auto i = 0; i < z.size(); ++i) z[i] = normal(rng);
        CHECK(oracle::eval_F_rho(qp, Vector::Zero(qp.nz()), lam, rho) == 0.0);

        // F_rho differs from obj/rho + 0.5|Gz - g + lam|^2 only by a constant
        auto direct = [&](const Vector& v) {
            return (qp.objective(v) - qp.cost_offset) / rho + 0.5 * (qp.G * v - qp.g + lam).squaredNorm();
        };
        const double shift = direct(Vector::Zero(qp.nz()));
        CHECK(oracle::eval_F_rho(qp, z, lam, rho) == doctest::Approx(direct(z) - shift).epsilon(1e-10));

        const Vector grad = oracle::grad_F_rho(qp, z, lam, rho);
        for (int i = 0; i < qp.nz(); ++i) {
            const double h = 1e-6;
            Vector zp = z, zm = z;
            zp[i] += h;
            zm[i] -= h;
            const double fd = (oracle::eval_F_rho(qp, zp, lam, rho) - oracle::eval_F_rho(qp, zm, lam, rho)) / (2 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("solve_al_subproblem satisfies the box KKT conditions") {
    std::mt19937_64 rng(54);
    for (int trial = 0; trial < 20; ++trial) {
        const AugmentedModel m = augment(oracle::random_problem(rng));
        const oracle::ExplicitQp qp = oracle::build_qp(m);
        const auto lam = oracle::pack_multipliers(random_duals(m, rng));
        const Vector z = oracle::solve_al_subproblem(qp, lam, 0.3);
        const Vector grad = oracle::grad_F_rho(qp, z, lam, 0.3);
        for (int i = 0; i < qp.nz(); ++i) {
            const bool at_lo = z[i] <= qp.lo[i];
            const bool at_hi = z[i] >= qp.hi[i];
            if (!at_lo && !at_hi) CHECK(std::abs(grad[i]) < 1e-8);
            if (at_lo && !at_hi) CHECK(grad[i] > -1e-8);
            if (at_hi && !at_lo) CHECK(grad[i] < 1e-8);
        }
    }
}

TEST_CASE("solve_qp_reference against exhaustive active-set enumeration") {
    std::mt19937_64 rng(55);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        oracle::RandomInstanceOptions o = small_options(2, 2, 1);
        MpcProblem p = oracle::random_problem(rng, o);
        const AugmentedModel m = augment(p);
        const oracle::ExplicitQp qp = oracle::build_qp(m);
        if (qp.nz() > 6) continue;
        const Vector z_bf = brute_force(qp);
        REQUIRE(z_bf.size() == qp.nz());
        const Vector z = oracle::solve_qp_reference(qp).z;
        CHECK((z - z_bf).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(qp.objective(z) == doctest::Approx(qp.objective(z_bf)).epsilon(1e-8));
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("solve_qp_reference: feasibility and multiplier stationarity") {
    std::mt19937_64 rng(56);
    for (int trial = 0; trial < 30; ++trial) {
        const AugmentedModel m = augment(oracle::random_problem(rng));
        const oracle::ExplicitQp qp = oracle::build_qp(m);
        const double rho = 100.0;
        const oracle::ReferenceResult ref = oracle::solve_qp_reference(qp, rho);
        const Vector& z = ref.z;
        CHECK((qp.G * z - qp.g).cwiseAbs().maxCoeff() < 1e-5);
        CHECK(((z - qp.lo).array() >= 0.0).all());
        CHECK(((qp.hi - z).array() >= 0.0).all());
        // H z + h + rho G' lambda lies in the normal cone of the box
        const Vector grad = qp.H * z + qp.h + rho * qp.G.transpose() * ref.lambda;
        const double scale = 1.0 + grad.cwiseAbs().maxCoeff();
        for (int i = 0; i < qp.nz(); ++i) {
            if (z[i] > qp.lo[i] && z[i] < qp.hi[i]) CHECK(std::abs(grad[i]) < 1e-4 * scale);
        }
    }
}

TEST_CASE("random_problem respects the instance family") {
    std::mt19937_64 rng(57);
    for (int trial = 0; trial < 200; ++trial) {
        const MpcProblem p = oracle::random_problem(rng);
        CHECK(p.nx() >= 1);
        CHECK(p.nx() <= 4);
        CHECK(p.nu() >= 1);
        CHECK(p.nu() <= 2);
        CHECK(p.horizon >= 1);
        CHECK(p.horizon <= 5);
        const Eigen::SelfAdjointEigenSolver<Matrix> du(p.W_du);
        CHECK(du.eigenvalues().minCoeff() >= 0.1 - 1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(p.W_y).eigenvalues().minCoeff() >= -1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(p.W_u).eigenvalues().minCoeff() >= -1e-12);
        CHECK_NOTHROW(augment(p));
    }
}
