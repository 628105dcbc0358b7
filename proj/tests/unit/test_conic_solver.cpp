#include <doctest.h>

#include <cmath>
#include <random>

#include "core/conic_solver.hpp"

using namespace gridmask;

namespace {

ConicProblemData empty(int n) {
    ConicProblemData p;
    p.c = Eigen::VectorXd::Zero(n);
    p.A = Eigen::MatrixXd::Zero(0, n);
    p.b = Eigen::VectorXd::Zero(0);
    return p;
}

bool in_soc(const Eigen::VectorXd& u, double tol) { return u[0] + tol >= u.tail(u.size() - 1).norm(); }

}  // namespace

TEST_CASE("small LP") {
    // min -x - y  s.t. x + y <= 1, x >= 0, y >= 0
    ConicProblemData p = empty(2);
    p.c << -1, -1;
    p.G.resize(3, 2);
    p.G << 1, 1, -1, 0, 0, -1;
    p.h.resize(3);
    p.h << 1, 0, 0;
    p.dims.nonneg = 3;
    ConicResult r = solve_conic(p);
    REQUIRE(r.status == ConicStatus::Optimal);
    CHECK(r.primal_objective == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(r.x.sum() == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("LP with a unique vertex and equality rows") {
    // min x + 2y  s.t. x + y = 3, x <= 2, x, y >= 0  ->  x = 2, y = 1
    ConicProblemData p = empty(2);
    p.c << 1, 2;
    p.A.resize(1, 2);
    p.A << 1, 1;
    p.b.resize(1);
    p.b << 3;
    p.G.resize(3, 2);
    p.G << 1, 0, -1, 0, 0, -1;
    p.h.resize(3);
    p.h << 2, 0, 0;
    p.dims.nonneg = 3;
    ConicResult r = solve_conic(p);
    REQUIRE(r.status == ConicStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.primal_objective == doctest::Approx(r.dual_objective).epsilon(1e-7));
}

TEST_CASE("second-order cone with equality") {
    // min t  s.t. a + b = 2, ||(a, b)|| <= t  ->  a = b = 1, t = sqrt 2
    ConicProblemData p = empty(3);
    p.c << 1, 0, 0;
    p.A.resize(1, 3);
    p.A << 0, 1, 1;
    p.b.resize(1);
    p.b << 2;
    p.G = -Eigen::MatrixXd::Identity(3, 3);
    p.h = Eigen::VectorXd::Zero(3);
    p.dims.soc = {3};
    ConicResult r = solve_conic(p);
    REQUIRE(r.status == ConicStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("projection onto a point: min ||x - c|| over a box") {
    // x in [0,1]^2, target (2, 0.5): distance 1 at x = (1, 0.5)
    ConicProblemData p = empty(3);  // (t, x1, x2)
    p.c << 1, 0, 0;
    p.G = Eigen::MatrixXd::Zero(7, 3);
    p.h = Eigen::VectorXd::Zero(7);
    p.G(0, 1) = 1; p.h[0] = 1;
    p.G(1, 1) = -1;
    p.G(2, 2) = 1; p.h[2] = 1;
    p.G(3, 2) = -1;
    // h - Gx = (t, x1 - 2, x2 - 0.5)
    p.G(4, 0) = -1;
    p.G(5, 1) = -1; p.h[5] = -2;
    p.G(6, 2) = -1; p.h[6] = -0.5;
    p.dims.nonneg = 4;
    p.dims.soc = {3};
    ConicResult r = solve_conic(p);
    REQUIRE(r.status == ConicStatus::Optimal);
    CHECK(r.primal_objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.x[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("infeasibility is detected") {
    // x >= 1 and x <= 0
    ConicProblemData p = empty(1);
    p.c << 1;
    p.G.resize(2, 1);
    p.G << -1, 1;
    p.h.resize(2);
    p.h << -1, 0;
    p.dims.nonneg = 2;
    CHECK(solve_conic(p).status == ConicStatus::PrimalInfeasible);
}

TEST_CASE("unboundedness is detected") {
    ConicProblemData p = empty(1);
    p.c << -1;
    p.G.resize(1, 1);
    p.G << -1;
    p.h.resize(1);
    p.h << 0;
    p.dims.nonneg = 1;
    CHECK(solve_conic(p).status == ConicStatus::DualInfeasible);
}

TEST_CASE("random feasible SOCPs satisfy the optimality conditions") {
    std::mt19937 rng(11);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        CAPTURE(trial);
        const int n = 4, m_lin = 3, q = 4;
        ConicProblemData p = empty(n);
        p.G = Eigen::MatrixXd::Zero(m_lin + q, n);
        for (int i = 0; i < m_lin + q; ++i)
            for (int j = 0; j < n; ++j) p.G(i, j) = N(rng);
        // s0, z0 strictly inside the cone make both problems strictly feasible
        Eigen::VectorXd x0(n), s0(m_lin + q), z0(m_lin + q);
        for (int j = 0; j < n; ++j) x0[j] = N(rng);
        for (int i = 0; i < m_lin; ++i) {
            s0[i] = 0.5 + std::abs(N(rng));
            z0[i] = 0.5 + std::abs(N(rng));
        }
        Eigen::VectorXd a(q - 1), b(q - 1);
        for (int i = 0; i < q - 1; ++i) {
            a[i] = N(rng);
            b[i] = N(rng);
        }
        s0[m_lin] = a.norm() + 1.0;
        s0.tail(q - 1) = a;
        z0[m_lin] = b.norm() + 1.0;
        z0.tail(q - 1) = b;
        p.h = p.G * x0 + s0;
        p.c = -p.G.transpose() * z0;
        p.dims.nonneg = m_lin;
        p.dims.soc = {q};

        ConicResult r = solve_conic(p);
        REQUIRE(r.status == ConicStatus::Optimal);
        Eigen::VectorXd s = p.h - p.G * r.x;
        for (int i = 0; i < m_lin; ++i) {
            CHECK(s[i] > -1e-7);
            CHECK(r.z[i] > -1e-7);
        }
        CHECK(in_soc(s.tail(q), 1e-7));
        CHECK(in_soc(r.z.tail(q), 1e-7));
        CHECK((p.c + p.G.transpose() * r.z).norm() < 1e-6);
        CHECK(std::abs(s.dot(r.z)) < 1e-6 * (1 + std::abs(r.primal_objective)));
        CHECK(r.primal_objective == doctest::Approx(r.dual_objective).epsilon(1e-6));
    }
}

TEST_CASE("Nesterov-Todd scaling maps z and s to the same point") {
    std::mt19937 rng(5);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        int q = 2 + trial % 5;
        Eigen::VectorXd s(q), z(q);
        for (int i = 1; i < q; ++i) {
            s[i] = N(rng);
            z[i] = N(rng);
        }
        s[0] = s.tail(q - 1).norm() + 0.1 + std::abs(N(rng));
        z[0] = z.tail(q - 1).norm() + 0.1 + std::abs(N(rng));
        Eigen::MatrixXd W = soc_nt_scaling(s, z);
        CHECK((W - W.transpose()).norm() < 1e-10);
        Eigen::VectorXd lhs = W * z, rhs = W.inverse() * s;
        CHECK((lhs - rhs).norm() < 1e-9 * (1 + lhs.norm()));
    }
}

TEST_CASE("cone dimensions") {
    ConeDims d;
    d.nonneg = 3;
    d.soc = {3, 4};
    CHECK(d.size() == 10);
    CHECK(d.degree() == 5);
    CHECK(std::string(conic_status_name(ConicStatus::Optimal)) == "optimal");
}
