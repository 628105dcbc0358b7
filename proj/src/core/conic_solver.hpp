#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gridmask {

// Cone K = R_+^nonneg x SOC(soc[0]) x SOC(soc[1]) x ...
// An SOC block u of size q satisfies u0 >= ||u(1:q-1)||.
struct ConeDims {
    int nonneg = 0;
    std::vector<int> soc;

    int size() const;
    int degree() const { return nonneg + static_cast<int>(soc.size()); }
};

// minimize c'x  s.t.  A x = b,  h - G x in K
struct ConicProblemData {
    Eigen::VectorXd c;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    ConeDims dims;
};

enum class ConicStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalFailure };

const char* conic_status_name(ConicStatus s);

struct ConicOptions {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    int max_iterations = 100;
};

struct ConicResult {
    ConicStatus status = ConicStatus::NumericalFailure;
    Eigen::VectorXd x, s, y, z;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
};

ConicResult solve_conic(const ConicProblemData& p, const ConicOptions& opt = {});

// Exposed for tests: Nesterov-Todd scaling point of a single SOC block.
// Returns W (symmetric) with W z = W^{-1} s.
Eigen::MatrixXd soc_nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z);

}  // namespace gridmask
