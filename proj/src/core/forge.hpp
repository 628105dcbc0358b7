#pragma once

#include <string>
#include <vector>

#include "attack_planner.hpp"
#include "conic_solver.hpp"
#include "measurement.hpp"
#include "powerflow.hpp"

namespace gridmask {

struct ForgeConfig {
    double tau = 0.25;
    double v_min = 0.95;
    double v_max = 1.05;
    double solver_tolerance = 1e-8;
    double margin = 1e-9;     // stands in for the strict inequalities
    int max_expansions = 8;   // region growth attempts on infeasibility
};

// Column positions of each decision variable in the conic problem.
struct VarIndex {
    std::vector<int> W;    // per region bus (order of region.buses)
    std::vector<int> P, Q, C;  // per region line (order of region.lines)
    std::vector<int> PD, QD;   // per interior bus (order of region.interior)
    std::vector<int> PB;       // per boundary bus, -1 when the bus has no load
    int t = -1;
    int n = 0;
};

struct ConicProblem {
    AttackPlan plan;
    ForgeConfig cfg;
    VarIndex idx;
    ConicProblemData data;
    double base_mva = 100.0;
    std::vector<double> base_w;      // |v|^2 per region bus
    std::vector<cplx> base_flow;     // pu, per region line
    std::vector<int> line_from;      // from bus per region line
    std::vector<cplx> fixed_inflow;  // pu, per interior bus: non-region lines at baseline
    std::vector<double> base_gen;    // pu, per boundary bus: baseline real injection
    std::vector<cplx> base_load;     // pu, per region bus
    std::vector<cplx> all_from, all_to;  // pu, baseline flows of every branch
};

struct ForgeSolution {
    std::vector<int> buses, lines, interior, boundary;
    std::vector<double> W;
    std::vector<double> C;
    std::vector<cplx> forged_flows;   // MVA, from end
    std::vector<cplx> forged_loads;   // MVA, per interior bus
    std::vector<double> boundary_p_load;  // MW per boundary bus (NaN when unconstrained)
    std::vector<double> gap;          // W_j C_l - |S_l|^2, pu
    double objective = 0.0;           // MVA
    std::string status;
    int iterations = 0;
    double seconds = 0.0;
};

struct AuditReport {
    double max_violation = 0.0;
    std::vector<std::string> violations;
    bool passed() const { return violations.empty(); }
};

struct LineLoss {
    int line;
    cplx calculated;  // Z C, MVA
    cplx real;        // Z |S|^2 / W_j, MVA
};

struct RelaxationReport {
    std::vector<LineLoss> lines;
    double o_inf = 0.0;  // fraction
};

struct ForgeOutcome {
    AttackPlan plan;  // with the region actually used
    ConicProblem problem;
    ForgeSolution solution;
    AuditReport audit;
    int expansions = 0;
};

ConicProblem build_socp(const Network& net, const AttackPlan& plan, const StateVector& base_state,
                        const FlowSolution& base_flows, const ForgeConfig& cfg);
ForgeSolution solve_socp(const ConicProblem& prob);

AuditReport audit_forge(const Network& net, const ConicProblem& prob, const ForgeSolution& sol,
                        double tol = 1e-6);

// Steps 6-7: solve, growing the region with further BFS paths while infeasible.
ForgeOutcome forge(const Network& net, const AttackPlan& plan, const StateVector& base_state,
                   const FlowSolution& base_flows, const ForgeConfig& cfg);

MeasurementSet forge_measurements(const Network& net, const MeasurementSet& base_z, const ForgeSolution& sol,
                                  const AttackPlan& plan);

RelaxationReport relaxation_report(const ForgeSolution& sol, const Network& net);

}  // namespace gridmask
