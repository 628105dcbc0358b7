#pragma once

#include <Eigen/Dense>
#include <vector>

#include "case_model.hpp"

namespace gridmask {

struct StateVector {
    Eigen::VectorXd vm;  // per-unit
    Eigen::VectorXd va;  // radians, reference bus at 0
};

// Flows are in MVA and oriented into the line at each end.
struct FlowSolution {
    std::vector<cplx> from;
    std::vector<cplx> to;
    std::vector<cplx> loss;

    Eigen::VectorXd p_from() const;
};

struct PowerFlowOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;
};

struct PowerFlowResult {
    StateVector state;
    FlowSolution flows;
    int iterations = 0;
    double mismatch = 0.0;
};

PowerFlowResult solve_ac(const Network& net, const PowerFlowOptions& opt = {});

// Same network with branch l taken out (used for post-outage AC states).
Network without_branch(const Network& net, int l);

// S_l = conj(Y_l)|v_j|^2 - conj(Y_l) v_j conj(v_k), in MVA.
cplx line_flow(const Network& net, const StateVector& s, int l);
cplx line_flow_to(const Network& net, const StateVector& s, int l);
FlowSolution compute_flows(const Network& net, const StateVector& s);

// Complex bus injections S = V conj(Ybus V), per-unit.
Eigen::VectorXcd bus_injections(const Network& net, const StateVector& s);

struct LodfMatrix {
    Eigen::MatrixXd L;  // NaN in undefined columns
    std::vector<char> undefined;

    bool defined(int n) const { return !undefined[n]; }
};

// PTDF of every branch w.r.t. a unit injection at each bus, withdrawn at the slack.
Eigen::MatrixXd ptdf(const Network& net);
LodfMatrix lodf(const Network& net);

Eigen::VectorXd post_outage_flows(const Eigen::VectorXd& p, const LodfMatrix& lodf, int n);

}  // namespace gridmask
