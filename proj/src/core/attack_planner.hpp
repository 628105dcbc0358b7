#pragma once

#include <Eigen/Dense>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "case_model.hpp"
#include "powerflow.hpp"

namespace gridmask {

struct AttackRegion {
    std::vector<int> buses;     // N-bar
    std::vector<int> lines;     // E-bar
    std::vector<int> boundary;  // B
    std::vector<int> interior;  // A
    std::vector<int> real_end;  // L
    std::vector<int> fake_end;  // M
    std::vector<int> generators;  // g of every path added so far

    bool has_bus(int b) const;
    bool has_line(int l) const;
    bool empty() const { return buses.empty(); }
};

struct Exclusion {
    int real_line;
    int fake_line;
    int rule;
    std::string detail;
};

struct AttackPlan {
    int real_line = -1;
    int fake_line = -1;
    int fake_send = -1;  // bus j
    int fake_recv = -1;  // bus k
    AttackRegion region;
    double fake_from_bus_load_add = 0.0;  // MW added to bus j's load record
    std::vector<Exclusion> exclusion_log;
};

struct RuleCheck {
    bool feasible = true;
    int rule = 0;
    std::string detail;
    std::vector<int> offending;  // lines failing a line-intrinsic rule
};

Eigen::VectorXd influence_factors(const Network& net, const FlowSolution& flows, const LodfMatrix& lodf);
int select_real_line(const Eigen::VectorXd& f, const std::set<int>& excluded);

// Fake-line score u_l for every line (0 for l_o, NaN where the column is undefined).
Eigen::VectorXd fake_line_scores(const Network& net, const Eigen::VectorXd& p, const LodfMatrix& lodf, int l_o);
int select_fake_line(const Network& net, const Eigen::VectorXd& p, const LodfMatrix& lodf, int l_o,
                     const std::set<int>& excluded);

RuleCheck check_rules(const Network& net, int l_o, int l_m, const FlowSolution& flows);

// Orientation of the fake line: (j, k) with real power leaving j.
std::pair<int, int> fake_orientation(const Network& net, const FlowSolution& flows, int l_m);

AttackRegion bfs_region(const Network& net, int l_o, int l_m, int k, const AttackRegion& existing);
void classify_region(const Network& net, int l_o, int l_m, AttackRegion& region);

// Optional last check on a rule-feasible plan; returning false excludes the pair
// (logged as rule 7) and the search continues. The filter may replace the plan.
using PlanFilter = std::function<bool(AttackPlan&, std::string&)>;

AttackPlan plan_attack(const Network& net, const FlowSolution& flows, const LodfMatrix& lodf,
                       const PlanFilter& accept = {});
AttackPlan plan_pair(const Network& net, const FlowSolution& flows, int l_o, int l_m);

}  // namespace gridmask
