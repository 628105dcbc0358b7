#include "attack_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace gridmask {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

int sgn(double v) { return (v > 0) - (v < 0); }

void insert_sorted(std::vector<int>& v, int x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

std::string id(int i) { return std::to_string(i + 1); }

}  // namespace

bool AttackRegion::has_bus(int b) const { return std::binary_search(buses.begin(), buses.end(), b); }
bool AttackRegion::has_line(int l) const { return std::binary_search(lines.begin(), lines.end(), l); }

Eigen::VectorXd influence_factors(const Network& net, const FlowSolution& flows, const LodfMatrix& lodf) {
    const int m = net.n_br();
    Eigen::VectorXd p = flows.p_from();
    Eigen::VectorXd sign(m);
    for (int i = 0; i < m; ++i) sign[i] = sgn(p[i]);
    Eigen::VectorXd f(m);
    for (int l = 0; l < m; ++l) {
        if (!lodf.defined(l)) {
            f[l] = kNaN;
            continue;
        }
        f[l] = lodf.L.col(l).dot(sign) * p[l];
    }
    return f;
}

int select_real_line(const Eigen::VectorXd& f, const std::set<int>& excluded) {
    int best = -1;
    for (int l = 0; l < f.size(); ++l) {
        if (excluded.count(l) || std::isnan(f[l])) continue;
        if (best < 0 || f[l] > f[best]) best = l;
    }
    if (best < 0) throw Error(ErrorCode::NoCandidateLeft, "no real outage candidate left");
    return best;
}

Eigen::VectorXd fake_line_scores(const Network& net, const Eigen::VectorXd& p, const LodfMatrix& lodf, int l_o) {
    const int m = net.n_br();
    Eigen::VectorXd u(m);
    for (int l = 0; l < m; ++l) {
        if (l == l_o) {
            u[l] = 0.0;
            continue;
        }
        if (!lodf.defined(l)) {
            u[l] = kNaN;
            continue;
        }
        Eigen::VectorXd pbar = p + p[l] * lodf.L.col(l);
        double s = 0.0;
        for (int k = 0; k < m; ++k) {
            if (k == l_o) continue;
            double lim = net.branches[k].rating;
            if (std::isfinite(lim)) s += pbar[k] / lim;
        }
        u[l] = s;
    }
    return u;
}

int select_fake_line(const Network& net, const Eigen::VectorXd& p, const LodfMatrix& lodf, int l_o,
                     const std::set<int>& excluded) {
    Eigen::VectorXd u = fake_line_scores(net, p, lodf, l_o);
    int best = -1;
    for (int l = 0; l < u.size(); ++l) {
        if (l == l_o || excluded.count(l) || std::isnan(u[l])) continue;
        if (best < 0 || u[l] > u[best]) best = l;
    }
    if (best < 0) throw Error(ErrorCode::NoCandidateLeft, "no fake outage candidate left for line " + id(l_o));
    return best;
}

RuleCheck check_rules(const Network& net, int l_o, int l_m, const FlowSolution& flows) {
    (void)flows;
    if (l_o < 0 || l_o >= net.n_br() || l_m < 0 || l_m >= net.n_br())
        throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    RuleCheck rc;
    auto fail = [&](int rule, const std::string& d) {
        if (rc.feasible) {
            rc.feasible = false;
            rc.rule = rule;
        }
        if (!rc.detail.empty()) rc.detail += "; ";
        rc.detail += d;
    };

    // Rule 1: lines the attacker cannot touch.
    for (int l : {l_o, l_m}) {
        const Branch& br = net.branches[l];
        std::string why;
        if (br.is_protected) why = "protected";
        else if (br.is_transformer) why = "transformer";
        else if (is_generator_bus(net, br.from) && is_generator_bus(net, br.to)) why = "connects two generator buses";
        if (!why.empty()) {
            rc.offending.push_back(l);
            fail(1, "line " + id(l) + " " + why);
        }
    }
    if (!rc.feasible) return rc;

    // Rule 2: the two lines must not share a bus.
    const Branch& a = net.branches[l_o];
    const Branch& b = net.branches[l_m];
    for (int x : {a.from, a.to})
        if (x == b.from || x == b.to) {
            fail(2, "lines " + id(l_o) + " and " + id(l_m) + " share bus " + std::to_string(net.buses[x].ext_id));
            return rc;
        }

    // Rule 4: no power may be pushed into a bus without load.
    for (int l : {l_o, l_m}) {
        const Branch& br = net.branches[l];
        for (int x : {br.from, br.to})
            if (net.buses[x].load.real() <= 0.0) {
                rc.offending.push_back(l);
                fail(4, "line " + id(l) + " ends at bus " + std::to_string(net.buses[x].ext_id) + " which has no load");
                break;
            }
    }
    if (!rc.feasible) return rc;

    // Rule 6: the real outage must not island the grid.
    if (is_islanding(net, l_o)) {
        rc.offending.push_back(l_o);
        fail(6, "removing line " + id(l_o) + " islands the network");
    }
    return rc;
}

std::pair<int, int> fake_orientation(const Network& net, const FlowSolution& flows, int l_m) {
    const Branch& br = net.branches[l_m];
    if (flows.from[l_m].real() >= 0) return {br.from, br.to};
    return {br.to, br.from};
}

void classify_region(const Network& net, int l_o, int l_m, AttackRegion& region) {
    const Branch& ro = net.branches[l_o];
    const Branch& rm = net.branches[l_m];
    region.real_end = {std::min(ro.from, ro.to), std::max(ro.from, ro.to)};
    region.fake_end = {std::min(rm.from, rm.to), std::max(rm.from, rm.to)};
    region.boundary.clear();
    region.interior.clear();
    for (int bus : region.buses) {
        bool boundary = is_generator_bus(net, bus);
        for (const auto& inc : neighbors(net, bus)) {
            if (inc.branch == l_m) continue;
            if (!region.has_line(inc.branch)) boundary = true;
        }
        (boundary ? region.boundary : region.interior).push_back(bus);
    }
}

AttackRegion bfs_region(const Network& net, int l_o, int l_m, int k, const AttackRegion& existing) {
    const int n = net.n_b();
    std::vector<char> pruned(net.n_br(), 0);
    for (int l : existing.lines) pruned[l] = 1;
    pruned[l_o] = 1;
    pruned[l_m] = 1;
    auto adj = adjacency(net);

    std::vector<int> dist(n, -1);
    std::queue<int> q;
    dist[k] = 0;
    q.push(k);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (const auto& inc : adj[u]) {
            if (pruned[inc.branch] || dist[inc.other] >= 0) continue;
            dist[inc.other] = dist[u] + 1;
            q.push(inc.other);
        }
    }
    int g = -1;
    for (int b = 0; b < n; ++b) {
        if (b == k || dist[b] < 0 || !is_generator_bus(net, b)) continue;
        if (g < 0 || dist[b] < dist[g]) g = b;
    }
    if (g < 0)
        throw Error(ErrorCode::NoPath, "no generator bus reaches bus " + std::to_string(net.buses[k].ext_id));

    AttackRegion r = existing;
    int cur = g;
    insert_sorted(r.buses, cur);
    while (cur != k) {
        int best_bus = -1, best_line = -1;
        for (const auto& inc : adj[cur]) {
            if (pruned[inc.branch] || dist[inc.other] != dist[cur] - 1) continue;
            if (best_bus < 0 || inc.other < best_bus || (inc.other == best_bus && inc.branch < best_line)) {
                best_bus = inc.other;
                best_line = inc.branch;
            }
        }
        insert_sorted(r.lines, best_line);
        insert_sorted(r.buses, best_bus);
        cur = best_bus;
    }
    r.generators.push_back(g);
    insert_sorted(r.lines, l_o);
    insert_sorted(r.buses, net.branches[l_o].from);
    insert_sorted(r.buses, net.branches[l_o].to);
    classify_region(net, l_o, l_m, r);
    return r;
}

AttackPlan plan_pair(const Network& net, const FlowSolution& flows, int l_o, int l_m) {
    if (l_o < 0 || l_o >= net.n_br() || l_m < 0 || l_m >= net.n_br())
        throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    if (l_o == l_m) throw Error(ErrorCode::InconsistentPlan, "real and fake line must differ");
    AttackPlan plan;
    plan.real_line = l_o;
    plan.fake_line = l_m;
    auto [j, k] = fake_orientation(net, flows, l_m);
    plan.fake_send = j;
    plan.fake_recv = k;
    plan.fake_from_bus_load_add = std::abs(flows.from[l_m].real());
    plan.region = bfs_region(net, l_o, l_m, k, AttackRegion{});
    return plan;
}

AttackPlan plan_attack(const Network& net, const FlowSolution& flows, const LodfMatrix& lodf,
                       const PlanFilter& accept) {
    Eigen::VectorXd f = influence_factors(net, flows, lodf);
    Eigen::VectorXd p = flows.p_from();
    std::set<int> banned;  // failed a line-intrinsic rule, excluded from both roles
    std::set<int> real_excluded;
    std::vector<std::set<int>> fake_excluded(net.n_br());
    std::vector<Exclusion> log;

    for (;;) {
        std::set<int> rex = real_excluded;
        rex.insert(banned.begin(), banned.end());
        int l_o = select_real_line(f, rex);

        std::set<int> fex = fake_excluded[l_o];
        fex.insert(banned.begin(), banned.end());
        int l_m;
        try {
            l_m = select_fake_line(net, p, lodf, l_o, fex);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCandidateLeft) throw;
            real_excluded.insert(l_o);
            continue;
        }

        RuleCheck rc = check_rules(net, l_o, l_m, flows);
        if (rc.feasible) {
            try {
                AttackPlan plan = plan_pair(net, flows, l_o, l_m);
                std::string why;
                if (!accept || accept(plan, why)) {
                    plan.exclusion_log = log;
                    return plan;
                }
                log.push_back({l_o, l_m, 7, why});
                fake_excluded[l_o].insert(l_m);
                continue;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoPath) throw;
                log.push_back({l_o, l_m, 0, e.what()});
                fake_excluded[l_o].insert(l_m);
                continue;
            }
        }
        log.push_back({l_o, l_m, rc.rule, rc.detail});
        if (rc.rule == 2) {
            fake_excluded[l_o].insert(l_m);
        } else if (rc.rule == 6) {
            real_excluded.insert(l_o);
        } else {
            banned.insert(rc.offending.begin(), rc.offending.end());
        }
    }
}

}  // namespace gridmask
