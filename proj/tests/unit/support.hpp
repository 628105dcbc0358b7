#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "core/forge.hpp"

#ifndef GRIDMASK_DATA_DIR
#define GRIDMASK_DATA_DIR "data"
#endif

namespace testsupport {

inline std::string data(const std::string& name) { return std::string(GRIDMASK_DATA_DIR) + "/" + name; }

// Random connected case with n buses: a random spanning tree plus a few chords.
// Bus 1 is the slack; one more generator sits on a random bus.
inline std::string random_case_text(unsigned seed, int n, int extra_edges = 3) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::set<std::pair<int, int>> edges;
    for (int b = 2; b <= n; ++b) {
        int p = 1 + static_cast<int>(U(rng) * (b - 1));
        edges.insert({p, b});
    }
    for (int e = 0, tries = 0; e < extra_edges && tries < 100; ++tries) {
        int a = 1 + static_cast<int>(U(rng) * n), b = 1 + static_cast<int>(U(rng) * n);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (edges.insert({a, b}).second) ++e;
    }
    int pv = 2 + static_cast<int>(U(rng) * (n - 1));
    std::string s = "function mpc = rnd\nmpc.baseMVA = 100;\nmpc.bus = [\n";
    char buf[256];
    double total = 0;
    for (int b = 1; b <= n; ++b) {
        double pd = b == 1 ? 0.0 : 5.0 + 20.0 * U(rng);
        double qd = b == 1 ? 0.0 : 0.3 * pd * U(rng);
        total += pd;
        int type = b == 1 ? 3 : (b == pv ? 2 : 1);
        std::snprintf(buf, sizeof buf, "%d %d %.4f %.4f 0 0 1 1 0 100 1 1.1 0.9;\n", b, type, pd, qd);
        s += buf;
    }
    s += "];\nmpc.gen = [\n";
    std::snprintf(buf, sizeof buf, "1 0 0 100 -100 1.02 100 1 500 0;\n%d %.4f 0 100 -100 1.01 100 1 500 0;\n", pv,
                  0.4 * total);
    s += buf;
    s += "];\nmpc.branch = [\n";
    for (auto [a, b] : edges) {
        double r = 0.005 + 0.03 * U(rng), x = 0.03 + 0.15 * U(rng);
        std::snprintf(buf, sizeof buf, "%d %d %.5f %.5f 0 %.1f 0 0 0 0 1 -360 360;\n", a, b, r, x, 50 + 100 * U(rng));
        s += buf;
    }
    s += "];\n";
    return s;
}

// DC flows by a direct reduced-Laplacian solve; `skip` removes one branch.
inline Eigen::VectorXd dc_flows(const gridmask::Network& net, const Eigen::VectorXd& inj, int skip = -1) {
    const int n = net.n_b(), ref = net.reference_bus;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    for (int l = 0; l < net.n_br(); ++l) {
        if (l == skip) continue;
        const gridmask::Branch& br = net.branches[l];
        double b = 1.0 / br.x;
        B(br.from, br.from) += b;
        B(br.to, br.to) += b;
        B(br.from, br.to) -= b;
        B(br.to, br.from) -= b;
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (i != ref) keep.push_back(i);
    Eigen::MatrixXd Br(n - 1, n - 1);
    Eigen::VectorXd pr(n - 1);
    for (int i = 0; i < n - 1; ++i) {
        pr[i] = inj[keep[i]];
        for (int j = 0; j < n - 1; ++j) Br(i, j) = B(keep[i], keep[j]);
    }
    Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd t = Br.fullPivLu().solve(pr);
    for (int i = 0; i < n - 1; ++i) th[keep[i]] = t[i];
    Eigen::VectorXd f = Eigen::VectorXd::Zero(net.n_br());
    for (int l = 0; l < net.n_br(); ++l) {
        if (l == skip) continue;
        const gridmask::Branch& br = net.branches[l];
        f[l] = (th[br.from] - th[br.to]) / br.x;
    }
    return f;
}

inline Eigen::VectorXd dc_injections(const gridmask::Network& net) {
    Eigen::VectorXd p(net.n_b());
    for (int b = 0; b < net.n_b(); ++b) p[b] = net.buses[b].gen_p - net.load_pu(b).real();
    return p;
}

// Forged region checked against the branch-flow equations and bounds directly,
// without the solver's own bookkeeping. Returns one message per violation.
inline std::vector<std::string> forge_violations(const gridmask::Network& net, const gridmask::PowerFlowResult& pf,
                                                 const gridmask::AttackPlan& plan, const gridmask::ForgeSolution& sol,
                                                 const gridmask::ForgeConfig& cfg, double tol = 1e-6) {
    using gridmask::cplx;
    std::vector<std::string> out;
    auto at = [](const std::vector<int>& v, int x) { return static_cast<int>(std::find(v.begin(), v.end(), x) - v.begin()); };
    auto flag = [&](bool bad, const std::string& what, int id) {
        if (bad) out.push_back(what + " " + std::to_string(id + 1));
    };
    const double base = net.base_mva;
    for (std::size_t i = 0; i < sol.lines.size(); ++i) {
        const gridmask::Branch& br = net.branches[sol.lines[i]];
        cplx S = sol.forged_flows[i] / base, Z = br.z();
        double wj = sol.W[at(sol.buses, br.from)], wk = sol.W[at(sol.buses, br.to)];
        double drop = 2.0 * (std::conj(Z) * S).real() - std::norm(Z) * sol.C[i];
        flag(std::abs(wj - wk - drop) > tol, "voltage drop, line", sol.lines[i]);
        flag(wj * sol.C[i] - std::norm(S) < -tol, "cone, line", sol.lines[i]);
        flag(std::abs(sol.forged_flows[i].real()) > br.rating + tol, "thermal limit, line", sol.lines[i]);
    }
    for (int b : sol.boundary) {
        double w = sol.W[at(sol.buses, b)];
        flag(std::abs(w - pf.state.vm[b] * pf.state.vm[b]) > tol, "boundary voltage, bus", b);
    }
    for (std::size_t a = 0; a < sol.interior.size(); ++a) {
        int j = sol.interior[a];
        double w = sol.W[at(sol.buses, j)];
        flag(w < cfg.v_min * cfg.v_min - tol || w > cfg.v_max * cfg.v_max + tol, "voltage box, bus", j);
        double p0 = net.buses[j].load.real(), p = sol.forged_loads[a].real();
        flag(p < -tol || p < (1 - cfg.tau) * p0 - tol || p > (1 + cfg.tau) * p0 + tol, "load box, bus", j);

        cplx delivered = 0.0;
        for (int l = 0; l < net.n_br(); ++l) {
            const gridmask::Branch& br = net.branches[l];
            if ((br.from != j && br.to != j) || l == plan.fake_line) continue;
            int i = at(sol.lines, l);
            if (i < static_cast<int>(sol.lines.size())) {
                cplx S = sol.forged_flows[i] / base;
                if (br.to == j) delivered += S - br.z() * sol.C[i];
                else delivered -= S;
            } else {
                delivered -= (br.from == j ? pf.flows.from[l] : pf.flows.to[l]) / base;
            }
        }
        flag(std::abs(delivered - sol.forged_loads[a] / base) > tol, "nodal balance, bus", j);
    }
    return out;
}

}  // namespace testsupport
