#include "forge.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace gridmask {

namespace {

struct Row {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
};

int pos(const std::vector<int>& v, int x) {
    auto it = std::find(v.begin(), v.end(), x);
    return it == v.end() ? -1 : static_cast<int>(it - v.begin());
}

// Real power leaving bus b into branch l at baseline (pu).
cplx outflow(const Network& net, const std::vector<cplx>& from, const std::vector<cplx>& to, int l, int b) {
    return net.branches[l].from == b ? from[l] : to[l];
}

Eigen::MatrixXd dense(const std::vector<Row>& rows, int n, Eigen::VectorXd& rhs) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), n);
    rhs.resize(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto [c, v] : rows[i].terms) M(static_cast<int>(i), c) += v;
        rhs[static_cast<int>(i)] = rows[i].rhs;
    }
    return M;
}

std::string bus_name(const Network& net, int b) { return "bus " + std::to_string(net.buses[b].ext_id); }
std::string line_name(int l) { return "line " + std::to_string(l + 1); }

}  // namespace

ConicProblem build_socp(const Network& net, const AttackPlan& plan, const StateVector& base_state,
                        const FlowSolution& base_flows, const ForgeConfig& cfg) {
    const AttackRegion& R = plan.region;
    if (R.buses.empty() || R.lines.empty()) throw Error(ErrorCode::EmptyRegion, "attack region is empty");
    if (R.has_line(plan.fake_line))
        throw Error(ErrorCode::InconsistentPlan, "fake line lies inside the attack region");
    if (!(cfg.tau > 0 && cfg.tau < 1)) throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, 1)");
    if (!(cfg.v_min > 0 && cfg.v_min < cfg.v_max)) throw Error(ErrorCode::InvalidArgument, "bad voltage bounds");
    for (int b : R.interior)
        if (is_generator_bus(net, b))
            throw Error(ErrorCode::InconsistentPlan, "generator " + bus_name(net, b) + " is interior to the region");

    ConicProblem P;
    P.plan = plan;
    P.cfg = cfg;
    P.base_mva = net.base_mva;
    const double base = net.base_mva;
    for (int l = 0; l < net.n_br(); ++l) {
        P.all_from.push_back(base_flows.from[l] / base);
        P.all_to.push_back(base_flows.to[l] / base);
    }

    VarIndex& I = P.idx;
    int n = 0;
    for (std::size_t i = 0; i < R.buses.size(); ++i) I.W.push_back(n++);
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        I.P.push_back(n++);
        I.Q.push_back(n++);
        I.C.push_back(n++);
    }
    for (std::size_t i = 0; i < R.interior.size(); ++i) {
        I.PD.push_back(n++);
        I.QD.push_back(n++);
    }
    for (int b : R.boundary) I.PB.push_back(net.buses[b].load.real() > 0 ? n++ : -1);
    I.t = n++;
    I.n = n;

    for (int b : R.buses) {
        P.base_w.push_back(base_state.vm[b] * base_state.vm[b]);
        P.base_load.push_back(net.load_pu(b));
    }
    for (int l : R.lines) {
        P.base_flow.push_back(P.all_from[l]);
        P.line_from.push_back(net.branches[l].from);
    }

    std::vector<Row> eq, ineq;
    std::vector<Row> soc_rows;  // rows of h - Gx, stored as (G terms negated) with h in rhs
    std::vector<int> soc_sizes;

    auto W_of = [&](int bus) { return I.W[pos(R.buses, bus)]; };

    // (15b) boundary voltages stay at baseline.
    for (std::size_t i = 0; i < R.boundary.size(); ++i) {
        int b = R.boundary[i];
        eq.push_back({{{W_of(b), 1.0}}, P.base_w[pos(R.buses, b)]});
    }
    // (15c) interior voltage box.
    for (int b : R.interior) {
        ineq.push_back({{{W_of(b), 1.0}}, cfg.v_max * cfg.v_max});
        ineq.push_back({{{W_of(b), -1.0}}, -cfg.v_min * cfg.v_min});
    }
    // Voltage drop along every region line.
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        const Branch& br = net.branches[R.lines[i]];
        double r = br.r, x = br.x;
        eq.push_back({{{W_of(br.from), 1.0},
                       {W_of(br.to), -1.0},
                       {I.P[i], -2.0 * r},
                       {I.Q[i], -2.0 * x},
                       {I.C[i], r * r + x * x}},
                      0.0});
    }
    // Net power delivered into bus b by region lines, as linear terms.
    auto region_inflow = [&](int b, bool reactive) {
        std::vector<std::pair<int, double>> t;
        for (std::size_t i = 0; i < R.lines.size(); ++i) {
            const Branch& br = net.branches[R.lines[i]];
            int var = reactive ? I.Q[i] : I.P[i];
            double z = reactive ? br.x : br.r;
            if (br.to == b) {
                t.push_back({var, 1.0});
                t.push_back({I.C[i], -z});
            } else if (br.from == b) {
                t.push_back({var, -1.0});
            }
        }
        return t;
    };
    auto box = [&](int var, double p0) {
        double lo = (1.0 - cfg.tau) * p0, hi = (1.0 + cfg.tau) * p0;
        if (p0 == 0.0) {
            eq.push_back({{{var, 1.0}}, 0.0});
            return;
        }
        if (lo > hi) std::swap(lo, hi);
        ineq.push_back({{{var, 1.0}}, hi - cfg.margin});
        ineq.push_back({{{var, -1.0}}, -(lo + cfg.margin)});
    };

    // (15d)/(15e) interior loads follow nodal balance and stay within tau.
    for (std::size_t a = 0; a < R.interior.size(); ++a) {
        int b = R.interior[a];
        cplx fixed = 0.0;
        for (const auto& inc : neighbors(net, b)) {
            if (inc.branch == plan.fake_line || R.has_line(inc.branch)) continue;
            fixed -= outflow(net, P.all_from, P.all_to, inc.branch, b);
        }
        P.fixed_inflow.push_back(fixed);
        for (bool reactive : {false, true}) {
            Row row;
            row.terms.push_back({reactive ? I.QD[a] : I.PD[a], 1.0});
            for (auto [c, v] : region_inflow(b, reactive)) row.terms.push_back({c, -v});
            row.rhs = reactive ? fixed.imag() : fixed.real();
            eq.push_back(row);
        }
        box(I.PD[a], net.load_pu(b).real());
    }
    // Boundary loads absorb the change in region flows at fixed generation.
    for (std::size_t a = 0; a < R.boundary.size(); ++a) {
        int b = R.boundary[a];
        double gen = net.load_pu(b).real();
        double fixed_out = 0.0;
        for (const auto& inc : neighbors(net, b)) {
            double o = outflow(net, P.all_from, P.all_to, inc.branch, b).real();
            gen += o;
            if (inc.branch != plan.fake_line && !R.has_line(inc.branch)) fixed_out += o;
        }
        P.base_gen.push_back(gen);
        if (I.PB[a] < 0) continue;
        Row row;
        row.terms.push_back({I.PB[a], 1.0});
        for (auto [c, v] : region_inflow(b, false)) row.terms.push_back({c, -v});
        row.rhs = gen - fixed_out;
        eq.push_back(row);
        box(I.PB[a], net.load_pu(b).real());
    }
    // (15f) thermal limits.
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        double lim = net.branches[R.lines[i]].rating;
        if (!std::isfinite(lim)) continue;
        lim = lim / base - cfg.margin;
        ineq.push_back({{{I.P[i], 1.0}}, lim});
        ineq.push_back({{{I.P[i], -1.0}}, lim});
    }
    // Cone per line: ||(2P, 2Q, W_j - C)|| <= W_j + C.
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        int w = W_of(net.branches[R.lines[i]].from);
        soc_rows.push_back({{{w, 1.0}, {I.C[i], 1.0}}, 0.0});
        soc_rows.push_back({{{I.P[i], 2.0}}, 0.0});
        soc_rows.push_back({{{I.Q[i], 2.0}}, 0.0});
        soc_rows.push_back({{{w, 1.0}, {I.C[i], -1.0}}, 0.0});
        soc_sizes.push_back(4);
    }
    // Objective epigraph: ||s_bar - s|| <= t.
    soc_rows.push_back({{{I.t, 1.0}}, 0.0});
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        soc_rows.push_back({{{I.P[i], 1.0}}, P.base_flow[i].real()});
        soc_rows.push_back({{{I.Q[i], 1.0}}, P.base_flow[i].imag()});
    }
    soc_sizes.push_back(1 + 2 * static_cast<int>(R.lines.size()));

    ConicProblemData& D = P.data;
    D.c = Eigen::VectorXd::Zero(n);
    D.c[I.t] = 1.0;
    D.A = dense(eq, n, D.b);
    // Nonnegative rows are "terms . x <= rhs"  ->  h - G x >= 0 with G = terms.
    Eigen::VectorXd hl, hs;
    Eigen::MatrixXd Gl = dense(ineq, n, hl);
    // Cone rows are "affine = terms . x - rhs" -> G = -terms, h = -rhs.
    Eigen::MatrixXd Gs = dense(soc_rows, n, hs);
    D.G.resize(Gl.rows() + Gs.rows(), n);
    D.G << Gl, -Gs;
    D.h.resize(hl.size() + hs.size());
    D.h << hl, -hs;
    D.dims.nonneg = static_cast<int>(Gl.rows());
    D.dims.soc = soc_sizes;
    return P;
}

ForgeSolution solve_socp(const ConicProblem& prob) {
    const AttackRegion& R = prob.plan.region;
    const VarIndex& I = prob.idx;
    ConicOptions opt;
    opt.feastol = prob.cfg.solver_tolerance;
    opt.abstol = prob.cfg.solver_tolerance;
    opt.reltol = prob.cfg.solver_tolerance;
    auto t0 = std::chrono::steady_clock::now();
    ConicResult r = solve_conic(prob.data, opt);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (r.status == ConicStatus::PrimalInfeasible)
        throw Error(ErrorCode::Infeasible, "forge problem is infeasible for the current region");
    if (r.status != ConicStatus::Optimal)
        throw Error(ErrorCode::NumericalFailure, std::string("conic solver stopped: ") + conic_status_name(r.status));

    const double base = prob.base_mva;
    const Eigen::VectorXd& x = r.x;
    ForgeSolution s;
    s.buses = R.buses;
    s.lines = R.lines;
    s.interior = R.interior;
    s.boundary = R.boundary;
    for (int v : I.W) s.W.push_back(x[v]);
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        s.C.push_back(x[I.C[i]]);
        s.forged_flows.push_back(cplx(x[I.P[i]], x[I.Q[i]]) * base);
    }
    for (std::size_t a = 0; a < R.interior.size(); ++a)
        s.forged_loads.push_back(cplx(x[I.PD[a]], x[I.QD[a]]) * base);
    for (int v : I.PB) s.boundary_p_load.push_back(v < 0 ? std::numeric_limits<double>::quiet_NaN() : x[v] * base);
    s.objective = x[I.t] * base;
    s.status = conic_status_name(r.status);
    s.iterations = r.iterations;
    s.seconds = secs;
    for (std::size_t i = 0; i < R.lines.size(); ++i) {
        int w = I.W[pos(R.buses, prob.line_from[i])];
        s.gap.push_back(x[w] * x[I.C[i]] - (x[I.P[i]] * x[I.P[i]] + x[I.Q[i]] * x[I.Q[i]]));
    }
    return s;
}

AuditReport audit_forge(const Network& net, const ConicProblem& prob, const ForgeSolution& sol, double tol) {
    AuditReport rep;
    const double base = net.base_mva;
    const ForgeConfig& cfg = prob.cfg;
    auto check = [&](double viol, const std::string& what) {
        rep.max_violation = std::max(rep.max_violation, viol);
        if (viol > tol) {
            std::ostringstream o;
            o << what << " violated by " << viol;
            rep.violations.push_back(o.str());
        }
    };
    auto W_of = [&](int b) { return sol.W[pos(sol.buses, b)]; };
    auto line_pos = [&](int l) { return pos(sol.lines, l); };

    if (std::find(sol.lines.begin(), sol.lines.end(), prob.plan.fake_line) != sol.lines.end())
        check(1.0, "fake line inside region");

    for (int b : sol.boundary)
        check(std::abs(W_of(b) - prob.base_w[pos(sol.buses, b)]), "boundary voltage at " + bus_name(net, b));
    for (int b : sol.interior) {
        double w = W_of(b);
        check(std::max(0.0, w - cfg.v_max * cfg.v_max), "upper voltage at " + bus_name(net, b));
        check(std::max(0.0, cfg.v_min * cfg.v_min - w), "lower voltage at " + bus_name(net, b));
    }
    for (std::size_t i = 0; i < sol.lines.size(); ++i) {
        const Branch& br = net.branches[sol.lines[i]];
        cplx S = sol.forged_flows[i] / base;
        double C = sol.C[i];
        cplx z = br.z();
        double rhs = 2.0 * (std::conj(z) * S).real() - std::norm(z) * C;
        check(std::abs(W_of(br.from) - W_of(br.to) - rhs), "voltage drop on " + line_name(sol.lines[i]));
        check(std::max(0.0, std::norm(S) - W_of(br.from) * C), "cone on " + line_name(sol.lines[i]));
        if (std::isfinite(br.rating))
            check(std::max(0.0, std::abs(S.real()) - br.rating / base), "thermal limit on " + line_name(sol.lines[i]));
    }
    // Power delivered into bus b by all lines, forged inside, baseline outside.
    auto inflow = [&](int b) {
        cplx in = 0.0;
        for (const auto& inc : neighbors(net, b)) {
            int l = inc.branch;
            if (l == prob.plan.fake_line) continue;
            int k = line_pos(l);
            const Branch& br = net.branches[l];
            if (k >= 0) {
                cplx S = sol.forged_flows[k] / base;
                in += br.to == b ? S - br.z() * sol.C[k] : -S;
            } else {
                in -= br.from == b ? prob.all_from[l] : prob.all_to[l];
            }
        }
        return in;
    };
    auto tau_box = [&](double p, double p0, const std::string& what) {
        double lo = (1.0 - cfg.tau) * p0, hi = (1.0 + cfg.tau) * p0;
        if (lo > hi) std::swap(lo, hi);
        check(std::max({0.0, p - hi, lo - p}), what);
        check(std::max(0.0, -p), what + " sign");
    };
    for (std::size_t a = 0; a < sol.interior.size(); ++a) {
        int b = sol.interior[a];
        cplx load = sol.forged_loads[a] / base;
        check(std::abs(load - inflow(b)), "nodal balance at " + bus_name(net, b));
        tau_box(load.real(), net.load_pu(b).real(), "load range at " + bus_name(net, b));
    }
    for (std::size_t a = 0; a < sol.boundary.size(); ++a) {
        if (std::isnan(sol.boundary_p_load[a])) continue;
        int b = sol.boundary[a];
        double p = sol.boundary_p_load[a] / base;
        double gen = prob.base_gen[a];
        check(std::abs(p - (gen + inflow(b).real())), "boundary balance at " + bus_name(net, b));
        tau_box(p, net.load_pu(b).real(), "load range at " + bus_name(net, b));
    }
    return rep;
}

ForgeOutcome forge(const Network& net, const AttackPlan& plan, const StateVector& base_state,
                   const FlowSolution& base_flows, const ForgeConfig& cfg) {
    ForgeOutcome out;
    out.plan = plan;
    for (int attempt = 0;; ++attempt) {
        out.problem = build_socp(net, out.plan, base_state, base_flows, cfg);
        try {
            out.solution = solve_socp(out.problem);
            out.audit = audit_forge(net, out.problem, out.solution);
            out.expansions = attempt;
            return out;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Infeasible || attempt >= cfg.max_expansions) throw;
        }
        try {
            out.plan.region = bfs_region(net, plan.real_line, plan.fake_line, plan.fake_recv, out.plan.region);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoPath) throw;
            throw Error(ErrorCode::Infeasible, "forge problem infeasible and the region cannot grow further");
        }
    }
}

MeasurementSet forge_measurements(const Network& net, const MeasurementSet& base_z, const ForgeSolution& sol,
                                  const AttackPlan& plan) {
    MeasurementSet z = base_z;
    const double base = net.base_mva;
    for (std::size_t i = 0; i < sol.lines.size(); ++i) {
        int k = z.find({MeasKind::LineFlow, sol.lines[i]});
        if (k < 0) throw Error(ErrorCode::DescriptorMismatch, "no flow measurement for " + line_name(sol.lines[i]));
        z.value[k] = sol.forged_flows[i].real() / base;
    }
    int km = z.find({MeasKind::LineFlow, plan.fake_line});
    if (km < 0) throw Error(ErrorCode::DescriptorMismatch, "no flow measurement for the fake line");
    z.value[km] = 0.0;
    for (std::size_t i = 0; i < sol.buses.size(); ++i) {
        int k = z.find({MeasKind::VoltageMagnitude, sol.buses[i]});
        if (k >= 0) z.value[k] = std::sqrt(std::max(0.0, sol.W[i]));
    }
    if (z.load_record.size() == static_cast<std::size_t>(net.n_b())) {
        for (std::size_t a = 0; a < sol.interior.size(); ++a) z.load_record[sol.interior[a]] = sol.forged_loads[a];
        for (std::size_t a = 0; a < sol.boundary.size(); ++a)
            if (!std::isnan(sol.boundary_p_load[a]))
                z.load_record[sol.boundary[a]].real(sol.boundary_p_load[a]);
        z.load_record[plan.fake_send] += plan.fake_from_bus_load_add;
    }
    return z;
}

RelaxationReport relaxation_report(const ForgeSolution& sol, const Network& net) {
    RelaxationReport rep;
    const double base = net.base_mva;
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < sol.lines.size(); ++i) {
        const Branch& br = net.branches[sol.lines[i]];
        cplx S = sol.forged_flows[i] / base;
        double w = sol.W[pos(sol.buses, br.from)];
        LineLoss ll;
        ll.line = sol.lines[i];
        ll.calculated = br.z() * sol.C[i] * base;
        ll.real = w > 0 ? br.z() * std::norm(S) / w * base : cplx(0.0);
        rep.lines.push_back(ll);
        double p = std::abs(sol.forged_flows[i].real());
        ++count;
        if (p > 1e-9) acc += (ll.calculated - ll.real).real() / p;
    }
    rep.o_inf = count ? acc / count : 0.0;
    return rep;
}

}  // namespace gridmask
