#include "powerflow.hpp"

#include <cmath>
#include <limits>

namespace gridmask {

namespace {

Eigen::MatrixXcd ybus(const Network& net) {
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(net.n_b(), net.n_b());
    for (const auto& br : net.branches) {
        cplx y = br.y();
        Y(br.from, br.from) += y;
        Y(br.to, br.to) += y;
        Y(br.from, br.to) -= y;
        Y(br.to, br.from) -= y;
    }
    return Y;
}

}  // namespace

Eigen::VectorXd FlowSolution::p_from() const {
    Eigen::VectorXd p(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) p[i] = from[i].real();
    return p;
}

Eigen::VectorXcd bus_injections(const Network& net, const StateVector& s) {
    Eigen::VectorXcd v(net.n_b());
    for (int i = 0; i < net.n_b(); ++i) v[i] = std::polar(s.vm[i], s.va[i]);
    Eigen::VectorXcd I = ybus(net) * v;
    return v.array() * I.conjugate().array();
}

PowerFlowResult solve_ac(const Network& net, const PowerFlowOptions& opt) {
    const int n = net.n_b();
    Eigen::MatrixXcd Y = ybus(net);
    Eigen::MatrixXd G = Y.real(), B = Y.imag();

    Eigen::VectorXd psch(n), qsch(n);
    std::vector<int> pv, pq;
    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses[i];
        cplx sd = net.load_pu(i);
        psch[i] = b.gen_p - sd.real();
        qsch[i] = -sd.imag();
        if (i == net.reference_bus) continue;
        if (b.kind == BusKind::PV) pv.push_back(i);
        else pq.push_back(i);
    }
    std::vector<int> pvpq = pv;
    pvpq.insert(pvpq.end(), pq.begin(), pq.end());
    const int npvpq = static_cast<int>(pvpq.size());
    const int npq = static_cast<int>(pq.size());

    StateVector st;
    st.vm = Eigen::VectorXd::Ones(n);
    st.va = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (net.buses[i].kind != BusKind::PQ) st.vm[i] = net.buses[i].voltage_setpoint;

    auto mismatch = [&](Eigen::VectorXd& P, Eigen::VectorXd& Q) {
        P.setZero(n);
        Q.setZero(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                if (G(i, k) == 0.0 && B(i, k) == 0.0) continue;
                double t = st.va[i] - st.va[k];
                double c = std::cos(t), s = std::sin(t);
                P[i] += st.vm[i] * st.vm[k] * (G(i, k) * c + B(i, k) * s);
                Q[i] += st.vm[i] * st.vm[k] * (G(i, k) * s - B(i, k) * c);
            }
    };

    PowerFlowResult res;
    Eigen::VectorXd P, Q;
    for (int it = 0;; ++it) {
        mismatch(P, Q);
        Eigen::VectorXd F(npvpq + npq);
        for (int a = 0; a < npvpq; ++a) F[a] = psch[pvpq[a]] - P[pvpq[a]];
        for (int a = 0; a < npq; ++a) F[npvpq + a] = qsch[pq[a]] - Q[pq[a]];
        double norm = F.size() ? F.lpNorm<Eigen::Infinity>() : 0.0;
        res.mismatch = norm;
        res.iterations = it;
        if (norm < opt.tolerance) break;
        if (it >= opt.max_iterations)
            throw Error(ErrorCode::NonConvergence,
                        "power flow did not converge in " + std::to_string(opt.max_iterations) + " iterations");

        // Polar Jacobian: d(P,Q)/d(theta, V)
        const int m = npvpq + npq;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
        std::vector<int> col_theta(n, -1), col_v(n, -1);
        for (int a = 0; a < npvpq; ++a) col_theta[pvpq[a]] = a;
        for (int a = 0; a < npq; ++a) col_v[pq[a]] = npvpq + a;
        auto row_of = [&](int i, bool isq) { return isq ? col_v[i] : col_theta[i]; };
        for (int i = 0; i < n; ++i) {
            int rp = row_of(i, false), rq = row_of(i, true);
            if (rp < 0 && rq < 0) continue;
            double vi = st.vm[i];
            for (int k = 0; k < n; ++k) {
                if (G(i, k) == 0.0 && B(i, k) == 0.0) continue;
                double t = st.va[i] - st.va[k];
                double c = std::cos(t), s = std::sin(t);
                double vk = st.vm[k];
                if (k == i) {
                    if (rp >= 0) {
                        if (col_theta[i] >= 0) J(rp, col_theta[i]) += -Q[i] - B(i, i) * vi * vi;
                        if (col_v[i] >= 0) J(rp, col_v[i]) += P[i] / vi + G(i, i) * vi;
                    }
                    if (rq >= 0) {
                        if (col_theta[i] >= 0) J(rq, col_theta[i]) += P[i] - G(i, i) * vi * vi;
                        if (col_v[i] >= 0) J(rq, col_v[i]) += Q[i] / vi - B(i, i) * vi;
                    }
                } else {
                    if (rp >= 0) {
                        if (col_theta[k] >= 0) J(rp, col_theta[k]) += vi * vk * (G(i, k) * s - B(i, k) * c);
                        if (col_v[k] >= 0) J(rp, col_v[k]) += vi * (G(i, k) * c + B(i, k) * s);
                    }
                    if (rq >= 0) {
                        if (col_theta[k] >= 0) J(rq, col_theta[k]) += -vi * vk * (G(i, k) * c + B(i, k) * s);
                        if (col_v[k] >= 0) J(rq, col_v[k]) += vi * (G(i, k) * s - B(i, k) * c);
                    }
                }
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (!(lu.rcond() > 1e-14)) throw Error(ErrorCode::SingularMatrix, "power flow Jacobian is singular");
        Eigen::VectorXd dx = lu.solve(F);
        if (!dx.allFinite()) throw Error(ErrorCode::SingularMatrix, "power flow Jacobian is singular");
        for (int a = 0; a < npvpq; ++a) st.va[pvpq[a]] += dx[a];
        for (int a = 0; a < npq; ++a) st.vm[pq[a]] += dx[npvpq + a];
    }
    res.state = st;
    res.flows = compute_flows(net, st);
    return res;
}

Network without_branch(const Network& net, int l) {
    if (l < 0 || l >= net.n_br()) throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    Network out = net;
    out.branches.erase(out.branches.begin() + l);
    return out;
}

cplx line_flow(const Network& net, const StateVector& s, int l) {
    if (l < 0 || l >= net.n_br()) throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    const Branch& br = net.branches[l];
    cplx yc = std::conj(br.y());
    cplx vj = std::polar(s.vm[br.from], s.va[br.from]);
    cplx vk = std::polar(s.vm[br.to], s.va[br.to]);
    return (yc * std::norm(vj) - yc * vj * std::conj(vk)) * net.base_mva;
}

cplx line_flow_to(const Network& net, const StateVector& s, int l) {
    if (l < 0 || l >= net.n_br()) throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    const Branch& br = net.branches[l];
    cplx yc = std::conj(br.y());
    cplx vj = std::polar(s.vm[br.from], s.va[br.from]);
    cplx vk = std::polar(s.vm[br.to], s.va[br.to]);
    return (yc * std::norm(vk) - yc * vk * std::conj(vj)) * net.base_mva;
}

FlowSolution compute_flows(const Network& net, const StateVector& s) {
    FlowSolution f;
    for (int l = 0; l < net.n_br(); ++l) {
        f.from.push_back(line_flow(net, s, l));
        f.to.push_back(line_flow_to(net, s, l));
        f.loss.push_back(f.from.back() + f.to.back());
    }
    return f;
}

Eigen::MatrixXd ptdf(const Network& net) {
    const int n = net.n_b(), m = net.n_br();
    const int ref = net.reference_bus;
    Eigen::MatrixXd Bbus = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Bf = Eigen::MatrixXd::Zero(m, n);
    for (int l = 0; l < m; ++l) {
        const Branch& br = net.branches[l];
        double b = 1.0 / br.x;
        Bbus(br.from, br.from) += b;
        Bbus(br.to, br.to) += b;
        Bbus(br.from, br.to) -= b;
        Bbus(br.to, br.from) -= b;
        Bf(l, br.from) = b;
        Bf(l, br.to) = -b;
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (i != ref) keep.push_back(i);
    const int r = n - 1;
    Eigen::MatrixXd Br(r, r);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) Br(a, b) = Bbus(keep[a], keep[b]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Br);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, "reduced susceptance matrix is singular");
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd Xr = lu.inverse();
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) X(keep[a], keep[b]) = Xr(a, b);
    return Bf * X;
}

LodfMatrix lodf(const Network& net) {
    const int m = net.n_br();
    Eigen::MatrixXd H = ptdf(net);
    // Transfer PTDF: flow on m per unit injected at from(n), withdrawn at to(n).
    Eigen::MatrixXd T(m, m);
    for (int n = 0; n < m; ++n) {
        const Branch& br = net.branches[n];
        T.col(n) = H.col(br.from) - H.col(br.to);
    }
    LodfMatrix out;
    out.L.resize(m, m);
    out.undefined.assign(m, 0);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int n = 0; n < m; ++n) {
        double den = 1.0 - T(n, n);
        if (std::abs(den) < 1e-6) {
            out.undefined[n] = 1;
            out.L.col(n).setConstant(nan);
            continue;
        }
        out.L.col(n) = T.col(n) / den;
        out.L(n, n) = -1.0;
    }
    return out;
}

Eigen::VectorXd post_outage_flows(const Eigen::VectorXd& p, const LodfMatrix& lodf, int n) {
    if (n < 0 || n >= p.size()) throw Error(ErrorCode::InvalidBranchId, "branch id out of range");
    if (!lodf.defined(n)) throw Error(ErrorCode::IslandingLine, "outage of this line islands the network");
    Eigen::VectorXd out = p + p[n] * lodf.L.col(n);
    out[n] = 0.0;
    return out;
}

}  // namespace gridmask
