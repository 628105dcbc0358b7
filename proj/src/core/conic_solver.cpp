#include "conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridmask {

int ConeDims::size() const {
    int n = nonneg;
    for (int q : soc) n += q;
    return n;
}

const char* conic_status_name(ConicStatus s) {
    switch (s) {
        case ConicStatus::Optimal: return "optimal";
        case ConicStatus::PrimalInfeasible: return "primal-infeasible";
        case ConicStatus::DualInfeasible: return "dual-infeasible";
        case ConicStatus::MaxIterations: return "max-iterations";
        case ConicStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double soc_det(const VectorXd& u) { return u[0] * u[0] - u.tail(u.size() - 1).squaredNorm(); }

// Per-cone Nesterov-Todd scaling, kept in factored form.
struct Scaling {
    VectorXd d;                  // nonneg part: sqrt(s/z)
    std::vector<double> eta;     // SOC multipliers
    std::vector<VectorXd> wbar;  // SOC scaling points, wbar' J wbar = 1
};

class Cones {
public:
    explicit Cones(const ConeDims& d) : dims_(d) {
        int off = d.nonneg;
        for (int q : d.soc) {
            off_.push_back(off);
            off += q;
        }
    }

    int m() const { return dims_.size(); }

    VectorXd identity() const {
        VectorXd e = VectorXd::Zero(m());
        e.head(dims_.nonneg).setOnes();
        for (int off : off_) e[off] = 1.0;
        return e;
    }

    double min_eig(const VectorXd& u) const {
        double v = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dims_.nonneg; ++i) v = std::min(v, u[i]);
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int q = dims_.soc[k];
            v = std::min(v, u[off_[k]] - u.segment(off_[k] + 1, q - 1).norm());
        }
        return v;
    }

    // Largest alpha with u + alpha du in K (inf if unbounded).
    double max_step(const VectorXd& u, const VectorXd& du) const {
        double a = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dims_.nonneg; ++i)
            if (du[i] < 0) a = std::min(a, -u[i] / du[i]);
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int q = dims_.soc[k];
            VectorXd x = u.segment(off_[k], q), dx = du.segment(off_[k], q);
            // Work in the block's own NT-free frame: find smallest positive root of
            // (x0 + t dx0)^2 - ||x1 + t dx1||^2 = 0 with x0 + t dx0 >= 0.
            double qa = soc_det(dx);
            double qb = x[0] * dx[0] - x.tail(q - 1).dot(dx.tail(q - 1));
            double qc = soc_det(x);
            double t = std::numeric_limits<double>::infinity();
            if (dx[0] < 0) t = -x[0] / dx[0];
            if (std::abs(qa) < 1e-300) {
                if (qb < 0) t = std::min(t, -qc / (2 * qb));
            } else {
                double disc = qb * qb - qa * qc;
                if (disc >= 0) {
                    double sq = std::sqrt(disc);
                    double r1 = (-qb - sq) / qa, r2 = (-qb + sq) / qa;
                    for (double r : {r1, r2})
                        if (r > 0) t = std::min(t, r);
                }
            }
            a = std::min(a, t);
        }
        return a;
    }

    double dot(const VectorXd& s, const VectorXd& z) const { return s.dot(z); }

    VectorXd jprod(const VectorXd& u, const VectorXd& v) const {
        VectorXd w(m());
        for (int i = 0; i < dims_.nonneg; ++i) w[i] = u[i] * v[i];
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int o = off_[k], q = dims_.soc[k];
            w[o] = u.segment(o, q).dot(v.segment(o, q));
            w.segment(o + 1, q - 1) = u[o] * v.segment(o + 1, q - 1) + v[o] * u.segment(o + 1, q - 1);
        }
        return w;
    }

    // Solves lambda o u = v for u.
    VectorXd jdiv(const VectorXd& lam, const VectorXd& v) const {
        VectorXd u(m());
        for (int i = 0; i < dims_.nonneg; ++i) u[i] = v[i] / lam[i];
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int o = off_[k], q = dims_.soc[k];
            double l0 = lam[o];
            auto l1 = lam.segment(o + 1, q - 1);
            double det = l0 * l0 - l1.squaredNorm();
            double u0 = (l0 * v[o] - l1.dot(v.segment(o + 1, q - 1))) / det;
            u[o] = u0;
            u.segment(o + 1, q - 1) = (v.segment(o + 1, q - 1) - u0 * l1) / l0;
        }
        return u;
    }

    Scaling scaling(const VectorXd& s, const VectorXd& z) const {
        Scaling W;
        W.d.resize(dims_.nonneg);
        for (int i = 0; i < dims_.nonneg; ++i) W.d[i] = std::sqrt(s[i] / z[i]);
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int o = off_[k], q = dims_.soc[k];
            VectorXd sk = s.segment(o, q), zk = z.segment(o, q);
            double sd = std::sqrt(soc_det(sk)), zd = std::sqrt(soc_det(zk));
            VectorXd sb = sk / sd, zb = zk / zd;
            double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
            VectorXd jz = zb;
            jz.tail(q - 1) *= -1.0;
            W.wbar.push_back((sb + jz) / (2.0 * gamma));
            W.eta.push_back(std::sqrt(sd / zd));
        }
        return W;
    }

    // W u (inverse = false) or W^{-1} u (inverse = true); W is symmetric.
    VectorXd apply(const Scaling& W, const VectorXd& u, bool inverse) const {
        VectorXd out(m());
        for (int i = 0; i < dims_.nonneg; ++i) out[i] = inverse ? u[i] / W.d[i] : u[i] * W.d[i];
        for (std::size_t k = 0; k < off_.size(); ++k) {
            int o = off_[k], q = dims_.soc[k];
            out.segment(o, q) = soc_apply(W.wbar[k], W.eta[k], u.segment(o, q), inverse);
        }
        return out;
    }

    MatrixXd apply_rows(const Scaling& W, const MatrixXd& G, bool inverse) const {
        MatrixXd out(G.rows(), G.cols());
        for (int c = 0; c < G.cols(); ++c) out.col(c) = apply(W, G.col(c), inverse);
        return out;
    }

    static VectorXd soc_apply(const VectorXd& wb, double eta, const VectorXd& u, bool inverse) {
        const int q = static_cast<int>(u.size());
        double a = wb[0];
        auto qv = wb.tail(q - 1);
        auto u1 = u.tail(q - 1);
        VectorXd out(q);
        double sgn = inverse ? -1.0 : 1.0;
        double qu = qv.dot(u1);
        out[0] = a * u[0] + sgn * qu;
        out.tail(q - 1) = sgn * u[0] * qv + u1 + (qu / (1.0 + a)) * qv;
        return inverse ? VectorXd(out / eta) : VectorXd(out * eta);
    }

private:
    ConeDims dims_;
    std::vector<int> off_;
};

// Reduced KKT system [H A'; A 0] with H = G' W^{-2} G.
class KktSolver {
public:
    KktSolver(const ConicProblemData& p, const Cones& K) : p_(p), K_(K) {}

    bool factor(const Scaling* W) {
        W_ = W;
        const int n = static_cast<int>(p_.c.size());
        const int ne = static_cast<int>(p_.b.size());
        MatrixXd WG = W ? K_.apply_rows(*W, p_.G, true) : p_.G;
        MatrixXd M = MatrixXd::Zero(n + ne, n + ne);
        M.topLeftCorner(n, n) = WG.transpose() * WG;
        if (ne) {
            M.topRightCorner(n, ne) = p_.A.transpose();
            M.bottomLeftCorner(ne, n) = p_.A;
        }
        lu_.compute(M);
        M_ = std::move(M);
        return M_.allFinite();
    }

    // Solves [0 A' G'; A 0 0; G 0 -W'W] [x; y; z] = [r1; r2; r3], refining
    // against the unreduced system.
    void solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& x, VectorXd& y,
               VectorXd& z) const {
        reduced_solve(r1, r2, r3, x, y, z);
        for (int it = 0; it < 3; ++it) {
            VectorXd e1 = r1 - p_.G.transpose() * z;
            if (p_.b.size()) e1 -= p_.A.transpose() * y;
            VectorXd e2 = r2;
            if (p_.b.size()) e2 -= p_.A * x;
            VectorXd e3 = r3 - (p_.G * x - w2(z));
            double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                   e3.lpNorm<Eigen::Infinity>()});
            if (!(err > 1e-14)) break;
            VectorXd cx, cy, cz;
            reduced_solve(e1, e2, e3, cx, cy, cz);
            x += cx;
            y += cy;
            z += cz;
        }
    }

private:
    VectorXd w2(const VectorXd& v) const { return W_ ? K_.apply(*W_, K_.apply(*W_, v, false), false) : v; }
    VectorXd w2inv(const VectorXd& v) const { return W_ ? K_.apply(*W_, K_.apply(*W_, v, true), true) : v; }

    void reduced_solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3, VectorXd& x, VectorXd& y,
                       VectorXd& z) const {
        const int n = static_cast<int>(p_.c.size());
        const int ne = static_cast<int>(p_.b.size());
        VectorXd rhs(n + ne);
        rhs.head(n) = r1 + p_.G.transpose() * w2inv(r3);
        rhs.tail(ne) = r2;
        VectorXd sol = lu_.solve(rhs);
        VectorXd res = rhs - M_ * sol;
        sol += lu_.solve(res);
        x = sol.head(n);
        y = sol.tail(ne);
        z = w2inv(p_.G * x - r3);
    }

    const ConicProblemData& p_;
    const Cones& K_;
    const Scaling* W_ = nullptr;
    MatrixXd M_;
    Eigen::PartialPivLU<MatrixXd> lu_;
};

}  // namespace

Eigen::MatrixXd soc_nt_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    ConeDims d;
    d.soc = {static_cast<int>(s.size())};
    Cones K(d);
    Scaling W = K.scaling(s, z);
    const int q = static_cast<int>(s.size());
    Eigen::MatrixXd out(q, q);
    for (int c = 0; c < q; ++c) out.col(c) = K.apply(W, Eigen::VectorXd::Unit(q, c), false);
    return out;
}

ConicResult solve_conic(const ConicProblemData& p, const ConicOptions& opt) {
    const int n = static_cast<int>(p.c.size());
    const Cones K(p.dims);
    const int m = K.m();
    const int deg = p.dims.degree();
    ConicResult res;
    if (p.G.rows() != m || p.h.size() != m || p.G.cols() != n || p.A.cols() != (p.b.size() ? n : p.A.cols()))
        throw std::invalid_argument("conic problem dimensions are inconsistent");

    const double nb = std::max(1.0, p.b.norm());
    const double nc = std::max(1.0, p.c.norm());
    const double nh = std::max(1.0, p.h.norm());
    const VectorXd e = K.identity();

    KktSolver kkt(p, K);
    if (!kkt.factor(nullptr)) {
        res.status = ConicStatus::NumericalFailure;
        return res;
    }
    VectorXd x, y, z, s, xd, yd;
    kkt.solve(VectorXd::Zero(n), p.b, p.h, x, y, z);
    s = -z;
    kkt.solve(-p.c, VectorXd::Zero(p.b.size()), VectorXd::Zero(m), xd, y, z);
    {
        double ts = K.min_eig(s);
        if (ts < 1e-8 * std::max(1.0, s.norm())) s += (1.0 - ts) * e;
        double tz = K.min_eig(z);
        if (tz < 1e-8 * std::max(1.0, z.norm())) z += (1.0 - tz) * e;
    }
    double tau = 1.0, kappa = 1.0;

    for (int it = 0;; ++it) {
        res.iterations = it;
        VectorXd rx = (p.b.size() ? VectorXd(p.A.transpose() * y) : VectorXd::Zero(n)) + p.G.transpose() * z + p.c * tau;
        VectorXd ry = (p.b.size() ? VectorXd(p.A * x) : VectorXd(0)) - p.b * tau;
        VectorXd rz = s + p.G * x - p.h * tau;
        double cx = p.c.dot(x), by = p.b.dot(y), hz = p.h.dot(z);
        double rt = kappa + cx + by + hz;
        double gap = K.dot(s, z);
        double mu = (gap + tau * kappa) / (deg + 1);

        double pres = std::max(ry.size() ? ry.norm() / nb : 0.0, rz.norm() / nh) / tau;
        double dres = rx.norm() / nc / tau;
        double pcost = cx / tau, dcost = -(by + hz) / tau;
        double g = gap / (tau * tau);
        double relgap = std::numeric_limits<double>::infinity();
        if (pcost < 0) relgap = g / -pcost;
        else if (dcost > 0) relgap = g / dcost;

        res.x = x / tau;
        res.s = s / tau;
        res.y = y / tau;
        res.z = z / tau;
        res.primal_objective = pcost;
        res.dual_objective = dcost;
        res.gap = g;
        res.primal_residual = pres;
        res.dual_residual = dres;

        if (pres <= opt.feastol && dres <= opt.feastol && (g <= opt.abstol || relgap <= opt.reltol)) {
            res.status = ConicStatus::Optimal;
            return res;
        }
        double hzby = hz + by;
        if (hzby < 0) {
            VectorXd aty = (p.b.size() ? VectorXd(p.A.transpose() * y) : VectorXd::Zero(n)) + p.G.transpose() * z;
            if (aty.norm() / nc / -hzby <= opt.feastol) {
                res.status = ConicStatus::PrimalInfeasible;
                res.y = y / -hzby;
                res.z = z / -hzby;
                return res;
            }
        }
        if (cx < 0) {
            double a = p.b.size() ? (p.A * x).norm() / nb : 0.0;
            double b = (p.G * x + s).norm() / nh;
            if (std::max(a, b) / -cx <= opt.feastol) {
                res.status = ConicStatus::DualInfeasible;
                res.x = x / -cx;
                res.s = s / -cx;
                return res;
            }
        }
        if (it >= opt.max_iterations) {
            res.status = ConicStatus::MaxIterations;
            return res;
        }

        Scaling W = K.scaling(s, z);
        VectorXd lam = K.apply(W, z, false);
        if (!kkt.factor(&W)) {
            res.status = ConicStatus::NumericalFailure;
            return res;
        }
        VectorXd x1, y1, z1;
        kkt.solve(-p.c, p.b, p.h, x1, y1, z1);
        const double den_base = -kappa / tau + p.c.dot(x1) + p.b.dot(y1) + p.h.dot(z1);

        VectorXd dx, dy, dz, ds;
        double dtau = 0, dkappa = 0;
        VectorXd ds_a, dz_a;
        double dtau_a = 0, dkappa_a = 0, sigma = 0;

        for (int pass = 0; pass < 2; ++pass) {
            double etap = pass == 0 ? 1.0 : 1.0 - sigma;
            VectorXd rc = -K.jprod(lam, lam);
            double rtk = -tau * kappa;
            if (pass == 1) {
                VectorXd a = K.apply(W, ds_a, true), b = K.apply(W, dz_a, false);
                rc += sigma * mu * e - K.jprod(a, b);
                rtk += sigma * mu - dtau_a * dkappa_a;
            }
            VectorXd dst = K.jdiv(lam, rc);
            VectorXd x0, y0, z0;
            kkt.solve(-etap * rx, -etap * ry, -etap * rz - K.apply(W, dst, false), x0, y0, z0);
            dtau = (-etap * rt - rtk / tau - (p.c.dot(x0) + p.b.dot(y0) + p.h.dot(z0))) / den_base;
            dx = x0 + dtau * x1;
            dy = y0 + dtau * y1;
            dz = z0 + dtau * z1;
            ds = K.apply(W, dst - K.apply(W, dz, false), false);
            dkappa = (rtk - kappa * dtau) / tau;
            if (!dx.allFinite() || !dz.allFinite() || !ds.allFinite() || !std::isfinite(dtau)) {
                res.status = ConicStatus::NumericalFailure;
                return res;
            }

            double amax = std::min(K.max_step(s, ds), K.max_step(z, dz));
            if (dtau < 0) amax = std::min(amax, -tau / dtau);
            if (dkappa < 0) amax = std::min(amax, -kappa / dkappa);
            if (pass == 0) {
                double aa = std::min(1.0, amax);
                sigma = std::pow(1.0 - aa, 3);
                ds_a = ds;
                dz_a = dz;
                dtau_a = dtau;
                dkappa_a = dkappa;
            } else {
                double a = std::min(1.0, 0.99 * amax);
                x += a * dx;
                y += a * dy;
                z += a * dz;
                s += a * ds;
                tau += a * dtau;
                kappa += a * dkappa;
            }
        }
    }
}

}  // namespace gridmask
