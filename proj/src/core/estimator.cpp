#include "estimator.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace gridmask {

int MeasurementSet::find(const MeasDescriptor& d) const {
    for (int i = 0; i < size(); ++i)
        if (desc[i] == d) return i;
    return -1;
}

std::string describe(const Network& net, const MeasDescriptor& d) {
    switch (d.kind) {
        case MeasKind::LineFlow: return "P_from line " + std::to_string(d.index + 1);
        case MeasKind::VoltageMagnitude: return "V bus " + std::to_string(net.buses[d.index].ext_id);
        case MeasKind::ReferencePhase: return "theta bus " + std::to_string(net.buses[d.index].ext_id);
    }
    return "?";
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FlowTerms {
    double g, b, c, s;
};

FlowTerms flow_terms(const Network& net, const StateVector& st, int l) {
    const Branch& br = net.branches[l];
    cplx y = br.y();
    double t = st.va[br.from] - st.va[br.to];
    return {y.real(), y.imag(), std::cos(t), std::sin(t)};
}

}  // namespace

double measurement_function(const Network& net, const StateVector& s, const MeasDescriptor& d, int scaled_line,
                            double pe) {
    switch (d.kind) {
        case MeasKind::LineFlow: {
            const Branch& br = net.branches[d.index];
            FlowTerms f = flow_terms(net, s, d.index);
            double vf = s.vm[br.from], vt = s.vm[br.to];
            double p = f.g * vf * vf - vf * vt * (f.g * f.c + f.b * f.s);
            return d.index == scaled_line ? p * (1.0 + pe) : p;
        }
        case MeasKind::VoltageMagnitude: return s.vm[d.index];
        case MeasKind::ReferencePhase: return s.va[d.index];
    }
    return kNaN;
}

MeasurementSet build_measurements(const Network& net, const StateVector& state, double variance,
                                  std::optional<std::uint64_t> seed) {
    MeasurementSet z;
    for (int l = 0; l < net.n_br(); ++l) z.desc.push_back({MeasKind::LineFlow, l});
    for (int b = 0; b < net.n_b(); ++b) z.desc.push_back({MeasKind::VoltageMagnitude, b});
    z.desc.push_back({MeasKind::ReferencePhase, net.reference_bus});
    z.value.resize(z.size());
    for (int i = 0; i < z.size(); ++i) z.value[i] = measurement_function(net, state, z.desc[i]);
    z.variance = Eigen::VectorXd::Constant(z.size(), variance);
    for (int b = 0; b < net.n_b(); ++b) z.load_record.push_back(net.buses[b].load);
    if (seed) return add_noise(z, *seed);
    return z;
}

MeasurementSet add_noise(const MeasurementSet& z, std::uint64_t seed, std::optional<double> variance) {
    MeasurementSet out = z;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < out.size(); ++i) out.value[i] += std::sqrt(variance ? *variance : out.variance[i]) * n01(rng);
    out.noise_seed = seed;
    return out;
}

Eigen::MatrixXd measurement_jacobian(const Network& net, const StateVector& s, const std::vector<MeasDescriptor>& d) {
    const int n = net.n_b();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<int>(d.size()), 2 * n);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int r = static_cast<int>(i);
        switch (d[i].kind) {
            case MeasKind::LineFlow: {
                const Branch& br = net.branches[d[i].index];
                FlowTerms f = flow_terms(net, s, d[i].index);
                double vf = s.vm[br.from], vt = s.vm[br.to];
                double dth = vf * vt * (f.g * f.s - f.b * f.c);
                H(r, br.from) += dth;
                H(r, br.to) -= dth;
                H(r, n + br.from) += 2.0 * f.g * vf - vt * (f.g * f.c + f.b * f.s);
                H(r, n + br.to) += -vf * (f.g * f.c + f.b * f.s);
                break;
            }
            case MeasKind::VoltageMagnitude: H(r, n + d[i].index) = 1.0; break;
            case MeasKind::ReferencePhase: H(r, d[i].index) = 1.0; break;
        }
    }
    return H;
}

Eigen::MatrixXd parameter_jacobian(const Network& net, const StateVector& s, const std::vector<MeasDescriptor>& d,
                                   const std::vector<int>& lines) {
    Eigen::MatrixXd Hp = Eigen::MatrixXd::Zero(static_cast<int>(d.size()), static_cast<int>(lines.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].kind != MeasKind::LineFlow) continue;
        for (std::size_t c = 0; c < lines.size(); ++c)
            if (lines[c] == d[i].index)
                Hp(static_cast<int>(i), static_cast<int>(c)) = measurement_function(net, s, d[i]);
    }
    return Hp;
}

EstimateResult wls_estimate(const Network& net, const MeasurementSet& z, const EstimateOptions& opt,
                            const std::vector<int>& rows_in, std::optional<std::vector<int>> param_lines) {
    const int n = net.n_b();
    std::vector<int> rows = rows_in;
    if (rows.empty()) {
        rows.resize(z.size());
        std::iota(rows.begin(), rows.end(), 0);
    }
    std::vector<MeasDescriptor> d;
    Eigen::VectorXd zv(static_cast<int>(rows.size())), rinv(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.push_back(z.desc[rows[i]]);
        zv[static_cast<int>(i)] = z.value[rows[i]];
        if (!(z.variance[rows[i]] > 0)) throw Error(ErrorCode::InvalidArgument, "measurement variance must be positive");
        rinv[static_cast<int>(i)] = 1.0 / z.variance[rows[i]];
    }

    EstimateResult est;
    est.rows = rows;
    est.state.vm = Eigen::VectorXd::Ones(n);
    est.state.va = Eigen::VectorXd::Zero(n);

    // States that no active measurement touches are dropped (kept at flat start).
    std::vector<char> touched(2 * n, 0);
    for (const MeasDescriptor& m : d) {
        if (m.kind == MeasKind::LineFlow) {
            const Branch& br = net.branches[m.index];
            for (int b : {br.from, br.to}) touched[b] = touched[n + b] = 1;
        } else {
            touched[m.kind == MeasKind::VoltageMagnitude ? n + m.index : m.index] = 1;
        }
    }
    std::vector<int> cols, colpos(2 * n, -1);
    for (int c = 0; c < 2 * n; ++c)
        if (touched[c]) {
            colpos[c] = static_cast<int>(cols.size());
            cols.push_back(c);
        }
    est.state_columns = cols;
    const int k = static_cast<int>(cols.size());

    auto hvec = [&](const StateVector& s) {
        Eigen::VectorXd h(static_cast<int>(d.size()));
        for (std::size_t i = 0; i < d.size(); ++i) h[static_cast<int>(i)] = measurement_function(net, s, d[i]);
        return h;
    };
    auto reduce = [&](const Eigen::MatrixXd& Hfull) {
        Eigen::MatrixXd H(Hfull.rows(), k);
        for (int c = 0; c < k; ++c) H.col(c) = Hfull.col(cols[c]);
        return H;
    };

    // Gauss-Newton steps; once the step is small the exact second-order terms of
    // the flow functions are added, which turns the linear tail into a quadratic one.
    using Trip = Eigen::Triplet<double>;
    bool newton = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        Eigen::VectorXd r = zv - hvec(est.state);
        std::vector<Trip> ht, curv;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const int row = static_cast<int>(i);
            const MeasDescriptor& m = d[i];
            if (m.kind != MeasKind::LineFlow) {
                ht.emplace_back(row, colpos[m.kind == MeasKind::VoltageMagnitude ? n + m.index : m.index], 1.0);
                continue;
            }
            const Branch& br = net.branches[m.index];
            FlowTerms f = flow_terms(net, est.state, m.index);
            double vf = est.state.vm[br.from], vt = est.state.vm[br.to];
            double gs = f.g * f.s - f.b * f.c, gc = f.g * f.c + f.b * f.s;
            const int idx[4] = {colpos[br.from], colpos[br.to], colpos[n + br.from], colpos[n + br.to]};
            const double grad[4] = {vf * vt * gs, -vf * vt * gs, 2.0 * f.g * vf - vt * gc, -vf * gc};
            for (int a = 0; a < 4; ++a) ht.emplace_back(row, idx[a], grad[a]);
            if (!newton) continue;
            // Hessian of P_from in (theta_f, theta_t, V_f, V_t).
            const double hth = vf * vt * gc, hvf = vt * gs, hvt = vf * gs;
            const double hess[4][4] = {{hth, -hth, hvf, hvt},
                                       {-hth, hth, -hvf, -hvt},
                                       {hvf, -hvf, 2.0 * f.g, -gc},
                                       {hvt, -hvt, -gc, 0.0}};
            const double wr = rinv[row] * r[row];
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    if (hess[a][b] != 0.0) curv.emplace_back(idx[a], idx[b], -wr * hess[a][b]);
        }
        Eigen::SparseMatrix<double> H(static_cast<int>(d.size()), k), C(k, k);
        H.setFromTriplets(ht.begin(), ht.end());
        Eigen::SparseMatrix<double> G = H.transpose() * rinv.asDiagonal() * H;
        Eigen::VectorXd grad = H.transpose() * (rinv.asDiagonal() * r);

        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(G);
        Eigen::VectorXd D = ldlt.vectorD().cwiseAbs();
        if (ldlt.info() != Eigen::Success || D.size() == 0 || D.minCoeff() <= 1e-10 * std::max(1.0, D.maxCoeff()))
            throw Error(ErrorCode::Unobservable, "gain matrix is rank deficient; measurement set is unobservable");
        Eigen::VectorXd dx;
        if (newton) {
            C.setFromTriplets(curv.begin(), curv.end());
            Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> full(Eigen::SparseMatrix<double>(G + C));
            if (full.info() == Eigen::Success && full.vectorD().minCoeff() > 0) dx = full.solve(grad);
        }
        if (dx.size() == 0 || !dx.allFinite() || grad.dot(dx) <= 0) dx = ldlt.solve(grad);
        if (!dx.allFinite()) throw Error(ErrorCode::Unobservable, "gain matrix is singular");

        // Backtrack on the weighted residual norm.
        const double J0 = r.dot(rinv.asDiagonal() * r);
        StateVector trial = est.state;
        double alpha = 1.0;
        for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
            trial = est.state;
            for (int c = 0; c < k; ++c) {
                int s = cols[c];
                if (s < n) trial.va[s] += alpha * dx[c];
                else trial.vm[s - n] += alpha * dx[c];
            }
            Eigen::VectorXd rt = zv - hvec(trial);
            if (rt.dot(rinv.asDiagonal() * rt) <= J0 * (1.0 + 1e-12)) break;
        }
        est.state = trial;
        est.iterations = it;
        const double step = dx.lpNorm<Eigen::Infinity>();
        if (step < opt.tolerance) {
            est.converged = true;
            break;
        }
        if (it >= 2 || step < 1e-3) newton = true;
    }
    if (!est.converged) throw Error(ErrorCode::NonConvergence, "state estimation did not converge");

    est.H = reduce(measurement_jacobian(net, est.state, d));
    est.residuals = zv - hvec(est.state);
    if (param_lines) {
        est.param_lines = *param_lines;
    } else {
        est.param_lines.resize(net.n_br());
        std::iota(est.param_lines.begin(), est.param_lines.end(), 0);
    }
    est.Hp = parameter_jacobian(net, est.state, d, est.param_lines);
    return est;
}

SensitivityBundle sensitivity(const EstimateResult& est, const MeasurementSet& z) {
    const int m = static_cast<int>(est.rows.size());
    Eigen::VectorXd R(m), Rinv(m);
    for (int i = 0; i < m; ++i) {
        R[i] = z.variance[est.rows[i]];
        Rinv[i] = 1.0 / R[i];
    }
    SensitivityBundle b;
    b.gain = est.H.transpose() * Rinv.asDiagonal() * est.H;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(b.gain);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularMatrix, "gain matrix is singular");
    b.hat = est.H * ldlt.solve(est.H.transpose()) * Rinv.asDiagonal();
    b.S = Eigen::MatrixXd::Identity(m, m) - b.hat;
    b.Omega = b.S * R.asDiagonal();
    Eigen::MatrixXd RinvHp = Rinv.asDiagonal() * est.Hp;
    b.lambda = -RinvHp.transpose() * est.residuals;
    b.Lambda = RinvHp.transpose() * b.S * est.Hp;
    return b;
}

NormalizedStats normalized_stats(const SensitivityBundle& b, const EstimateResult& est) {
    NormalizedStats out;
    for (std::size_t c = 0; c < est.param_lines.size(); ++c) {
        double v = b.Lambda(c, c);
        double s = v < 1e-12 ? kNaN : std::abs(b.lambda[c]) / std::sqrt(v);
        out.lagrange.push_back({Statistic::Kind::Lagrange, est.param_lines[c], s});
    }
    for (std::size_t i = 0; i < est.rows.size(); ++i) {
        double v = b.Omega(i, i);
        double s = v < 1e-12 ? kNaN : std::abs(est.residuals[i]) / std::sqrt(v);
        out.residual.push_back({Statistic::Kind::Residual, est.rows[i], s});
    }
    return out;
}

std::string statistic_label(const Network& net, const MeasurementSet& z, const Statistic& s) {
    if (s.kind == Statistic::Kind::Lagrange) return "x" + std::to_string(s.index + 1);
    return "r" + std::to_string(s.index + 1) + " (" + describe(net, z.desc[s.index]) + ")";
}

DetectionRound detection_round(const Network& net, const MeasurementSet& z, const std::vector<int>& rows,
                               const std::vector<int>& params, double threshold, double tie) {
    EstimateResult est = wls_estimate(net, z, {}, rows, params);
    SensitivityBundle b = sensitivity(est, z);
    NormalizedStats st = normalized_stats(b, est);

    DetectionRound round;
    for (const auto& s : st.lagrange)
        if (!std::isnan(s.value)) round.ranked.push_back(s);
    for (const auto& s : st.residual)
        if (!std::isnan(s.value)) round.ranked.push_back(s);
    std::stable_sort(round.ranked.begin(), round.ranked.end(),
                     [](const Statistic& a, const Statistic& b) { return a.value > b.value; });
    if (round.ranked.empty()) {
        round.clean = true;
        return round;
    }
    round.max_statistic = round.ranked.front().value;
    if (round.max_statistic < threshold) {
        round.clean = true;
        return round;
    }
    for (const auto& s : round.ranked) {
        if (round.max_statistic - s.value > tie) break;
        if (s.kind == Statistic::Kind::Lagrange) {
            round.suspect_lines.push_back(s.index);
            int k = z.find({MeasKind::LineFlow, s.index});
            if (k >= 0) round.removed_measurements.push_back(k);
        } else {
            round.removed_measurements.push_back(s.index);
        }
    }
    std::sort(round.suspect_lines.begin(), round.suspect_lines.end());
    std::sort(round.removed_measurements.begin(), round.removed_measurements.end());
    round.removed_measurements.erase(std::unique(round.removed_measurements.begin(), round.removed_measurements.end()),
                                     round.removed_measurements.end());
    return round;
}

DetectionReport detect(const Network& net, const MeasurementSet& z, double threshold, int max_rounds, double tie) {
    DetectionReport rep;
    std::vector<int> rows(z.size());
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<int> params(net.n_br());
    std::iota(params.begin(), params.end(), 0);

    for (int round = 0; round < max_rounds; ++round) {
        DetectionRound r;
        try {
            r = detection_round(net, z, rows, params, threshold, tie);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unobservable) throw;
            rep.stop_reason = "unobservable";
            std::sort(rep.final_suspect_lines.begin(), rep.final_suspect_lines.end());
            return rep;
        }
        rep.rounds.push_back(r);
        if (r.clean) {
            rep.stop_reason = "clean";
            std::sort(rep.final_suspect_lines.begin(), rep.final_suspect_lines.end());
            return rep;
        }
        for (int l : r.suspect_lines) {
            rep.final_suspect_lines.push_back(l);
            params.erase(std::remove(params.begin(), params.end(), l), params.end());
        }
        for (int k : r.removed_measurements) {
            rows.erase(std::remove(rows.begin(), rows.end(), k), rows.end());
            // A line whose flow reading is gone has no usable parameter column.
            if (z.desc[k].kind == MeasKind::LineFlow)
                params.erase(std::remove(params.begin(), params.end(), z.desc[k].index), params.end());
        }
    }
    rep.stop_reason = "max-rounds";
    std::sort(rep.final_suspect_lines.begin(), rep.final_suspect_lines.end());
    return rep;
}

}  // namespace gridmask
