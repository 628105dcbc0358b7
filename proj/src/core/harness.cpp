#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace gridmask {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool attacker_item(const MeasurementSet& z, const AttackPlan& plan, const Statistic& s) {
    const AttackRegion& R = plan.region;
    if (s.kind == Statistic::Kind::Lagrange) return s.index == plan.fake_line || R.has_line(s.index);
    const MeasDescriptor& d = z.desc[s.index];
    switch (d.kind) {
        case MeasKind::LineFlow: return d.index == plan.fake_line || R.has_line(d.index);
        case MeasKind::VoltageMagnitude: return R.has_bus(d.index);
        case MeasKind::ReferencePhase: return false;
    }
    return false;
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::Paper ? "paper" : "physical"; }

std::string to_string(Selection s) {
    switch (s) {
        case Selection::Proposed: return "proposed";
        case Selection::Random: return "random";
        case Selection::Fixed: return "fixed";
    }
    return "?";
}

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Successful: return "successful";
        case Classification::Correct: return "correct";
        case Classification::Incorrect: return "incorrect";
        case Classification::FalseAlarm: return "false-alarm";
        case Classification::Undetected: return "undetected";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    if (s == "paper") return Mode::Paper;
    if (s == "physical") return Mode::Physical;
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + s + "'");
}

Selection parse_selection(const std::string& s) {
    if (s == "proposed") return Selection::Proposed;
    if (s == "random") return Selection::Random;
    if (s == "fixed") return Selection::Fixed;
    throw Error(ErrorCode::InvalidArgument, "unknown selection '" + s + "'");
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    // splitmix64 step
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(trial + 1);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::pair<int, int> random_selection(const Network& net, std::uint64_t seed) {
    std::vector<int> real;
    for (int l = 0; l < net.n_br(); ++l)
        if (!is_islanding(net, l)) real.push_back(l);
    if (real.empty() || net.n_br() < 2) throw Error(ErrorCode::NoCandidateLeft, "no non-islanding line to trip");
    std::mt19937_64 rng(seed);
    int l_o = real[std::uniform_int_distribution<std::size_t>(0, real.size() - 1)(rng)];
    int l_m = std::uniform_int_distribution<int>(0, net.n_br() - 2)(rng);
    if (l_m >= l_o) ++l_m;
    return {l_o, l_m};
}

MeasurementSet baseline_measurements(const Network& net, const PowerFlowResult& base, int l_o, Mode mode,
                                     double variance) {
    MeasurementSet z = build_measurements(net, base.state, variance);
    if (mode == Mode::Paper) return z;
    Network post = without_branch(net, l_o);
    PowerFlowResult pf = solve_ac(post);
    for (int i = 0; i < z.size(); ++i) {
        MeasDescriptor d = z.desc[i];
        if (d.kind == MeasKind::LineFlow) {
            if (d.index == l_o) {
                z.value[i] = 0.0;
                continue;
            }
            if (d.index > l_o) --d.index;
        }
        z.value[i] = measurement_function(post, pf.state, d);
    }
    return z;
}

PreparedScenario prepare_scenario(const ScenarioConfig& cfg) {
    PreparedScenario s;
    auto t0 = std::chrono::steady_clock::now();
    s.net = cfg.network ? *cfg.network : load_case(cfg.case_path);
    set_protected(s.net, cfg.protected_lines);
    s.seconds["parse"] = since(t0);

    t0 = std::chrono::steady_clock::now();
    s.base = solve_ac(s.net);
    s.seconds["powerflow"] = since(t0);

    ForgeConfig fc;
    fc.tau = cfg.tau;
    t0 = std::chrono::steady_clock::now();
    double forge_secs = 0.0;
    switch (cfg.selection) {
        case Selection::Proposed: {
            // Pairs whose forge problem stays infeasible are skipped.
            s.plan = plan_attack(s.net, s.base.flows, lodf(s.net), [&](AttackPlan& plan, std::string& why) {
                auto tf = std::chrono::steady_clock::now();
                try {
                    s.forged = forge(s.net, plan, s.base.state, s.base.flows, fc);
                    forge_secs = since(tf);
                    return true;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::Infeasible && e.code() != ErrorCode::InconsistentPlan) throw;
                    why = e.what();
                    return false;
                }
            });
            break;
        }
        case Selection::Random: {
            auto [l_o, l_m] = random_selection(s.net, cfg.seed);
            s.plan = plan_pair(s.net, s.base.flows, l_o, l_m);
            break;
        }
        case Selection::Fixed:
            if (!cfg.pair) throw Error(ErrorCode::InvalidArgument, "fixed selection needs a line pair");
            if (cfg.pair->first < 0 || cfg.pair->first >= s.net.n_br() || cfg.pair->second < 0 ||
                cfg.pair->second >= s.net.n_br())
                throw Error(ErrorCode::InvalidBranchId, "line pair out of range");
            s.plan = plan_pair(s.net, s.base.flows, cfg.pair->first, cfg.pair->second);
            break;
    }
    s.seconds["plan"] = since(t0) - forge_secs;

    t0 = std::chrono::steady_clock::now();
    if (cfg.selection != Selection::Proposed) s.forged = forge(s.net, s.plan, s.base.state, s.base.flows, fc);
    std::vector<Exclusion> log = s.plan.exclusion_log;
    s.plan = s.forged.plan;
    s.plan.exclusion_log = log;
    s.seconds["forge"] = forge_secs + since(t0);

    s.z = baseline_measurements(s.net, s.base, s.plan.real_line, cfg.mode, cfg.noise_variance);
    s.z_bar = forge_measurements(s.net, s.z, s.forged.solution, s.plan);
    return s;
}

double fake_line_statistic(const DetectionRound& round, int l_m) {
    for (const auto& s : round.ranked)
        if (s.kind == Statistic::Kind::Lagrange && s.index == l_m) return s.value;
    return kNaN;
}

Classification classify(const MeasurementSet& z, const AttackPlan& plan, const DetectionRound& round,
                        double threshold) {
    if (round.ranked.empty()) return Classification::Undetected;
    const double top = round.ranked.front().value;
    bool fake_on_top = false, other_on_top = false;
    for (const auto& s : round.ranked) {
        if (top - s.value > 1e-6) break;
        if (s.kind == Statistic::Kind::Lagrange && s.index == plan.fake_line) fake_on_top = true;
        else if (!attacker_item(z, plan, s)) other_on_top = true;
    }
    if (fake_on_top && !other_on_top) return top > threshold ? Classification::Successful : Classification::Correct;
    return top > threshold ? Classification::FalseAlarm : Classification::Incorrect;
}

std::vector<double> increment_ratios(const MeasurementSet& z, const MeasurementSet& z_bar) {
    if (z.desc != z_bar.desc) throw Error(ErrorCode::DescriptorMismatch, "measurement sets are not aligned");
    std::vector<double> out(z.size());
    for (int i = 0; i < z.size(); ++i) {
        double a = std::abs(z.value[i]);
        out[i] = a < 1e-12 ? kNaN : (std::abs(z_bar.value[i]) - a) / a * 100.0;
    }
    return out;
}

std::vector<LineIncrement> line_increments(const PreparedScenario& s) {
    std::vector<LineIncrement> out;
    const ForgeSolution& sol = s.forged.solution;
    for (std::size_t i = 0; i < sol.lines.size(); ++i) {
        int l = sol.lines[i];
        cplx before = s.base.flows.from[l];
        cplx after = sol.forged_flows[i];
        double a = std::abs(before);
        out.push_back({l, before, after, a < 1e-12 ? kNaN : (std::abs(after) - a) / a * 100.0});
    }
    int l_m = s.plan.fake_line;
    out.push_back({l_m, s.base.flows.from[l_m], cplx(0, 0), -100.0});
    std::sort(out.begin(), out.end(), [](const LineIncrement& a, const LineIncrement& b) { return a.line < b.line; });
    return out;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, std::optional<std::uint64_t> noise_seed) {
    PreparedScenario s = prepare_scenario(cfg);
    ScenarioReport rep;
    rep.cfg = cfg;
    rep.plan = s.plan;
    rep.forged = s.forged;
    rep.relaxation = relaxation_report(s.forged.solution, s.net);
    rep.increments = line_increments(s);
    rep.seconds = s.seconds;
    rep.noise_seed = noise_seed;

    MeasurementSet zb = noise_seed ? add_noise(s.z_bar, *noise_seed, cfg.noise_draw_variance) : s.z_bar;
    auto t0 = std::chrono::steady_clock::now();
    rep.detection = detect(s.net, zb, cfg.threshold, cfg.max_rounds);
    rep.seconds["detect"] = since(t0);
    if (!rep.detection.rounds.empty()) {
        const DetectionRound& r1 = rep.detection.rounds.front();
        rep.classification = classify(zb, s.plan, r1, cfg.threshold);
        rep.max_statistic = r1.max_statistic;
        rep.fake_statistic = fake_line_statistic(r1, s.plan.fake_line);
    } else {
        rep.fake_statistic = kNaN;
    }
    return rep;
}

namespace {

template <typename Fn>
void parallel_trials(int trials, int threads, Fn&& fn) {
    int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nt = std::min(nt, trials);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex fail_mu;
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < trials; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(fail_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

RateReport aggregate(std::vector<TrialRecord> records) {
    RateReport rr;
    rr.trials = static_cast<int>(records.size());
    int correct = 0, success = 0, alarm = 0, incorrect = 0;
    double sum = 0.0;
    for (const auto& r : records) {
        switch (r.classification) {
            case Classification::Successful: ++success; [[fallthrough]];
            case Classification::Correct:
                ++correct;
                sum += r.fake_statistic;
                break;
            case Classification::FalseAlarm: ++alarm; break;
            case Classification::Incorrect: ++incorrect; break;
            case Classification::Undetected: break;
        }
    }
    const double n = std::max(1, rr.trials);
    rr.correct_rate = correct / n;
    rr.success_rate = success / n;
    rr.false_alarm_rate = alarm / n;
    rr.incorrect_rate = incorrect / n;
    rr.mean_fake_statistic = correct > 0 ? sum / correct : kNaN;
    rr.records = std::move(records);
    return rr;
}

int top_line(const MeasurementSet& z, const DetectionRound& r) {
    if (r.ranked.empty()) return -1;
    const Statistic& s = r.ranked.front();
    if (s.kind == Statistic::Kind::Lagrange) return s.index;
    return z.desc[s.index].kind == MeasKind::LineFlow ? z.desc[s.index].index : -1;
}

std::vector<int> all_rows(const MeasurementSet& z) {
    std::vector<int> v(z.size());
    for (int i = 0; i < z.size(); ++i) v[i] = i;
    return v;
}

std::vector<int> all_lines(const Network& net) {
    std::vector<int> v(net.n_br());
    for (int l = 0; l < net.n_br(); ++l) v[l] = l;
    return v;
}

}  // namespace

RateReport monte_carlo(const ScenarioConfig& cfg) {
    if (cfg.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
    auto t0 = std::chrono::steady_clock::now();
    const PreparedScenario s = prepare_scenario(cfg);
    const std::vector<int> rows = all_rows(s.z_bar), lines = all_lines(s.net);
    std::vector<TrialRecord> records(cfg.trials);
    parallel_trials(cfg.trials, cfg.threads, [&](int i) {
        std::uint64_t seed = trial_seed(cfg.seed, i);
        MeasurementSet zb = cfg.noise_variance > 0 ? add_noise(s.z_bar, seed, cfg.noise_draw_variance) : s.z_bar;
        DetectionRound r = detection_round(s.net, zb, rows, lines, cfg.threshold);
        records[i] = {i, seed, classify(zb, s.plan, r, cfg.threshold), r.max_statistic,
                      fake_line_statistic(r, s.plan.fake_line), top_line(zb, r)};
    });
    RateReport rr = aggregate(std::move(records));
    rr.seconds = since(t0);
    return rr;
}

RateReport clean_monte_carlo(const ScenarioConfig& cfg) {
    if (cfg.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
    auto t0 = std::chrono::steady_clock::now();
    Network net = cfg.network ? *cfg.network : load_case(cfg.case_path);
    PowerFlowResult base = solve_ac(net);
    const MeasurementSet z = build_measurements(net, base.state, cfg.noise_variance);
    const std::vector<int> rows = all_rows(z), lines = all_lines(net);
    std::vector<TrialRecord> records(cfg.trials);
    parallel_trials(cfg.trials, cfg.threads, [&](int i) {
        std::uint64_t seed = trial_seed(cfg.seed, i);
        MeasurementSet zn = add_noise(z, seed, cfg.noise_draw_variance);
        DetectionRound r = detection_round(net, zn, rows, lines, cfg.threshold);
        Classification c = r.clean ? Classification::Undetected : Classification::FalseAlarm;
        records[i] = {i, seed, c, r.max_statistic, kNaN, top_line(zn, r)};
    });
    RateReport rr = aggregate(std::move(records));
    rr.seconds = since(t0);
    return rr;
}

const std::vector<CasePreset>& case_presets() {
    static const std::vector<CasePreset> presets = {
        {1, "case14_dispatch.m", Selection::Proposed, 13, 17, 0.25},
        {2, "case14_dispatch.m", Selection::Fixed, 13, 19, 0.25},
        {3, "case24_ieee_rts.m", Selection::Fixed, 21, 23, 0.60},
        {4, "case24_ieee_rts.m", Selection::Fixed, 21, 20, 0.60},
        {5, "case118.m", Selection::Fixed, 4, 21, 0.25},
        {6, "case118.m", Selection::Fixed, 4, 2, 0.25},
    };
    return presets;
}

}  // namespace gridmask
