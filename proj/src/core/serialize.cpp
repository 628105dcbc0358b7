#include "serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gridmask {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json cplx_json(cplx c) { return json{{"p", num(c.real())}, {"q", num(c.imag())}}; }

json bus_ids(const Network& net, const std::vector<int>& buses) {
    json a = json::array();
    for (int b : buses) a.push_back(net.buses[b].ext_id);
    return a;
}

json line_ids(const std::vector<int>& lines) {
    json a = json::array();
    for (int l : lines) a.push_back(l + 1);
    return a;
}

const char* kind_name(BusKind k) {
    switch (k) {
        case BusKind::PQ: return "PQ";
        case BusKind::PV: return "PV";
        case BusKind::Slack: return "slack";
    }
    return "?";
}

}  // namespace

json network_json(const Network& net) {
    json j;
    j["name"] = net.name;
    j["base_mva"] = net.base_mva;
    j["reference_bus"] = net.buses[net.reference_bus].ext_id;
    json buses = json::array();
    for (const Bus& b : net.buses)
        buses.push_back({{"id", b.ext_id},
                         {"type", kind_name(b.kind)},
                         {"load", cplx_json(b.load)},
                         {"generator", b.has_generator},
                         {"vset", b.voltage_setpoint}});
    j["buses"] = buses;
    json lines = json::array();
    for (int l = 0; l < net.n_br(); ++l) {
        const Branch& br = net.branches[l];
        lines.push_back({{"id", l + 1},
                         {"from", net.buses[br.from].ext_id},
                         {"to", net.buses[br.to].ext_id},
                         {"r", br.r},
                         {"x", br.x},
                         {"rating", num(br.rating)},
                         {"transformer", br.is_transformer},
                         {"protected", br.is_protected}});
    }
    j["lines"] = lines;
    return j;
}

std::string flows_csv(const Network& net, const PowerFlowResult& pf) {
    std::ostringstream os;
    os << "line,from,to,p_from_mw,q_from_mvar,p_to_mw,q_to_mvar,loss_mw,loss_mvar\n";
    char buf[256];
    for (int l = 0; l < net.n_br(); ++l) {
        const Branch& br = net.branches[l];
        cplx f = pf.flows.from[l], t = pf.flows.to[l], s = pf.flows.loss[l];
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", l + 1, net.buses[br.from].ext_id,
                      net.buses[br.to].ext_id, f.real(), f.imag(), t.real(), t.imag(), s.real(), s.imag());
        os << buf;
    }
    return os.str();
}

json plan_json(const Network& net, const AttackPlan& plan) {
    json j;
    j["real_line"] = plan.real_line + 1;
    j["fake_line"] = plan.fake_line + 1;
    j["fake_from_bus"] = plan.fake_send >= 0 ? json(net.buses[plan.fake_send].ext_id) : json(nullptr);
    j["fake_to_bus"] = plan.fake_recv >= 0 ? json(net.buses[plan.fake_recv].ext_id) : json(nullptr);
    j["fake_from_bus_load_add_mw"] = plan.fake_from_bus_load_add;
    const AttackRegion& R = plan.region;
    j["region"] = {{"buses", bus_ids(net, R.buses)},   {"lines", line_ids(R.lines)},
                   {"interior", bus_ids(net, R.interior)}, {"boundary", bus_ids(net, R.boundary)},
                   {"real_end", bus_ids(net, R.real_end)}, {"fake_end", bus_ids(net, R.fake_end)},
                   {"generators", bus_ids(net, R.generators)}};
    json log = json::array();
    for (const Exclusion& e : plan.exclusion_log)
        log.push_back({{"real_line", e.real_line + 1}, {"fake_line", e.fake_line + 1}, {"rule", e.rule},
                       {"detail", e.detail}});
    j["exclusions"] = log;
    return j;
}

json forge_json(const Network& net, const ForgeOutcome& out) {
    const ForgeSolution& s = out.solution;
    json j;
    j["status"] = s.status;
    j["iterations"] = s.iterations;
    j["seconds"] = s.seconds;
    j["objective_mva"] = s.objective;
    j["expansions"] = out.expansions;
    json buses = json::array();
    for (std::size_t i = 0; i < s.buses.size(); ++i)
        buses.push_back({{"bus", net.buses[s.buses[i]].ext_id}, {"v", std::sqrt(std::max(0.0, s.W[i]))}});
    j["voltages"] = buses;
    json lines = json::array();
    for (std::size_t i = 0; i < s.lines.size(); ++i)
        lines.push_back({{"line", s.lines[i] + 1},
                         {"flow", cplx_json(s.forged_flows[i])},
                         {"current_sq", s.C[i]},
                         {"gap", s.gap[i]}});
    j["lines"] = lines;
    json loads = json::array();
    for (std::size_t i = 0; i < s.interior.size(); ++i)
        loads.push_back({{"bus", net.buses[s.interior[i]].ext_id}, {"load", cplx_json(s.forged_loads[i])}});
    j["interior_loads"] = loads;
    json bl = json::array();
    for (std::size_t i = 0; i < s.boundary.size(); ++i)
        bl.push_back({{"bus", net.buses[s.boundary[i]].ext_id}, {"p_load_mw", num(s.boundary_p_load[i])}});
    j["boundary_loads"] = bl;
    j["audit"] = {{"passed", out.audit.passed()},
                  {"max_violation", out.audit.max_violation},
                  {"violations", out.audit.violations}};
    return j;
}

json relaxation_json(const RelaxationReport& rep) {
    json j;
    j["o_inf_percent"] = rep.o_inf * 100.0;
    json lines = json::array();
    for (const LineLoss& l : rep.lines)
        lines.push_back({{"line", l.line + 1}, {"calculated", cplx_json(l.calculated)}, {"real", cplx_json(l.real)}});
    j["lines"] = lines;
    return j;
}

json detection_json(const Network& net, const MeasurementSet& z, const DetectionReport& rep) {
    json j;
    json rounds = json::array();
    for (const DetectionRound& r : rep.rounds) {
        json ranked = json::array();
        for (const Statistic& s : r.ranked)
            ranked.push_back({{"label", statistic_label(net, z, s)},
                              {"kind", s.kind == Statistic::Kind::Lagrange ? "lagrange" : "residual"},
                              {"value", num(s.value)}});
        json removed = json::array();
        for (int k : r.removed_measurements) removed.push_back(describe(net, z.desc[k]));
        rounds.push_back({{"max_statistic", r.max_statistic},
                          {"clean", r.clean},
                          {"suspect_lines", line_ids(r.suspect_lines)},
                          {"removed_measurements", removed},
                          {"statistics", ranked}});
    }
    j["rounds"] = rounds;
    j["final_suspect_lines"] = line_ids(rep.final_suspect_lines);
    j["stop_reason"] = rep.stop_reason;
    return j;
}

json scenario_json(const Network& net, const MeasurementSet& z, const ScenarioReport& rep) {
    json j;
    j["config"] = {{"case", rep.cfg.case_path},
                   {"tau", rep.cfg.tau},
                   {"noise_variance", rep.cfg.noise_variance},
                   {"threshold", rep.cfg.threshold},
                   {"mode", to_string(rep.cfg.mode)},
                   {"selection", to_string(rep.cfg.selection)}};
    j["noise_seed"] = rep.noise_seed ? json(*rep.noise_seed) : json(nullptr);
    j["plan"] = plan_json(net, rep.plan);
    j["forge"] = forge_json(net, rep.forged);
    j["relaxation"] = relaxation_json(rep.relaxation);
    json inc = json::array();
    for (const LineIncrement& l : rep.increments)
        inc.push_back({{"line", l.line + 1},
                       {"before", cplx_json(l.before)},
                       {"after", cplx_json(l.after)},
                       {"increment_percent", num(l.ratio)}});
    j["increments"] = inc;
    j["detection"] = detection_json(net, z, rep.detection);
    j["classification"] = to_string(rep.classification);
    j["max_statistic"] = num(rep.max_statistic);
    j["fake_line_statistic"] = num(rep.fake_statistic);
    j["seconds"] = rep.seconds;
    return j;
}

json rate_json(const RateReport& rep) {
    return {{"trials", rep.trials},
            {"correct_rate", rep.correct_rate},
            {"success_rate", rep.success_rate},
            {"false_alarm_rate", rep.false_alarm_rate},
            {"incorrect_rate", rep.incorrect_rate},
            {"mean_fake_line_statistic", num(rep.mean_fake_statistic)},
            {"seconds", rep.seconds}};
}

std::string rate_csv(const RateReport& rep) {
    std::ostringstream os;
    os << "trial,seed,classification,max_statistic,fake_line_statistic,top_line\n";
    char buf[256];
    for (const TrialRecord& r : rep.records) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%s,%.6f,%.6f,%d\n", r.trial, static_cast<unsigned long long>(r.seed),
                      to_string(r.classification).c_str(), r.max_statistic, r.fake_statistic,
                      r.top_line >= 0 ? r.top_line + 1 : 0);
        os << buf;
    }
    return os.str();
}

}  // namespace gridmask
