#include "gridmask/gridmask.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "core/serialize.hpp"

struct gm_network {
    gridmask::Network net;
};

namespace {

thread_local std::string g_last_error;

gm_status fail(gm_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <typename Fn>
gm_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return GM_OK;
    } catch (const gridmask::Error& e) {
        return fail(static_cast<gm_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(GM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(GM_ERR_INTERNAL, e.what());
    }
}

char* dup(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

gridmask::ScenarioConfig to_config(const gm_network* net, const gm_config* c) {
    using namespace gridmask;
    ScenarioConfig cfg;
    cfg.network = net->net;
    if (c) {
        cfg.tau = c->tau;
        cfg.noise_variance = c->noise_variance;
        cfg.threshold = c->threshold;
        cfg.mode = c->mode == GM_MODE_PHYSICAL ? Mode::Physical : Mode::Paper;
        switch (c->selection) {
            case GM_SELECT_PROPOSED: cfg.selection = Selection::Proposed; break;
            case GM_SELECT_RANDOM: cfg.selection = Selection::Random; break;
            case GM_SELECT_FIXED: cfg.selection = Selection::Fixed; break;
            default: throw Error(ErrorCode::InvalidArgument, "unknown selection");
        }
        if (cfg.selection == Selection::Fixed) cfg.pair = std::make_pair(c->real_line - 1, c->fake_line - 1);
        cfg.trials = c->trials;
        cfg.seed = c->seed;
        cfg.threads = c->threads;
        if (c->noise_draw_variance > 0) cfg.noise_draw_variance = c->noise_draw_variance;
    }
    if (!(cfg.noise_variance > 0)) throw Error(ErrorCode::InvalidArgument, "noise variance must be positive");
    return cfg;
}

void fill_rates(const gridmask::RateReport& r, gm_rates* out) {
    out->trials = r.trials;
    out->correct_rate = r.correct_rate;
    out->success_rate = r.success_rate;
    out->false_alarm_rate = r.false_alarm_rate;
    out->incorrect_rate = r.incorrect_rate;
    out->mean_fake_statistic = r.mean_fake_statistic;
}

#define GM_REQUIRE(cond, what) \
    if (!(cond)) return fail(GM_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

void gm_config_default(gm_config* cfg) {
    if (!cfg) return;
    cfg->tau = 0.25;
    cfg->noise_variance = 0.001;
    cfg->threshold = 3.0;
    cfg->mode = GM_MODE_PAPER;
    cfg->selection = GM_SELECT_PROPOSED;
    cfg->real_line = 0;
    cfg->fake_line = 0;
    cfg->trials = 1000;
    cfg->seed = 1;
    cfg->add_noise = 0;
    cfg->threads = 0;
    cfg->noise_draw_variance = 0.0;
}

const char* gm_last_error(void) { return g_last_error.c_str(); }

const char* gm_status_name(gm_status s) {
    if (s == GM_OK) return "ok";
    if (s == GM_ERR_INTERNAL) return "internal";
    if (s >= GM_ERR_INVALID_ARGUMENT && s <= GM_ERR_IO) return gridmask::error_code_name(static_cast<gridmask::ErrorCode>(s));
    return "unknown";
}

void gm_string_free(char* s) { std::free(s); }

gm_status gm_network_load(const char* path, gm_network** out) {
    GM_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new gm_network{gridmask::load_case(path)}; });
}

gm_status gm_network_parse(const char* text, gm_network** out) {
    GM_REQUIRE(text && out, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new gm_network{gridmask::parse_case(text)}; });
}

void gm_network_free(gm_network* net) { delete net; }

gm_status gm_network_size(const gm_network* net, int* buses, int* lines) {
    GM_REQUIRE(net, "null network");
    if (buses) *buses = net->net.n_b();
    if (lines) *lines = net->net.n_br();
    return GM_OK;
}

gm_status gm_network_set_protected(gm_network* net, const int* lines, int count) {
    GM_REQUIRE(net && (lines || count == 0) && count >= 0, "bad argument");
    return guarded([&] {
        std::vector<int> ids;
        for (int i = 0; i < count; ++i) ids.push_back(lines[i] - 1);
        gridmask::set_protected(net->net, ids);
    });
}

gm_status gm_network_json(const gm_network* net, char** json) {
    GM_REQUIRE(net && json, "null argument");
    return guarded([&] { *json = dup(gridmask::network_json(net->net).dump(2)); });
}

gm_status gm_powerflow_csv(const gm_network* net, char** csv) {
    GM_REQUIRE(net && csv, "null argument");
    return guarded([&] { *csv = dup(gridmask::flows_csv(net->net, gridmask::solve_ac(net->net))); });
}

gm_status gm_influence_factors(const gm_network* net, double* out, int len) {
    GM_REQUIRE(net && out, "null argument");
    GM_REQUIRE(len >= net->net.n_br(), "output buffer too short");
    return guarded([&] {
        auto pf = gridmask::solve_ac(net->net);
        Eigen::VectorXd f = gridmask::influence_factors(net->net, pf.flows, gridmask::lodf(net->net));
        for (int l = 0; l < f.size(); ++l) out[l] = f[l];
    });
}

gm_status gm_plan_json(const gm_network* net, const gm_config* cfg, char** json) {
    GM_REQUIRE(net && json, "null argument");
    return guarded([&] {
        auto s = gridmask::prepare_scenario(to_config(net, cfg));
        *json = dup(gridmask::plan_json(s.net, s.plan).dump(2));
    });
}

gm_status gm_forge_json(const gm_network* net, const gm_config* cfg, char** json) {
    GM_REQUIRE(net && json, "null argument");
    return guarded([&] {
        auto s = gridmask::prepare_scenario(to_config(net, cfg));
        nlohmann::json j = gridmask::forge_json(s.net, s.forged);
        j["plan"] = gridmask::plan_json(s.net, s.plan);
        j["relaxation"] = gridmask::relaxation_json(gridmask::relaxation_report(s.forged.solution, s.net));
        *json = dup(j.dump(2));
    });
}

gm_status gm_detect_json(const gm_network* net, const gm_config* cfg, char** json) {
    GM_REQUIRE(net && json, "null argument");
    return guarded([&] {
        gridmask::ScenarioConfig c = to_config(net, cfg);
        auto s = gridmask::prepare_scenario(c);
        gridmask::MeasurementSet z = s.z_bar;
        if (cfg && cfg->add_noise) z = gridmask::add_noise(z, cfg->seed, c.noise_draw_variance);
        *json = dup(gridmask::detection_json(s.net, z, gridmask::detect(s.net, z, c.threshold, c.max_rounds)).dump(2));
    });
}

gm_status gm_scenario_json(const gm_network* net, const gm_config* cfg, char** json) {
    GM_REQUIRE(net && json, "null argument");
    return guarded([&] {
        gridmask::ScenarioConfig c = to_config(net, cfg);
        std::optional<std::uint64_t> seed;
        if (cfg && cfg->add_noise) seed = cfg->seed;
        gridmask::ScenarioReport r = gridmask::run_scenario(c, seed);
        gridmask::MeasurementSet z = gridmask::build_measurements(net->net, gridmask::solve_ac(net->net).state, c.noise_variance);
        *json = dup(gridmask::scenario_json(net->net, z, r).dump(2));
    });
}

gm_status gm_monte_carlo(const gm_network* net, const gm_config* cfg, gm_rates* rates, char** csv) {
    GM_REQUIRE(net && rates, "null argument");
    return guarded([&] {
        gridmask::RateReport r = gridmask::monte_carlo(to_config(net, cfg));
        fill_rates(r, rates);
        if (csv) *csv = dup(gridmask::rate_csv(r));
    });
}

gm_status gm_clean_false_alarm(const gm_network* net, const gm_config* cfg, gm_rates* rates) {
    GM_REQUIRE(net && rates, "null argument");
    return guarded([&] { fill_rates(gridmask::clean_monte_carlo(to_config(net, cfg)), rates); });
}

}  // extern "C"
