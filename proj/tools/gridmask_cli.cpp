// gridmask command line: plan | forge | se | run | mc
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gridmask/gridmask.h"

#ifndef GRIDMASK_DATA_DIR
#define GRIDMASK_DATA_DIR "data"
#endif

namespace {

struct Preset {
    int number;
    const char* file;
    int l_o, l_m;
    bool proposed;
    double tau;
};

// Reference pairs for the six comparison cases; 1 is planned, the rest are fixed.
const Preset kPresets[] = {
    {1, "case14_dispatch.m", 13, 17, true, 0.25}, {2, "case14_dispatch.m", 13, 19, false, 0.25},
    {3, "case24_ieee_rts.m", 21, 23, false, 0.60}, {4, "case24_ieee_rts.m", 21, 20, false, 0.60},
    {5, "case118.m", 4, 21, false, 0.25},          {6, "case118.m", 4, 2, false, 0.25},
};

struct Options {
    std::string case_path;
    int preset = 0;
    double tau = NAN;
    double threshold = 3.0;
    double noise_var = 0.001;
    double noise_draw_var = 0.0;
    int trials = 1000;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string mode = "paper";
    std::string selection = "proposed";
    std::string out = "json";
    std::string pair;
    std::vector<int> protected_lines;
    bool dump_network = false;
    bool dump_flows = false;
    bool fresh_random = false;
    int threads = 0;
};

int check(gm_status s, const char* stage) {
    if (s != GM_OK) {
        std::fprintf(stderr, "gridmask: %s failed (%s): %s\n", stage, gm_status_name(s), gm_last_error());
        return static_cast<int>(s);
    }
    return 0;
}

void emit(char* s) {
    std::fputs(s, stdout);
    std::fputc('\n', stdout);
    gm_string_free(s);
}

bool parse_pair(const std::string& s, int& a, int& b) {
    char comma = 0;
    std::istringstream is(s);
    return static_cast<bool>(is >> a >> comma >> b) && comma == ',';
}

int run(const std::string& cmd, Options o) {
    gm_config cfg;
    gm_config_default(&cfg);

    if (o.preset) {
        if (o.preset < 1 || o.preset > 6) {
            std::fprintf(stderr, "gridmask: --preset must be 1..6\n");
            return GM_ERR_INVALID_ARGUMENT;
        }
        const Preset& p = kPresets[o.preset - 1];
        if (o.case_path.empty()) o.case_path = std::string(GRIDMASK_DATA_DIR) + "/" + p.file;
        if (std::isnan(o.tau)) o.tau = p.tau;
        if (p.proposed) {
            o.selection = "proposed";
        } else if (o.fresh_random) {
            o.selection = "random";
        } else {
            o.selection = "fixed";
            o.pair = std::to_string(p.l_o) + "," + std::to_string(p.l_m);
        }
    }
    if (o.case_path.empty()) {
        std::fprintf(stderr, "gridmask: --case or --preset is required\n");
        return GM_ERR_INVALID_ARGUMENT;
    }
    if (std::isnan(o.tau)) o.tau = o.case_path.find("case24") != std::string::npos ? 0.60 : 0.25;
    if (!o.pair.empty() && o.selection == "proposed") o.selection = "fixed";

    cfg.tau = o.tau;
    cfg.threshold = o.threshold;
    cfg.noise_variance = o.noise_var;
    cfg.noise_draw_variance = o.noise_draw_var;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.add_noise = o.seed_given ? 1 : 0;
    cfg.threads = o.threads;
    cfg.mode = o.mode == "physical" ? GM_MODE_PHYSICAL : GM_MODE_PAPER;
    if (o.selection == "random") cfg.selection = GM_SELECT_RANDOM;
    else if (o.selection == "fixed") cfg.selection = GM_SELECT_FIXED;
    else cfg.selection = GM_SELECT_PROPOSED;
    if (cfg.selection == GM_SELECT_FIXED && !parse_pair(o.pair, cfg.real_line, cfg.fake_line)) {
        std::fprintf(stderr, "gridmask: --pair expects REAL,FAKE line ids\n");
        return GM_ERR_INVALID_ARGUMENT;
    }

    gm_network* net = nullptr;
    if (int rc = check(gm_network_load(o.case_path.c_str(), &net), "parse")) return rc;
    struct Guard {
        gm_network* n;
        ~Guard() { gm_network_free(n); }
    } guard{net};
    if (!o.protected_lines.empty())
        if (int rc = check(gm_network_set_protected(net, o.protected_lines.data(), static_cast<int>(o.protected_lines.size())),
                           "protect"))
            return rc;

    char* s = nullptr;
    if (o.dump_network) {
        if (int rc = check(gm_network_json(net, &s), "dump-network")) return rc;
        emit(s);
    }
    if (o.dump_flows) {
        if (int rc = check(gm_powerflow_csv(net, &s), "powerflow")) return rc;
        emit(s);
    }

    if (cmd == "plan") {
        if (int rc = check(gm_plan_json(net, &cfg, &s), "plan")) return rc;
        emit(s);
    } else if (cmd == "forge") {
        if (int rc = check(gm_forge_json(net, &cfg, &s), "forge")) return rc;
        emit(s);
    } else if (cmd == "se") {
        if (int rc = check(gm_detect_json(net, &cfg, &s), "detect")) return rc;
        emit(s);
    } else if (cmd == "run") {
        if (int rc = check(gm_scenario_json(net, &cfg, &s), "run")) return rc;
        if (o.out == "csv") {
            auto j = nlohmann::json::parse(s);
            gm_string_free(s);
            auto suspects = j["detection"]["final_suspect_lines"];
            std::printf("classification,max_statistic,fake_line_statistic,suspect_lines\n%s,%s,%s,\"%s\"\n",
                        j["classification"].get<std::string>().c_str(), j["max_statistic"].dump().c_str(),
                        j["fake_line_statistic"].dump().c_str(), suspects.dump().c_str());
        } else {
            emit(s);
        }
    } else if (cmd == "mc") {
        gm_rates rates;
        char* csv = nullptr;
        if (int rc = check(gm_monte_carlo(net, &cfg, &rates, o.out == "csv" ? &csv : nullptr), "monte-carlo"))
            return rc;
        if (csv) {
            emit(csv);
        } else {
            nlohmann::json j = {{"case", o.case_path},
                                {"trials", rates.trials},
                                {"correct_rate", rates.correct_rate},
                                {"success_rate", rates.success_rate},
                                {"false_alarm_rate", rates.false_alarm_rate},
                                {"incorrect_rate", rates.incorrect_rate},
                                {"mean_fake_line_statistic",
                                 std::isnan(rates.mean_fake_statistic) ? nlohmann::json(nullptr)
                                                                       : nlohmann::json(rates.mean_fake_statistic)}};
            std::cout << j.dump(2) << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked line-outage attack planning, forging and detection"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--case", o.case_path, "MATPOWER case file");
        sub->add_option("--preset", o.preset, "comparison case 1..6 (sets case, pair and tau)");
        sub->add_option("--tau", o.tau, "load modification range (default 0.25, 0.60 for the 24-bus case)");
        sub->add_option("--threshold", o.threshold, "identification threshold")->capture_default_str();
        sub->add_option("--noise-var", o.noise_var, "measurement noise variance")->capture_default_str();
        sub->add_option("--noise-draw-var", o.noise_draw_var, "draw noise with this variance, keep --noise-var as R");
        sub->add_option("--trials", o.trials, "Monte Carlo trials")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& v) {
                o.seed = v;
                o.seed_given = true;
            },
            "RNG seed; single runs are noiseless unless given");
        sub->add_option("--mode", o.mode, "paper | physical")
            ->capture_default_str()
            ->check(CLI::IsMember({"paper", "physical"}));
        sub->add_option("--selection", o.selection, "proposed | random | fixed")
            ->capture_default_str()
            ->check(CLI::IsMember({"proposed", "random", "fixed"}));
        sub->add_option("--out", o.out, "json | csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--pair", o.pair, "REAL,FAKE line ids (1-based)");
        sub->add_option("--protected", o.protected_lines, "protected line ids (1-based)")->delimiter(',');
        sub->add_flag("--dump-network", o.dump_network, "print the parsed network as JSON");
        sub->add_flag("--dump-flows", o.dump_flows, "print base-case flows as CSV");
        sub->add_flag("--fresh-random", o.fresh_random, "presets 2, 4, 6 draw a random pair instead of the fixed one");
        sub->add_option("--threads", o.threads, "worker threads for mc (0 = all cores)");
    };

    std::string cmd;
    const std::pair<const char*, const char*> subs[] = {
        {"plan", "select real and fake lines and the attack region"},
        {"forge", "solve the forging problem and audit it"},
        {"se", "state estimation and recursive detection on forged data"},
        {"run", "full scenario report"},
        {"mc", "Monte Carlo rates"},
    };
    for (const auto& [name, help] : subs) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub);
        sub->callback([&cmd, n = name] { cmd = n; });
    }

    CLI11_PARSE(app, argc, argv);
    return run(cmd, o);
}
