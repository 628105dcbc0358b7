#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "attack_planner.hpp"
#include "estimator.hpp"
#include "forge.hpp"

namespace gridmask {

enum class Mode { Paper, Physical };
enum class Selection { Proposed, Random, Fixed };
enum class Classification { Successful, Correct, Incorrect, FalseAlarm, Undetected };

std::string to_string(Mode m);
std::string to_string(Selection s);
std::string to_string(Classification c);
Mode parse_mode(const std::string& s);
Selection parse_selection(const std::string& s);

struct ScenarioConfig {
    std::string case_path;
    std::optional<Network> network;  // used instead of case_path when set
    double tau = 0.25;
    double noise_variance = 0.001;  // R diagonal, also the noise variance when noise is drawn
    double threshold = 3.0;
    std::optional<double> noise_draw_variance;  // draw noise with this instead of R
    Mode mode = Mode::Paper;
    Selection selection = Selection::Proposed;
    std::optional<std::pair<int, int>> pair;  // (l_o, l_m), 0-based, for Selection::Fixed
    std::vector<int> protected_lines;         // 0-based
    int trials = 1000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    int max_rounds = 10;
};

// Scenario state shared by the single run and the Monte Carlo loop.
struct PreparedScenario {
    Network net;
    PowerFlowResult base;
    AttackPlan plan;
    ForgeOutcome forged;
    MeasurementSet z;      // baseline, noiseless
    MeasurementSet z_bar;  // forged, noiseless
    std::map<std::string, double> seconds;
};

struct LineIncrement {
    int line;
    cplx before, after;  // MVA
    double ratio;        // percent, NaN when undefined
};

struct ScenarioReport {
    ScenarioConfig cfg;
    AttackPlan plan;
    ForgeOutcome forged;
    RelaxationReport relaxation;
    std::vector<LineIncrement> increments;
    DetectionReport detection;
    Classification classification = Classification::Undetected;
    double max_statistic = 0.0;
    double fake_statistic = 0.0;  // lambda^N of l_m in round 1, NaN if undefined
    std::optional<std::uint64_t> noise_seed;
    std::map<std::string, double> seconds;
};

struct TrialRecord {
    int trial;
    std::uint64_t seed;
    Classification classification;
    double max_statistic;
    double fake_statistic;
    int top_line;  // line of the largest statistic, -1 for non-flow residuals
};

struct RateReport {
    int trials = 0;
    double correct_rate = 0.0;   // correct or successful
    double success_rate = 0.0;
    double false_alarm_rate = 0.0;
    double incorrect_rate = 0.0;
    double mean_fake_statistic = 0.0;  // over correct trials, NaN if none
    std::vector<TrialRecord> records;
    double seconds = 0.0;
};

PreparedScenario prepare_scenario(const ScenarioConfig& cfg);
ScenarioReport run_scenario(const ScenarioConfig& cfg, std::optional<std::uint64_t> noise_seed = std::nullopt);
RateReport monte_carlo(const ScenarioConfig& cfg);

// Fraction of noisy unattacked trials whose largest statistic exceeds the threshold.
RateReport clean_monte_carlo(const ScenarioConfig& cfg);

Classification classify(const MeasurementSet& z, const AttackPlan& plan, const DetectionRound& round,
                        double threshold);
double fake_line_statistic(const DetectionRound& round, int l_m);

std::vector<double> increment_ratios(const MeasurementSet& z, const MeasurementSet& z_bar);
std::vector<LineIncrement> line_increments(const PreparedScenario& s);

std::pair<int, int> random_selection(const Network& net, std::uint64_t seed);

// Baseline measurement set: pre-outage (paper) or post-outage re-solve (physical).
MeasurementSet baseline_measurements(const Network& net, const PowerFlowResult& base, int l_o, Mode mode,
                                     double variance);

std::uint64_t trial_seed(std::uint64_t seed, int trial);

struct CasePreset {
    int number;
    std::string file;  // relative to the data directory
    Selection selection;
    int l_o, l_m;      // 1-based pair from the reference table
    double tau;
};
const std::vector<CasePreset>& case_presets();

}  // namespace gridmask
