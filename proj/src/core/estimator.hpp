#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "measurement.hpp"
#include "powerflow.hpp"

namespace gridmask {

MeasurementSet build_measurements(const Network& net, const StateVector& state, double variance,
                                  std::optional<std::uint64_t> seed = std::nullopt);
// Noise variance defaults to the set's own variances (R).
MeasurementSet add_noise(const MeasurementSet& z, std::uint64_t seed, std::optional<double> variance = {});

// h(x) for one descriptor, with admittance of `scaled_line` multiplied by (1 + pe).
double measurement_function(const Network& net, const StateVector& s, const MeasDescriptor& d,
                            int scaled_line = -1, double pe = 0.0);

struct EstimateOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;
};

struct EstimateResult {
    StateVector state;
    Eigen::VectorXd residuals;    // z - h(x_hat), over the active measurements
    Eigen::MatrixXd H;            // d h / d state, observable columns only
    Eigen::MatrixXd Hp;           // d h / d p_e, one column per parameter line
    std::vector<int> state_columns;  // index into (theta_0..theta_n-1, V_0..V_n-1)
    std::vector<int> param_lines;
    std::vector<int> rows;        // measurement positions in the input set
    bool converged = false;
    int iterations = 0;
};

// Jacobians at a given state; exposed for finite-difference tests.
Eigen::MatrixXd measurement_jacobian(const Network& net, const StateVector& s, const std::vector<MeasDescriptor>& d);
Eigen::MatrixXd parameter_jacobian(const Network& net, const StateVector& s, const std::vector<MeasDescriptor>& d,
                                   const std::vector<int>& lines);

// rows: measurement positions to use (all when empty); param_lines: H_p columns.
EstimateResult wls_estimate(const Network& net, const MeasurementSet& z, const EstimateOptions& opt = {},
                            const std::vector<int>& rows = {}, std::optional<std::vector<int>> param_lines = {});

struct SensitivityBundle {
    Eigen::MatrixXd gain;    // H' R^-1 H
    Eigen::MatrixXd hat;     // H G^-1 H' R^-1
    Eigen::MatrixXd S;       // I - hat
    Eigen::MatrixXd Omega;   // S R
    Eigen::VectorXd lambda;  // -Hp' R^-1 r
    Eigen::MatrixXd Lambda;  // Hp' R^-1 S Hp
};

SensitivityBundle sensitivity(const EstimateResult& est, const MeasurementSet& z);

struct Statistic {
    enum class Kind { Lagrange, Residual } kind;
    int index;     // line for Lagrange, measurement position for Residual
    double value;  // NaN when undefined
};

struct NormalizedStats {
    std::vector<Statistic> lagrange;  // per parameter line
    std::vector<Statistic> residual;  // per active measurement
};

NormalizedStats normalized_stats(const SensitivityBundle& b, const EstimateResult& est);

struct DetectionRound {
    std::vector<Statistic> ranked;  // defined statistics, descending
    double max_statistic = 0.0;
    std::vector<int> suspect_lines;
    std::vector<int> removed_measurements;
    bool clean = false;
};

struct DetectionReport {
    std::vector<DetectionRound> rounds;
    std::vector<int> final_suspect_lines;
    std::string stop_reason;  // clean, max-rounds, unobservable
};

DetectionReport detect(const Network& net, const MeasurementSet& z, double threshold, int max_rounds = 10,
                       double tie = 1e-6);

// One estimation + statistics pass over the full set (first detection round).
DetectionRound detection_round(const Network& net, const MeasurementSet& z, const std::vector<int>& rows,
                               const std::vector<int>& params, double threshold, double tie = 1e-6);

std::string statistic_label(const Network& net, const MeasurementSet& z, const Statistic& s);

}  // namespace gridmask
