#pragma once

#include <json.hpp>
#include <string>

#include "harness.hpp"

namespace gridmask {

// User-facing output: 1-based line ids, external bus numbers, MW/MVAr.
nlohmann::json network_json(const Network& net);
std::string flows_csv(const Network& net, const PowerFlowResult& pf);
nlohmann::json plan_json(const Network& net, const AttackPlan& plan);
nlohmann::json forge_json(const Network& net, const ForgeOutcome& out);
nlohmann::json relaxation_json(const RelaxationReport& rep);
nlohmann::json detection_json(const Network& net, const MeasurementSet& z, const DetectionReport& rep);
nlohmann::json scenario_json(const Network& net, const MeasurementSet& z, const ScenarioReport& rep);
nlohmann::json rate_json(const RateReport& rep);
std::string rate_csv(const RateReport& rep);

}  // namespace gridmask
