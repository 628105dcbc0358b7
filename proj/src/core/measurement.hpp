#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "case_model.hpp"

namespace gridmask {

enum class MeasKind { LineFlow, VoltageMagnitude, ReferencePhase };

struct MeasDescriptor {
    MeasKind kind;
    int index;  // branch for LineFlow, bus otherwise

    bool operator==(const MeasDescriptor&) const = default;
};

std::string describe(const Network& net, const MeasDescriptor& d);

// Values are per-unit: from-end real flow on base_mva, |V|, phase in radians.
struct MeasurementSet {
    std::vector<MeasDescriptor> desc;
    Eigen::VectorXd value;
    Eigen::VectorXd variance;
    std::optional<std::uint64_t> noise_seed;
    std::vector<cplx> load_record;  // MVA per bus, bookkeeping only

    int size() const { return static_cast<int>(desc.size()); }
    int find(const MeasDescriptor& d) const;
};

}  // namespace gridmask
