#pragma once

#include <stdexcept>
#include <string>

namespace gridmask {

enum class ErrorCode {
    InvalidArgument = 1,
    MalformedFile,
    DisconnectedGraph,
    NoSlackBus,
    InvalidBranchId,
    InvalidBusId,
    NonConvergence,
    SingularMatrix,
    IslandingLine,
    NoCandidateLeft,
    NoPath,
    EmptyRegion,
    InconsistentPlan,
    Infeasible,
    NumericalFailure,
    Unobservable,
    DescriptorMismatch,
    Io,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace gridmask
