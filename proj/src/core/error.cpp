#include "error.hpp"

namespace gridmask {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::MalformedFile: return "malformed-file";
        case ErrorCode::DisconnectedGraph: return "disconnected-graph";
        case ErrorCode::NoSlackBus: return "no-slack-bus";
        case ErrorCode::InvalidBranchId: return "invalid-branch-id";
        case ErrorCode::InvalidBusId: return "invalid-bus-id";
        case ErrorCode::NonConvergence: return "non-convergence";
        case ErrorCode::SingularMatrix: return "singular-matrix";
        case ErrorCode::IslandingLine: return "islanding-line";
        case ErrorCode::NoCandidateLeft: return "no-candidate-left";
        case ErrorCode::NoPath: return "no-path";
        case ErrorCode::EmptyRegion: return "empty-region";
        case ErrorCode::InconsistentPlan: return "inconsistent-plan";
        case ErrorCode::Infeasible: return "infeasible";
        case ErrorCode::NumericalFailure: return "numerical-failure";
        case ErrorCode::Unobservable: return "unobservable";
        case ErrorCode::DescriptorMismatch: return "measurement-descriptor-mismatch";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

}  // namespace gridmask
