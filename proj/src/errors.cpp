#include "uwb/errors.hpp"

namespace uwb {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ok: return "Ok";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::format_error: return "FormatError";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::insufficient_tags: return "InsufficientTags";
    case ErrorCode::missing_truth: return "MissingTruth";
    case ErrorCode::rank_deficient: return "RankDeficient";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::degenerate_domain: return "DegenerateDomain";
    case ErrorCode::degenerate_interval: return "DegenerateInterval";
    case ErrorCode::degenerate_sigma: return "DegenerateSigma";
    case ErrorCode::singular_geometry: return "SingularGeometry";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::no_positive_root: return "NoPositiveRoot";
    case ErrorCode::usage_error: return "UsageError";
    case ErrorCode::internal_error: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace uwb
