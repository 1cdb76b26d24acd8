#pragma once
// Error taxonomy shared by the whole library. Every failure mode the API
// contracts name has a stable code here; payload details ride along as
// key/value strings so the CLI can serialize them.

#include <map>
#include <stdexcept>
#include <string>

namespace indef {

enum class errc {
  non_finite,
  step_failure,
  not_unitary,
  tracking_ambiguity,
  no_bracket,
  syntax_error,
  unknown_identifier,
  domain_error,
  not_split,
  rank_loss,
  not_invertible,
  tangential_crossing,
  degenerate,
  degenerate_endpoint,
  non_regular_crossing,
  epsilon_not_found,
  bracket_failure,
  hypothesis_violated,
  modeling_error,
  no_separation,
  bound_violated,
  consistency_violation,
  parse_error,
  dimension_mismatch,
  non_diagonal_asymptote,
  not_found,
  certificate_mismatch,
  bad_request,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::non_finite: return "NonFinite";
    case errc::step_failure: return "StepFailure";
    case errc::not_unitary: return "NotUnitary";
    case errc::tracking_ambiguity: return "TrackingAmbiguity";
    case errc::no_bracket: return "NoBracket";
    case errc::syntax_error: return "SyntaxError";
    case errc::unknown_identifier: return "UnknownIdentifier";
    case errc::domain_error: return "DomainError";
    case errc::not_split: return "NotSplit";
    case errc::rank_loss: return "RankLoss";
    case errc::not_invertible: return "NotInvertible";
    case errc::tangential_crossing: return "TangentialCrossing";
    case errc::degenerate: return "Degenerate";
    case errc::degenerate_endpoint: return "DegenerateEndpoint";
    case errc::non_regular_crossing: return "NonRegularCrossing";
    case errc::epsilon_not_found: return "EpsilonNotFound";
    case errc::bracket_failure: return "BracketFailure";
    case errc::hypothesis_violated: return "HypothesisViolated";
    case errc::modeling_error: return "ModelingError";
    case errc::no_separation: return "NoSeparation";
    case errc::bound_violated: return "BoundViolated";
    case errc::consistency_violation: return "ConsistencyViolation";
    case errc::parse_error: return "ParseError";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::non_diagonal_asymptote: return "NonDiagonalAsymptote";
    case errc::not_found: return "NotFound";
    case errc::certificate_mismatch: return "CertificateMismatch";
    case errc::bad_request: return "BadRequest";
  }
  return "Unknown";
}

struct Error : std::runtime_error {
  errc code;
  std::map<std::string, std::string> detail;

  Error(errc c, const std::string& msg) : std::runtime_error(msg), code(c) {}

  Error& with(const std::string& key, const std::string& value) {
    detail[key] = value;
    return *this;
  }
  Error& with(const std::string& key, double value) {
    return with(key, std::to_string(value));
  }
  Error& with(const std::string& key, long long value) {
    return with(key, std::to_string(value));
  }
};

[[noreturn]] inline void fail(errc c, const std::string& msg) {
  throw Error(c, msg);
}

}  // namespace indef
