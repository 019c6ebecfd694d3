#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncx/problem.hpp"

namespace ncx {

class ModelGateway;

/// Parses the modeling language. Indexed families are expanded to scalar
/// rows, and every relation is normalized to g <= 0 or h == 0.
///
/// Throws SyntaxError, UndeclaredSymbol, DuplicateDeclaration, BoundViolation.
Problem parse_problem(std::string_view text);

/// Modeling-language text that parses back to an equal Problem.
std::string emit_dsl(const Problem& pb);

/// Throws SchemaError with a JSON-pointer path.
Problem parse_json(std::string_view bytes);
/// Canonical JSON, two-space indented.
std::string emit_json(const Problem& pb);

/// Reads a .json or modeling-language file, choosing by content.
Problem load_problem_file(const std::string& path);
/// JSON when the first non-space byte is '{', otherwise the modeling language.
Problem parse_any(std::string_view text);

struct NlDescription {
  std::string text;
  explicit NlDescription(std::string t);
};

struct ConsistencyReport {
  bool alignment = true;     // formula matches description
  bool completeness = true;  // every variable used, nothing undeclared
  bool type_correctness = true;
  bool value_accuracy = true;
  bool alignment_skipped = true;
  std::vector<std::string> diagnostics;

  bool consistent() const noexcept {
    return alignment && completeness && type_correctness && value_accuracy;
  }
};

/// Three criteria are checked here; alignment needs both a description and a
/// gateway and is otherwise reported as skipped (and true).
ConsistencyReport validate_consistency(const Problem& pb, const NlDescription* desc = nullptr,
                                       ModelGateway* gateway = nullptr);

class ExtractionFailed : public Error {
 public:
  ExtractionFailed(int rounds, std::optional<ConsistencyReport> last, std::string why);
  int rounds() const noexcept { return rounds_; }
  const std::optional<ConsistencyReport>& last_report() const noexcept { return last_; }

 private:
  int rounds_;
  std::optional<ConsistencyReport> last_;
};

struct Extraction {
  Problem problem;
  ConsistencyReport report;
  int rounds = 0;
  std::vector<std::string> diagnostics;
};

/// Marker value in a formulation reply: 1 maximize, 0 minimize.
std::optional<Direction> optimization_flag(std::string_view reply);

/// Asks the gateway for a formulation until one parses and passes the
/// consistency check, at most `max_rounds` times.
///
/// Throws GatewayError for transport failures and ExtractionFailed when the
/// rounds run out.
Extraction extract_from_nl(const NlDescription& desc, ModelGateway& gateway, int max_rounds);

}  // namespace ncx
