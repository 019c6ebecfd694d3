#include <regex>

#include "ncx/gateway.hpp"
#include "ncx/model_io.hpp"

namespace ncx {

ExtractionFailed::ExtractionFailed(int rounds, std::optional<ConsistencyReport> last, std::string why)
    : Error("extraction failed after " + std::to_string(rounds) + " round(s): " + why),
      rounds_(rounds),
      last_(std::move(last)) {}

std::optional<Direction> optimization_flag(std::string_view reply) {
  static const std::regex re(R"(\[\s*Optimization\s+Flag\s*:\s*([01])\s*\])", std::regex::icase);
  std::cmatch m;
  if (!std::regex_search(reply.data(), reply.data() + reply.size(), m, re)) return std::nullopt;
  return m[1] == "1" ? Direction::Maximize : Direction::Minimize;
}

Extraction extract_from_nl(const NlDescription& desc, ModelGateway& gateway, int max_rounds) {
  const auto& base = builtin_template(TemplateId::MathQuery);
  auto tmpl = PromptTemplate::make(base.id, base.system,
                                   base.user + "\n" + std::string(kOptimizationFlagInstruction),
                                   base.contract);

  std::optional<ConsistencyReport> last;
  std::string feedback;
  std::string why = "no rounds allowed";
  for (int round = 1; round <= max_rounds; ++round) {
    std::string input = desc.text;
    if (!feedback.empty()) input += "\n\nThe previous formulation was rejected:\n" + feedback;

    std::string reply;
    try {
      reply = gateway.complete(tmpl, input);
    } catch (const ContractViolation& e) {
      why = feedback = e.what();
      continue;
    }

    Problem pb;
    try {
      pb = parse_any(*fenced_block(reply));
    } catch (const Error& e) {
      why = feedback = e.what();
      continue;
    }

    std::vector<std::string> diags;
    if (auto flag = optimization_flag(reply)) {
      if (*flag != pb.direction)
        diags.push_back("optimization flag overrides the formulation's direction");
      pb.direction = *flag;
    } else {
      diags.push_back("optimization flag missing; using " + std::string(to_string(pb.direction)));
    }

    auto report = validate_consistency(pb, &desc, &gateway);
    if (report.consistent()) return {std::move(pb), std::move(report), round, std::move(diags)};
    feedback.clear();
    for (const auto& d : report.diagnostics) feedback += d + "\n";
    why = "consistency check failed";
    last = std::move(report);
  }
  throw ExtractionFailed(max_rounds, std::move(last), why);
}

}  // namespace ncx
