#include <array>

#include "ncx/gateway.hpp"

namespace ncx {

namespace {

constexpr std::string_view kFormulationContract =
    "Reply with the formulation inside one ``` fenced block written in the ncx modeling "
    "language:\n"
    "problem <name>\n"
    "param <name> = <number or [list]>\n"
    "var <name>[<n>] continuous|integer|binary in [<lb>, <ub>]\n"
    "minimize|maximize <expr>\n"
    "subject to\n"
    "  <expr> <=|>=|== <expr> [for i in 1..n]\n"
    "Expressions use + - * / ^ log log2 exp abs sqrt and sum(<expr>, i, lo, hi). "
    "Canonical JSON inside the fenced block is also accepted. Text outside the block is "
    "kept for the record only.";

constexpr std::string_view kConvexExample =
    "Example 1:\n"
    "Non-convex problem: min_x x^2 - 2x + 1 (Non-convex part: x^2 may not be convex in some "
    "intervals)\n"
    "Convex conversion: min_x (x - 1)^2 (Converted to a convex function by completing the "
    "square)\n"
    "\n"
    "Example 2:\n"
    "Non-convex problem: min_{x,y} x^2y + 3xy - 2 (Non-convex part: x^2y is non-convex)\n"
    "Convex conversion: (List the specific conversion method and result here)\n";

constexpr std::string_view kMathQuery =
    "Based on this optimization problem, construct a complete mathematical formula, including "
    "the objective function and constraints. Please also provide formulas for some of the "
    "other variables mentioned in the formula, such as channel condition h, and the values "
    "corresponding to these variables.\n"
    "Input: $input$";

constexpr std::string_view kConvexQuery =
    "Please identify if there are any non-convex parts based on the mathematical formula of "
    "the optimization problem you built in the previous step and the type of corresponding "
    "variables, and if so, choose the algorithm that you think is most appropriate to make all "
    "the non-convex components convex (including mixed integer programming problems) until "
    "you can solve them directly with the solver. And tell me the derivation of the formula to "
    "make it convex, and finally, give me the optimization problem after the convexity, "
    "including some supplementary variable formulas.\n"
    "Input: $input$\n"
    "\n"
    "Output:";

constexpr std::string_view kCodeQuery =
    "Please generate Python code to solve the following convex optimization problem.\n"
    "The convex optimization formula is: $input$.\n"
    "Use appropriate optimization libraries (e.g., scipy.optimize). Clearly define the "
    "objective function, constraints (if any), and initial guesses. Provide clear comments in "
    "the code to explain the key steps.";

constexpr std::string_view kExecuteCodeQuery =
    "The following is the code generated to solve the convex optimization problem: $input$.\n"
    "Execute this code. If the execution fails, analyze the error message and suggest possible "
    "solutions. If the execution is successful, extract the optimal solution and the optimal "
    "value from the output, and present them in a clear format.";

// The three original slots (description, formula, solution) arrive as one
// block produced by the caller.
constexpr std::string_view kFeasibilityCheckQuery =
    "The original optimization problem description, the corresponding mathematical formula, "
    "and the obtained solution of the optimization problem are:\n"
    "$input$\n"
    "Determine whether the solution is within the feasible region. If it is, return 1; if not, "
    "return 0.";

constexpr std::string_view kRepairSystem =
    "You repair failed optimization runs. Reply with one JSON object and nothing else. "
    "Allowed shapes:\n"
    "{\"action\": \"bind\", \"name\": <symbol>, \"value\": <number>}\n"
    "{\"action\": \"shrink_step\", \"factor\": <number in (0,1)>}\n"
    "{\"action\": \"finite_box\", \"radius\": <positive number>}\n"
    "{\"action\": \"restart\", \"x0\": {<variable>: <number>, ...}}\n"
    "{\"action\": \"none\"}";

constexpr std::string_view kRepairQuery =
    "The optimization run failed. The error report is:\n"
    "$input$\n"
    "Suggest one repair.";

constexpr std::string_view kConsistencySystem =
    "You compare an optimization formulation against the problem description it was built "
    "from. Reply with 1 when the objective, variables and constraints match the description "
    "and with 0 otherwise. Reply with the digit only.";

constexpr std::string_view kConsistencyQuery =
    "Description and formulation:\n"
    "$input$\n"
    "Does the formulation accurately reflect the description? Return 1 or 0.";

std::array<PromptTemplate, 7> make_builtins() {
  auto mk = [](TemplateId id, std::string_view sys, std::string_view user, ReplyContract c) {
    return PromptTemplate::make(id, std::string(sys), std::string(user), c);
  };
  return {
      mk(TemplateId::MathQuery, kFormulationContract, kMathQuery, ReplyContract::Dsl),
      mk(TemplateId::ConvexQuery, std::string(kConvexExample) + "\n" + std::string(kFormulationContract),
         kConvexQuery, ReplyContract::Dsl),
      mk(TemplateId::CodeQuery, "", kCodeQuery, ReplyContract::FreeText),
      mk(TemplateId::ExecuteCodeQuery, "", kExecuteCodeQuery, ReplyContract::FreeText),
      mk(TemplateId::FeasibilityCheckQuery, "", kFeasibilityCheckQuery, ReplyContract::Binary01),
      mk(TemplateId::RepairQuery, kRepairSystem, kRepairQuery, ReplyContract::Json),
      mk(TemplateId::ConsistencyQuery, kConsistencySystem, kConsistencyQuery,
         ReplyContract::Binary01),
  };
}

std::size_t count_placeholders(std::string_view s) {
  std::size_t n = 0;
  for (auto pos = s.find(kInputPlaceholder); pos != std::string_view::npos;
       pos = s.find(kInputPlaceholder, pos + kInputPlaceholder.size()))
    ++n;
  return n;
}

}  // namespace

const std::string_view kOptimizationFlagInstruction =
    "Please specify whether to maximize or minimize, using the format '[Optimization Flag: 1]' "
    "for maximize and '[Optimization Flag: 0]' for minimize.";

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::MathQuery: return "math_query";
    case TemplateId::ConvexQuery: return "convex_query";
    case TemplateId::CodeQuery: return "code_query";
    case TemplateId::ExecuteCodeQuery: return "execute_code_query";
    case TemplateId::FeasibilityCheckQuery: return "feasibility_check_query";
    case TemplateId::RepairQuery: return "repair_query";
    case TemplateId::ConsistencyQuery: return "consistency_query";
  }
  return "?";
}

std::optional<TemplateId> template_from_string(std::string_view s) {
  for (auto id : {TemplateId::MathQuery, TemplateId::ConvexQuery, TemplateId::CodeQuery,
                  TemplateId::ExecuteCodeQuery, TemplateId::FeasibilityCheckQuery,
                  TemplateId::RepairQuery, TemplateId::ConsistencyQuery})
    if (to_string(id) == s) return id;
  return std::nullopt;
}

MissingPlaceholder::MissingPlaceholder(TemplateId id, std::size_t count)
    : Error("template " + std::string(to_string(id)) + " must contain exactly one " +
            std::string(kInputPlaceholder) + " placeholder, found " + std::to_string(count)) {}

PromptTemplate PromptTemplate::make(TemplateId id, std::string system, std::string user,
                                    ReplyContract contract) {
  if (auto n = count_placeholders(user); n != 1) throw MissingPlaceholder(id, n);
  return PromptTemplate{id, std::move(system), std::move(user), contract};
}

const PromptTemplate& builtin_template(TemplateId id) {
  static const auto table = make_builtins();
  return table[static_cast<std::size_t>(id)];
}

RenderedPrompt render_prompt(const PromptTemplate& t, std::string_view input) {
  auto n = count_placeholders(t.user);
  if (n != 1) throw MissingPlaceholder(t.id, n);
  RenderedPrompt out;
  auto pos = t.user.find(kInputPlaceholder);
  out.text.reserve(t.user.size() + input.size());
  out.text.append(t.user, 0, pos);
  out.text.append(input);
  out.text.append(t.user, pos + kInputPlaceholder.size());
  if (input.empty()) out.warnings.push_back("empty input substituted into " + std::string(to_string(t.id)));
  return out;
}

}  // namespace ncx
