#include <algorithm>

#include "ncx/pipeline.hpp"

namespace ncx {

std::string_view to_string(LadderRung r) {
  switch (r) {
    case LadderRung::PartialSca: return "partial-sca";
    case LadderRung::EpigraphLift: return "epigraph-lift";
    case LadderRung::ScaHandoff: return "sca-handoff";
  }
  return "?";
}

Stage2Plan fdc_stage2(const Problem& pb, const Assignment& x_prev, int l, int L, const ConvexifyPolicy& base) {
  const int half = L / 2;
  if (l <= half || l > L) throw Error("stage-2 iteration must lie in (floor(L/2), L]");

  std::vector<LadderRung> ladder{LadderRung::PartialSca};
  auto comps = detect_nonconvex(pb);
  if (std::any_of(comps.begin(), comps.end(), [](const NonconvexComponent& c) {
        return c.kind == ComponentKind::UnknownCurvatureTerm && c.term.kind() == NodeKind::Abs;
      }))
    ladder.push_back(LadderRung::EpigraphLift);
  ladder.push_back(LadderRung::ScaHandoff);

  auto rung_index = static_cast<std::size_t>(l - half - 1);
  if (rung_index >= ladder.size())
    throw ConvexificationFailed({}, "alternative strategy ladder exhausted at l = " + std::to_string(l));

  ConvexifyPolicy pol = base;
  LadderRung rung = ladder[rung_index];
  switch (rung) {
    case LadderRung::PartialSca:
      pol.partial_linearization = true;
      pol.allow_epigraph = false;
      break;
    case LadderRung::EpigraphLift:
      pol.partial_linearization = true;
      pol.allow_epigraph = true;
      break;
    case LadderRung::ScaHandoff:
      break;
  }
  return {rung, convexify_problem(pb, x_prev, pol)};
}

}  // namespace ncx
