#pragma once

#include <vector>

#include "ncx/solve.hpp"
#include "ncx/tape.hpp"

namespace ncx::detail {

/// Tapes of a problem over its scalar variables; the objective is compiled in
/// the minimizing direction.
struct Compiled {
  VariableIndex index;
  std::vector<double> lb;
  std::vector<double> ub;
  Tape f;
  std::vector<Tape> g;
  std::vector<Tape> h;
  bool maximize = false;

  explicit Compiled(const Problem& pb);
  std::size_t n() const noexcept { return index.size(); }
};

/// a^T x + c of an affine tape.
struct AffineRow {
  std::vector<double> a;
  double c = 0.0;
};

AffineRow affine_row(const Tape& t, std::size_t n);

/// Box-interior start: points outside or on the box are pulled inside.
std::vector<double> interior_start(const Compiled& c, const Assignment& x0);

Solution solve_affine(const Problem& pb, const SolveOptions& opts);
Solution solve_barrier(const Problem& pb, const Assignment& x0, const SolveOptions& opts);

/// Fills objective and residuals for a point solution of `pb`.
void finish_solution(const Problem& pb, Solution& sol);

}  // namespace ncx::detail
