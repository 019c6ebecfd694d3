#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncx/pipeline.hpp"

namespace ncx {

struct CorpusEntry {
  std::string name;
  std::string path;
  Problem problem;
  std::optional<NlDescription> description;
  /// ECL iterations needed to execute, when known by construction.
  std::optional<int> repair_depth;
  /// FDC iterations needed to reach feasibility, when known by construction.
  std::optional<int> correction_depth;
};

struct Corpus {
  std::string name;
  std::vector<CorpusEntry> problems;
};

class CorpusLoadError : public Error {
 public:
  explicit CorpusLoadError(std::vector<std::string> failures);
  const std::vector<std::string>& failures() const noexcept { return failures_; }

 private:
  std::vector<std::string> failures_;
};

/// TOML manifest with `name` and a `[[problem]]` array of tables holding
/// `file`, and optionally `name`, `description` (text file), `repair_depth`
/// and `correction_depth`. Paths are relative to the manifest. Every file is
/// parsed; all failures are reported together.
Corpus load_corpus(const std::string& manifest_path);

struct ProblemOutcome {
  std::string name;
  /// V_P and Q_P per repetition.
  std::vector<int> success;
  std::vector<int> executed;
};

struct MetricsReport {
  std::vector<ProblemOutcome> problems;
  double sr = 0.0;
  double er = 0.0;
  /// Mean seconds per run.
  StageTimings timings;
  int max_ecl = 0;
  int max_fdc = 0;
  bool disable_convexify = false;
  bool disable_ecl = false;
  bool disable_fdc = false;
  std::uint64_t seed = 0;
  int repetitions = 0;
};

/// Averages over repetitions, then over problems.
void aggregate(MetricsReport& r);

using Runner = std::function<PipelineResult(const CorpusEntry&, const PipelineConfig&)>;

/// Runs the pipeline on the description when one exists and a gateway is set,
/// otherwise on the parsed problem.
PipelineResult run_entry(const CorpusEntry& e, const PipelineConfig& cfg);

/// Repetition r uses seed + r. Problems run concurrently; results are
/// ordered by problem index.
MetricsReport eval_corpus(const Corpus& c, const PipelineConfig& cfg, int repetitions, std::uint64_t seed,
                          const Runner& runner = run_entry);

struct StageShare {
  std::string stage;
  double seconds = 0.0;
  double share = 0.0;
};

struct TimeBreakdown {
  std::vector<StageShare> stages;
  std::optional<std::string> warning;

  std::string table() const;
  std::string json() const;
};

/// Shares over formulate, convexify, solve, feasibility, ecl, fdc. All-zero
/// timings give uniform shares and a warning.
TimeBreakdown time_breakdown(const MetricsReport& r);
TimeBreakdown time_breakdown(const StageTimings& t);

struct SweepCell {
  int max_ecl = 0;
  int max_fdc = 0;
  MetricsReport report;
};

/// One cell per (K, L) pair, K-major.
std::vector<SweepCell> sweep_iterations(const Corpus& c, const PipelineConfig& cfg, const std::vector<int>& ks,
                                        const std::vector<int>& ls, int repetitions, std::uint64_t seed,
                                        const Runner& runner = run_entry);

std::string metrics_json(const MetricsReport& r);
/// One row per problem plus an aggregate row.
std::string metrics_csv(const MetricsReport& r);
std::string sweep_csv(const std::vector<SweepCell>& cells);

}  // namespace ncx
