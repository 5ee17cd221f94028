#pragma once

#include <map>
#include <string>
#include <vector>

#include "scopf/config.hpp"
#include "scopf/conic.hpp"
#include "scopf/contingency.hpp"
#include "scopf/grid.hpp"
#include "scopf/relaxation.hpp"

namespace scopf {

struct IterationRecord {
  int iteration = 0;
  bool evaluated = false;   // false only for the initial master-only row
  int violations = 0;       // sub-problems above the per-contingency threshold
  double objective = 0.0;   // master objective after the cuts of this round
  double totalMismatch = 0.0;
  double zLower = 0.0;
  double zUpper = 0.0;
  double wallTime = 0.0;  // seconds; excluded from serialized ledgers
};

struct PhaseTiming {
  double parseSeconds = 0.0;
  double masterSeconds = 0.0;
  double subproblemSeconds = 0.0;
  double totalSeconds = 0.0;
};

enum class RunStatus { kOptimal, kIterationLimit, kInfeasible };

const char* to_string(RunStatus s);

struct ScopfOutcome {
  RunStatus status = RunStatus::kIterationLimit;
  std::vector<IterationRecord> ledger;
  BasePoint base;                              // final master point
  std::vector<SubproblemResult> contingencyResults;  // ascending ctg id
  std::vector<int> selected;                   // evaluated contingency ids
  std::vector<int> islanded;                   // excluded with a warning
  std::vector<BendersCut> cuts;
  PhaseTiming timing;
  std::vector<std::string> warnings;
};

// Static severity ordering: contingencies sorted by base-case utilization of
// the outaged element (descending), ties broken by ascending id.
std::vector<Contingency> rank_contingencies(const Grid& grid,
                                            const BasePoint& base);

// Keeps the top ceil(level * K) of the ranking; `level` is the kept
// fraction (0.5 keeps half).
std::vector<Contingency> filter_contingencies(
    const std::vector<Contingency>& ranked, double level);

// Deterministic block partition of `count` items over `workers`.
std::vector<std::pair<int, int>> partition_work(int count, int workers);

// Evaluates the given contingencies against the base point, in parallel when
// workers > 1 (serial loop otherwise -- the reference path). Results are
// merged in ascending contingency order regardless of completion order, so
// the output is identical for any worker count. A failed evaluation is
// retried once serially before the error propagates.
std::vector<SubproblemResult> parallel_map(const Grid& grid,
                                           const std::vector<Contingency>& ctgs,
                                           const BasePoint& base,
                                           const SolverConfig& config);

// Master problem plus accumulated cuts. Cuts are appended, never dropped;
// variable handles stay stable across re-solves.
class MasterProblem {
 public:
  MasterProblem(const Grid& grid, const SolverConfig& config);

  void set_contingency_count(int n) { contingency_count_ = n; }
  void add_cut(const BendersCut& cut);

  struct Solved {
    BasePoint base;
    ConicSolution solution;
  };
  Solved solve() const;

  const NetworkIndex& index() const { return base_.index; }
  const std::vector<BendersCut>& cuts() const { return cuts_; }

 private:
  const Grid& grid_;
  SolverConfig config_;
  BaseRelaxation base_;
  std::vector<BendersCut> cuts_;
  std::vector<int> cut_contingencies_;  // distinct ids, insertion order
  int contingency_count_ = 0;
};

// Full decomposition loop: master solve, severity ranking and filtering,
// parallel security checks, bound bookkeeping, cut aggregation, repeat
// until the total mismatch falls below the threshold.
ScopfOutcome run(const Grid& grid, const SolverConfig& config);

}  // namespace scopf
