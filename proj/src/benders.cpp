#include "scopf/benders.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace scopf {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kOptimal:
      return "optimal";
    case RunStatus::kIterationLimit:
      return "iteration-limit";
    case RunStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

std::vector<Contingency> rank_contingencies(const Grid& grid,
                                            const BasePoint& base) {
  UtilizationReport util = flow_report(base, grid);
  auto utilization = [&](const Contingency& c) {
    switch (c.kind) {
      case OutageKind::kGenerator:
        return util.gen.at(c.element);
      case OutageKind::kLine:
        return util.line.at(c.element);
      case OutageKind::kTransformer:
        return util.xfmr.at(c.element);
    }
    return 0.0;
  };
  std::vector<Contingency> ranked = grid.contingencies;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](const Contingency& a, const Contingency& b) {
                     double ua = utilization(a), ub = utilization(b);
                     if (ua != ub) return ua > ub;
                     return a.id < b.id;
                   });
  return ranked;
}

std::vector<Contingency> filter_contingencies(
    const std::vector<Contingency>& ranked, double level) {
  if (!(level > 0.0) || level > 1.0) {
    throw std::invalid_argument("filter level must lie in (0, 1]");
  }
  size_t keep = static_cast<size_t>(
      std::ceil(level * static_cast<double>(ranked.size())));
  keep = std::min(keep, ranked.size());
  return {ranked.begin(), ranked.begin() + keep};
}

std::vector<std::pair<int, int>> partition_work(int count, int workers) {
  workers = std::max(1, workers);
  int chunk = (count + workers - 1) / workers;
  std::vector<std::pair<int, int>> parts;
  for (int w = 0; w < workers; ++w) {
    int lo = std::min(count, w * chunk);
    int hi = std::min(count, lo + chunk);
    parts.emplace_back(lo, hi);
  }
  return parts;
}

std::vector<SubproblemResult> parallel_map(const Grid& grid,
                                           const std::vector<Contingency>& ctgs,
                                           const BasePoint& base,
                                           const SolverConfig& config) {
  std::vector<Contingency> ordered = ctgs;
  std::sort(ordered.begin(), ordered.end(),
            [](const Contingency& a, const Contingency& b) {
              return a.id < b.id;
            });
  const int n = static_cast<int>(ordered.size());
  std::vector<SubproblemResult> results(n);
  std::vector<std::string> errors(n);

  auto evaluate = [&](int i) {
    try {
      results[i] = solve_with_agc(grid, ordered[i], base, config);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  if (config.workers <= 1) {
    for (int i = 0; i < n; ++i) evaluate(i);
  } else {
    auto parts = partition_work(n, config.workers);
#pragma omp parallel num_threads(config.workers)
    {
      int w = omp_get_thread_num();
      if (w < static_cast<int>(parts.size())) {
        for (int i = parts[w].first; i < parts[w].second; ++i) evaluate(i);
      }
    }
  }

  // one serial retry per failed contingency, then give up
  for (int i = 0; i < n; ++i) {
    if (errors[i].empty()) continue;
    errors[i].clear();
    evaluate(i);
    if (!errors[i].empty()) {
      throw AgcError("contingency " + std::to_string(ordered[i].id) +
                     " failed twice: " + errors[i]);
    }
  }
  return results;
}

MasterProblem::MasterProblem(const Grid& grid, const SolverConfig& config)
    : grid_(grid), config_(config), base_(build_base_relaxation(grid, config)) {}

void MasterProblem::add_cut(const BendersCut& cut) {
  if (std::find(cut_contingencies_.begin(), cut_contingencies_.end(),
                cut.contingency) == cut_contingencies_.end()) {
    cut_contingencies_.push_back(cut.contingency);
  }
  cuts_.push_back(cut);
}

MasterProblem::Solved MasterProblem::solve() const {
  // Copy the immutable base problem into a fresh builder, then append the
  // epigraph machinery; base variable handles stay stable.
  ProblemBuilder b;
  const ConicProblem& bp = base_.problem;
  for (int v = 0; v < bp.num_vars(); ++v) {
    b.add_variable(bp.var_names()[v], bp.bounds()[v].lower,
                   bp.bounds()[v].upper);
  }
  LinExpr obj;
  for (int v = 0; v < bp.num_vars(); ++v) {
    if (bp.objective()[v] != 0.0) obj.add(v, bp.objective()[v]);
  }
  obj.add_constant(bp.objective_constant());
  for (size_t i = 0; i < bp.equalities().size(); ++i) {
    b.add_equality(bp.equalities()[i], bp.eq_label(static_cast<int>(i)));
  }
  for (size_t i = 0; i < bp.inequalities().size(); ++i) {
    b.add_inequality(bp.inequalities()[i], bp.ineq_label(static_cast<int>(i)));
  }
  for (const SocConstraint& soc : bp.socs()) {
    b.add_soc(soc.vec, soc.rhs, soc.label);
  }

  if (!cuts_.empty()) {
    std::map<int, int> epigraph;  // contingency id -> z variable
    std::vector<int> ids = cut_contingencies_;
    std::sort(ids.begin(), ids.end());
    double scale =
        config_.deltaWeight / std::max(1, contingency_count_);
    for (int id : ids) {
      int z = b.add_variable("z[" + std::to_string(id) + "]", 0.0, kInf);
      epigraph[id] = z;
      obj.add(z, scale);
    }
    for (const BendersCut& cut : cuts_) {
      LinExpr e;
      e.add_constant(cut.constant);
      for (const auto& [var, coef] : cut.coeffs) e.add(var, coef);
      e.add(epigraph.at(cut.contingency), -1.0);
      b.add_inequality(e, "cut[" + std::to_string(cut.contingency) + "/" +
                              std::to_string(cut.iterationAdded) + "]");
    }
  }
  b.set_objective(obj);

  Solved out;
  ConicProblem problem = b.build();
  out.solution = scopf::solve(problem, config_.solverTol,
                              config_.solverMaxIters);
  for (double bump : {10.0, 100.0}) {
    if (out.solution.optimal() ||
        out.solution.status == SolveStatus::kInfeasible ||
        out.solution.status == SolveStatus::kUnbounded) {
      break;
    }
    out.solution =
        scopf::solve(problem, config_.solverTol * bump, config_.solverMaxIters);
  }
  if (out.solution.optimal()) {
    out.base = extract_base_point(grid_, base_, out.solution);
  }
  return out;
}

ScopfOutcome run(const Grid& grid, const SolverConfig& config) {
  if (!(config.filterLevel > 0.0) || config.filterLevel > 1.0) {
    throw std::invalid_argument("filter level must lie in (0, 1]");
  }
  if (config.workers < 1) {
    throw std::invalid_argument("workers must be at least 1");
  }
  if (config.tolMismatch < 0.0) {
    throw std::invalid_argument("mismatch tolerance must be nonnegative");
  }

  ScopfOutcome out;
  double t0 = now_seconds();

  MasterProblem master(grid, config);
  double tm0 = now_seconds();
  MasterProblem::Solved solved = master.solve();
  out.timing.masterSeconds += now_seconds() - tm0;
  if (solved.solution.status == SolveStatus::kInfeasible) {
    out.status = RunStatus::kInfeasible;
    out.warnings.push_back("master problem infeasible");
    out.timing.totalSeconds = now_seconds() - t0;
    return out;
  }
  if (!solved.solution.optimal()) {
    out.status = RunStatus::kIterationLimit;
    out.warnings.push_back("master solve hit the iteration limit");
    out.timing.totalSeconds = now_seconds() - t0;
    return out;
  }

  IterationRecord rec0;
  rec0.iteration = 0;
  rec0.evaluated = false;
  rec0.objective = solved.solution.objective_value;
  rec0.zLower = rec0.objective;
  rec0.zUpper = 0.0;
  rec0.wallTime = now_seconds() - t0;
  out.ledger.push_back(rec0);
  out.base = solved.base;

  // static severity ordering from the initial dispatch
  std::vector<Contingency> ranked = rank_contingencies(grid, solved.base);
  std::vector<Contingency> usable;
  for (const Contingency& c : ranked) {
    if (is_islanding(grid, c)) {
      out.islanded.push_back(c.id);
      out.warnings.push_back("contingency " + std::to_string(c.id) +
                             " islands the network; excluded");
    } else {
      usable.push_back(c);
    }
  }
  std::vector<Contingency> selected =
      filter_contingencies(usable, config.filterLevel);
  for (const Contingency& c : selected) out.selected.push_back(c.id);
  std::sort(out.selected.begin(), out.selected.end());
  master.set_contingency_count(static_cast<int>(selected.size()));

  if (selected.empty()) {
    out.status = RunStatus::kOptimal;
    out.timing.totalSeconds = now_seconds() - t0;
    return out;
  }

  const double tolPerCtg =
      config.tolMismatch / std::max<size_t>(1, selected.size());
  const double scale =
      config.deltaWeight / static_cast<double>(selected.size());

  for (int iter = 1; iter <= config.maxIterations; ++iter) {
    double titer = now_seconds();
    double ts0 = now_seconds();
    std::vector<SubproblemResult> results =
        parallel_map(grid, selected, out.base, config);
    out.timing.subproblemSeconds += now_seconds() - ts0;

    double totalMismatch = 0.0;
    int violations = 0;
    for (const SubproblemResult& r : results) {
      totalMismatch += r.mismatchCost;
      if (r.mismatchCost > tolPerCtg) ++violations;
    }
    double zUpper = out.base.baseCost + scale * totalMismatch;

    IterationRecord rec;
    rec.iteration = iter;
    rec.evaluated = true;
    rec.violations = violations;
    rec.totalMismatch = totalMismatch;
    rec.zUpper = zUpper;

    if (totalMismatch <= config.tolMismatch) {
      rec.objective = out.ledger.back().zLower;
      rec.zLower = rec.objective;
      rec.wallTime = now_seconds() - titer;
      out.ledger.push_back(rec);
      out.contingencyResults = std::move(results);
      out.status = RunStatus::kOptimal;
      out.cuts = master.cuts();
      out.timing.totalSeconds = now_seconds() - t0;
      return out;
    }

    for (const SubproblemResult& r : results) {
      if (r.mismatchCost > tolPerCtg) {
        master.add_cut(build_cut(r, out.base, master.index(), iter));
      }
    }

    tm0 = now_seconds();
    solved = master.solve();
    out.timing.masterSeconds += now_seconds() - tm0;
    if (solved.solution.status == SolveStatus::kInfeasible) {
      out.status = RunStatus::kInfeasible;
      out.warnings.push_back("master infeasible after cuts");
      out.contingencyResults = std::move(results);
      rec.objective = out.ledger.back().zLower;
      rec.zLower = rec.objective;
      out.ledger.push_back(rec);
      out.cuts = master.cuts();
      out.timing.totalSeconds = now_seconds() - t0;
      return out;
    }
    if (!solved.solution.optimal()) {
      out.status = RunStatus::kIterationLimit;
      out.warnings.push_back("master solve hit the iteration limit");
      out.contingencyResults = std::move(results);
      rec.objective = out.ledger.back().zLower;
      rec.zLower = rec.objective;
      out.ledger.push_back(rec);
      out.cuts = master.cuts();
      out.timing.totalSeconds = now_seconds() - t0;
      return out;
    }
    out.base = solved.base;
    rec.objective = solved.solution.objective_value;
    rec.zLower = rec.objective;
    rec.wallTime = now_seconds() - titer;
    out.ledger.push_back(rec);
    out.contingencyResults = std::move(results);
  }

  out.status = RunStatus::kIterationLimit;
  out.cuts = master.cuts();
  out.timing.totalSeconds = now_seconds() - t0;
  return out;
}

}  // namespace scopf
