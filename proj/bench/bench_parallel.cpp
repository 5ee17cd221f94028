// Times the security-check farm: the serial reference path (workers = 1)
// against the OpenMP path for increasing worker counts, on repeated sweeps
// of a case's contingency list. Results are merged identically on every
// path, so this is a pure throughput comparison.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "scopf/benders.hpp"
#include "scopf/case_io.hpp"

using namespace scopf;

namespace {

double now() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  std::string casePath = "data/case14.json";
  int repeats = 8;
  if (argc > 1) casePath = argv[1];
  if (argc > 2) repeats = std::atoi(argv[2]);

  Grid grid;
  try {
    grid = load_case_file(casePath);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cannot load %s: %s\n", casePath.c_str(), e.what());
    return 1;
  }
  if (grid.contingencies.empty()) {
    std::fprintf(stderr, "case has no contingencies to evaluate\n");
    return 1;
  }

  SolverConfig config;
  BaseRelaxation rel = build_base_relaxation(grid, config);
  ConicSolution sol = solve(rel.problem, config.solverTol, 200);
  if (!sol.optimal()) {
    std::fprintf(stderr, "base solve failed\n");
    return 1;
  }
  BasePoint base = extract_base_point(grid, rel, sol);

  // widen the sweep so per-batch times are measurable
  std::vector<Contingency> batch;
  int nextId = 1;
  for (int r = 0; r < repeats; ++r) {
    for (Contingency c : grid.contingencies) {
      c.id = nextId++;
      batch.push_back(std::move(c));
    }
  }

  std::printf("case %s: %zu security checks per sweep\n", casePath.c_str(),
              batch.size());
  std::printf("%-8s %-12s %-10s\n", "workers", "time [s]", "speedup");

  double serial = 0.0;
  for (int workers : {1, 2, 4, 6}) {
    SolverConfig cfg = config;
    cfg.workers = workers;
    double t0 = now();
    std::vector<SubproblemResult> results =
        parallel_map(grid, batch, base, cfg);
    double dt = now() - t0;
    if (workers == 1) serial = dt;
    std::printf("%-8d %-12.3f %-10.2f\n", workers, dt,
                serial > 0 ? serial / dt : 1.0);
    double total = 0.0;
    for (const SubproblemResult& r : results) total += r.mismatchCost;
    std::fprintf(stderr, "  (total mismatch %.6g)\n", total);
  }
  return 0;
}
