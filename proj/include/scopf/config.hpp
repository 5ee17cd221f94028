#pragma once

#include <string>

namespace scopf {

struct PenaltyWeights {
  double p = 1000.0;  // currency per p.u. of real-power mismatch
  double q = 1000.0;
  double s = 1000.0;  // rating overload slack weight
};

struct SolverConfig {
  double filterLevel = 1.0;     // fraction of ranked contingencies kept
  double tolMismatch = 1e-4;    // convergence threshold on total mismatch
  int maxIterations = 100;
  int workers = 1;
  PenaltyWeights penalty;
  double deltaWeight = 1.0;     // weight on the base-case mismatch term
  double solverTol = 1e-8;
  int solverMaxIters = 200;
  // Sub-problems minimize mismatch only, which leaves the lifted voltages
  // degenerate whenever the mismatch is zero; a small reward on the pair
  // products keeps the cones tight so the solution is an actual power flow
  // (the high-voltage branch) instead of an interior point.
  double coneTiebreak = 1e-3;
  std::string traceDir;         // per-contingency fixed-point traces when set
};

}  // namespace scopf
