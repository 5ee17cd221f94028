#pragma once

// Independent reference implementations used only by tests: a rectangular
// Newton-Raphson AC power flow, a brute-force LP vertex enumerator, a
// brute-force droop branch enumerator, and a monolithic (extensive-form)
// security-constrained solve. These deliberately avoid the library's
// assembly paths wherever they serve as a cross-check.

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "scopf/config.hpp"
#include "scopf/contingency.hpp"
#include "scopf/grid.hpp"
#include "scopf/relaxation.hpp"

namespace scopf::testing {

struct PowerFlowResult {
  bool converged = false;
  std::map<int, double> vm;       // |V| per bus
  std::map<int, double> e, f;     // rectangular voltage
  double slackP = 0.0, slackQ = 0.0;  // injection absorbed at the slack bus
  int iterations = 0;
};

// Solves the full AC equations with fixed net injections everywhere except
// the slack bus (voltage fixed to slackVm, angle zero). Injections are
// net generation minus load; the slack bus absorbs the residual.
PowerFlowResult newton_power_flow(const Grid& grid, int slackBus,
                                  double slackVm,
                                  const std::map<int, double>& pInjection,
                                  const std::map<int, double>& qInjection,
                                  const std::map<int, double>& vmInit);

// Exact branch flows at a rectangular voltage assignment, same conventions
// as the power flow equations.
ElementFlow exact_line_flow(const Line& l, double ea, double fa, double eb,
                            double fb);
ElementFlow exact_xfmr_flow(const Transformer& t, double ea, double fa,
                            double eb, double fb);

// Minimizes c.x over {Gx <= h, lo <= x <= up} by enumerating basic feasible
// points. Throws if unbounded or infeasible.
double vertex_enumeration_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& lo, const Eigen::VectorXd& up,
                             const Eigen::VectorXd& c);

// Brute-force droop assignment: solves the sub-problem for every combination
// of real/reactive branch states of the listed generators and keeps those
// that are feasible and self-consistent (within tie tolerance).
struct BruteAssignment {
  std::map<int, RealBranch> real;
  std::map<int, ReactiveBranch> reactive;
  double mismatch = 0.0;
};
std::vector<BruteAssignment> brute_force_agc(const Grid& grid,
                                             const Contingency& ctg,
                                             const BasePoint& base,
                                             const SolverConfig& config);

// Monolithic security-constrained solve: base case plus every contingency
// block in one conic program, with the droop fixed point run at the
// monolithic level. Returns the converged objective
// (base cost + delta/|K| * total mismatch).
struct ExtensiveFormResult {
  double objective = 0.0;
  double baseCost = 0.0;
  double totalMismatch = 0.0;
  std::map<int, double> pGen;
  int fixedPointIterations = 0;
};
ExtensiveFormResult extensive_form_solve(const Grid& grid,
                                         const std::vector<Contingency>& ctgs,
                                         const SolverConfig& config);

}  // namespace scopf::testing
