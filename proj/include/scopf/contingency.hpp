#pragma once

#include <map>
#include <string>
#include <vector>

#include "scopf/config.hpp"
#include "scopf/conic.hpp"
#include "scopf/grid.hpp"
#include "scopf/relaxation.hpp"

namespace scopf {

class AgcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-generator droop branch. FOLLOW generators track p + alpha * Delta_k
// with the box bound released (the fixed point restores it by pinning);
// pinned generators sit exactly on the limit. FIXED covers online
// generators outside the participating set: they retain the base dispatch.
enum class RealBranch { kFollow, kAtMax, kAtMin, kFixed };
// HOLD_V pins the generator-bus voltage magnitude to its base value;
// the pinned states fix reactive output at a limit and free the voltage.
enum class ReactiveBranch { kHoldV, kAtQmax, kAtQmin };

const char* to_string(RealBranch b);
const char* to_string(ReactiveBranch b);

struct AgcBranchState {
  std::map<int, RealBranch> real;          // surviving generators
  std::map<int, ReactiveBranch> reactive;  // surviving generators
};

AgcBranchState initial_branch_state(const Grid& grid, const Contingency& ctg);

// Signed residuals of the four droop validity products at a solved point;
// sign conventions: a and b must be <= tol, c and d must be >= -tol.
struct ValidResiduals {
  double a = 0.0;  // (p_gk - target) * (p_gk - pmax)      <= 0
  double b = 0.0;  // (p_gk - target) * (pmin - p_gk)      >= 0
  double c = 0.0;  // (c_base - c_ctg) * (q_gk - qmax)     >= 0
  double d = 0.0;  // (c_ctg - c_base) * (qmin - q_gk)     >= 0
};

struct SubproblemResult {
  int contingency = 0;
  std::map<int, double> sigmaBusP_plus, sigmaBusP_minus;
  std::map<int, double> sigmaBusQ_plus, sigmaBusQ_minus;
  std::map<int, double> sigmaLine, sigmaXfmr;
  double delta = 0.0;  // system-wide droop scale
  std::map<int, double> pDispatch, qDispatch;  // by generator id
  LiftedVoltage liftedK;
  std::map<int, ElementFlow> lineFlows, xfmrFlows;
  double mismatchCost = 0.0;
  AgcBranchState branchState;
  // duals of the constraints pinning master quantities: d(mismatch)/d(p_g)
  // and d(mismatch)/d(c_ii at generator buses)
  std::map<int, double> couplingDualP;    // by generator id
  std::map<int, double> couplingDualV;    // by bus id
  std::map<int, ValidResiduals> validity; // by generator id
  std::vector<std::string> warnings;
  int fixedPointIterations = 0;
};

struct SubproblemHandles {
  NetworkIndex net;
  std::map<int, int> sigPp, sigPm, sigQp, sigQm;  // bus id -> variable
  std::map<int, int> sigLine, sigXfmr;            // element id -> variable
  int delta = -1;
  std::map<int, int> pinP;    // gen id -> equality pinning p (all branches)
  std::map<int, int> pinQ;    // gen id -> equality pinning q (pinned states)
  std::map<int, int> pinV;    // bus id -> equality pinning c_ii (HOLD_V)
  std::map<int, bool> pCoupled;  // pin carries a master p coupling dual
};

struct Subproblem {
  ConicProblem problem;
  SubproblemHandles handles;
};

// Assembles one security-check sub-problem: contingency voltage bounds,
// dispatch pins per the branch state, lifted flow definitions over the
// surviving network, soft nodal balance and soft ratings, and the droop
// coupling to the base point.
Subproblem build_subproblem(const Grid& grid, const Contingency& ctg,
                            const BasePoint& base, const AgcBranchState& state,
                            const SolverConfig& config);

// Solves the sub-problem under the droop active-set fixed point: start all
// participating generators on FOLLOW and every surviving generator on
// HOLD_V, then move generators whose targets leave their box onto the
// violated limit (releasing them again if the limit condition stops
// holding) until no state changes. Throws AgcError on cycling.
SubproblemResult solve_with_agc(const Grid& grid, const Contingency& ctg,
                                const BasePoint& base,
                                const SolverConfig& config);

double mismatch_cost(const SubproblemResult& result,
                     const PenaltyWeights& weights);

struct BendersCut {
  int contingency = 0;
  double constant = 0.0;            // value at the anchoring base point
  std::map<int, double> coeffs;     // master variable -> coefficient
  int iterationAdded = 0;

  double evaluate(const Eigen::VectorXd& masterPoint) const;
};

// Affine under-estimator of the sub-problem mismatch as a function of the
// master dispatch, built from the coupling duals at the solved point.
BendersCut build_cut(const SubproblemResult& result, const BasePoint& base,
                     const NetworkIndex& masterIndex, int iterationAdded);

}  // namespace scopf
