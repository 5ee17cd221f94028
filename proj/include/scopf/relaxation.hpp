#pragma once

#include <map>
#include <utility>
#include <vector>

#include "scopf/config.hpp"
#include "scopf/conic.hpp"
#include "scopf/grid.hpp"

namespace scopf {

using BusPair = std::pair<int, int>;  // canonical: first < second (bus ids)

// Lifted voltage products: cSelf[i] = v_i^2, and per connected pair the
// rotated products c_ij, s_ij stored in canonical orientation.
class LiftedVoltage {
 public:
  void set_self(int bus, double v) { cSelf_[bus] = v; }
  void set_pair(int i, int j, double c, double s);

  double self(int bus) const;
  double c(int i, int j) const;  // symmetric
  double s(int i, int j) const;  // antisymmetric
  bool has_pair(int i, int j) const;

  const std::map<int, double>& selfs() const { return cSelf_; }
  const std::map<BusPair, std::pair<double, double>>& pairs() const {
    return pairs_;
  }

 private:
  std::map<int, double> cSelf_;
  std::map<BusPair, std::pair<double, double>> pairs_;  // (c, s)
};

struct ElementFlow {
  double pOrigin = 0.0, qOrigin = 0.0;
  double pDest = 0.0, qDest = 0.0;

  double origin_apparent() const;
  double dest_apparent() const;
};

// Base-case decision snapshot handed from the master to the sub-problems.
struct BasePoint {
  std::map<int, double> pGen, qGen;  // by generator id (p.u.)
  LiftedVoltage lifted;
  std::map<int, ElementFlow> lineFlows, xfmrFlows;
  double objective = 0.0;  // generation cost + weighted mismatch surrogate
  double baseCost = 0.0;   // generation cost part only
};

// Variable/constraint handles for every grid element of an assembled
// network block (used by the base relaxation and by each sub-problem).
struct NetworkIndex {
  std::map<int, int> cSelf;  // bus id -> variable
  struct PairVars {
    int i = 0, j = 0;  // canonical bus ids, i < j
    int c = -1, s = -1;
    int cone = -1;  // rotated-cone constraint handle
  };
  std::vector<PairVars> pairs;
  std::map<BusPair, int> pairIndex;

  std::map<int, int> pGen, qGen;

  struct BranchVars {
    int pO = -1, qO = -1, pD = -1, qD = -1;
    int coneO = -1, coneD = -1;  // rating cones
  };
  std::map<int, BranchVars> lineVars, xfmrVars;

  std::map<int, int> balanceP, balanceQ;  // bus id -> equality handle

  int pair_of(int i, int j) const;
};

struct BaseRelaxation {
  ConicProblem problem;
  NetworkIndex index;
  double costConstant = 0.0;
};

// Assembles the convexified base-case problem: variable bounds, lifted line
// and transformer flow definitions, nodal balance with shunt terms, rating
// cones, squared voltage bounds, and one rotated cone per connected bus
// pair. Throws IslandedError when the grid is disconnected.
BaseRelaxation build_base_relaxation(const Grid& grid,
                                     const SolverConfig& config);

BasePoint extract_base_point(const Grid& grid, const BaseRelaxation& rel,
                             const ConicSolution& sol);

// Exactness indicator per pair: -log10 |c_ij^2 + s_ij^2 - c_ii c_jj|, clamped
// to 16 when the residual is below 1e-16 (reported as exact).
std::map<BusPair, double> tightness(const LiftedVoltage& lifted);
double tightness_of(const LiftedVoltage& lifted, int i, int j);

// u_i = sqrt(c_ii); values in [-1e-9, 0] clamp to zero, more negative is an
// error. Angles are not recovered.
std::map<int, double> recover_voltages(const LiftedVoltage& lifted);

struct UtilizationReport {
  std::map<int, double> line;  // |S| at the worse end / base rating
  std::map<int, double> xfmr;
  std::map<int, double> gen;  // p_g / pmax
};

UtilizationReport flow_report(const BasePoint& base, const Grid& grid);

}  // namespace scopf
