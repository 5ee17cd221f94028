#include "scopf/contingency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scopf/flow_model.hpp"

namespace scopf {

namespace {
constexpr double kActiveTol = 1e-7;  // limit-activation / tie tolerance
}

const char* to_string(RealBranch b) {
  switch (b) {
    case RealBranch::kFollow:
      return "FOLLOW";
    case RealBranch::kAtMax:
      return "AT_MAX";
    case RealBranch::kAtMin:
      return "AT_MIN";
    case RealBranch::kFixed:
      return "FIXED";
  }
  return "?";
}

const char* to_string(ReactiveBranch b) {
  switch (b) {
    case ReactiveBranch::kHoldV:
      return "HOLD_V";
    case ReactiveBranch::kAtQmax:
      return "AT_QMAX";
    case ReactiveBranch::kAtQmin:
      return "AT_QMIN";
  }
  return "?";
}

AgcBranchState initial_branch_state(const Grid& grid, const Contingency& ctg) {
  AgcBranchState st;
  auto participating = [&](int id) {
    return std::find(ctg.participating.begin(), ctg.participating.end(), id) !=
           ctg.participating.end();
  };
  for (int id : ctg.activeGens) {
    st.real[id] = participating(id) ? RealBranch::kFollow : RealBranch::kFixed;
    st.reactive[id] = ReactiveBranch::kHoldV;
  }
  (void)grid;
  return st;
}

Subproblem build_subproblem(const Grid& grid, const Contingency& ctg,
                            const BasePoint& base, const AgcBranchState& state,
                            const SolverConfig& config) {
  if (is_islanding(grid, ctg)) {
    throw IslandedError("contingency " + std::to_string(ctg.id) +
                        " islands the network");
  }

  ProblemBuilder b;
  SubproblemHandles h;
  NetworkIndex& ix = h.net;

  for (const Bus& bus : grid.buses) {
    ix.cSelf[bus.id] =
        b.add_variable("c[" + std::to_string(bus.id) + "]",
                       bus.vminCtg * bus.vminCtg, bus.vmaxCtg * bus.vmaxCtg);
  }

  auto ensure_pair = [&](int busA, int busB) {
    int i = std::min(busA, busB), j = std::max(busA, busB);
    BusPair key{i, j};
    if (ix.pairIndex.count(key)) return;
    const Bus& bi = grid.buses[grid.bus_index(i)];
    const Bus& bj = grid.buses[grid.bus_index(j)];
    double box = bi.vmaxCtg * bj.vmaxCtg;
    NetworkIndex::PairVars pv;
    pv.i = i;
    pv.j = j;
    std::string tag = std::to_string(i) + "," + std::to_string(j);
    pv.c = b.add_variable("c[" + tag + "]", -box, box);
    pv.s = b.add_variable("s[" + tag + "]", -box, box);
    ix.pairIndex[key] = static_cast<int>(ix.pairs.size());
    ix.pairs.push_back(pv);
  };
  for (int id : ctg.activeLines) {
    const Line& l = grid.lines[grid.line_index(id)];
    ensure_pair(l.from, l.to);
  }
  for (int id : ctg.activeXfmrs) {
    const Transformer& t = grid.transformers[grid.xfmr_index(id)];
    ensure_pair(t.from, t.to);
  }

  h.delta = b.add_variable("delta");

  // generator dispatch: pins per branch state; FOLLOW and HOLD_V release
  // the corresponding box so the fixed point can observe the raw target
  for (const Generator& g : grid.generators) {
    std::string tag = std::to_string(g.id);
    int p = b.add_variable("p[" + tag + "]");
    int q = b.add_variable("q[" + tag + "]");
    ix.pGen[g.id] = p;
    ix.qGen[g.id] = q;
    auto realIt = state.real.find(g.id);
    if (realIt == state.real.end()) {  // outaged: zero output
      h.pinP[g.id] = b.add_equality(LinExpr::term(p), "out_p[" + tag + "]");
      b.add_equality(LinExpr::term(q), "out_q[" + tag + "]");
      h.pCoupled[g.id] = false;
      continue;
    }
    switch (realIt->second) {
      case RealBranch::kFollow:
        h.pinP[g.id] = b.add_equality(LinExpr::term(p)
                                          .add(h.delta, -g.alpha)
                                          .add_constant(-base.pGen.at(g.id)),
                                      "agc[" + tag + "]");
        h.pCoupled[g.id] = true;
        break;
      case RealBranch::kAtMax:
        h.pinP[g.id] = b.add_equality(
            LinExpr::term(p).add_constant(-g.pmax), "pmax[" + tag + "]");
        h.pCoupled[g.id] = false;
        break;
      case RealBranch::kAtMin:
        h.pinP[g.id] = b.add_equality(
            LinExpr::term(p).add_constant(-g.pmin), "pmin[" + tag + "]");
        h.pCoupled[g.id] = false;
        break;
      case RealBranch::kFixed:
        h.pinP[g.id] =
            b.add_equality(LinExpr::term(p).add_constant(-base.pGen.at(g.id)),
                           "fix[" + tag + "]");
        h.pCoupled[g.id] = true;
        break;
    }
    switch (state.reactive.at(g.id)) {
      case ReactiveBranch::kHoldV:
        if (!h.pinV.count(g.bus)) {
          h.pinV[g.bus] = b.add_equality(
              LinExpr::term(ix.cSelf.at(g.bus))
                  .add_constant(-base.lifted.self(g.bus)),
              "holdv[" + std::to_string(g.bus) + "]");
        }
        break;
      case ReactiveBranch::kAtQmax:
        h.pinQ[g.id] = b.add_equality(
            LinExpr::term(q).add_constant(-g.qmax), "qmax[" + tag + "]");
        break;
      case ReactiveBranch::kAtQmin:
        h.pinQ[g.id] = b.add_equality(
            LinExpr::term(q).add_constant(-g.qmin), "qmin[" + tag + "]");
        break;
    }
  }

  // mismatch slacks
  for (const Bus& bus : grid.buses) {
    std::string tag = std::to_string(bus.id);
    h.sigPp[bus.id] = b.add_variable("sPp[" + tag + "]", 0.0, kInf);
    h.sigPm[bus.id] = b.add_variable("sPm[" + tag + "]", 0.0, kInf);
    h.sigQp[bus.id] = b.add_variable("sQp[" + tag + "]", 0.0, kInf);
    h.sigQm[bus.id] = b.add_variable("sQm[" + tag + "]", 0.0, kInf);
  }

  auto add_branch = [&](const std::string& kind, int id, int from, int to,
                        const LiftedFlow& po, const LiftedFlow& qo,
                        const LiftedFlow& pd, const LiftedFlow& qd,
                        double rating, int sigma) {
    const auto& pv = ix.pairs[ix.pair_of(from, to)];
    double sSign = from < to ? 1.0 : -1.0;
    std::string tag = kind + std::to_string(id);
    NetworkIndex::BranchVars bv;
    bv.pO = b.add_variable("pO[" + tag + "]");
    bv.qO = b.add_variable("qO[" + tag + "]");
    bv.pD = b.add_variable("pD[" + tag + "]");
    bv.qD = b.add_variable("qD[" + tag + "]");
    int cO = ix.cSelf.at(from), cD = ix.cSelf.at(to);
    auto fe = [&](const LiftedFlow& f, int cVar) {
      LinExpr e;
      e.add(cVar, f.self);
      e.add(pv.c, f.cross);
      e.add(pv.s, f.skew * sSign);
      return e;
    };
    LinExpr e = fe(po, cO);
    e.add(bv.pO, -1.0);
    b.add_equality(e, "pO[" + tag + "]");
    e = fe(qo, cO);
    e.add(bv.qO, -1.0);
    b.add_equality(e, "qO[" + tag + "]");
    e = fe(pd, cD);
    e.add(bv.pD, -1.0);
    b.add_equality(e, "pD[" + tag + "]");
    e = fe(qd, cD);
    e.add(bv.qD, -1.0);
    b.add_equality(e, "qD[" + tag + "]");
    LinExpr soft = LinExpr(rating).add(sigma, 1.0);
    bv.coneO = b.add_soc({LinExpr::term(bv.pO), LinExpr::term(bv.qO)}, soft,
                         "rateO[" + tag + "]");
    bv.coneD = b.add_soc({LinExpr::term(bv.pD), LinExpr::term(bv.qD)}, soft,
                         "rateD[" + tag + "]");
    return bv;
  };

  for (int id : ctg.activeLines) {
    const Line& l = grid.lines[grid.line_index(id)];
    h.sigLine[id] = b.add_variable("sE[" + std::to_string(id) + "]", 0.0, kInf);
    ix.lineVars[id] =
        add_branch("e", id, l.from, l.to, line_p_origin(l), line_q_origin(l),
                   line_p_dest(l), line_q_dest(l), l.ratingCtg, h.sigLine[id]);
  }
  for (int id : ctg.activeXfmrs) {
    const Transformer& t = grid.transformers[grid.xfmr_index(id)];
    h.sigXfmr[id] = b.add_variable("sF[" + std::to_string(id) + "]", 0.0, kInf);
    ix.xfmrVars[id] =
        add_branch("f", id, t.from, t.to, xfmr_p_origin(t), xfmr_q_origin(t),
                   xfmr_p_dest(t), xfmr_q_dest(t), t.ratingCtg, h.sigXfmr[id]);
  }

  auto active_gen = [&](int id) {
    return std::find(ctg.activeGens.begin(), ctg.activeGens.end(), id) !=
           ctg.activeGens.end();
  };

  // soft nodal balance
  for (const Bus& bus : grid.buses) {
    LinExpr p, q;
    for (const Generator& g : grid.generators) {
      if (g.bus != bus.id || !active_gen(g.id)) continue;
      p.add(ix.pGen[g.id], 1.0);
      q.add(ix.qGen[g.id], 1.0);
    }
    p.add(ix.cSelf[bus.id], -bus.gFS);
    q.add(ix.cSelf[bus.id], bus.bFS);
    auto tap_flows = [&](int from, int to, const NetworkIndex::BranchVars& bv) {
      if (from == bus.id) {
        p.add(bv.pO, -1.0);
        q.add(bv.qO, -1.0);
      }
      if (to == bus.id) {
        p.add(bv.pD, -1.0);
        q.add(bv.qD, -1.0);
      }
    };
    for (int id : ctg.activeLines) {
      const Line& l = grid.lines[grid.line_index(id)];
      tap_flows(l.from, l.to, ix.lineVars[id]);
    }
    for (int id : ctg.activeXfmrs) {
      const Transformer& t = grid.transformers[grid.xfmr_index(id)];
      tap_flows(t.from, t.to, ix.xfmrVars[id]);
    }
    p.add_constant(-bus.pLoad);
    q.add_constant(-bus.qLoad);
    p.add(h.sigPp[bus.id], -1.0).add(h.sigPm[bus.id], 1.0);
    q.add(h.sigQp[bus.id], -1.0).add(h.sigQm[bus.id], 1.0);
    std::string tag = std::to_string(bus.id);
    ix.balanceP[bus.id] = b.add_equality(p, "balP[" + tag + "]");
    ix.balanceQ[bus.id] = b.add_equality(q, "balQ[" + tag + "]");
  }

  for (auto& pv : ix.pairs) {
    int ci = ix.cSelf.at(pv.i), cj = ix.cSelf.at(pv.j);
    std::vector<LinExpr> v;
    v.push_back(LinExpr::term(pv.c, 2.0));
    v.push_back(LinExpr::term(pv.s, 2.0));
    v.push_back(LinExpr::term(ci, 1.0).add(cj, -1.0));
    pv.cone = b.add_soc(std::move(v), LinExpr::term(ci, 1.0).add(cj, 1.0),
                        "pair[" + std::to_string(pv.i) + "," +
                            std::to_string(pv.j) + "]");
  }

  // objective: penalty-weighted mismatch
  const PenaltyWeights& w = config.penalty;
  for (const Bus& bus : grid.buses) {
    b.add_objective_term(h.sigPp[bus.id], w.p);
    b.add_objective_term(h.sigPm[bus.id], w.p);
    b.add_objective_term(h.sigQp[bus.id], w.q);
    b.add_objective_term(h.sigQm[bus.id], w.q);
  }
  for (const auto& [id, var] : h.sigLine) b.add_objective_term(var, w.s);
  for (const auto& [id, var] : h.sigXfmr) b.add_objective_term(var, w.s);
  // degeneracy tiebreak: pull the pair cones tight
  for (const auto& pv : ix.pairs) {
    b.add_objective_term(pv.c, -config.coneTiebreak);
  }

  Subproblem sp;
  sp.problem = b.build();
  sp.handles = std::move(h);
  return sp;
}

namespace {

SubproblemResult read_result(const Grid& grid, const Contingency& ctg,
                             const BasePoint& base, const Subproblem& sp,
                             const ConicSolution& sol,
                             const AgcBranchState& state,
                             const SolverConfig& config) {
  const SubproblemHandles& h = sp.handles;
  const NetworkIndex& ix = h.net;
  SubproblemResult r;
  r.contingency = ctg.id;
  r.branchState = state;
  r.delta = sol.primal[h.delta];

  // slacks sit on their bound at optimum; strip the solver's interior noise
  auto clamped = [&](int var) { return std::max(0.0, sol.primal[var]); };
  for (const auto& [bus, var] : h.sigPp) r.sigmaBusP_plus[bus] = clamped(var);
  for (const auto& [bus, var] : h.sigPm) r.sigmaBusP_minus[bus] = clamped(var);
  for (const auto& [bus, var] : h.sigQp) r.sigmaBusQ_plus[bus] = clamped(var);
  for (const auto& [bus, var] : h.sigQm) r.sigmaBusQ_minus[bus] = clamped(var);
  for (const auto& [id, var] : h.sigLine) r.sigmaLine[id] = clamped(var);
  for (const auto& [id, var] : h.sigXfmr) r.sigmaXfmr[id] = clamped(var);

  for (const auto& [gid, var] : ix.pGen) r.pDispatch[gid] = sol.primal[var];
  for (const auto& [gid, var] : ix.qGen) r.qDispatch[gid] = sol.primal[var];

  for (const auto& [bus, var] : ix.cSelf) r.liftedK.set_self(bus, sol.primal[var]);
  for (const auto& pv : ix.pairs) {
    r.liftedK.set_pair(pv.i, pv.j, sol.primal[pv.c], sol.primal[pv.s]);
  }
  auto fill = [&](const std::map<int, NetworkIndex::BranchVars>& vars,
                  std::map<int, ElementFlow>& out) {
    for (const auto& [id, bv] : vars) {
      out[id] = {sol.primal[bv.pO], sol.primal[bv.qO], sol.primal[bv.pD],
                 sol.primal[bv.qD]};
    }
  };
  fill(ix.lineVars, r.lineFlows);
  fill(ix.xfmrVars, r.xfmrFlows);

  r.mismatchCost = mismatch_cost(r, config.penalty);

  for (const auto& [gid, coupled] : h.pCoupled) {
    if (coupled) r.couplingDualP[gid] = sol.dual_eq[h.pinP.at(gid)];
  }
  for (const auto& [bus, eq] : h.pinV) {
    r.couplingDualV[bus] = sol.dual_eq[eq];
  }

  // droop validity products at the solved point
  for (int gid : ctg.activeGens) {
    const Generator& g = grid.generators[grid.gen_index(gid)];
    double p = r.pDispatch.at(gid);
    double q = r.qDispatch.at(gid);
    double target = base.pGen.at(gid) + g.alpha * r.delta;
    ValidResiduals v;
    bool participating =
        std::find(ctg.participating.begin(), ctg.participating.end(), gid) !=
        ctg.participating.end();
    if (participating) {
      v.a = (p - target) * (p - g.pmax);
      v.b = (p - target) * (g.pmin - p);
    }
    double cb = base.lifted.self(g.bus);
    double ck = r.liftedK.self(g.bus);
    v.c = (cb - ck) * (q - g.qmax);
    v.d = (ck - cb) * (g.qmin - q);
    r.validity[gid] = v;
  }
  return r;
}

}  // namespace

SubproblemResult solve_with_agc(const Grid& grid, const Contingency& ctg,
                                const BasePoint& base,
                                const SolverConfig& config) {
  AgcBranchState state = initial_branch_state(grid, ctg);
  const int nPart = static_cast<int>(ctg.participating.size());
  const int nAct = static_cast<int>(ctg.activeGens.size());
  const int maxIters = 2 * (2 * nPart + 2 * nAct) + 2;

  std::map<int, int> realChanges, reactiveChanges;
  std::ostringstream trace;
  SubproblemResult result;

  bool relaxedTol = false;
  for (int iter = 0; iter < maxIters; ++iter) {
    Subproblem sp = build_subproblem(grid, ctg, base, state, config);
    ConicSolution sol =
        solve(sp.problem, config.solverTol, config.solverMaxIters);
    // near-degenerate instances occasionally stall a whisker above the
    // target tolerance; accept a modestly looser solve rather than fail
    for (double bump : {10.0, 100.0}) {
      if (sol.optimal()) break;
      sol = solve(sp.problem, config.solverTol * bump, config.solverMaxIters);
      relaxedTol = true;
    }
    if (!sol.optimal()) {
      throw AgcError("contingency " + std::to_string(ctg.id) +
                     ": sub-problem solve returned " +
                     std::string(to_string(sol.status)) +
                     " (soft constraints should make it feasible)");
    }
    result = read_result(grid, ctg, base, sp, sol, state, config);
    result.fixedPointIterations = iter + 1;

    int changes = 0;
    bool anyFollow = false;
    for (const auto& [gid, rb] : state.real) {
      if (rb == RealBranch::kFollow) anyFollow = true;
    }
    trace << "iter " << iter << " delta=" << result.delta
          << " mismatch=" << result.mismatchCost << "\n";

    for (auto& [gid, rb] : state.real) {
      const Generator& g = grid.generators[grid.gen_index(gid)];
      double p = result.pDispatch.at(gid);
      double target = base.pGen.at(gid) + g.alpha * result.delta;
      if (rb == RealBranch::kFollow) {
        if (p > g.pmax + kActiveTol && realChanges[gid] < 2) {
          rb = RealBranch::kAtMax;
          ++realChanges[gid];
          ++changes;
          trace << "  gen " << gid << " FOLLOW -> AT_MAX (p=" << p << ")\n";
        } else if (p < g.pmin - kActiveTol && realChanges[gid] < 2) {
          rb = RealBranch::kAtMin;
          ++realChanges[gid];
          ++changes;
          trace << "  gen " << gid << " FOLLOW -> AT_MIN (p=" << p << ")\n";
        }
      } else if (rb == RealBranch::kAtMax && anyFollow) {
        if (target < g.pmax - kActiveTol && realChanges[gid] < 2) {
          rb = RealBranch::kFollow;
          ++realChanges[gid];
          ++changes;
          trace << "  gen " << gid << " AT_MAX -> FOLLOW (target=" << target
                << ")\n";
        }
      } else if (rb == RealBranch::kAtMin && anyFollow) {
        if (target > g.pmin + kActiveTol && realChanges[gid] < 2) {
          rb = RealBranch::kFollow;
          ++realChanges[gid];
          ++changes;
          trace << "  gen " << gid << " AT_MIN -> FOLLOW (target=" << target
                << ")\n";
        }
      }
    }

    for (auto& [gid, qb] : state.reactive) {
      const Generator& g = grid.generators[grid.gen_index(gid)];
      double q = result.qDispatch.at(gid);
      double cb = base.lifted.self(g.bus);
      double ck = result.liftedK.self(g.bus);
      if (qb == ReactiveBranch::kHoldV) {
        if (q > g.qmax + kActiveTol && reactiveChanges[gid] < 2) {
          qb = ReactiveBranch::kAtQmax;
          ++reactiveChanges[gid];
          ++changes;
          trace << "  gen " << gid << " HOLD_V -> AT_QMAX (q=" << q << ")\n";
        } else if (q < g.qmin - kActiveTol && reactiveChanges[gid] < 2) {
          qb = ReactiveBranch::kAtQmin;
          ++reactiveChanges[gid];
          ++changes;
          trace << "  gen " << gid << " HOLD_V -> AT_QMIN (q=" << q << ")\n";
        }
      } else if (qb == ReactiveBranch::kAtQmax) {
        if (ck > cb + kActiveTol && reactiveChanges[gid] < 2) {
          qb = ReactiveBranch::kHoldV;
          ++reactiveChanges[gid];
          ++changes;
          trace << "  gen " << gid << " AT_QMAX -> HOLD_V (c=" << ck << ")\n";
        }
      } else if (qb == ReactiveBranch::kAtQmin) {
        if (ck < cb - kActiveTol && reactiveChanges[gid] < 2) {
          qb = ReactiveBranch::kHoldV;
          ++reactiveChanges[gid];
          ++changes;
          trace << "  gen " << gid << " AT_QMIN -> HOLD_V (c=" << ck << ")\n";
        }
      }
    }

    if (changes == 0) {
      if (relaxedTol) {
        result.warnings.push_back("solved at a relaxed conic tolerance");
      }
      // pinned-direction sanity per the reactive branch semantics
      for (const auto& [gid, qb] : state.reactive) {
        const Generator& g = grid.generators[grid.gen_index(gid)];
        double cb = base.lifted.self(g.bus);
        double ck = result.liftedK.self(g.bus);
        if (qb == ReactiveBranch::kAtQmax && ck > cb + kActiveTol) {
          result.warnings.push_back(
              "gen " + std::to_string(gid) +
              ": AT_QMAX but contingency voltage above base");
        }
        if (qb == ReactiveBranch::kAtQmin && ck < cb - kActiveTol) {
          result.warnings.push_back(
              "gen " + std::to_string(gid) +
              ": AT_QMIN but contingency voltage below base");
        }
      }
      if (!config.traceDir.empty()) {
        std::ofstream out(config.traceDir + "/ctg_" + std::to_string(ctg.id) +
                          ".trace");
        out << trace.str() << "converged after "
            << result.fixedPointIterations << " solves\n";
      }
      return result;
    }
  }
  throw AgcError("contingency " + std::to_string(ctg.id) +
                 ": droop state cycling after " + std::to_string(maxIters) +
                 " iterations\n" + trace.str());
}

double mismatch_cost(const SubproblemResult& result,
                     const PenaltyWeights& weights) {
  double cost = 0.0;
  auto accumulate = [&](const std::map<int, double>& sigmas, double w) {
    for (const auto& [id, v] : sigmas) {
      if (v < -1e-9) {
        throw ValidationError("negative mismatch slack at element " +
                              std::to_string(id));
      }
      cost += w * v;
    }
  };
  accumulate(result.sigmaBusP_plus, weights.p);
  accumulate(result.sigmaBusP_minus, weights.p);
  accumulate(result.sigmaBusQ_plus, weights.q);
  accumulate(result.sigmaBusQ_minus, weights.q);
  accumulate(result.sigmaLine, weights.s);
  accumulate(result.sigmaXfmr, weights.s);
  return cost;
}

double BendersCut::evaluate(const Eigen::VectorXd& masterPoint) const {
  double v = constant;
  for (const auto& [var, coef] : coeffs) v += coef * masterPoint[var];
  return v;
}

BendersCut build_cut(const SubproblemResult& result, const BasePoint& base,
                     const NetworkIndex& masterIndex, int iterationAdded) {
  BendersCut cut;
  cut.contingency = result.contingency;
  cut.iterationAdded = iterationAdded;
  double constant = result.mismatchCost;
  for (const auto& [gid, lambda] : result.couplingDualP) {
    int var = masterIndex.pGen.at(gid);
    cut.coeffs[var] += lambda;
    constant -= lambda * base.pGen.at(gid);
  }
  for (const auto& [bus, lambda] : result.couplingDualV) {
    int var = masterIndex.cSelf.at(bus);
    cut.coeffs[var] += lambda;
    constant -= lambda * base.lifted.self(bus);
  }
  cut.constant = constant;
  return cut;
}

}  // namespace scopf
