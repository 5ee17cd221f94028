#include "scopf/relaxation.hpp"

#include <algorithm>
#include <cmath>

#include "scopf/flow_model.hpp"

namespace scopf {

void LiftedVoltage::set_pair(int i, int j, double c, double s) {
  if (i < j) {
    pairs_[{i, j}] = {c, s};
  } else {
    pairs_[{j, i}] = {c, -s};
  }
}

double LiftedVoltage::self(int bus) const {
  auto it = cSelf_.find(bus);
  if (it == cSelf_.end()) {
    throw ValidationError("lifted voltage missing bus " + std::to_string(bus));
  }
  return it->second;
}

bool LiftedVoltage::has_pair(int i, int j) const {
  return pairs_.count(i < j ? BusPair{i, j} : BusPair{j, i}) > 0;
}

double LiftedVoltage::c(int i, int j) const {
  auto it = pairs_.find(i < j ? BusPair{i, j} : BusPair{j, i});
  if (it == pairs_.end()) {
    throw ValidationError("lifted voltage missing pair (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
  }
  return it->second.first;
}

double LiftedVoltage::s(int i, int j) const {
  auto it = pairs_.find(i < j ? BusPair{i, j} : BusPair{j, i});
  if (it == pairs_.end()) {
    throw ValidationError("lifted voltage missing pair (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
  }
  return i < j ? it->second.second : -it->second.second;
}

double ElementFlow::origin_apparent() const {
  return std::hypot(pOrigin, qOrigin);
}
double ElementFlow::dest_apparent() const { return std::hypot(pDest, qDest); }

int NetworkIndex::pair_of(int i, int j) const {
  auto it = pairIndex.find(i < j ? BusPair{i, j} : BusPair{j, i});
  if (it == pairIndex.end()) {
    throw ValidationError("no lifted pair for buses " + std::to_string(i) +
                          ", " + std::to_string(j));
  }
  return it->second;
}

namespace {

// s_ij in the branch orientation is +/- the canonical pair variable.
double orient(int from, int to) { return from < to ? 1.0 : -1.0; }

LinExpr flow_expr(const LiftedFlow& f, int cSelfVar, int cVar, int sVar,
                  double sSign) {
  LinExpr e;
  e.add(cSelfVar, f.self);
  e.add(cVar, f.cross);
  e.add(sVar, f.skew * sSign);
  return e;
}

}  // namespace

BaseRelaxation build_base_relaxation(const Grid& grid,
                                     const SolverConfig& config) {
  (void)config;
  if (!is_connected(grid)) {
    throw IslandedError("cannot build base relaxation: grid is islanded");
  }

  ProblemBuilder b;
  NetworkIndex ix;

  for (const Bus& bus : grid.buses) {
    ix.cSelf[bus.id] =
        b.add_variable("c[" + std::to_string(bus.id) + "]",
                       bus.vminBase * bus.vminBase, bus.vmaxBase * bus.vmaxBase);
  }

  auto ensure_pair = [&](int busA, int busB) {
    int i = std::min(busA, busB), j = std::max(busA, busB);
    BusPair key{i, j};
    if (ix.pairIndex.count(key)) return;
    const Bus& bi = grid.buses[grid.bus_index(i)];
    const Bus& bj = grid.buses[grid.bus_index(j)];
    double box = bi.vmaxBase * bj.vmaxBase;
    NetworkIndex::PairVars pv;
    pv.i = i;
    pv.j = j;
    std::string tag = std::to_string(i) + "," + std::to_string(j);
    pv.c = b.add_variable("c[" + tag + "]", -box, box);
    pv.s = b.add_variable("s[" + tag + "]", -box, box);
    ix.pairIndex[key] = static_cast<int>(ix.pairs.size());
    ix.pairs.push_back(pv);
  };
  for (const Line& l : grid.lines) ensure_pair(l.from, l.to);
  for (const Transformer& t : grid.transformers) ensure_pair(t.from, t.to);

  double costConstant = 0.0;
  for (const Generator& g : grid.generators) {
    std::string tag = std::to_string(g.id);
    ix.pGen[g.id] = b.add_variable("p[" + tag + "]", g.pmin, g.pmax);
    ix.qGen[g.id] = b.add_variable("q[" + tag + "]", g.qmin, g.qmax);
    if (g.cost.size() == 1) {
      b.add_objective_term(ix.pGen[g.id], g.cost[0].marginal);
      costConstant += -g.cost[0].marginal * g.cost[0].breakpoint;
    } else {
      int t = b.add_variable("t[" + tag + "]");
      b.add_objective_term(t, 1.0);
      for (size_t j = 0; j < g.cost.size(); ++j) {
        double cum = g.cost_at(g.cost[j].breakpoint);
        LinExpr piece;
        piece.add(ix.pGen[g.id], g.cost[j].marginal);
        piece.add(t, -1.0);
        piece.add_constant(cum - g.cost[j].marginal * g.cost[j].breakpoint);
        b.add_inequality(piece, "cost[" + tag + "/" + std::to_string(j) + "]");
      }
    }
  }
  b.add_objective_constant(costConstant);

  auto add_branch = [&](const std::string& kind, int id, int from, int to,
                        const LiftedFlow& po, const LiftedFlow& qo,
                        const LiftedFlow& pd, const LiftedFlow& qd,
                        double rating) {
    const auto& pv = ix.pairs[ix.pair_of(from, to)];
    double sSign = orient(from, to);
    std::string tag = kind + std::to_string(id);
    NetworkIndex::BranchVars bv;
    bv.pO = b.add_variable("pO[" + tag + "]");
    bv.qO = b.add_variable("qO[" + tag + "]");
    bv.pD = b.add_variable("pD[" + tag + "]");
    bv.qD = b.add_variable("qD[" + tag + "]");
    int cO = ix.cSelf.at(from), cD = ix.cSelf.at(to);
    LinExpr e = flow_expr(po, cO, pv.c, pv.s, sSign);
    e.add(bv.pO, -1.0);
    b.add_equality(e, "pO[" + tag + "]");
    e = flow_expr(qo, cO, pv.c, pv.s, sSign);
    e.add(bv.qO, -1.0);
    b.add_equality(e, "qO[" + tag + "]");
    e = flow_expr(pd, cD, pv.c, pv.s, sSign);
    e.add(bv.pD, -1.0);
    b.add_equality(e, "pD[" + tag + "]");
    e = flow_expr(qd, cD, pv.c, pv.s, sSign);
    e.add(bv.qD, -1.0);
    b.add_equality(e, "qD[" + tag + "]");
    bv.coneO = b.add_soc({LinExpr::term(bv.pO), LinExpr::term(bv.qO)},
                         LinExpr(rating), "rateO[" + tag + "]");
    bv.coneD = b.add_soc({LinExpr::term(bv.pD), LinExpr::term(bv.qD)},
                         LinExpr(rating), "rateD[" + tag + "]");
    return bv;
  };

  for (const Line& l : grid.lines) {
    ix.lineVars[l.id] =
        add_branch("e", l.id, l.from, l.to, line_p_origin(l), line_q_origin(l),
                   line_p_dest(l), line_q_dest(l), l.ratingBase);
  }
  for (const Transformer& t : grid.transformers) {
    ix.xfmrVars[t.id] =
        add_branch("f", t.id, t.from, t.to, xfmr_p_origin(t), xfmr_q_origin(t),
                   xfmr_p_dest(t), xfmr_q_dest(t), t.ratingBase);
  }

  // nodal balance; shunt consumes g*v^2 real and injects b*v^2 reactive
  for (const Bus& bus : grid.buses) {
    LinExpr p, q;
    for (const Generator& g : grid.generators) {
      if (g.bus != bus.id) continue;
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
    for (const Line& l : grid.lines) tap_flows(l.from, l.to, ix.lineVars[l.id]);
    for (const Transformer& t : grid.transformers)
      tap_flows(t.from, t.to, ix.xfmrVars[t.id]);
    p.add_constant(-bus.pLoad);
    q.add_constant(-bus.qLoad);
    std::string tag = std::to_string(bus.id);
    ix.balanceP[bus.id] = b.add_equality(p, "balP[" + tag + "]");
    ix.balanceQ[bus.id] = b.add_equality(q, "balQ[" + tag + "]");
  }

  // rotated cone per pair: c^2 + s^2 <= c_ii c_jj
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

  BaseRelaxation rel;
  rel.problem = b.build();
  rel.index = std::move(ix);
  rel.costConstant = costConstant;
  return rel;
}

BasePoint extract_base_point(const Grid& grid, const BaseRelaxation& rel,
                             const ConicSolution& sol) {
  const NetworkIndex& ix = rel.index;
  BasePoint bp;
  for (const auto& [bus, var] : ix.cSelf) bp.lifted.set_self(bus, sol.primal[var]);
  for (const auto& pv : ix.pairs) {
    bp.lifted.set_pair(pv.i, pv.j, sol.primal[pv.c], sol.primal[pv.s]);
  }
  double cost = 0.0;
  for (const Generator& g : grid.generators) {
    double p = sol.primal[ix.pGen.at(g.id)];
    bp.pGen[g.id] = p;
    bp.qGen[g.id] = sol.primal[ix.qGen.at(g.id)];
    cost += g.cost_at(p);
  }
  auto fill = [&](const std::map<int, NetworkIndex::BranchVars>& vars,
                  std::map<int, ElementFlow>& out) {
    for (const auto& [id, bv] : vars) {
      ElementFlow f;
      f.pOrigin = sol.primal[bv.pO];
      f.qOrigin = sol.primal[bv.qO];
      f.pDest = sol.primal[bv.pD];
      f.qDest = sol.primal[bv.qD];
      out[id] = f;
    }
  };
  fill(ix.lineVars, bp.lineFlows);
  fill(ix.xfmrVars, bp.xfmrFlows);
  bp.baseCost = cost;
  bp.objective = sol.objective_value;
  return bp;
}

double tightness_of(const LiftedVoltage& lifted, int i, int j) {
  double c = lifted.c(i, j);
  double s = lifted.s(i, j);
  double diff = std::abs(c * c + s * s - lifted.self(i) * lifted.self(j));
  if (diff < 1e-16) return 16.0;  // numerically exact
  return -std::log10(diff);
}

std::map<BusPair, double> tightness(const LiftedVoltage& lifted) {
  std::map<BusPair, double> out;
  for (const auto& [key, cs] : lifted.pairs()) {
    out[key] = tightness_of(lifted, key.first, key.second);
  }
  return out;
}

std::map<int, double> recover_voltages(const LiftedVoltage& lifted) {
  std::map<int, double> out;
  for (const auto& [bus, c] : lifted.selfs()) {
    if (c < -1e-9) {
      throw ValidationError("negative squared voltage at bus " +
                            std::to_string(bus));
    }
    out[bus] = std::sqrt(std::max(c, 0.0));
  }
  return out;
}

UtilizationReport flow_report(const BasePoint& base, const Grid& grid) {
  UtilizationReport rep;
  for (const Line& l : grid.lines) {
    const ElementFlow& f = base.lineFlows.at(l.id);
    double s = std::max(f.origin_apparent(), f.dest_apparent());
    rep.line[l.id] = l.ratingBase > 1e-12 ? s / l.ratingBase : 0.0;
  }
  for (const Transformer& t : grid.transformers) {
    const ElementFlow& f = base.xfmrFlows.at(t.id);
    double s = std::max(f.origin_apparent(), f.dest_apparent());
    rep.xfmr[t.id] = t.ratingBase > 1e-12 ? s / t.ratingBase : 0.0;
  }
  for (const Generator& g : grid.generators) {
    rep.gen[g.id] =
        g.pmax > 1e-12 ? base.pGen.at(g.id) / g.pmax : 0.0;
  }
  return rep;
}

}  // namespace scopf
