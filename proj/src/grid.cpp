#include "scopf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace scopf {

double Generator::cost_at(double p) const {
  double total = 0.0;
  for (size_t j = 0; j < cost.size(); ++j) {
    double lo = cost[j].breakpoint;
    double hi = (j + 1 < cost.size()) ? cost[j + 1].breakpoint : p;
    double width = std::min(p, hi) - lo;
    if (width > 0.0) total += cost[j].marginal * width;
  }
  return total;
}

const char* to_string(OutageKind k) {
  switch (k) {
    case OutageKind::kGenerator:
      return "generator-outage";
    case OutageKind::kLine:
      return "line-outage";
    case OutageKind::kTransformer:
      return "transformer-outage";
  }
  return "unknown";
}

OutageKind outage_kind_from_string(const std::string& s) {
  if (s == "generator-outage") return OutageKind::kGenerator;
  if (s == "line-outage") return OutageKind::kLine;
  if (s == "transformer-outage") return OutageKind::kTransformer;
  throw ValidationError("unknown contingency kind '" + s + "'");
}

namespace {

template <typename T>
int index_of(const std::vector<T>& items, int id, const char* what) {
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].id == id) return static_cast<int>(i);
  }
  throw ValidationError(std::string(what) + " id " + std::to_string(id) +
                        " does not resolve");
}

}  // namespace

int Grid::bus_index(int id) const { return index_of(buses, id, "bus"); }
int Grid::gen_index(int id) const { return index_of(generators, id, "generator"); }
int Grid::line_index(int id) const { return index_of(lines, id, "line"); }
int Grid::xfmr_index(int id) const {
  return index_of(transformers, id, "transformer");
}

std::optional<int> Grid::find_bus(int id) const {
  for (size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<int>(i);
  }
  return std::nullopt;
}

namespace {

void check_unique_ids(const Grid& grid) {
  auto require_unique = [](const std::vector<int>& ids, const char* what) {
    std::set<int> seen;
    for (int id : ids) {
      if (!seen.insert(id).second) {
        throw ValidationError(std::string("duplicate ") + what + " id " +
                              std::to_string(id));
      }
    }
  };
  std::vector<int> ids;
  for (const Bus& b : grid.buses) ids.push_back(b.id);
  require_unique(ids, "bus");
  ids.clear();
  for (const Generator& g : grid.generators) ids.push_back(g.id);
  require_unique(ids, "generator");
  ids.clear();
  for (const Line& l : grid.lines) ids.push_back(l.id);
  require_unique(ids, "line");
  ids.clear();
  for (const Transformer& t : grid.transformers) ids.push_back(t.id);
  require_unique(ids, "transformer");
  ids.clear();
  for (const Contingency& c : grid.contingencies) ids.push_back(c.id);
  require_unique(ids, "contingency");
}

// Connectivity of the graph spanned by the given branch subsets.
bool connected_subgraph(const Grid& grid, const std::vector<int>& lines,
                        const std::vector<int>& xfmrs) {
  if (grid.buses.empty()) return true;
  std::map<int, std::vector<int>> adj;
  for (const Bus& b : grid.buses) adj[b.id];
  for (int id : lines) {
    const Line& l = grid.lines[grid.line_index(id)];
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  for (int id : xfmrs) {
    const Transformer& t = grid.transformers[grid.xfmr_index(id)];
    adj[t.from].push_back(t.to);
    adj[t.to].push_back(t.from);
  }
  std::set<int> seen;
  std::queue<int> q;
  q.push(grid.buses.front().id);
  seen.insert(grid.buses.front().id);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (seen.insert(v).second) q.push(v);
    }
  }
  return seen.size() == grid.buses.size();
}

}  // namespace

bool is_connected(const Grid& grid) {
  std::vector<int> lineIds, xfmrIds;
  for (const Line& l : grid.lines) lineIds.push_back(l.id);
  for (const Transformer& t : grid.transformers) xfmrIds.push_back(t.id);
  return connected_subgraph(grid, lineIds, xfmrIds);
}

void validate(const Grid& grid) {
  if (grid.baseMVA <= 0.0) {
    throw ValidationError("baseMVA must be positive");
  }
  check_unique_ids(grid);

  for (const Bus& b : grid.buses) {
    auto fail = [&](const std::string& msg) {
      throw ValidationError("bus " + std::to_string(b.id) + ": " + msg);
    };
    if (!(b.vminBase > 0.0) || b.vminBase > b.vmaxBase)
      fail("base voltage bounds must satisfy 0 < vminBase <= vmaxBase");
    if (!(b.vminCtg > 0.0) || b.vminCtg > b.vmaxCtg)
      fail("contingency voltage bounds must satisfy 0 < vminCtg <= vmaxCtg");
    if (b.vminCtg > b.vminBase || b.vmaxCtg < b.vmaxBase)
      fail("contingency voltage bounds must contain the base bounds");
  }

  for (const Generator& g : grid.generators) {
    auto fail = [&](const std::string& msg) {
      throw ValidationError("generator " + std::to_string(g.id) + ": " + msg);
    };
    if (!grid.find_bus(g.bus)) fail("connection bus does not exist");
    if (g.pmin > g.pmax) fail("pmin > pmax");
    if (g.qmin > g.qmax) fail("qmin > qmax");
    if (g.alpha < 0.0) fail("alpha must be nonnegative");
    if (g.cost.empty()) fail("cost must have at least one segment");
    for (size_t j = 0; j + 1 < g.cost.size(); ++j) {
      if (g.cost[j].breakpoint >= g.cost[j + 1].breakpoint)
        fail("cost breakpoints must be strictly increasing");
      if (g.cost[j].marginal > g.cost[j + 1].marginal)
        fail("cost marginals must be nondecreasing");
    }
    if (g.cost.front().breakpoint > g.pmin)
      fail("first cost breakpoint must not exceed pmin");
  }

  for (const Line& l : grid.lines) {
    auto fail = [&](const std::string& msg) {
      throw ValidationError("line " + std::to_string(l.id) + ": " + msg);
    };
    if (l.from == l.to) fail("endpoints must differ");
    if (!grid.find_bus(l.from) || !grid.find_bus(l.to))
      fail("endpoint bus does not exist");
    if (l.ratingBase > l.ratingCtg) fail("ratingBase exceeds ratingCtg");
  }

  for (const Transformer& t : grid.transformers) {
    auto fail = [&](const std::string& msg) {
      throw ValidationError("transformer " + std::to_string(t.id) + ": " + msg);
    };
    if (t.from == t.to) fail("endpoints must differ");
    if (!grid.find_bus(t.from) || !grid.find_bus(t.to))
      fail("endpoint bus does not exist");
    if (!(t.tm > 0.0)) fail("tm must be positive");
    if (std::abs(t.tm * t.tm - (t.tr * t.tr + t.ti * t.ti)) > 1e-9)
      fail("tm^2 must equal tr^2 + ti^2");
    if (!(t.tau > 0.0)) fail("tau must be positive");
    if (t.ratingBase > t.ratingCtg) fail("ratingBase exceeds ratingCtg");
  }

  for (const Contingency& c : grid.contingencies) {
    auto fail = [&](const std::string& msg) {
      throw ValidationError("contingency " + std::to_string(c.id) + ": " + msg);
    };
    auto contains = [](const std::vector<int>& v, int id) {
      return std::find(v.begin(), v.end(), id) != v.end();
    };
    switch (c.kind) {
      case OutageKind::kGenerator:
        grid.gen_index(c.element);
        if (contains(c.activeGens, c.element))
          fail("outaged generator still active");
        break;
      case OutageKind::kLine:
        grid.line_index(c.element);
        if (contains(c.activeLines, c.element)) fail("outaged line still active");
        break;
      case OutageKind::kTransformer:
        grid.xfmr_index(c.element);
        if (contains(c.activeXfmrs, c.element))
          fail("outaged transformer still active");
        break;
    }
    for (int id : c.activeGens) grid.gen_index(id);
    for (int id : c.activeLines) grid.line_index(id);
    for (int id : c.activeXfmrs) grid.xfmr_index(id);
    for (int id : c.participating) {
      if (!contains(c.activeGens, id))
        fail("participating generator " + std::to_string(id) +
             " is not in the active set");
    }
  }

  if (!is_connected(grid)) {
    throw IslandedError("base network graph is disconnected");
  }
}

namespace {

Grid scale_powers(const Grid& grid, double factor) {
  Grid out = grid;
  for (Bus& b : out.buses) {
    b.pLoad *= factor;
    b.qLoad *= factor;
  }
  for (Generator& g : out.generators) {
    g.pmin *= factor;
    g.pmax *= factor;
    g.qmin *= factor;
    g.qmax *= factor;
    for (CostSegment& s : g.cost) {
      s.breakpoint *= factor;
      s.marginal /= factor;  // currency per unit output
    }
  }
  for (Line& l : out.lines) {
    l.ratingBase *= factor;
    l.ratingCtg *= factor;
  }
  for (Transformer& t : out.transformers) {
    t.ratingBase *= factor;
    t.ratingCtg *= factor;
  }
  return out;
}

}  // namespace

Grid to_per_unit(const Grid& grid) {
  if (grid.baseMVA <= 0.0) {
    throw ValidationError("baseMVA must be positive");
  }
  return scale_powers(grid, 1.0 / grid.baseMVA);
}

Grid from_per_unit(const Grid& grid) {
  if (grid.baseMVA <= 0.0) {
    throw ValidationError("baseMVA must be positive");
  }
  return scale_powers(grid, grid.baseMVA);
}

Contingency make_contingency(const Grid& grid, int id, OutageKind kind,
                             int element) {
  Contingency c;
  c.id = id;
  c.kind = kind;
  c.element = element;
  switch (kind) {
    case OutageKind::kGenerator:
      grid.gen_index(element);
      break;
    case OutageKind::kLine:
      grid.line_index(element);
      break;
    case OutageKind::kTransformer:
      grid.xfmr_index(element);
      break;
  }
  for (const Generator& g : grid.generators) {
    if (kind == OutageKind::kGenerator && g.id == element) continue;
    c.activeGens.push_back(g.id);
  }
  for (const Line& l : grid.lines) {
    if (kind == OutageKind::kLine && l.id == element) continue;
    c.activeLines.push_back(l.id);
  }
  for (const Transformer& t : grid.transformers) {
    if (kind == OutageKind::kTransformer && t.id == element) continue;
    c.activeXfmrs.push_back(t.id);
  }
  for (int id2 : c.activeGens) {
    if (grid.generators[grid.gen_index(id2)].alpha > 0.0) {
      c.participating.push_back(id2);
    }
  }
  return c;
}

std::vector<Contingency> enumerate_contingencies(const Grid& grid,
                                                 const ContingencySpec& spec) {
  std::vector<Contingency> out;
  int next_id = 1;
  auto add = [&](OutageKind kind, int element) {
    out.push_back(make_contingency(grid, next_id++, kind, element));
  };
  switch (spec.selection) {
    case ContingencySelection::kExplicit:
      for (const auto& [kind, element] : spec.elements) add(kind, element);
      break;
    case ContingencySelection::kAllBranches:
      for (const Line& l : grid.lines) add(OutageKind::kLine, l.id);
      for (const Transformer& t : grid.transformers)
        add(OutageKind::kTransformer, t.id);
      break;
    case ContingencySelection::kAllGenerators:
      for (const Generator& g : grid.generators)
        add(OutageKind::kGenerator, g.id);
      break;
    case ContingencySelection::kAllN1:
      for (const Line& l : grid.lines) add(OutageKind::kLine, l.id);
      for (const Transformer& t : grid.transformers)
        add(OutageKind::kTransformer, t.id);
      for (const Generator& g : grid.generators)
        add(OutageKind::kGenerator, g.id);
      break;
  }
  return out;
}

bool is_islanding(const Grid& grid, const Contingency& ctg) {
  return !connected_subgraph(grid, ctg.activeLines, ctg.activeXfmrs);
}

}  // namespace scopf
