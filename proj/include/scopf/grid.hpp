#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace scopf {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base network is disconnected; the problem has no feasible dispatch.
class IslandedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bus {
  int id = 0;
  double gFS = 0.0;  // fixed shunt conductance (p.u.)
  double bFS = 0.0;  // fixed shunt susceptance (p.u.)
  double vminBase = 0.9, vmaxBase = 1.1;
  double vminCtg = 0.9, vmaxCtg = 1.1;
  double pLoad = 0.0, qLoad = 0.0;
};

// Convex piecewise-linear cost: segment j charges `marginal` per unit of
// output between breakpoint j and breakpoint j+1 (the last segment extends
// to pmax). Marginals must be nondecreasing.
struct CostSegment {
  double breakpoint = 0.0;
  double marginal = 0.0;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
  double alpha = 0.0;  // droop participation factor, >= 0
  std::vector<CostSegment> cost;

  double cost_at(double p) const;
};

struct Line {
  int id = 0;
  int from = 0, to = 0;
  double g = 0.0, b = 0.0;  // series admittance (p.u.)
  double bch = 0.0;         // total charging susceptance (p.u.)
  double ratingBase = 0.0, ratingCtg = 0.0;
};

struct Transformer {
  int id = 0;
  int from = 0, to = 0;
  double g = 0.0, b = 0.0;    // series admittance (p.u.)
  double gM = 0.0, bM = 0.0;  // magnetizing admittance
  double tau = 1.0;           // real tap ratio
  double tr = 1.0, ti = 0.0, tm = 1.0;  // complex ratio, tm = |tr + j ti|
  double ratingBase = 0.0, ratingCtg = 0.0;
};

enum class OutageKind { kGenerator, kLine, kTransformer };

const char* to_string(OutageKind k);
OutageKind outage_kind_from_string(const std::string& s);

struct Contingency {
  int id = 0;
  OutageKind kind = OutageKind::kLine;
  int element = 0;  // id of the outaged generator/line/transformer

  // Surviving element ids and the generators responding through droop.
  std::vector<int> activeGens, activeLines, activeXfmrs;
  std::vector<int> participating;
};

// Immutable after construction; safe to share across worker threads.
struct Grid {
  double baseMVA = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Line> lines;
  std::vector<Transformer> transformers;
  std::vector<Contingency> contingencies;

  int bus_index(int id) const;
  int gen_index(int id) const;
  int line_index(int id) const;
  int xfmr_index(int id) const;
  std::optional<int> find_bus(int id) const;
};

// Checks every structural invariant (unique ids, resolvable references,
// bound ordering, convex costs, consistent contingency sets). Throws
// ValidationError naming the offending element; throws IslandedError when
// the base network graph is disconnected.
void validate(const Grid& grid);

// Divides all power quantities (loads, generator limits, cost breakpoints,
// ratings) by baseMVA; marginal costs are rescaled to currency per p.u.
// Voltages and admittances are already per-unit and stay untouched.
Grid to_per_unit(const Grid& grid);
Grid from_per_unit(const Grid& grid);

enum class ContingencySelection {
  kExplicit,
  kAllBranches,
  kAllGenerators,
  kAllN1,
};

struct ContingencySpec {
  ContingencySelection selection = ContingencySelection::kAllN1;
  // for kExplicit: (kind, element id) pairs
  std::vector<std::pair<OutageKind, int>> elements;
};

// Builds one contingency per selected element. Active sets exclude the
// outaged element; the participating set defaults to all surviving
// generators with alpha > 0.
std::vector<Contingency> enumerate_contingencies(const Grid& grid,
                                                 const ContingencySpec& spec);

Contingency make_contingency(const Grid& grid, int id, OutageKind kind,
                             int element);

// True when removing the contingency's element disconnects the surviving
// network (such contingencies are skipped by the solve, with a warning).
bool is_islanding(const Grid& grid, const Contingency& ctg);

bool is_connected(const Grid& grid);

}  // namespace scopf
