#pragma once

#include <string>
#include <vector>

#include "scopf/benders.hpp"
#include "scopf/grid.hpp"

namespace scopf {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VoltageRow {
  int bus = 0;
  double u = 0.0;               // base magnitude (p.u.)
  std::vector<double> uk;       // one column per evaluated contingency
  std::vector<int> generators;  // generator ids at this bus
};

struct AgcRow {
  int gen = 0;
  int bus = 0;
  double p = 0.0, q = 0.0;  // base dispatch (MW / MVAr)
  std::vector<double> pk, qk;
  double pmin = 0.0, pmax = 0.0, qmin = 0.0, qmax = 0.0;
  double alpha = 0.0;
};

struct TightnessRow {
  int i = 0, j = 0;
  double t = 0.0;
};

struct ContingencySummary {
  int id = 0;
  std::string kind;
  int element = 0;
  double mismatchCost = 0.0;
  double delta = 0.0;  // MW
};

struct SCOPFReport {
  std::string status;
  double objective = 0.0;
  double zLower = 0.0, zUpper = 0.0;
  std::vector<int> contingencyIds;  // column order of uk/pk/qk
  std::vector<VoltageRow> voltages;
  std::vector<AgcRow> agc;
  std::vector<TightnessRow> tightness;
  std::vector<IterationRecord> iterations;
  std::vector<ContingencySummary> contingencies;
  PhaseTiming timing;
  std::vector<std::string> warnings;
};

SCOPFReport make_report(const Grid& grid, const ScopfOutcome& outcome);

enum class ReportFormat { kJson, kCsv, kText };
ReportFormat report_format_from_string(const std::string& s);

// All render paths reuse the in-memory values verbatim (format rounding
// only). Text and csv tables are byte-stable across runs and worker counts;
// the timing block is the only environment-dependent part and can be left
// out for golden comparisons.
std::string render_report(const SCOPFReport& report, ReportFormat format,
                          bool includeTiming = true);

SCOPFReport parse_report_json(const std::string& text);

// "73,491.5" style: thousands separators, fixed decimals.
std::string format_thousands(double value, int decimals);

}  // namespace scopf
