#include "scopf/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace scopf {

using ordered_json = nlohmann::ordered_json;

std::string format_thousands(double value, int decimals) {
  std::ostringstream raw;
  raw << std::fixed << std::setprecision(decimals) << value;
  std::string s = raw.str();
  bool neg = !s.empty() && s[0] == '-';
  size_t start = neg ? 1 : 0;
  size_t dot = s.find('.');
  if (dot == std::string::npos) dot = s.size();
  std::string out;
  for (size_t i = start; i < dot; ++i) {
    size_t remaining = dot - i;
    out += s[i];
    if (remaining > 1 && (remaining - 1) % 3 == 0) out += ',';
  }
  out += s.substr(dot);
  return (neg ? "-" : "") + out;
}

SCOPFReport make_report(const Grid& grid, const ScopfOutcome& outcome) {
  SCOPFReport rep;
  rep.status = to_string(outcome.status);
  rep.iterations = outcome.ledger;
  rep.timing = outcome.timing;
  rep.warnings = outcome.warnings;
  // columns cover the contingencies that were actually evaluated
  for (const SubproblemResult& r : outcome.contingencyResults) {
    rep.contingencyIds.push_back(r.contingency);
  }
  std::sort(rep.contingencyIds.begin(), rep.contingencyIds.end());
  if (!outcome.ledger.empty()) {
    rep.objective = outcome.ledger.back().objective;
    rep.zLower = outcome.ledger.back().zLower;
    rep.zUpper = outcome.ledger.back().zUpper;
  }
  if (outcome.status == RunStatus::kInfeasible) return rep;

  const double base = grid.baseMVA;
  std::map<int, const SubproblemResult*> byId;
  for (const SubproblemResult& r : outcome.contingencyResults) {
    byId[r.contingency] = &r;
  }

  for (const Bus& b : grid.buses) {
    VoltageRow row;
    row.bus = b.id;
    row.u = std::sqrt(std::max(0.0, outcome.base.lifted.self(b.id)));
    for (int k : rep.contingencyIds) {
      const SubproblemResult* r = byId.at(k);
      row.uk.push_back(std::sqrt(std::max(0.0, r->liftedK.self(b.id))));
    }
    for (const Generator& g : grid.generators) {
      if (g.bus == b.id) row.generators.push_back(g.id);
    }
    rep.voltages.push_back(row);
  }

  for (const Generator& g : grid.generators) {
    AgcRow row;
    row.gen = g.id;
    row.bus = g.bus;
    row.p = outcome.base.pGen.at(g.id) * base;
    row.q = outcome.base.qGen.at(g.id) * base;
    for (int k : rep.contingencyIds) {
      const SubproblemResult* r = byId.at(k);
      row.pk.push_back(r->pDispatch.at(g.id) * base);
      row.qk.push_back(r->qDispatch.at(g.id) * base);
    }
    row.pmin = g.pmin * base;
    row.pmax = g.pmax * base;
    row.qmin = g.qmin * base;
    row.qmax = g.qmax * base;
    row.alpha = g.alpha;
    rep.agc.push_back(row);
  }

  for (const auto& [pair, t] : tightness(outcome.base.lifted)) {
    rep.tightness.push_back({pair.first, pair.second, t});
  }

  for (int k : rep.contingencyIds) {
    const SubproblemResult* r = byId.at(k);
    auto find_ctg = [&]() -> const Contingency& {
      for (const Contingency& c : grid.contingencies) {
        if (c.id == k) return c;
      }
      throw ReportError("contingency " + std::to_string(k) + " not in grid");
    };
    const Contingency& c = find_ctg();
    ContingencySummary s;
    s.id = k;
    s.kind = to_string(c.kind);
    s.element = c.element;
    s.mismatchCost = r->mismatchCost;
    s.delta = r->delta * base;
    rep.contingencies.push_back(s);
  }
  return rep;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "text") return ReportFormat::kText;
  throw ReportError("unknown report format '" + s + "'");
}

namespace {

ordered_json ledger_to_json(const std::vector<IterationRecord>& ledger) {
  ordered_json arr = ordered_json::array();
  for (const IterationRecord& r : ledger) {
    ordered_json row;
    row["n"] = r.iteration;
    if (r.evaluated) {
      row["violations"] = r.violations;
      row["mismatch"] = r.totalMismatch;
      row["zUpper"] = r.zUpper;
    } else {
      row["violations"] = nullptr;
      row["mismatch"] = nullptr;
      row["zUpper"] = nullptr;
    }
    row["objective"] = r.objective;
    row["zLower"] = r.zLower;
    arr.push_back(row);
  }
  return arr;
}

std::string render_json(const SCOPFReport& rep, bool includeTiming) {
  ordered_json doc;
  doc["status"] = rep.status;
  doc["objective"] = rep.objective;
  doc["zLower"] = rep.zLower;
  doc["zUpper"] = rep.zUpper;
  doc["contingencyIds"] = rep.contingencyIds;
  doc["iterations"] = ledger_to_json(rep.iterations);
  doc["voltages"] = ordered_json::array();
  for (const VoltageRow& r : rep.voltages) {
    doc["voltages"].push_back({{"bus", r.bus},
                               {"u", r.u},
                               {"uk", r.uk},
                               {"generators", r.generators}});
  }
  doc["agc"] = ordered_json::array();
  for (const AgcRow& r : rep.agc) {
    doc["agc"].push_back({{"gen", r.gen},
                          {"bus", r.bus},
                          {"p", r.p},
                          {"q", r.q},
                          {"pk", r.pk},
                          {"qk", r.qk},
                          {"pmin", r.pmin},
                          {"pmax", r.pmax},
                          {"qmin", r.qmin},
                          {"qmax", r.qmax},
                          {"alpha", r.alpha}});
  }
  doc["tightness"] = ordered_json::array();
  for (const TightnessRow& r : rep.tightness) {
    doc["tightness"].push_back({{"i", r.i}, {"j", r.j}, {"T", r.t}});
  }
  doc["contingencies"] = ordered_json::array();
  for (const ContingencySummary& s : rep.contingencies) {
    doc["contingencies"].push_back({{"id", s.id},
                                    {"kind", s.kind},
                                    {"element", s.element},
                                    {"mismatchCost", s.mismatchCost},
                                    {"delta", s.delta}});
  }
  if (includeTiming) {
    doc["timing"] = {{"parseSeconds", rep.timing.parseSeconds},
                     {"masterSeconds", rep.timing.masterSeconds},
                     {"subproblemSeconds", rep.timing.subproblemSeconds},
                     {"totalSeconds", rep.timing.totalSeconds}};
  }
  doc["warnings"] = rep.warnings;
  return doc.dump(2) + "\n";
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

void pad(std::ostringstream& os, const std::string& s, size_t width) {
  os << s;
  for (size_t i = s.size(); i < width; ++i) os << ' ';
  os << ' ';
}

std::string render_text(const SCOPFReport& rep, bool includeTiming) {
  std::ostringstream os;
  os << "Status: " << rep.status << "\n";
  os << "Objective [$]: " << format_thousands(rep.objective, 1) << "\n";
  os << "z_lower [$]: " << format_thousands(rep.zLower, 1)
     << "   z_upper [$]: " << format_thousands(rep.zUpper, 1) << "\n\n";

  if (!rep.voltages.empty()) {
    os << "Bus Voltages during Base and Contingency Cases\n";
    std::ostringstream hdr;
    pad(hdr, "Bus Index", 10);
    pad(hdr, "u_i", 8);
    for (size_t k = 0; k < rep.contingencyIds.size(); ++k) {
      pad(hdr, "u_i" + std::to_string(k + 1), 8);
    }
    pad(hdr, "Generator Index", 15);
    os << hdr.str() << "\n";
    for (const VoltageRow& r : rep.voltages) {
      std::ostringstream row;
      pad(row, std::to_string(r.bus), 10);
      pad(row, fixed(r.u, 3), 8);
      for (double u : r.uk) pad(row, fixed(u, 3), 8);
      std::string gens = "-";
      if (!r.generators.empty()) {
        gens.clear();
        for (size_t i = 0; i < r.generators.size(); ++i) {
          if (i) gens += ",";
          gens += std::to_string(r.generators[i]);
        }
      }
      pad(row, gens, 15);
      os << row.str() << "\n";
    }
    os << "\n";
  }

  if (!rep.agc.empty()) {
    os << "Automatic Generation Control Response during a Contingency\n";
    std::ostringstream hdr;
    pad(hdr, "Generator Index", 16);
    for (const AgcRow& r : rep.agc) pad(hdr, std::to_string(r.gen), 10);
    os << hdr.str() << "\n";
    auto row_of = [&](const std::string& label, auto getter, int decimals) {
      std::ostringstream row;
      pad(row, label, 16);
      for (const AgcRow& r : rep.agc) pad(row, fixed(getter(r), decimals), 10);
      os << row.str() << "\n";
    };
    row_of("p_g", [](const AgcRow& r) { return r.p; }, 2);
    row_of("q_g", [](const AgcRow& r) { return r.q; }, 2);
    for (size_t k = 0; k < rep.contingencyIds.size(); ++k) {
      row_of("p_g" + std::to_string(k + 1),
             [k](const AgcRow& r) { return r.pk[k]; }, 2);
      row_of("q_g" + std::to_string(k + 1),
             [k](const AgcRow& r) { return r.qk[k]; }, 2);
    }
    row_of("p_min", [](const AgcRow& r) { return r.pmin; }, 2);
    row_of("p_max", [](const AgcRow& r) { return r.pmax; }, 2);
    row_of("q_min", [](const AgcRow& r) { return r.qmin; }, 2);
    row_of("q_max", [](const AgcRow& r) { return r.qmax; }, 2);
    row_of("alpha", [](const AgcRow& r) { return r.alpha; }, 2);
    os << "\n";
  }

  if (!rep.tightness.empty()) {
    os << "Tightness Measure of Bus-pairs\n";
    std::ostringstream hdr;
    pad(hdr, "Bus-pair", 10);
    pad(hdr, "T_ij", 9);
    os << hdr.str() << "\n";
    for (const TightnessRow& r : rep.tightness) {
      std::ostringstream row;
      pad(row, "(" + std::to_string(r.i) + "," + std::to_string(r.j) + ")", 10);
      pad(row, fixed(r.t, 4), 9);
      os << row.str() << "\n";
    }
    os << "\n";
  }

  os << "Iterations [n]  Violations  Objective [$]   Mismatch\n";
  for (const IterationRecord& r : rep.iterations) {
    std::ostringstream row;
    pad(row, std::to_string(r.iteration), 14);
    pad(row, r.evaluated ? std::to_string(r.violations) : "-", 10);
    pad(row, format_thousands(r.objective, 1), 14);
    pad(row, r.evaluated ? format_thousands(r.totalMismatch, 1) : "-", 10);
    os << row.str() << "\n";
  }

  if (includeTiming) {
    os << "\nTiming [s]: master " << fixed(rep.timing.masterSeconds, 3)
       << ", sub-problems " << fixed(rep.timing.subproblemSeconds, 3)
       << ", total " << fixed(rep.timing.totalSeconds, 3) << "\n";
  }
  if (!rep.warnings.empty()) {
    os << "\nWarnings:\n";
    for (const std::string& w : rep.warnings) os << "  " << w << "\n";
  }
  return os.str();
}

std::string render_csv(const SCOPFReport& rep, bool includeTiming) {
  std::ostringstream os;
  os << "table,status\nstatus,objective,zLower,zUpper\n";
  os << rep.status << "," << fixed(rep.objective, 6) << ","
     << fixed(rep.zLower, 6) << "," << fixed(rep.zUpper, 6) << "\n\n";

  os << "table,voltages\nbus,u";
  for (size_t k = 0; k < rep.contingencyIds.size(); ++k) os << ",u" << (k + 1);
  os << ",generators\n";
  for (const VoltageRow& r : rep.voltages) {
    os << r.bus << "," << fixed(r.u, 6);
    for (double u : r.uk) os << "," << fixed(u, 6);
    os << ",";
    for (size_t i = 0; i < r.generators.size(); ++i) {
      if (i) os << ";";
      os << r.generators[i];
    }
    os << "\n";
  }
  os << "\n";

  os << "table,agc\ngen,bus,p,q";
  for (size_t k = 0; k < rep.contingencyIds.size(); ++k) {
    os << ",p" << (k + 1) << ",q" << (k + 1);
  }
  os << ",pmin,pmax,qmin,qmax,alpha\n";
  for (const AgcRow& r : rep.agc) {
    os << r.gen << "," << r.bus << "," << fixed(r.p, 6) << "," << fixed(r.q, 6);
    for (size_t k = 0; k < r.pk.size(); ++k) {
      os << "," << fixed(r.pk[k], 6) << "," << fixed(r.qk[k], 6);
    }
    os << "," << fixed(r.pmin, 6) << "," << fixed(r.pmax, 6) << ","
       << fixed(r.qmin, 6) << "," << fixed(r.qmax, 6) << ","
       << fixed(r.alpha, 6) << "\n";
  }
  os << "\n";

  os << "table,tightness\ni,j,T\n";
  for (const TightnessRow& r : rep.tightness) {
    os << r.i << "," << r.j << "," << fixed(r.t, 6) << "\n";
  }
  os << "\n";

  os << "table,iterations\nn,violations,objective,mismatch,zLower,zUpper\n";
  for (const IterationRecord& r : rep.iterations) {
    os << r.iteration << ",";
    if (r.evaluated) os << r.violations;
    os << "," << fixed(r.objective, 6) << ",";
    if (r.evaluated) os << fixed(r.totalMismatch, 6);
    os << "," << fixed(r.zLower, 6) << ",";
    if (r.evaluated) os << fixed(r.zUpper, 6);
    os << "\n";
  }

  if (includeTiming) {
    os << "\ntable,timing\nmasterSeconds,subproblemSeconds,totalSeconds\n";
    os << fixed(rep.timing.masterSeconds, 6) << ","
       << fixed(rep.timing.subproblemSeconds, 6) << ","
       << fixed(rep.timing.totalSeconds, 6) << "\n";
  }
  return os.str();
}

}  // namespace

std::string render_report(const SCOPFReport& rep, ReportFormat format,
                          bool includeTiming) {
  switch (format) {
    case ReportFormat::kJson:
      return render_json(rep, includeTiming);
    case ReportFormat::kCsv:
      return render_csv(rep, includeTiming);
    case ReportFormat::kText:
      return render_text(rep, includeTiming);
  }
  throw ReportError("unknown report format");
}

SCOPFReport parse_report_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ReportError(std::string("malformed report: ") + e.what());
  }
  SCOPFReport rep;
  rep.status = doc.at("status").get<std::string>();
  rep.objective = doc.at("objective").get<double>();
  rep.zLower = doc.at("zLower").get<double>();
  rep.zUpper = doc.at("zUpper").get<double>();
  rep.contingencyIds = doc.at("contingencyIds").get<std::vector<int>>();
  for (const auto& row : doc.at("iterations")) {
    IterationRecord r;
    r.iteration = row.at("n").get<int>();
    r.evaluated = !row.at("violations").is_null();
    if (r.evaluated) {
      r.violations = row.at("violations").get<int>();
      r.totalMismatch = row.at("mismatch").get<double>();
      r.zUpper = row.at("zUpper").get<double>();
    }
    r.objective = row.at("objective").get<double>();
    r.zLower = row.at("zLower").get<double>();
    rep.iterations.push_back(r);
  }
  for (const auto& row : doc.at("voltages")) {
    VoltageRow r;
    r.bus = row.at("bus").get<int>();
    r.u = row.at("u").get<double>();
    r.uk = row.at("uk").get<std::vector<double>>();
    r.generators = row.at("generators").get<std::vector<int>>();
    rep.voltages.push_back(r);
  }
  for (const auto& row : doc.at("agc")) {
    AgcRow r;
    r.gen = row.at("gen").get<int>();
    r.bus = row.at("bus").get<int>();
    r.p = row.at("p").get<double>();
    r.q = row.at("q").get<double>();
    r.pk = row.at("pk").get<std::vector<double>>();
    r.qk = row.at("qk").get<std::vector<double>>();
    r.pmin = row.at("pmin").get<double>();
    r.pmax = row.at("pmax").get<double>();
    r.qmin = row.at("qmin").get<double>();
    r.qmax = row.at("qmax").get<double>();
    r.alpha = row.at("alpha").get<double>();
    rep.agc.push_back(r);
  }
  for (const auto& row : doc.at("tightness")) {
    rep.tightness.push_back({row.at("i").get<int>(), row.at("j").get<int>(),
                             row.at("T").get<double>()});
  }
  for (const auto& row : doc.at("contingencies")) {
    ContingencySummary s;
    s.id = row.at("id").get<int>();
    s.kind = row.at("kind").get<std::string>();
    s.element = row.at("element").get<int>();
    s.mismatchCost = row.at("mismatchCost").get<double>();
    s.delta = row.at("delta").get<double>();
    rep.contingencies.push_back(s);
  }
  if (doc.contains("timing")) {
    rep.timing.parseSeconds = doc["timing"].at("parseSeconds").get<double>();
    rep.timing.masterSeconds = doc["timing"].at("masterSeconds").get<double>();
    rep.timing.subproblemSeconds =
        doc["timing"].at("subproblemSeconds").get<double>();
    rep.timing.totalSeconds = doc["timing"].at("totalSeconds").get<double>();
  }
  rep.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return rep;
}

}  // namespace scopf
