#include "scopf/case_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace scopf {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ParseError(path + ": unknown key '" + it.key() + "'");
    }
  }
}

double get_number(const json& obj, const std::string& key,
                  const std::string& path) {
  if (!obj.contains(key)) throw ParseError(path + ": missing key '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) throw ParseError(path + "." + key + ": expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ParseError(path + ": missing key '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ParseError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& path) {
  if (!obj.contains(key)) throw ParseError(path + ": missing key '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_string()) throw ParseError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& key,
                      const std::string& path) {
  if (!obj.contains(key)) throw ParseError(path + ": missing key '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array()) throw ParseError(path + "." + key + ": expected an array");
  return v;
}

}  // namespace

Grid parse_case(const std::string& bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed case document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level must be an object");
  reject_unknown_keys(doc,
                      {"baseMVA", "buses", "generators", "lines",
                       "transformers", "contingencies"},
                      "case");

  Grid grid;
  if (!doc.contains("baseMVA") || !doc.at("baseMVA").is_number()) {
    throw ParseError("case: missing numeric key 'baseMVA'");
  }
  grid.baseMVA = doc.at("baseMVA").get<double>();
  if (grid.baseMVA <= 0.0) throw ParseError("case.baseMVA: must be positive");

  int i = 0;
  for (const json& jb : get_array(doc, "buses", "case")) {
    std::string path = "buses[" + std::to_string(i++) + "]";
    reject_unknown_keys(jb,
                        {"id", "gFS", "bFS", "vminBase", "vmaxBase", "vminCtg",
                         "vmaxCtg", "pLoad", "qLoad"},
                        path);
    Bus b;
    b.id = get_int(jb, "id", path);
    b.gFS = get_number(jb, "gFS", path);
    b.bFS = get_number(jb, "bFS", path);
    b.vminBase = get_number(jb, "vminBase", path);
    b.vmaxBase = get_number(jb, "vmaxBase", path);
    b.vminCtg = get_number(jb, "vminCtg", path);
    b.vmaxCtg = get_number(jb, "vmaxCtg", path);
    b.pLoad = get_number(jb, "pLoad", path);
    b.qLoad = get_number(jb, "qLoad", path);
    grid.buses.push_back(b);
  }

  i = 0;
  for (const json& jg : get_array(doc, "generators", "case")) {
    std::string path = "generators[" + std::to_string(i++) + "]";
    reject_unknown_keys(
        jg, {"id", "bus", "pmin", "pmax", "qmin", "qmax", "alpha", "cost"},
        path);
    Generator g;
    g.id = get_int(jg, "id", path);
    g.bus = get_int(jg, "bus", path);
    g.pmin = get_number(jg, "pmin", path);
    g.pmax = get_number(jg, "pmax", path);
    g.qmin = get_number(jg, "qmin", path);
    g.qmax = get_number(jg, "qmax", path);
    g.alpha = get_number(jg, "alpha", path);
    int j = 0;
    for (const json& js : get_array(jg, "cost", path)) {
      std::string spath = path + ".cost[" + std::to_string(j++) + "]";
      reject_unknown_keys(js, {"breakpoint", "marginal"}, spath);
      CostSegment s;
      s.breakpoint = get_number(js, "breakpoint", spath);
      s.marginal = get_number(js, "marginal", spath);
      g.cost.push_back(s);
    }
    grid.generators.push_back(g);
  }

  i = 0;
  for (const json& jl : get_array(doc, "lines", "case")) {
    std::string path = "lines[" + std::to_string(i++) + "]";
    reject_unknown_keys(
        jl, {"id", "from", "to", "g", "b", "bch", "ratingBase", "ratingCtg"},
        path);
    Line l;
    l.id = get_int(jl, "id", path);
    l.from = get_int(jl, "from", path);
    l.to = get_int(jl, "to", path);
    l.g = get_number(jl, "g", path);
    l.b = get_number(jl, "b", path);
    l.bch = get_number(jl, "bch", path);
    l.ratingBase = get_number(jl, "ratingBase", path);
    l.ratingCtg = get_number(jl, "ratingCtg", path);
    grid.lines.push_back(l);
  }

  i = 0;
  for (const json& jt : get_array(doc, "transformers", "case")) {
    std::string path = "transformers[" + std::to_string(i++) + "]";
    reject_unknown_keys(jt,
                        {"id", "from", "to", "g", "b", "gM", "bM", "tau", "tr",
                         "ti", "tm", "ratingBase", "ratingCtg"},
                        path);
    Transformer t;
    t.id = get_int(jt, "id", path);
    t.from = get_int(jt, "from", path);
    t.to = get_int(jt, "to", path);
    t.g = get_number(jt, "g", path);
    t.b = get_number(jt, "b", path);
    t.gM = get_number(jt, "gM", path);
    t.bM = get_number(jt, "bM", path);
    t.tau = get_number(jt, "tau", path);
    t.tr = get_number(jt, "tr", path);
    t.ti = get_number(jt, "ti", path);
    t.tm = get_number(jt, "tm", path);
    t.ratingBase = get_number(jt, "ratingBase", path);
    t.ratingCtg = get_number(jt, "ratingCtg", path);
    grid.transformers.push_back(t);
  }

  i = 0;
  for (const json& jc : get_array(doc, "contingencies", "case")) {
    std::string path = "contingencies[" + std::to_string(i++) + "]";
    reject_unknown_keys(jc, {"id", "kind", "element"}, path);
    int id = get_int(jc, "id", path);
    OutageKind kind = outage_kind_from_string(get_string(jc, "kind", path));
    int element = get_int(jc, "element", path);
    try {
      grid.contingencies.push_back(make_contingency(grid, id, kind, element));
    } catch (const ValidationError& e) {
      throw ParseError(path + ": " + e.what());
    }
  }

  Grid pu = to_per_unit(grid);
  validate(pu);
  return pu;
}

std::string serialize_case(const Grid& per_unit_grid) {
  Grid grid = from_per_unit(per_unit_grid);
  json doc;
  doc["baseMVA"] = grid.baseMVA;
  doc["buses"] = json::array();
  for (const Bus& b : grid.buses) {
    doc["buses"].push_back({{"id", b.id},
                            {"gFS", b.gFS},
                            {"bFS", b.bFS},
                            {"vminBase", b.vminBase},
                            {"vmaxBase", b.vmaxBase},
                            {"vminCtg", b.vminCtg},
                            {"vmaxCtg", b.vmaxCtg},
                            {"pLoad", b.pLoad},
                            {"qLoad", b.qLoad}});
  }
  doc["generators"] = json::array();
  for (const Generator& g : grid.generators) {
    json cost = json::array();
    for (const CostSegment& s : g.cost) {
      cost.push_back({{"breakpoint", s.breakpoint}, {"marginal", s.marginal}});
    }
    doc["generators"].push_back({{"id", g.id},
                                 {"bus", g.bus},
                                 {"pmin", g.pmin},
                                 {"pmax", g.pmax},
                                 {"qmin", g.qmin},
                                 {"qmax", g.qmax},
                                 {"alpha", g.alpha},
                                 {"cost", cost}});
  }
  doc["lines"] = json::array();
  for (const Line& l : grid.lines) {
    doc["lines"].push_back({{"id", l.id},
                            {"from", l.from},
                            {"to", l.to},
                            {"g", l.g},
                            {"b", l.b},
                            {"bch", l.bch},
                            {"ratingBase", l.ratingBase},
                            {"ratingCtg", l.ratingCtg}});
  }
  doc["transformers"] = json::array();
  for (const Transformer& t : grid.transformers) {
    doc["transformers"].push_back({{"id", t.id},
                                   {"from", t.from},
                                   {"to", t.to},
                                   {"g", t.g},
                                   {"b", t.b},
                                   {"gM", t.gM},
                                   {"bM", t.bM},
                                   {"tau", t.tau},
                                   {"tr", t.tr},
                                   {"ti", t.ti},
                                   {"tm", t.tm},
                                   {"ratingBase", t.ratingBase},
                                   {"ratingCtg", t.ratingCtg}});
  }
  doc["contingencies"] = json::array();
  for (const Contingency& c : grid.contingencies) {
    doc["contingencies"].push_back(
        {{"id", c.id}, {"kind", to_string(c.kind)}, {"element", c.element}});
  }
  return doc.dump(2) + "\n";
}

Grid load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open case file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

}  // namespace scopf
