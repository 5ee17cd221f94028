// emits random SOCPs as JSON and solves them with the project solver
#include <cstdio>
#include <random>
#include <json.hpp>
#include "scopf/conic.hpp"
using namespace scopf;
using nlohmann::json;

int main() {
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  json out = json::array();
  for (int trial = 0; trial < 20; ++trial) {
    int n = 6 + trial % 5;
    ProblemBuilder b;
    json jp;
    jp["n"] = n;
    jp["lo"] = json::array();
    jp["up"] = json::array();
    for (int j = 0; j < n; ++j) {
      double lo = -2.0 - std::abs(U(rng)), up = 2.0 + std::abs(U(rng));
      b.add_variable("x" + std::to_string(j), lo, up);
      jp["lo"].push_back(lo);
      jp["up"].push_back(up);
    }
    LinExpr obj;
    jp["c"] = json::array();
    for (int j = 0; j < n; ++j) {
      double c = U(rng);
      obj.add(j, c);
      jp["c"].push_back(c);
    }
    b.set_objective(obj);
    jp["eq"] = json::array();
    for (int r = 0; r < 2; ++r) {
      LinExpr e;
      json row;
      row["a"] = json::array();
      for (int j = 0; j < n; ++j) {
        double a = U(rng);
        e.add(j, a);
        row["a"].push_back(a);
      }
      double rhs = 0.3 * U(rng);
      e.add_constant(-rhs);
      row["rhs"] = rhs;
      b.add_equality(e);
      jp["eq"].push_back(row);
    }
    jp["ineq"] = json::array();
    for (int r = 0; r < 3; ++r) {
      LinExpr e;
      json row;
      row["a"] = json::array();
      for (int j = 0; j < n; ++j) {
        double a = U(rng);
        e.add(j, a);
        row["a"].push_back(a);
      }
      double rhs = 1.0 + std::abs(U(rng));
      e.add_constant(-rhs);
      row["rhs"] = rhs;
      b.add_inequality(e);
      jp["ineq"].push_back(row);
    }
    jp["soc"] = json::array();
    for (int r = 0; r < 2; ++r) {
      std::vector<LinExpr> v;
      json cone;
      cone["rows"] = json::array();
      for (int k = 0; k < 2 + r; ++k) {
        LinExpr e;
        json row;
        row["a"] = json::array();
        for (int j = 0; j < n; ++j) {
          double a = 0.4 * U(rng);
          e.add(j, a);
          row["a"].push_back(a);
        }
        double c0 = 0.2 * U(rng);
        e.add_constant(c0);
        row["const"] = c0;
        cone["rows"].push_back(row);
        v.push_back(e);
      }
      LinExpr t(3.0 + std::abs(U(rng)));
      json trow;
      trow["a"] = json::array();
      for (int j = 0; j < n; ++j) trow["a"].push_back(0.0);
      // add a small variable part to the rhs
      t.add(trial % n, 0.1);
      trow["a"][trial % n] = 0.1;
      trow["const"] = t.constant();
      cone["t"] = trow;
      jp["soc"].push_back(cone);
      b.add_soc(v, t);
    }
    auto sol = solve(b.build(), 1e-9, 300);
    jp["status"] = to_string(sol.status);
    jp["objective"] = sol.optimal() ? sol.objective_value : 0.0;
    out.push_back(jp);
  }
  std::printf("%s\n", out.dump().c_str());
  return 0;
}
