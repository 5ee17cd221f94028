#include <doctest.h>

#include <random>
#include <sstream>

#include "scopf/conic.hpp"
#include "support/oracles.hpp"

using namespace scopf;

namespace {

ConicProblem norm_problem() {
  ProblemBuilder b;
  int c = b.add_variable("c");
  b.set_objective(LinExpr::term(c, 1.0));
  b.add_soc({LinExpr(3.0), LinExpr(4.0)}, LinExpr::term(c), "norm34");
  return b.build();
}

// random LP with box bounds and a few inequality rows, bounded by design
struct RandomLp {
  ConicProblem problem;
  Eigen::MatrixXd G;
  Eigen::VectorXd h, lo, up, c;
  std::vector<int> ineqHandles;
  std::vector<int> eqHandles;
};

RandomLp random_lp(std::mt19937& rng, int n = 5, int rows = 4, int eqs = 0) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  RandomLp lp;
  ProblemBuilder b;
  lp.lo = Eigen::VectorXd::Constant(n, -2.0);
  lp.up = Eigen::VectorXd::Constant(n, 2.0);
  for (int j = 0; j < n; ++j) {
    b.add_variable("x" + std::to_string(j), lp.lo[j], lp.up[j]);
  }
  lp.c.resize(n);
  LinExpr obj;
  for (int j = 0; j < n; ++j) {
    lp.c[j] = U(rng);
    obj.add(j, lp.c[j]);
  }
  b.set_objective(obj);
  lp.G.resize(rows, n);
  lp.h.resize(rows);
  for (int i = 0; i < rows; ++i) {
    LinExpr e;
    for (int j = 0; j < n; ++j) {
      lp.G(i, j) = U(rng);
      e.add(j, lp.G(i, j));
    }
    lp.h[i] = 1.0 + std::abs(U(rng));  // keeps the origin feasible
    e.add_constant(-lp.h[i]);
    lp.ineqHandles.push_back(b.add_inequality(e));
  }
  for (int i = 0; i < eqs; ++i) {
    LinExpr e;
    for (int j = 0; j < n; ++j) e.add(j, U(rng));
    e.add_constant(-0.1 * U(rng));
    lp.eqHandles.push_back(b.add_equality(e));
  }
  lp.problem = b.build();
  return lp;
}

}  // namespace

TEST_CASE("euclidean norm cone solves to 5") {
  ConicSolution sol = solve(norm_problem());
  REQUIRE(sol.optimal());
  CHECK(sol.objective_value == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("active lower bound carries unit dual") {
  ProblemBuilder b;
  int x = b.add_variable("x", 1.0, kInf);
  b.set_objective(LinExpr::term(x, 1.0));
  ConicSolution sol = solve(b.build());
  REQUIRE(sol.optimal());
  CHECK(sol.primal[x] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.dual_lower[x] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("equality dual is the objective gradient w.r.t. the rhs") {
  ProblemBuilder b;
  int x = b.add_variable("x");
  b.set_objective(LinExpr::term(x, 1.0));
  int eq = b.add_equality(LinExpr::term(x, 1.0).add_constant(-2.0), "pin");
  ConicSolution sol = solve(b.build());
  REQUIRE(sol.optimal());
  CHECK(sol.objective_value == doctest::Approx(2.0));
  CHECK(sol.dual_eq[eq] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("redundant bound gets zero dual by complementary slackness") {
  ProblemBuilder b;
  int x = b.add_variable("x", 0.0, kInf);
  b.add_inequality(LinExpr(1.0).add(x, -1.0), "x>=1");  // 1 - x <= 0
  b.set_objective(LinExpr::term(x, 1.0));
  ConicSolution sol = solve(b.build());
  REQUIRE(sol.optimal());
  CHECK(sol.dual_ineq[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(sol.dual_lower[x]) < 1e-6);
}

TEST_CASE("status trichotomy: infeasible and unbounded certificates") {
  {
    ProblemBuilder b;
    int x = b.add_variable("x", 1.0, kInf);
    b.add_inequality(LinExpr::term(x, 1.0), "x<=0");
    b.set_objective(LinExpr::term(x, 1.0));
    CHECK(solve(b.build()).status == SolveStatus::kInfeasible);
  }
  {
    ProblemBuilder b;
    int x = b.add_variable("x", 0.0, kInf);
    b.set_objective(LinExpr::term(x, -1.0));
    CHECK(solve(b.build()).status == SolveStatus::kUnbounded);
  }
}

TEST_CASE("random LPs match the vertex-enumeration oracle") {
  std::mt19937 rng(20240901);
  for (int trial = 0; trial < 10; ++trial) {
    RandomLp lp = random_lp(rng);
    ConicSolution sol = solve(lp.problem, 1e-9, 200);
    REQUIRE(sol.optimal());
    double expected =
        testing::vertex_enumeration_lp(lp.G, lp.h, lp.lo, lp.up, lp.c);
    CHECK(sol.objective_value == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("equality duals predict objective change under rhs perturbation") {
  std::mt19937 rng(7);
  RandomLp lp = random_lp(rng, 5, 3, 2);
  ConicSolution sol = solve(lp.problem, 1e-10, 200);
  REQUIRE(sol.optimal());
  const double step = 1e-4;
  for (int k = 0; k < static_cast<int>(lp.eqHandles.size()); ++k) {
    ProblemBuilder b;
    for (int j = 0; j < lp.problem.num_vars(); ++j) {
      b.add_variable(lp.problem.var_names()[j], lp.problem.bounds()[j].lower,
                     lp.problem.bounds()[j].upper);
    }
    LinExpr obj;
    for (int j = 0; j < lp.problem.num_vars(); ++j) {
      obj.add(j, lp.problem.objective()[j]);
    }
    b.set_objective(obj);
    for (size_t i = 0; i < lp.problem.inequalities().size(); ++i) {
      b.add_inequality(lp.problem.inequalities()[i]);
    }
    for (size_t i = 0; i < lp.problem.equalities().size(); ++i) {
      LinExpr e = lp.problem.equalities()[i];
      if (static_cast<int>(i) == lp.eqHandles[k]) {
        e.add_constant(-step);  // rhs b -> b + step
      }
      b.add_equality(e);
    }
    ConicSolution pert = solve(b.build(), 1e-10, 200);
    REQUIRE(pert.optimal());
    double predicted = sol.dual_eq[lp.eqHandles[k]] * step;
    CHECK(std::abs((pert.objective_value - sol.objective_value) - predicted) <
          1e-5);
  }
}

TEST_CASE("weak duality and complementary slackness at optimum") {
  std::mt19937 rng(99);
  const double tol = 1e-9;
  for (int trial = 0; trial < 5; ++trial) {
    RandomLp lp = random_lp(rng);
    ConicSolution sol = solve(lp.problem, tol, 200);
    REQUIRE(sol.optimal());
    double comp = 0.0;
    for (size_t i = 0; i < lp.ineqHandles.size(); ++i) {
      double slack = -lp.problem.inequalities()[i].evaluate(sol.primal);
      CHECK(sol.dual_ineq[i] > -tol * 10);
      comp += sol.dual_ineq[i] * slack;
    }
    for (int j = 0; j < lp.problem.num_vars(); ++j) {
      comp += sol.dual_lower[j] * (sol.primal[j] - lp.lo[j]);
      comp += sol.dual_upper[j] * (lp.up[j] - sol.primal[j]);
    }
    CHECK(comp < 10 * tol * std::max(1.0, std::abs(sol.objective_value)) +
                     1e-8);
    // stationarity: c + G'mu - mu_lower + mu_upper = 0
    Eigen::VectorXd grad = lp.c;
    for (size_t i = 0; i < lp.ineqHandles.size(); ++i) {
      for (const LinTerm& t : lp.problem.inequalities()[i].terms()) {
        grad[t.var] += sol.dual_ineq[i] * t.coef;
      }
    }
    grad -= sol.dual_lower;
    grad += sol.dual_upper;
    CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("repeated solves are bitwise identical") {
  std::mt19937 rng(5);
  RandomLp lp = random_lp(rng);
  ConicSolution a = solve(lp.problem, 1e-8, 200);
  ConicSolution b2 = solve(lp.problem, 1e-8, 200);
  REQUIRE(a.optimal());
  CHECK(a.iterations == b2.iterations);
  REQUIRE(a.primal.size() == b2.primal.size());
  for (int j = 0; j < a.primal.size(); ++j) {
    CHECK(a.primal[j] == b2.primal[j]);  // exact equality intended
  }
}

TEST_CASE("iteration limit reports the best iterate") {
  ConicSolution sol = solve(norm_problem(), 1e-12, 2);
  CHECK(sol.status == SolveStatus::kIterationLimit);
  CHECK(std::isfinite(sol.objective_value));
}

TEST_CASE("builder rejects dangling references and freezes the problem") {
  ProblemBuilder b;
  b.add_variable("x");
  b.add_equality(LinExpr::term(3, 1.0), "bad");
  CHECK_THROWS_AS((void)b.build(), BuildError);

  ProblemBuilder ok;
  int x0 = ok.add_variable("x0", 1.0, kInf);
  ok.set_objective(LinExpr::term(x0, 1.0));
  ConicProblem p = ok.build();
  CHECK(p.num_vars() == 1);
  CHECK(p.socs().empty());

  ProblemBuilder soc;
  int t = soc.add_variable("t");
  int a = soc.add_variable("a");
  int c = soc.add_variable("c");
  soc.add_soc({LinExpr::term(a), LinExpr::term(c)}, LinExpr::term(t), "cone");
  ConicProblem sp = soc.build();
  REQUIRE(sp.socs().size() == 1);
  CHECK(sp.socs()[0].vec.size() + 1 == 3);  // cone dimension 3
}

TEST_CASE("dual extraction demands an optimal status") {
  ProblemBuilder b;
  int x = b.add_variable("x", 1.0, kInf);
  b.add_inequality(LinExpr::term(x, 1.0), "x<=0");
  b.set_objective(LinExpr::term(x, 1.0));
  ConicProblem p = b.build();
  ConicSolution sol = solve(p);
  CHECK_THROWS_AS(DualMap(p, sol), DualError);
}

TEST_CASE("problem dump is deterministic") {
  std::mt19937 rng(11);
  RandomLp lp = random_lp(rng);
  std::ostringstream a, b;
  lp.problem.dump(a);
  lp.problem.dump(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("ineq") != std::string::npos);
}
