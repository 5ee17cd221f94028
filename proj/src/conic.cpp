#include "scopf/conic.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace scopf {

void LinExpr::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> merged;
  merged.reserve(terms_.size());
  for (const LinTerm& t : terms_) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const LinTerm& t) { return t.coef == 0.0; }),
               merged.end());
  terms_ = std::move(merged);
}

double LinExpr::evaluate(const Eigen::VectorXd& x) const {
  double v = constant_;
  for (const LinTerm& t : terms_) v += t.coef * x[t.var];
  return v;
}

int LinExpr::max_var() const {
  int m = -1;
  for (const LinTerm& t : terms_) m = std::max(m, t.var);
  return m;
}

int ProblemBuilder::add_variable(const std::string& name, double lower,
                                 double upper) {
  if (lower > upper) {
    throw BuildError("variable '" + name + "' has lower bound above upper");
  }
  bounds_.push_back({lower, upper});
  names_.push_back(name);
  return static_cast<int>(bounds_.size()) - 1;
}

int ProblemBuilder::add_equality(LinExpr expr, const std::string& label) {
  expr.canonicalize();
  eq_.push_back(std::move(expr));
  eq_labels_.push_back(label);
  return static_cast<int>(eq_.size()) - 1;
}

int ProblemBuilder::add_inequality(LinExpr expr, const std::string& label) {
  expr.canonicalize();
  ineq_.push_back(std::move(expr));
  ineq_labels_.push_back(label);
  return static_cast<int>(ineq_.size()) - 1;
}

int ProblemBuilder::add_soc(std::vector<LinExpr> vec, LinExpr rhs,
                            const std::string& label) {
  for (LinExpr& e : vec) e.canonicalize();
  rhs.canonicalize();
  socs_.push_back({std::move(vec), std::move(rhs), label});
  return static_cast<int>(socs_.size()) - 1;
}

void ProblemBuilder::set_objective(LinExpr expr) {
  expr.canonicalize();
  objective_ = std::move(expr);
}

void ProblemBuilder::add_objective_term(int var, double coef) {
  objective_.add(var, coef);
}

void ProblemBuilder::add_objective_constant(double c) {
  objective_.add_constant(c);
}

namespace {

void check_refs(const LinExpr& e, int num_vars, const std::string& what) {
  for (const LinTerm& t : e.terms()) {
    if (t.var < 0 || t.var >= num_vars) {
      throw BuildError(what + " references unknown variable index " +
                       std::to_string(t.var));
    }
  }
}

}  // namespace

ConicProblem ProblemBuilder::build() const {
  const int n = num_vars();
  ConicProblem p;
  p.num_vars_ = n;
  p.bounds_ = bounds_;
  p.names_ = names_;
  p.eq_ = eq_;
  p.ineq_ = ineq_;
  p.socs_ = socs_;
  p.eq_labels_ = eq_labels_;
  p.ineq_labels_ = ineq_labels_;

  LinExpr obj = objective_;
  obj.canonicalize();
  check_refs(obj, n, "objective");
  p.objective_ = Eigen::VectorXd::Zero(n);
  for (const LinTerm& t : obj.terms()) p.objective_[t.var] += t.coef;
  p.objective_constant_ = obj.constant();

  for (size_t i = 0; i < eq_.size(); ++i) {
    std::string what = "equality '" +
                       (eq_labels_[i].empty() ? std::to_string(i) : eq_labels_[i]) +
                       "'";
    check_refs(eq_[i], n, what);
  }
  for (size_t i = 0; i < ineq_.size(); ++i) {
    std::string what =
        "inequality '" +
        (ineq_labels_[i].empty() ? std::to_string(i) : ineq_labels_[i]) + "'";
    check_refs(ineq_[i], n, what);
  }
  for (size_t i = 0; i < socs_.size(); ++i) {
    std::string what =
        "cone '" + (socs_[i].label.empty() ? std::to_string(i) : socs_[i].label) +
        "'";
    for (const LinExpr& e : socs_[i].vec) check_refs(e, n, what);
    check_refs(socs_[i].rhs, n, what);
  }
  return p;
}

namespace {

void print_expr(std::ostream& os, const LinExpr& e,
                const std::vector<std::string>& names) {
  bool first = true;
  for (const LinTerm& t : e.terms()) {
    if (!first) os << " + ";
    os << t.coef << "*" << names[t.var];
    first = false;
  }
  if (e.constant() != 0.0 || first) {
    if (!first) os << " + ";
    os << e.constant();
  }
}

}  // namespace

void ConicProblem::dump(std::ostream& os) const {
  std::ostringstream buf;
  buf << std::setprecision(17);
  buf << "vars " << num_vars_ << "\n";
  for (int j = 0; j < num_vars_; ++j) {
    buf << "var " << names_[j] << " in [" << bounds_[j].lower << ", "
        << bounds_[j].upper << "]\n";
  }
  buf << "min ";
  LinExpr obj;
  for (int j = 0; j < num_vars_; ++j) obj.add(j, objective_[j]);
  obj.add_constant(objective_constant_);
  obj.canonicalize();
  print_expr(buf, obj, names_);
  buf << "\n";
  for (size_t i = 0; i < eq_.size(); ++i) {
    buf << "eq " << (eq_labels_[i].empty() ? std::to_string(i) : eq_labels_[i])
        << ": ";
    print_expr(buf, eq_[i], names_);
    buf << " == 0\n";
  }
  for (size_t i = 0; i < ineq_.size(); ++i) {
    buf << "ineq "
        << (ineq_labels_[i].empty() ? std::to_string(i) : ineq_labels_[i])
        << ": ";
    print_expr(buf, ineq_[i], names_);
    buf << " <= 0\n";
  }
  for (size_t i = 0; i < socs_.size(); ++i) {
    buf << "soc "
        << (socs_[i].label.empty() ? std::to_string(i) : socs_[i].label)
        << ": ||";
    for (size_t k = 0; k < socs_[i].vec.size(); ++k) {
      if (k) buf << "; ";
      print_expr(buf, socs_[i].vec[k], names_);
    }
    buf << "|| <= ";
    print_expr(buf, socs_[i].rhs, names_);
    buf << "\n";
  }
  os << buf.str();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kIterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

ConicSolution solve(const ConicProblem& problem, double tol, int max_iters) {
  InteriorPointSolver backend;
  SolverOptions opts;
  opts.tol = tol;
  opts.max_iters = max_iters;
  return backend.solve(problem, opts);
}

DualMap::DualMap(const ConicProblem& problem, const ConicSolution& solution)
    : problem_(problem), solution_(solution) {
  if (!solution.optimal()) {
    throw DualError("dual extraction requires an optimal solution, got " +
                    std::string(to_string(solution.status)));
  }
}

double DualMap::equality(int handle) const {
  return solution_.dual_eq[handle];
}

double DualMap::inequality(int handle) const {
  return solution_.dual_ineq[handle];
}

double DualMap::lower_bound(int var) const { return solution_.dual_lower[var]; }

double DualMap::upper_bound(int var) const { return solution_.dual_upper[var]; }

const Eigen::VectorXd& DualMap::soc(int handle) const {
  return solution_.dual_soc[handle];
}

}  // namespace scopf
