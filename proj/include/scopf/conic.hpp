#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scopf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Sparse affine expression over problem variables: sum coef*x[var] + constant.
struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(double c) : constant_(c) {}

  static LinExpr term(int var, double coef = 1.0) {
    LinExpr e;
    e.add(var, coef);
    return e;
  }

  LinExpr& add(int var, double coef) {
    if (coef != 0.0) terms_.push_back({var, coef});
    return *this;
  }
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    constant_ += o.constant_;
    return *this;
  }

  // Merges duplicate variables and drops zero coefficients; keeps terms
  // sorted by variable index so dumps are reproducible.
  void canonicalize();

  double evaluate(const Eigen::VectorXd& x) const;

  const std::vector<LinTerm>& terms() const { return terms_; }
  double constant() const { return constant_; }
  int max_var() const;

 private:
  std::vector<LinTerm> terms_;
  double constant_ = 0.0;
};

struct SocConstraint {
  std::vector<LinExpr> vec;  // v(x)
  LinExpr rhs;               // t(x),  meaning ||v(x)||_2 <= t(x)
  std::string label;
};

struct VarBounds {
  double lower = -kInf;
  double upper = kInf;
};

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Immutable second-order cone program:
//   minimize  objective . x + objective_constant
//   s.t.      eq_i(x) == 0,  ineq_j(x) <= 0,  ||v_k(x)|| <= t_k(x),
//             lower <= x <= upper.
class ConicProblem {
 public:
  int num_vars() const { return num_vars_; }
  const Eigen::VectorXd& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }
  const std::vector<LinExpr>& equalities() const { return eq_; }
  const std::vector<LinExpr>& inequalities() const { return ineq_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }
  const std::vector<VarBounds>& bounds() const { return bounds_; }
  const std::vector<std::string>& var_names() const { return names_; }
  const std::string& eq_label(int i) const { return eq_labels_[i]; }
  const std::string& ineq_label(int i) const { return ineq_labels_[i]; }

  // One constraint per line, deterministic ordering; used by golden tests.
  void dump(std::ostream& os) const;

 private:
  friend class ProblemBuilder;
  int num_vars_ = 0;
  Eigen::VectorXd objective_;
  double objective_constant_ = 0.0;
  std::vector<LinExpr> eq_, ineq_;
  std::vector<SocConstraint> socs_;
  std::vector<VarBounds> bounds_;
  std::vector<std::string> names_;
  std::vector<std::string> eq_labels_, ineq_labels_;
};

// Incremental assembly; build() freezes the problem and validates every
// variable reference.
class ProblemBuilder {
 public:
  int add_variable(const std::string& name, double lower = -kInf,
                   double upper = kInf);
  int add_equality(LinExpr expr, const std::string& label = "");   // expr == 0
  int add_inequality(LinExpr expr, const std::string& label = ""); // expr <= 0
  int add_soc(std::vector<LinExpr> vec, LinExpr rhs,
              const std::string& label = "");  // ||vec|| <= rhs
  void set_objective(LinExpr expr);            // minimized
  void add_objective_term(int var, double coef);
  void add_objective_constant(double c);

  int num_vars() const { return static_cast<int>(bounds_.size()); }
  ConicProblem build() const;

 private:
  std::vector<VarBounds> bounds_;
  std::vector<std::string> names_;
  std::vector<LinExpr> eq_, ineq_;
  std::vector<SocConstraint> socs_;
  std::vector<std::string> eq_labels_, ineq_labels_;
  LinExpr objective_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(SolveStatus s);

struct KktResiduals {
  double primal = kInf;  // normalized primal feasibility
  double dual = kInf;    // normalized dual feasibility
  double gap = kInf;     // relative complementarity gap
  double worst() const { return std::max(primal, std::max(dual, gap)); }
};

// Dual conventions: dual_eq[i] is d(optimal value)/d(rhs) when equality i is
// relaxed to expr == rhs; dual_ineq and bound duals are the usual
// nonnegative KKT multipliers of the <=-form constraints.
struct ConicSolution {
  SolveStatus status = SolveStatus::kIterationLimit;
  Eigen::VectorXd primal;
  double objective_value = kInf;
  Eigen::VectorXd dual_eq;
  Eigen::VectorXd dual_ineq;
  Eigen::VectorXd dual_lower, dual_upper;
  std::vector<Eigen::VectorXd> dual_soc;
  KktResiduals residuals;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 200;
};

// Backend contract: pure function of (problem, options); no shared state, so
// distinct problems may be solved concurrently.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual ConicSolution solve(const ConicProblem& problem,
                              const SolverOptions& options) const = 0;
};

// Reference primal-dual interior-point method (Nesterov-Todd scaling,
// homogeneous self-dual embedding). Dense-free; intended for desk-scale
// instances up to a few thousand variables.
class InteriorPointSolver final : public SolverBackend {
 public:
  ConicSolution solve(const ConicProblem& problem,
                      const SolverOptions& options) const override;
};

ConicSolution solve(const ConicProblem& problem, double tol = 1e-8,
                    int max_iters = 200);

class DualError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Labeled dual lookup; throws DualError unless the solve was optimal.
class DualMap {
 public:
  DualMap(const ConicProblem& problem, const ConicSolution& solution);

  double equality(int handle) const;
  double inequality(int handle) const;
  double lower_bound(int var) const;
  double upper_bound(int var) const;
  const Eigen::VectorXd& soc(int handle) const;

 private:
  const ConicProblem& problem_;
  const ConicSolution& solution_;
};

}  // namespace scopf
