#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "scopf/conic.hpp"

namespace scopf {
namespace {

using Eigen::SparseMatrix;
using Eigen::Triplet;
using Eigen::VectorXd;

// Cone layout: leading nonnegative-orthant block of size `lin`, followed by
// second-order cones of the listed dimensions.
struct ConeLayout {
  int lin = 0;
  std::vector<int> soc;

  int dim() const {
    int d = lin;
    for (int s : soc) d += s;
    return d;
  }
  int degree() const { return lin + static_cast<int>(soc.size()); }
};

// Internal standard form:
//   min c.x  s.t.  A x = b,  G x + s = h,  s in K.
struct StandardForm {
  int n = 0, m = 0, p = 0;
  ConeLayout cone;
  SparseMatrix<double> A, G;
  VectorXd b, h, c;
  double cost_scale = 1.0;

  int num_ineq = 0;
  std::vector<int> lower_row, upper_row;  // per variable, -1 when infinite
  std::vector<int> soc_row;               // first cone row per soc constraint
};

StandardForm standardize(const ConicProblem& prob) {
  StandardForm sf;
  sf.n = prob.num_vars();
  sf.m = static_cast<int>(prob.equalities().size());

  sf.cost_scale = 1.0;
  for (int j = 0; j < sf.n; ++j) {
    sf.cost_scale = std::max(sf.cost_scale, std::abs(prob.objective()[j]));
  }
  sf.c = prob.objective() / sf.cost_scale;

  std::vector<Triplet<double>> at;
  sf.b = VectorXd::Zero(sf.m);
  for (int i = 0; i < sf.m; ++i) {
    const LinExpr& e = prob.equalities()[i];
    for (const LinTerm& t : e.terms()) at.emplace_back(i, t.var, t.coef);
    sf.b[i] = -e.constant();
  }
  sf.A.resize(sf.m, sf.n);
  sf.A.setFromTriplets(at.begin(), at.end());
  sf.A.makeCompressed();

  std::vector<Triplet<double>> gt;
  std::vector<double> h;
  int row = 0;
  sf.num_ineq = static_cast<int>(prob.inequalities().size());
  for (const LinExpr& e : prob.inequalities()) {
    for (const LinTerm& t : e.terms()) gt.emplace_back(row, t.var, t.coef);
    h.push_back(-e.constant());
    ++row;
  }
  sf.lower_row.assign(sf.n, -1);
  sf.upper_row.assign(sf.n, -1);
  for (int j = 0; j < sf.n; ++j) {
    const VarBounds& vb = prob.bounds()[j];
    if (std::isfinite(vb.lower)) {
      gt.emplace_back(row, j, -1.0);
      h.push_back(-vb.lower);
      sf.lower_row[j] = row++;
    }
    if (std::isfinite(vb.upper)) {
      gt.emplace_back(row, j, 1.0);
      h.push_back(vb.upper);
      sf.upper_row[j] = row++;
    }
  }
  sf.cone.lin = row;
  for (const SocConstraint& soc : prob.socs()) {
    sf.soc_row.push_back(row);
    sf.cone.soc.push_back(1 + static_cast<int>(soc.vec.size()));
    for (const LinTerm& t : soc.rhs.terms()) gt.emplace_back(row, t.var, -t.coef);
    h.push_back(soc.rhs.constant());
    ++row;
    for (const LinExpr& e : soc.vec) {
      for (const LinTerm& t : e.terms()) gt.emplace_back(row, t.var, -t.coef);
      h.push_back(e.constant());
      ++row;
    }
  }
  sf.p = row;
  sf.G.resize(sf.p, sf.n);
  sf.G.setFromTriplets(gt.begin(), gt.end());
  sf.G.makeCompressed();
  sf.h.resize(row);
  for (int i = 0; i < row; ++i) sf.h[i] = h[i];
  return sf;
}

// ---- cone algebra on stacked vectors -------------------------------------

double min_eig(const ConeLayout& k, const VectorXd& u) {
  double m = kInf;
  for (int i = 0; i < k.lin; ++i) m = std::min(m, u[i]);
  int off = k.lin;
  for (int d : k.soc) {
    m = std::min(m, u[off] - u.segment(off + 1, d - 1).norm());
    off += d;
  }
  return m;
}

VectorXd cone_identity(const ConeLayout& k) {
  VectorXd e = VectorXd::Zero(k.dim());
  for (int i = 0; i < k.lin; ++i) e[i] = 1.0;
  int off = k.lin;
  for (int d : k.soc) {
    e[off] = 1.0;
    off += d;
  }
  return e;
}

VectorXd jordan_prod(const ConeLayout& k, const VectorXd& u,
                     const VectorXd& v) {
  VectorXd r(k.dim());
  for (int i = 0; i < k.lin; ++i) r[i] = u[i] * v[i];
  int off = k.lin;
  for (int d : k.soc) {
    auto u1 = u.segment(off + 1, d - 1);
    auto v1 = v.segment(off + 1, d - 1);
    r[off] = u[off] * v[off] + u1.dot(v1);
    r.segment(off + 1, d - 1) = u[off] * v1 + v[off] * u1;
    off += d;
  }
  return r;
}

// Solves lambda o u = v for u.
VectorXd jordan_div(const ConeLayout& k, const VectorXd& lambda,
                    const VectorXd& v) {
  VectorXd u(k.dim());
  for (int i = 0; i < k.lin; ++i) u[i] = v[i] / lambda[i];
  int off = k.lin;
  for (int d : k.soc) {
    auto l1 = lambda.segment(off + 1, d - 1);
    auto v1 = v.segment(off + 1, d - 1);
    double det = lambda[off] * lambda[off] - l1.squaredNorm();
    double u0 = (lambda[off] * v[off] - l1.dot(v1)) / det;
    u[off] = u0;
    u.segment(off + 1, d - 1) = (v1 - u0 * l1) / lambda[off];
    off += d;
  }
  return u;
}

// Largest step a >= 0 with u + a*du staying inside the cone.
double max_step(const ConeLayout& k, const VectorXd& u, const VectorXd& du) {
  double amax = kInf;
  for (int i = 0; i < k.lin; ++i) {
    if (du[i] < 0.0) amax = std::min(amax, -u[i] / du[i]);
  }
  int off = k.lin;
  for (int d : k.soc) {
    auto u1 = u.segment(off + 1, d - 1);
    auto d1 = du.segment(off + 1, d - 1);
    double a = du[off] * du[off] - d1.squaredNorm();
    double b = u[off] * du[off] - u1.dot(d1);
    double c = u[off] * u[off] - u1.squaredNorm();
    // first positive root of a t^2 + 2 b t + c = 0 starting from c > 0
    double root = kInf;
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) root = -c / (2.0 * b);
    } else {
      double disc = b * b - a * c;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        double r1 = (-b - sq) / a;
        double r2 = (-b + sq) / a;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 0.0)
          root = r1;
        else if (r2 > 0.0 && (a < 0.0 || c <= 0.0))
          root = r2;
      } else if (a < 0.0) {
        root = 0.0;  // cannot occur from strict interior
      }
    }
    if (du[off] < 0.0) root = std::min(root, -u[off] / du[off]);
    amax = std::min(amax, root);
    off += d;
  }
  return amax;
}

// Nesterov-Todd scaling per block; W z = W^{-1} s = lambda.
struct Scaling {
  VectorXd dlin;  // W diag on the nonnegative block: sqrt(s/z)
  struct SocScale {
    VectorXd wbar;
    double eta = 1.0;
  };
  std::vector<SocScale> socs;
  VectorXd lambda;
};

void apply_wbar(const VectorXd& wbar, const double* in, double* out, int d) {
  Eigen::Map<const VectorXd> u(in, d);
  double w0 = wbar[0];
  auto w1 = wbar.segment(1, d - 1);
  auto u1 = u.segment(1, d - 1);
  double dot = w1.dot(u1);
  double out0 = w0 * u[0] + dot;
  Eigen::Map<VectorXd>(out + 1, d - 1) =
      u[0] * w1 + u1 + (dot / (1.0 + w0)) * w1;
  out[0] = out0;
}

Scaling identity_scaling(const ConeLayout& k) {
  Scaling sc;
  sc.dlin = VectorXd::Ones(k.lin);
  for (int d : k.soc) {
    Scaling::SocScale s;
    s.wbar = VectorXd::Zero(d);
    s.wbar[0] = 1.0;
    sc.socs.push_back(std::move(s));
  }
  sc.lambda = VectorXd::Zero(k.dim());
  return sc;
}

Scaling compute_scaling(const ConeLayout& k, const VectorXd& s,
                        const VectorXd& z) {
  Scaling sc;
  sc.dlin.resize(k.lin);
  sc.lambda.resize(k.dim());
  for (int i = 0; i < k.lin; ++i) {
    sc.dlin[i] = std::sqrt(s[i] / z[i]);
    sc.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  int off = k.lin;
  for (int d : k.soc) {
    auto sb = s.segment(off, d);
    auto zb = z.segment(off, d);
    double sdet = std::sqrt(sb[0] * sb[0] - sb.segment(1, d - 1).squaredNorm());
    double zdet = std::sqrt(zb[0] * zb[0] - zb.segment(1, d - 1).squaredNorm());
    VectorXd sbar = sb / sdet, zbar = zb / zdet;
    double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
    Scaling::SocScale ss;
    ss.wbar.resize(d);
    ss.wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
    ss.wbar.segment(1, d - 1) =
        (sbar.segment(1, d - 1) - zbar.segment(1, d - 1)) / (2.0 * gamma);
    ss.eta = std::sqrt(sdet / zdet);
    VectorXd lb(d);
    apply_wbar(ss.wbar, zb.data(), lb.data(), d);
    sc.lambda.segment(off, d) = ss.eta * lb;
    sc.socs.push_back(std::move(ss));
    off += d;
  }
  return sc;
}

VectorXd apply_W(const ConeLayout& k, const Scaling& sc, const VectorXd& u) {
  VectorXd r(k.dim());
  for (int i = 0; i < k.lin; ++i) r[i] = sc.dlin[i] * u[i];
  int off = k.lin;
  for (size_t si = 0; si < k.soc.size(); ++si) {
    int d = k.soc[si];
    apply_wbar(sc.socs[si].wbar, u.data() + off, r.data() + off, d);
    r.segment(off, d) *= sc.socs[si].eta;
    off += d;
  }
  return r;
}

VectorXd apply_Winv(const ConeLayout& k, const Scaling& sc,
                    const VectorXd& u) {
  VectorXd r(k.dim());
  for (int i = 0; i < k.lin; ++i) r[i] = u[i] / sc.dlin[i];
  int off = k.lin;
  for (size_t si = 0; si < k.soc.size(); ++si) {
    int d = k.soc[si];
    // Winv = (1/eta) J Wbar J with J = diag(1, -I)
    VectorXd t = u.segment(off, d);
    t.segment(1, d - 1) *= -1.0;
    VectorXd w(d);
    apply_wbar(sc.socs[si].wbar, t.data(), w.data(), d);
    w.segment(1, d - 1) *= -1.0;
    r.segment(off, d) = w / sc.socs[si].eta;
    off += d;
  }
  return r;
}

// Block-diagonal W^2 as a sparse matrix; soc blocks are emitted dense so the
// KKT sparsity pattern does not change between iterations.
SparseMatrix<double> w2_matrix(const ConeLayout& k, const Scaling& sc) {
  std::vector<Triplet<double>> t;
  for (int i = 0; i < k.lin; ++i) {
    t.emplace_back(i, i, sc.dlin[i] * sc.dlin[i]);
  }
  int off = k.lin;
  for (size_t si = 0; si < k.soc.size(); ++si) {
    int d = k.soc[si];
    const VectorXd& wbar = sc.socs[si].wbar;
    double eta2 = sc.socs[si].eta * sc.socs[si].eta;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        double jab = (a == b) ? (a == 0 ? 1.0 : -1.0) : 0.0;
        t.emplace_back(off + a, off + b,
                       eta2 * (2.0 * wbar[a] * wbar[b] - jab));
      }
    }
    off += d;
  }
  SparseMatrix<double> w(k.dim(), k.dim());
  w.setFromTriplets(t.begin(), t.end());
  w.makeCompressed();
  return w;
}

// Factors the full Newton matrix
//   [ 0   A'   G' ]
//   [ A   0    0  ]
//   [ G   0  -W^2 ]
// with sparse LU (tiny static regularization on the leading saddle blocks)
// and solves  A'dy + G'dz = r1,  A dx = r2,  G dx - W^2 dz = r3.
// Factoring the full system avoids ever forming W^{-2}, whose norm blows up
// as the barrier parameter vanishes.
struct KktSolver {
  const StandardForm& sf;
  SparseMatrix<double> K;
  Eigen::SparseLU<SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  double reg = 1e-12;

  explicit KktSolver(const StandardForm& s) : sf(s) {}

  bool factor(const Scaling& sc) {
    SparseMatrix<double> w2 = w2_matrix(sf.cone, sc);
    const int N = sf.n + sf.m + sf.p;
    std::vector<Triplet<double>> t;
    t.reserve(2 * sf.A.nonZeros() + 2 * sf.G.nonZeros() + w2.nonZeros() + N);
    for (int c = 0; c < sf.A.outerSize(); ++c) {
      for (SparseMatrix<double>::InnerIterator it(sf.A, c); it; ++it) {
        t.emplace_back(sf.n + static_cast<int>(it.row()), c, it.value());
        t.emplace_back(c, sf.n + static_cast<int>(it.row()), it.value());
      }
    }
    for (int c = 0; c < sf.G.outerSize(); ++c) {
      for (SparseMatrix<double>::InnerIterator it(sf.G, c); it; ++it) {
        t.emplace_back(sf.n + sf.m + static_cast<int>(it.row()), c, it.value());
        t.emplace_back(c, sf.n + sf.m + static_cast<int>(it.row()), it.value());
      }
    }
    for (int c = 0; c < w2.outerSize(); ++c) {
      for (SparseMatrix<double>::InnerIterator it(w2, c); it; ++it) {
        t.emplace_back(sf.n + sf.m + static_cast<int>(it.row()),
                       sf.n + sf.m + c, -it.value());
      }
    }
    for (int i = 0; i < sf.n; ++i) t.emplace_back(i, i, reg);
    for (int i = 0; i < sf.m; ++i) t.emplace_back(sf.n + i, sf.n + i, -reg);
    K.resize(N, N);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(K);
      analyzed = true;
    }
    lu.factorize(K);
    if (lu.info() != Eigen::Success) {
      reg *= 1e6;
      analyzed = false;
      return false;
    }
    return true;
  }

  void solve(const VectorXd& r1, const VectorXd& r2, const VectorXd& r3,
             VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
    VectorXd rhs(sf.n + sf.m + sf.p);
    rhs.head(sf.n) = r1;
    rhs.segment(sf.n, sf.m) = r2;
    rhs.tail(sf.p) = r3;
    VectorXd sol = lu.solve(rhs);
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd resid = rhs - K * sol;
      if (resid.lpNorm<Eigen::Infinity>() <=
          1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) {
        break;
      }
      sol += lu.solve(resid);
    }
    dx = sol.head(sf.n);
    dy = sol.segment(sf.n, sf.m);
    dz = sol.tail(sf.p);
  }
};

struct Iterate {
  VectorXd x, y, z, s;
  double tau = 1.0, kappa = 1.0;
};

struct Metrics {
  double pres = kInf, dres = kInf, relgap = kInf;
  double pcost = 0.0, dcost = 0.0, gap = kInf;
  double pinfres = kInf, dinfres = kInf;
  double worst() const { return std::max(pres, std::max(dres, relgap)); }
};

Metrics evaluate(const StandardForm& sf, const Iterate& it, double bnorm,
                 double hnorm, double cnorm) {
  Metrics m;
  const double tau = it.tau;
  VectorXd ry = sf.A * it.x - sf.b * tau;
  VectorXd rz = sf.G * it.x + it.s - sf.h * tau;
  VectorXd rx = sf.A.transpose() * it.y + sf.G.transpose() * it.z + sf.c * tau;
  double cx = sf.c.dot(it.x), by = sf.b.dot(it.y), hz = sf.h.dot(it.z);

  m.pcost = cx / tau;
  m.dcost = -(by + hz) / tau;
  m.pres = std::max(ry.norm() / (1.0 + bnorm), rz.norm() / (1.0 + hnorm)) / tau;
  m.dres = rx.norm() / (1.0 + cnorm) / tau;
  m.gap = (sf.p > 0 ? it.s.dot(it.z) : 0.0) / (tau * tau);
  m.relgap = m.gap / std::max(1.0, std::abs(m.pcost));

  double byhz = by + hz;
  if (byhz < 0.0) {
    VectorXd hres = sf.A.transpose() * it.y + sf.G.transpose() * it.z;
    m.pinfres = hres.norm() / (1.0 + cnorm) / (-byhz);
  }
  if (cx < 0.0) {
    double nAx = sf.m > 0 ? (sf.A * it.x).norm() / (1.0 + bnorm) : 0.0;
    double nGx = sf.p > 0 ? (sf.G * it.x + it.s).norm() / (1.0 + hnorm) : 0.0;
    m.dinfres = std::max(nAx, nGx) / (-cx);
  }
  return m;
}

ConicSolution extract(const ConicProblem& prob, const StandardForm& sf,
                      const Iterate& it, SolveStatus status,
                      const Metrics& met, int iters) {
  ConicSolution sol;
  sol.status = status;
  sol.iterations = iters;
  sol.residuals = {met.pres, met.dres, met.relgap};
  const double tau = it.tau;
  sol.primal = it.x / tau;
  sol.objective_value =
      sf.c.dot(sol.primal) * sf.cost_scale + prob.objective_constant();
  sol.dual_eq = -(it.y / tau) * sf.cost_scale;
  VectorXd z = (it.z / tau) * sf.cost_scale;
  sol.dual_ineq = z.head(sf.num_ineq);
  sol.dual_lower = VectorXd::Zero(sf.n);
  sol.dual_upper = VectorXd::Zero(sf.n);
  for (int j = 0; j < sf.n; ++j) {
    if (sf.lower_row[j] >= 0) sol.dual_lower[j] = z[sf.lower_row[j]];
    if (sf.upper_row[j] >= 0) sol.dual_upper[j] = z[sf.upper_row[j]];
  }
  for (size_t k = 0; k < sf.soc_row.size(); ++k) {
    sol.dual_soc.push_back(z.segment(sf.soc_row[k], sf.cone.soc[k]));
  }
  if (status == SolveStatus::kInfeasible) sol.objective_value = kInf;
  if (status == SolveStatus::kUnbounded) sol.objective_value = -kInf;
  return sol;
}

}  // namespace

ConicSolution InteriorPointSolver::solve(const ConicProblem& prob,
                                         const SolverOptions& opt) const {
  StandardForm sf = standardize(prob);
  const ConeLayout& cone = sf.cone;
  const double bnorm = sf.b.norm(), hnorm = sf.h.norm(), cnorm = sf.c.norm();
  const int degree = cone.degree();

  KktSolver kkt(sf);
  Iterate it;
  it.x = VectorXd::Zero(sf.n);
  it.y = VectorXd::Zero(sf.m);
  it.z = VectorXd::Zero(sf.p);
  it.s = VectorXd::Zero(sf.p);

  // Initial point: least-norm primal/dual guesses shifted into the cone.
  {
    Scaling sc = identity_scaling(cone);
    if (!kkt.factor(sc) && !kkt.factor(sc)) {
      Metrics met;
      return extract(prob, sf, it, SolveStatus::kIterationLimit, met, 0);
    }
    VectorXd dx, dy, dz;
    kkt.solve(VectorXd::Zero(sf.n), sf.b, sf.h, dx, dy, dz);
    it.x = dx;
    if (sf.p > 0) {
      it.s = -dz;  // equals h - G x at identity scaling
      double t = -min_eig(cone, it.s);
      if (t >= 0.0) it.s += (1.0 + t) * cone_identity(cone);
    }
    kkt.solve(-sf.c, VectorXd::Zero(sf.m), VectorXd::Zero(sf.p), dx, dy, dz);
    it.y = dy;
    if (sf.p > 0) {
      it.z = dz;
      double t = -min_eig(cone, it.z);
      if (t >= 0.0) it.z += (1.0 + t) * cone_identity(cone);
    }
  }
  it.tau = 1.0;
  it.kappa = 1.0;

  Iterate best = it;
  Metrics best_met;
  int best_iter = 0;
  int stall = 0;
  int no_progress = 0;
  double prev_worst = kInf;

  for (int iter = 0; iter <= opt.max_iters; ++iter) {
    Metrics met = evaluate(sf, it, bnorm, hnorm, cnorm);
#ifdef SCOPF_IPM_TRACE
    std::fprintf(stderr,
                 "it=%3d pres=%9.2e dres=%9.2e gap=%9.2e tau=%9.2e kap=%9.2e\n",
                 iter, met.pres, met.dres, met.relgap, it.tau, it.kappa);
#endif
    if (iter == 0 || met.worst() < best_met.worst()) {
      best = it;
      best_met = met;
      best_iter = iter;
    }
    if (met.worst() > 0.99 * prev_worst) {
      ++no_progress;
    } else {
      no_progress = 0;
    }
    prev_worst = met.worst();
    if (met.pres <= opt.tol && met.dres <= opt.tol && met.relgap <= opt.tol) {
      return extract(prob, sf, it, SolveStatus::kOptimal, met, iter);
    }
    if (met.pinfres <= opt.tol) {
      return extract(prob, sf, it, SolveStatus::kInfeasible, met, iter);
    }
    if (met.dinfres <= opt.tol) {
      return extract(prob, sf, it, SolveStatus::kUnbounded, met, iter);
    }
    if (it.tau <= 1e-14 * std::max(1.0, it.kappa)) {
      if (met.pinfres < met.dinfres && met.pinfres < 1e-6) {
        return extract(prob, sf, it, SolveStatus::kInfeasible, met, iter);
      }
      if (met.dinfres <= met.pinfres && met.dinfres < 1e-6) {
        return extract(prob, sf, it, SolveStatus::kUnbounded, met, iter);
      }
      break;
    }
    if (iter == opt.max_iters || stall >= 6 || no_progress >= 12) break;

    double mu = ((sf.p > 0 ? it.s.dot(it.z) : 0.0) + it.tau * it.kappa) /
                (degree + 1);

    Scaling sc =
        sf.p > 0 ? compute_scaling(cone, it.s, it.z) : identity_scaling(cone);
    if (!kkt.factor(sc) && !kkt.factor(sc)) break;

    VectorXd rx =
        sf.A.transpose() * it.y + sf.G.transpose() * it.z + sf.c * it.tau;
    VectorXd ry = sf.A * it.x - sf.b * it.tau;
    VectorXd rz = sf.G * it.x + it.s - sf.h * it.tau;
    double rt = it.kappa + sf.c.dot(it.x) + sf.b.dot(it.y) + sf.h.dot(it.z);

    VectorXd vx, vy, vz;
    kkt.solve(-sf.c, sf.b, sf.h, vx, vy, vz);
    // c.vx + b.vy + h.vz equals -|W vz|^2; the identity form avoids the
    // catastrophic cancellation that otherwise wrecks dtau near convergence.
    double den = -(sf.p > 0 ? apply_W(cone, sc, vz).squaredNorm() : 0.0) -
                 it.kappa / it.tau;

    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };

    // Solves the Newton system
    //   A'dy + G'dz + c dtau            = bx
    //   A dx - b dtau                   = by
    //   G dx + ds - h dtau              = bz
    //   W^{-1}ds + W dz                 = bs   (scaled space)
    //   c.dx + b.dy + h.dz + dkappa     = bt
    //   tau dkappa + kappa dtau         = bk
    auto solve_newton = [&](const VectorXd& bx, const VectorXd& by,
                            const VectorXd& bz, const VectorXd& bs, double bt,
                            double bk) {
      Dir d;
      VectorXd r3p = bz - apply_W(cone, sc, bs);
      VectorXd ux, uy, uz;
      kkt.solve(bx, by, r3p, ux, uy, uz);
      double num = bt - bk / it.tau -
                   (sf.c.dot(ux) + sf.b.dot(uy) + sf.h.dot(uz));
      d.dtau = num / den;
      d.dx = ux + d.dtau * vx;
      d.dy = uy + d.dtau * vy;
      d.dz = uz + d.dtau * vz;
      d.ds = apply_W(cone, sc, bs - apply_W(cone, sc, d.dz));
      d.dkappa = (bk - it.kappa * d.dtau) / it.tau;
      return d;
    };

    // Defect correction: the dtau*v split amplifies roundoff when |vz| is
    // large, so refine against the full system a couple of times.
    auto direction = [&](const VectorXd& bx, const VectorXd& by,
                         const VectorXd& bz, const VectorXd& bs, double bt,
                         double bk) {
      Dir d = solve_newton(bx, by, bz, bs, bt, bk);
      for (int pass = 0; pass < 2; ++pass) {
        VectorXd e1 = bx - (sf.A.transpose() * d.dy +
                            sf.G.transpose() * d.dz + sf.c * d.dtau);
        VectorXd e2 = by - (sf.A * d.dx - sf.b * d.dtau);
        VectorXd e3 = bz - (sf.G * d.dx + d.ds - sf.h * d.dtau);
        VectorXd es =
            sf.p > 0
                ? VectorXd(bs - (apply_Winv(cone, sc, d.ds) +
                                 apply_W(cone, sc, d.dz)))
                : VectorXd::Zero(0);
        double et = bt - (sf.c.dot(d.dx) + sf.b.dot(d.dy) + sf.h.dot(d.dz) +
                          d.dkappa);
        double ek = bk - (it.tau * d.dkappa + it.kappa * d.dtau);
        double rnorm = std::max({e1.size() ? e1.lpNorm<Eigen::Infinity>() : 0.0,
                                 e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                 e3.size() ? e3.lpNorm<Eigen::Infinity>() : 0.0,
                                 es.size() ? es.lpNorm<Eigen::Infinity>() : 0.0,
                                 std::abs(et), std::abs(ek)});
        double bnorm2 = std::max({bx.size() ? bx.lpNorm<Eigen::Infinity>() : 0.0,
                                  bz.size() ? bz.lpNorm<Eigen::Infinity>() : 0.0,
                                  std::abs(bt), std::abs(bk), 1e-30});
        if (rnorm <= 1e-14 * bnorm2) break;
        Dir corr = solve_newton(e1, e2, e3, es, et, ek);
        d.dx += corr.dx;
        d.dy += corr.dy;
        d.dz += corr.dz;
        d.ds += corr.ds;
        d.dtau += corr.dtau;
        d.dkappa += corr.dkappa;
      }
      return d;
    };

    // predictor
    VectorXd lam2 = jordan_prod(cone, sc.lambda, sc.lambda);
    VectorXd bs_aff = sf.p > 0 ? VectorXd(-sc.lambda) : VectorXd::Zero(0);
    Dir aff = direction(-rx, -ry, -rz, bs_aff, -rt, -it.tau * it.kappa);
    VectorXd &dx = aff.dx, &dy = aff.dy, &dz = aff.dz, &ds = aff.ds;
    double dtau = aff.dtau, dkappa = aff.dkappa;

    double astep = sf.p > 0 ? std::min(max_step(cone, it.s, ds),
                                       max_step(cone, it.z, dz))
                            : kInf;
    if (dtau < 0.0) astep = std::min(astep, -it.tau / dtau);
    if (dkappa < 0.0) astep = std::min(astep, -it.kappa / dkappa);
    double alpha_aff = std::min(1.0, astep);
    double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    // corrector (combined) direction
    VectorXd dcomp = -lam2;
    if (sf.p > 0) {
      VectorXd corr = jordan_prod(cone, apply_Winv(cone, sc, ds),
                                  apply_W(cone, sc, dz));
      dcomp += sigma * mu * cone_identity(cone) - corr;
    }
    VectorXd bs = sf.p > 0 ? jordan_div(cone, sc.lambda, dcomp)
                           : VectorXd::Zero(0);
    double bkappa = -it.tau * it.kappa + sigma * mu - dtau * dkappa;
    double f = 1.0 - sigma;
    Dir cmb = direction(-f * rx, -f * ry, -f * rz, bs, -f * rt, bkappa);
    dx = cmb.dx;
    dy = cmb.dy;
    dz = cmb.dz;
    ds = cmb.ds;
    dtau = cmb.dtau;
    dkappa = cmb.dkappa;

    astep = sf.p > 0 ? std::min(max_step(cone, it.s, ds),
                                max_step(cone, it.z, dz))
                     : kInf;
    if (dtau < 0.0) astep = std::min(astep, -it.tau / dtau);
    if (dkappa < 0.0) astep = std::min(astep, -it.kappa / dkappa);
    double alpha = std::min(1.0, 0.99 * astep);
#ifdef SCOPF_IPM_TRACE
    std::fprintf(stderr,
                 "      sigma=%8.2e mu=%8.2e den=%10.3e dtau=%10.3e "
                 "alpha=%8.2e\n",
                 sigma, mu, den, dtau, alpha);
#endif
    if (!(alpha > 0.0) || !std::isfinite(alpha)) break;
    if (alpha < 1e-10) {
      ++stall;
    } else {
      stall = 0;
    }

    it.x += alpha * dx;
    it.y += alpha * dy;
    it.z += alpha * dz;
    it.s += alpha * ds;
    it.tau += alpha * dtau;
    it.kappa += alpha * dkappa;
  }

  return extract(prob, sf, best, SolveStatus::kIterationLimit, best_met,
                 best_iter);
}

}  // namespace scopf
