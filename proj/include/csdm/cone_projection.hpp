#pragma once
// Euclidean projection onto a finitely generated convex cone
//
//   C = { sum_i mu_i e_i + sum_j lambda_j f_j : mu_i >= 0, lambda_j free },
//
// where the e_i ("edges") carry sign constraints and the f_j span a free
// subspace. The projection reduces to two steps: solve the Gram system for
// the unconstrained span coefficients, then minimize the coefficient-space
// quadratic q(x) = 1/2 (x-xbar)^T G (x-xbar) under nonnegativity on the edge
// coordinates by projected gradient descent whose search direction zeroes
// inadmissible components at the boundary. An exact subset-enumeration oracle
// provides an independent reference for testing and fuzzing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "csdm/core.hpp"

namespace csdm {

struct ConeBasis {
  std::vector<Vector> edges;      // sign-constrained generators
  std::vector<Vector> free_dirs;  // unconstrained generators

  int dim() const {
    if (!edges.empty()) return static_cast<int>(edges.front().size());
    if (!free_dirs.empty()) return static_cast<int>(free_dirs.front().size());
    return 0;
  }
  int count() const { return static_cast<int>(edges.size() + free_dirs.size()); }
  bool empty() const { return edges.empty() && free_dirs.empty(); }

  // Columns: edges first, then free directions.
  Matrix as_matrix() const {
    Matrix B(dim(), count());
    int c = 0;
    for (const Vector& e : edges) B.col(c++) = e;
    for (const Vector& f : free_dirs) B.col(c++) = f;
    return B;
  }
};

// Gram matrix of the concatenated generators, validated for numerical linear
// independence: the basis fails its independence requirement when the
// smallest Gram eigenvalue is nonpositive or the reciprocal condition number
// drops below cond_tol.
inline Matrix gram_matrix(const ConeBasis& basis, double cond_tol = 1e-12) {
  Matrix B = basis.as_matrix();
  Matrix G = B.transpose() * B;
  if (G.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || !(hi > 0.0) || lo / hi < cond_tol)
      throw LicqFailure(
          "generator set is numerically linearly dependent (Gram rcond " +
          std::to_string(hi > 0.0 ? lo / hi : 0.0) + ")");
  }
  return G;
}

// Coefficients of the orthogonal projection of v onto span(edges, free_dirs):
// solves G xbar = B^T v. Sign constraints are ignored here.
inline Vector span_projection_coeffs(const ConeBasis& basis, const Vector& v,
                                     double cond_tol = 1e-12) {
  Matrix G = gram_matrix(basis, cond_tol);
  Matrix B = basis.as_matrix();
  Vector rhs = B.transpose() * v;
  return G.llt().solve(rhs);
}

// Zeroes the components that would push a zeroed coordinate negative:
// out_i = 0 when zeroed_i and v_i < 0, else v_i.
inline Vector truncate_at_zero(const Vector& v, const std::vector<bool>& zeroed) {
  Vector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (zeroed[static_cast<std::size_t>(i)] && v(i) < 0.0) out(i) = 0.0;
  return out;
}

struct OrthantQpResult {
  Vector x;
  long long iterations = 0;
};

// Minimizes q(x) = 1/2 (x - xbar)^T G (x - xbar) subject to x_i >= 0 for
// i < signed_count (trailing coordinates unconstrained). Each step moves
// along p = truncate(-grad q) with stepsize
//
//   alpha = min(c_q * r, r, feasibility cap),   r = ||p||^2 / (p^T G p),
//
// where r is the exact minimizer along p (the truncation gives
// <p, -grad q> = ||p||^2 exactly, so q(x + a p) - q(x) = -a||p||^2 +
// (a^2/2) p^T G p <= -(a/4)||p||^2 for a <= (3/2) r). The feasibility cap
// lands exactly on the boundary coordinate it binds. Terminates when
// ||p|| <= inner_eps; the per-step descent margin is checked each iteration.
inline OrthantQpResult orthant_qp_minimize(const Matrix& G, const Vector& xbar,
                                           const Vector& x0,
                                           const ProjectionOptions& opt = {},
                                           int signed_count = -1) {
  const Eigen::Index n = xbar.size();
  if (signed_count < 0) signed_count = static_cast<int>(n);
  Vector x = x0;
  for (int i = 0; i < signed_count; ++i)
    if (x(i) < 0.0) x(i) = 0.0;

  Vector grad = G * (x - xbar);
  std::vector<bool> zeroed(static_cast<std::size_t>(n), false);
  constexpr long long refresh_period = 1024;

  for (long long iter = 0; iter < opt.max_iter; ++iter) {
    for (int i = 0; i < signed_count; ++i)
      zeroed[static_cast<std::size_t>(i)] = x(i) <= opt.zero_tol;
    Vector p = truncate_at_zero(-grad, zeroed);
    double psq = p.squaredNorm();
    if (!std::isfinite(psq))
      throw EvaluationError("non-finite search direction in coefficient QP");
    if (std::sqrt(psq) <= opt.inner_eps) return {x, iter};

    Vector Gp = G * p;
    double pGp = p.dot(Gp);
    double r = pGp > 0.0 ? psq / pGp : std::numeric_limits<double>::infinity();
    double alpha = std::min(opt.quad_step_scale * r, r);

    // Feasibility cap: largest step keeping signed coordinates nonnegative.
    int cap_idx = -1;
    for (int i = 0; i < signed_count; ++i) {
      if (p(i) < 0.0 && x(i) > opt.zero_tol) {
        double cap = x(i) / (-p(i));
        if (cap < alpha) {
          alpha = cap;
          cap_idx = i;
        }
      }
    }
    if (!std::isfinite(alpha))
      throw InternalProjectionError(
          "unbounded descent direction in coefficient QP (G not positive "
          "definite on the feasible cone)");

    // Margin check: the exact decrease -a||p||^2 + (a^2/2) pGp must meet the
    // quarter margin; failure means the stepsize rule was violated.
    double decrease = -alpha * psq + 0.5 * alpha * alpha * pGp;
    if (!(decrease <= -0.25 * alpha * psq * (1.0 - 1e-12)))
      throw InternalProjectionError("descent margin violated in coefficient QP");

    x += alpha * p;
    if (cap_idx >= 0) x(cap_idx) = 0.0;
    for (int i = 0; i < signed_count; ++i)
      if (x(i) < 0.0) x(i) = 0.0;  // roundoff guard; caps land at exact zero

    if ((iter + 1) % refresh_period == 0)
      grad = G * (x - xbar);  // kill incremental drift
    else
      grad += alpha * Gp;
  }
  throw InnerSolverStall("coefficient QP exceeded " +
                         std::to_string(opt.max_iter) + " iterations");
}

struct ProjectionResult {
  Vector point;                // nearest point of C to v
  Vector residual;             // v - point
  std::vector<double> mu;      // edge coefficients, all >= 0
  std::vector<double> lambda;  // free coefficients
  long long inner_iterations = 0;
};

// Projection of v onto the cone: span coefficients first, then the
// sign-constrained coefficient QP started from the clamped span solution.
// The empty basis projects onto {0}.
inline ProjectionResult project_onto_cone(const ConeBasis& basis,
                                          const Vector& v,
                                          const ProjectionOptions& opt = {}) {
  ProjectionResult out;
  if (basis.empty()) {
    out.point = Vector::Zero(v.size());
    out.residual = v;
    return out;
  }
  Matrix G = gram_matrix(basis, opt.cond_tol);
  Matrix B = basis.as_matrix();
  Vector xbar = G.llt().solve(B.transpose() * v);
  const int ne = static_cast<int>(basis.edges.size());

  Vector x0 = xbar;
  for (int i = 0; i < ne; ++i) x0(i) = std::max(x0(i), 0.0);
  OrthantQpResult qp = orthant_qp_minimize(G, xbar, x0, opt, ne);

  out.point = B * qp.x;
  out.residual = v - out.point;
  out.mu.assign(qp.x.data(), qp.x.data() + ne);
  out.lambda.assign(qp.x.data() + ne, qp.x.data() + qp.x.size());
  out.inner_iterations = qp.iterations;
  return out;
}

// Independent reference implementation: enumerate every subset S of the
// edges, project v onto span(S ∪ free) by QR least squares, and accept the
// subset whose coefficients are nonnegative on S and whose residual has a
// nonpositive inner product with every excluded edge — the exact optimality
// characterization of the cone projection. Rank-deficient candidate subsets
// are skipped. Enumeration order makes the result deterministic.
inline ProjectionResult oracle_project_subset_enumeration(
    const ConeBasis& basis, const Vector& v, double tol = 1e-10) {
  ProjectionResult out;
  if (basis.empty()) {
    out.point = Vector::Zero(v.size());
    out.residual = v;
    return out;
  }
  const int ne = static_cast<int>(basis.edges.size());
  const int nf = static_cast<int>(basis.free_dirs.size());
  const double scale = tol * (1.0 + v.norm());

  for (unsigned long mask = 0; mask < (1ul << ne); ++mask) {
    std::vector<int> members;
    for (int i = 0; i < ne; ++i)
      if (mask & (1ul << i)) members.push_back(i);
    const int cols = static_cast<int>(members.size()) + nf;

    Vector y(cols);
    Vector point = Vector::Zero(v.size());
    if (cols > 0) {
      Matrix A(v.size(), cols);
      for (std::size_t c = 0; c < members.size(); ++c)
        A.col(static_cast<Eigen::Index>(c)) = basis.edges[members[c]];
      for (int j = 0; j < nf; ++j)
        A.col(static_cast<Eigen::Index>(members.size()) + j) = basis.free_dirs[j];
      Eigen::ColPivHouseholderQR<Matrix> qr(A);
      if (qr.rank() < cols) continue;  // dependent subset: skip
      y = qr.solve(v);
      point = A * y;
    }

    bool ok = true;
    for (std::size_t c = 0; c < members.size() && ok; ++c)
      if (y(static_cast<Eigen::Index>(c)) < -scale) ok = false;
    if (!ok) continue;

    Vector r = v - point;
    for (int i = 0; i < ne && ok; ++i) {
      if (mask & (1ul << i)) continue;
      double margin = scale * std::max(1.0, basis.edges[i].norm());
      if (r.dot(basis.edges[i]) > margin) ok = false;
    }
    if (!ok) continue;

    out.point = point;
    out.residual = r;
    out.mu.assign(static_cast<std::size_t>(ne), 0.0);
    for (std::size_t c = 0; c < members.size(); ++c)
      out.mu[static_cast<std::size_t>(members[c])] =
          std::max(y(static_cast<Eigen::Index>(c)), 0.0);
    out.lambda.resize(static_cast<std::size_t>(nf));
    for (int j = 0; j < nf; ++j)
      out.lambda[static_cast<std::size_t>(j)] =
          y(static_cast<Eigen::Index>(members.size()) + j);
    return out;
  }
  throw InternalProjectionError(
      "no edge subset satisfies the projection optimality conditions");
}

}  // namespace csdm
