#pragma once
// Boundary-restoring correction. A step along d leaves the working surfaces
// { g_i = 0, i working } and { h_j = 0 } only to second order; the corrected
// point
//
//   u(t) = u + t d + B c(t),   B = [working and equality gradients at u],
//
// restores them exactly by solving F(c) = (g_i(u(t)), h_j(u(t))) = 0 with
// Newton's method. The implicit-function theorem gives c(0) = 0 and
// c'(0) = 0, so ||B c(t)|| / t -> 0: the correction is asymptotically free
// and the corrected step inherits the descent margin for small t.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "csdm/core.hpp"

namespace csdm {

// Correction system frozen at the base point u: rows to zero and the basis
// columns added to the step. Built once per outer iteration, reused for every
// trial stepsize.
struct CorrectionBasis {
  std::vector<const ConstraintFn*> rows;  // working inequalities then equalities
  Matrix B;          // columns: gradients at the base point
  Matrix gram;       // B^T B; Jacobian of F at (t, c) = (0, 0)
  bool all_linear = true;

  bool empty() const { return rows.empty(); }
  int size() const { return static_cast<int>(rows.size()); }
};

inline CorrectionBasis correction_basis(const Problem& p, const Vector& u,
                                        const IndexSet& working) {
  CorrectionBasis cb;
  cb.B.resize(u.size(),
              static_cast<Eigen::Index>(working.size() + p.equalities.size()));
  Eigen::Index col = 0;
  for (int label : working) {
    const ConstraintFn& g = p.inequalities.at(static_cast<std::size_t>(label) - 1);
    cb.rows.push_back(&g);
    cb.B.col(col++) = eval_gradient(g, u);
    cb.all_linear = cb.all_linear && g.linear;
  }
  for (const ConstraintFn& h : p.equalities) {
    cb.rows.push_back(&h);
    cb.B.col(col++) = eval_gradient(h, u);
    cb.all_linear = cb.all_linear && h.linear;
  }
  cb.gram = cb.B.transpose() * cb.B;
  return cb;
}

struct CorrectionOutcome {
  Vector u_t;            // corrected trial point u + t d + B c
  Vector c;              // basis coefficients, aligned with basis rows
  int newton_iters = 0;
  double residual_norm = 0.0;  // sup norm of the row values at u_t
};

// Newton iteration for c(t). The first step uses the frozen Gram matrix (the
// Jacobian at c = 0 with gradients taken at the base point); subsequent steps
// re-evaluate the row gradients at the current trial point, keeping the basis
// columns frozen. Throws NewtonStall when the residual fails to reach
// newton_tol within newton_max_iter, and LicqFailure when a Jacobian is
// numerically singular; the caller treats both as a failed trial stepsize.
inline CorrectionOutcome correct(const Vector& u, const Vector& d,
                                 const CorrectionBasis& basis, double t,
                                 const SolverConfig& cfg) {
  const int m = basis.size();
  CorrectionOutcome out;
  out.c = Vector::Zero(m);
  Vector base = u + t * d;
  out.u_t = base;

  auto residual = [&](const Vector& at) {
    Vector F(m);
    for (int i = 0; i < m; ++i) F(i) = eval_value(*basis.rows[i], at);
    return F;
  };

  Vector F = residual(out.u_t);
  for (int iter = 0; iter <= cfg.newton_max_iter; ++iter) {
    out.residual_norm = F.lpNorm<Eigen::Infinity>();
    out.newton_iters = iter;
    if (out.residual_norm <= cfg.newton_tol) return out;
    if (iter == cfg.newton_max_iter) break;

    Matrix Jm;
    if (iter == 0) {
      Jm = basis.gram;
    } else {
      Jm.resize(m, m);
      for (int i = 0; i < m; ++i)
        Jm.row(i) = eval_gradient(*basis.rows[i], out.u_t).transpose() * basis.B;
    }
    Eigen::FullPivLU<Matrix> lu(Jm);
    if (!lu.isInvertible())
      throw LicqFailure("singular correction Jacobian at trial stepsize " +
                        std::to_string(t));
    out.c += lu.solve(-F);
    out.u_t = base + basis.B * out.c;
    F = residual(out.u_t);
  }
  throw NewtonStall("correction residual " + std::to_string(out.residual_norm) +
                    " after " + std::to_string(cfg.newton_max_iter) +
                    " Newton iterations at trial stepsize " + std::to_string(t));
}

struct ProbePoint {
  double t = 0.0;
  double ratio = 0.0;  // ||B c(t)|| / t
  int newton_iters = 0;
};

// Measures the correction magnitude along a shrinking stepsize schedule. For
// a direction tangent to the working surfaces the ratio decays linearly in t;
// a ratio that stalls indicates the direction actually crosses a surface.
inline std::vector<ProbePoint> superlinearity_probe(
    const Vector& u, const Vector& d, const CorrectionBasis& basis,
    const std::vector<double>& stepsizes, const SolverConfig& cfg) {
  std::vector<ProbePoint> out;
  out.reserve(stepsizes.size());
  for (double t : stepsizes) {
    CorrectionOutcome co = correct(u, d, basis, t, cfg);
    out.push_back({t, (basis.B * co.c).norm() / t, co.newton_iters});
  }
  return out;
}

}  // namespace csdm
