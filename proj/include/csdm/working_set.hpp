#pragma once
// Active-set bookkeeping and the projected descent direction
//
//   d(u) = -J'(u) - P_C(-J'(u)),
//
// where C is the cone generated by the active inequality gradients (sign
// constrained) plus the span of the equality gradients. d(u) = 0 exactly at
// KKT points, <-J'(u), d> = ||d||^2, and <g'_i(u), d> <= 0 for every active
// i, which splits the active set: indices with <g'_i, d> ~ 0 form the working
// set (the step slides along them), indices with <g'_i, d> < 0 are falsely
// active (the step leaves them immediately and they keep zero multipliers).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csdm/cone_projection.hpp"
#include "csdm/core.hpp"

namespace csdm {

// Labels of inequalities with |g_i(u)| <= active_tol, ascending.
inline IndexSet active_set(const Problem& p, const Vector& u,
                           double active_tol) {
  IndexSet out;
  for (const ConstraintFn& g : p.inequalities)
    if (std::abs(eval_value(g, u)) <= active_tol) out.push_back(g.label);
  return out;
}

// Cone basis assembled from active inequality gradients plus equality
// gradients. Edges that are positive multiples of an already-kept edge are
// dropped: they generate the same cone, and keeping both would make the Gram
// matrix singular even though the projection is well defined (e.g. a disk
// tangent to a halfplane boundary, where both gradients align at the touch
// point). Dropped labels keep zero multipliers.
struct LabeledBasis {
  ConeBasis basis;
  std::vector<int> kept;     // positions in `active` of basis.edges, in order
  std::vector<int> dropped;  // positions in `active` pruned as duplicates
  std::vector<Vector> active_gradients;  // all of them, aligned with `active`
};

inline LabeledBasis active_cone_basis(const Problem& p, const Vector& u,
                                      const IndexSet& active) {
  LabeledBasis out;
  for (int label : active) {
    const ConstraintFn& g = p.inequalities.at(static_cast<std::size_t>(label) - 1);
    Vector grad = eval_gradient(g, u);
    double gn = grad.norm();
    bool duplicate = false;
    for (const Vector& kept : out.basis.edges) {
      double cosine = kept.dot(grad) / (kept.norm() * gn);
      if (cosine >= 1.0 - 1e-12) {
        duplicate = true;
        break;
      }
    }
    if (duplicate)
      out.dropped.push_back(static_cast<int>(out.active_gradients.size()));
    else {
      out.kept.push_back(static_cast<int>(out.active_gradients.size()));
      out.basis.edges.push_back(grad);
    }
    out.active_gradients.push_back(std::move(grad));
  }
  for (const ConstraintFn& h : p.equalities)
    out.basis.free_dirs.push_back(eval_gradient(h, u));
  return out;
}

struct DirectionBundle {
  Vector d;
  double d_norm = 0.0;
  IndexSet active;
  IndexSet working;       // filled by classify_working_set
  IndexSet false_active;  // active \ working, all with <g'_i, d> < 0
  std::vector<double> mu;      // multipliers aligned with `active`
  std::vector<double> lambda;  // equality multipliers
  Vector minus_grad;           // -J'(u)
  Vector projection;           // P_C(-J'(u))
  std::vector<Vector> active_gradients;  // aligned with `active`
};

// Projected descent direction at u for the given active set. The working-set
// split is not computed here: it is meaningless at KKT points (d ~ 0), so the
// solver classifies only after the termination test.
inline DirectionBundle descent_direction(const Problem& p, const Vector& u,
                                         const IndexSet& active,
                                         const ProjectionOptions& opt = {}) {
  DirectionBundle b;
  b.active = active;
  b.minus_grad = -eval_gradient(p.objective, u);

  LabeledBasis lb = active_cone_basis(p, u, active);
  b.active_gradients = std::move(lb.active_gradients);
  ProjectionResult pr = project_onto_cone(lb.basis, b.minus_grad, opt);
  b.projection = pr.point;
  b.d = b.minus_grad - pr.point;
  b.d_norm = b.d.norm();
  b.mu.assign(active.size(), 0.0);
  for (std::size_t c = 0; c < lb.kept.size(); ++c)
    b.mu[static_cast<std::size_t>(lb.kept[c])] = pr.mu[c];
  b.lambda = pr.lambda;
  return b;
}

// Working subset of `active`: indices whose gradient is orthogonal to d
// within threshold max(wis_rel_tol * ||d||, 1e-12). Every excluded index must
// satisfy <g'_i, d> < 0 (a property of the cone projection); a positive inner
// product beyond the threshold is reported as an internal inconsistency.
inline IndexSet working_index_set(const Vector& d, const IndexSet& active,
                                  const std::vector<Vector>& gradients,
                                  double wis_rel_tol) {
  double threshold = std::max(wis_rel_tol * d.norm(), 1e-12);
  IndexSet out;
  for (std::size_t i = 0; i < active.size(); ++i) {
    double ip = gradients[i].dot(d);
    if (std::abs(ip) <= threshold)
      out.push_back(active[i]);
    else if (ip > threshold)
      throw InternalProjectionError(
          "active gradient with positive inner product against the descent "
          "direction (label " + std::to_string(active[i]) + ")");
  }
  return out;
}

// Fills working/false_active and zeroes the multipliers of false-active
// indices (the projection leaves at most solver noise there).
inline void classify_working_set(DirectionBundle& b, double wis_rel_tol) {
  b.working = working_index_set(b.d, b.active, b.active_gradients, wis_rel_tol);
  b.false_active.clear();
  std::size_t w = 0;
  for (std::size_t i = 0; i < b.active.size(); ++i) {
    if (w < b.working.size() && b.working[w] == b.active[i]) {
      ++w;
    } else {
      b.false_active.push_back(b.active[i]);
      b.mu[i] = 0.0;
    }
  }
}

// Termination test: u is a KKT point (within tolerance) iff the projected
// direction vanishes.
inline bool is_kkt(const DirectionBundle& b, double eps) {
  return b.d_norm < eps;
}

// Projection residual onto the full SPAN of the active and equality
// gradients, sign constraints ignored. Never longer than the cone-restricted
// direction; vanishes whenever -J'(u) lies in the span even with negative
// multipliers, which is why it cannot serve as a termination test.
inline Vector subspace_direction(const Problem& p, const Vector& u,
                                 const IndexSet& active,
                                 const ProjectionOptions& opt = {}) {
  Vector v = -eval_gradient(p.objective, u);
  LabeledBasis lb = active_cone_basis(p, u, active);
  if (lb.basis.empty()) return v;
  Vector coeffs = span_projection_coeffs(lb.basis, v, opt.cond_tol);
  return v - lb.basis.as_matrix() * coeffs;
}

}  // namespace csdm
