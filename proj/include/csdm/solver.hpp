#pragma once
// Outer solver: feasible-point descent with working-set reduction.
//
// Each iteration computes the projected direction d at the current iterate,
// terminates when ||d|| < eps, and otherwise takes a step found by two nested
// backtracking searches sharing the strict decrease requirement
//
//   J(u(t)) - J(u) < -(t / (2 C)) ||d||^2,   C = max(1, ||d||) if normalizing,
//
// first along the raw ray u + t d (with strictly-inactive constraints held
// strictly feasible) to get an upper stepsize, then along the corrected curve
// u + t d + B c(t) that restores the working surfaces. Falsely active
// constraints may move anywhere within the activation tolerance, which is
// what lets the active set shrink without stalling against the strict
// feasibility margin.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csdm/core.hpp"
#include "csdm/correction.hpp"
#include "csdm/working_set.hpp"

namespace csdm {

struct LineSearchResult {
  double t = 0.0;
  Vector u_next;
  double J_next = 0.0;
  int backtracks = 0;
  bool corrected = false;
  std::vector<double> corrections;  // aligned with the correction basis rows
};

namespace detail {

// Strictly-inactive inequalities must clear the strict feasibility margin.
// Non-finite trial evaluations reject the trial rather than aborting.
inline bool inactive_strictly_feasible(const Problem& p, const Vector& trial,
                                       const IndexSet& active,
                                       double feas_tol) {
  std::size_t a = 0;
  for (const ConstraintFn& g : p.inequalities) {
    if (a < active.size() && active[a] == g.label) {
      ++a;
      continue;
    }
    double v = g.value(trial);
    if (!std::isfinite(v) || !(v < -feas_tol)) return false;
  }
  return true;
}

inline bool contains(const IndexSet& s, int label) {
  return std::binary_search(s.begin(), s.end(), label);
}

}  // namespace detail

// Backtracking search along the raw ray u + t d, no correction: accepts the
// first t in { tau, tau*beta, ... } whose trial point satisfies the strict
// decrease margin and keeps every strictly-inactive constraint strictly
// feasible. Active constraints are not examined here; the corrected search
// enforces their discipline.
inline LineSearchResult precorrection_linesearch(
    const Problem& p, const Vector& u, const Vector& d, const IndexSet& active,
    double J_u, double margin_coeff, const SolverConfig& cfg) {
  double t = cfg.tau;
  for (int j = 0; j <= cfg.max_backtracks; ++j, t *= cfg.backtrack_factor) {
    Vector trial = u + t * d;
    double J_t = p.objective.value(trial);
    if (!std::isfinite(J_t)) continue;
    if (!(J_t - J_u < -(t * margin_coeff))) continue;
    if (!detail::inactive_strictly_feasible(p, trial, active, cfg.feas_tol))
      continue;
    return {t, std::move(trial), J_t, j, false, {}};
  }
  throw LineSearchStall("pre-correction search exhausted " +
                        std::to_string(cfg.max_backtracks) + " backtracks");
}

// Backtracking search along the corrected curve, starting from the stepsize
// accepted by the pre-correction search. Per trial: restore the working
// surfaces (skipped when every basis constraint is affine, where c = 0 is
// exact up to the working-set tolerance), then require the decrease margin,
// strict feasibility of strictly-inactive constraints, and |g_i| within the
// activation tolerance for falsely-active and affine working constraints.
// Failed Newton solves reject the trial.
inline LineSearchResult corrected_linesearch(
    const Problem& p, const Vector& u, const Vector& d, const IndexSet& active,
    const IndexSet& working, const CorrectionBasis& basis, double t_bar,
    double J_u, double margin_coeff, const SolverConfig& cfg) {
  const bool fast_path = basis.empty() || basis.all_linear;
  double t = t_bar;
  for (int j = 0; j <= cfg.max_backtracks; ++j, t *= cfg.backtrack_factor) {
    Vector u_t;
    std::vector<double> c;
    bool corrected = false;
    if (fast_path) {
      u_t = u + t * d;
      bool ok = true;
      for (const ConstraintFn* row : basis.rows) {
        double v = row->value(u_t);
        if (!std::isfinite(v) || std::abs(v) > cfg.active_tol) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      c.assign(basis.rows.size(), 0.0);  // the applied correction: exactly zero
    } else {
      try {
        CorrectionOutcome co = correct(u, d, basis, t, cfg);
        u_t = std::move(co.u_t);
        c.assign(co.c.data(), co.c.data() + co.c.size());
        corrected = true;
      } catch (const NewtonStall&) {
        continue;
      } catch (const LicqFailure&) {
        continue;
      } catch (const EvaluationError&) {
        continue;
      }
    }

    double J_t = p.objective.value(u_t);
    if (!std::isfinite(J_t)) continue;
    if (!(J_t - J_u < -(t * margin_coeff))) continue;
    if (!detail::inactive_strictly_feasible(p, u_t, active, cfg.feas_tol))
      continue;

    // Falsely-active constraints may wander within the activation tolerance.
    bool ok = true;
    for (int label : active) {
      if (detail::contains(working, label)) continue;  // corrected or affine
      double v = p.inequalities[static_cast<std::size_t>(label) - 1].value(u_t);
      if (!std::isfinite(v) || v > cfg.active_tol) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    return {t, std::move(u_t), J_t, j, corrected, std::move(c)};
  }
  throw LineSearchStall("corrected search exhausted " +
                        std::to_string(cfg.max_backtracks) +
                        " backtracks from " + std::to_string(t_bar));
}

// Feasible-point descent loop. Statuses: Converged (||d|| < eps),
// MaxIterations, InfeasibleStart (no iteration is attempted), Stalled (a line
// search exhausted its backtracks), LicqFailure (dependent active gradients;
// the offending iterate is the last trace record).
inline SolveReport solve(const Problem& p, const Vector& u0,
                         const SolverConfig& cfg = {}) {
  validate_problem(p);
  SolveReport rep;

  FeasibilityVerdict verdict =
      check_feasibility(p, u0, cfg.feas_tol, cfg.active_tol);
  if (verdict.kind == FeasibilityKind::Infeasible) {
    rep.status = SolveStatus::InfeasibleStart;
    rep.final_u = u0;
    rep.final_J = p.objective.value(u0);
    rep.final_d_norm = std::numeric_limits<double>::quiet_NaN();
    std::string labels;
    for (const ConstraintViolation& v : verdict.violations)
      labels += (labels.empty() ? "" : ", ") +
                std::string(v.equality ? "h" : "g") + std::to_string(v.label);
    rep.message = "start violates: " + labels;
    return rep;
  }

  Vector u = u0;
  double J_u = eval_value(p.objective, u);
  std::optional<double> t_prev;
  std::vector<double> c_prev;

  for (int k = 0;; ++k) {
    IndexSet active = active_set(p, u, cfg.active_tol);
    DirectionBundle b;
    try {
      b = descent_direction(p, u, active, cfg.projection);
    } catch (const LicqFailure& e) {
      rep.trace.push_back({k, u, J_u, std::numeric_limits<double>::quiet_NaN(),
                           active, {}, t_prev, c_prev});
      rep.status = SolveStatus::LicqFailure;
      rep.final_active = active;
      rep.final_d_norm = std::numeric_limits<double>::quiet_NaN();
      rep.message = e.what();
      break;
    }

    if (is_kkt(b, cfg.eps)) {
      rep.trace.push_back({k, u, J_u, b.d_norm, active, {}, t_prev, c_prev});
      rep.status = SolveStatus::Converged;
      rep.final_active = active;
      rep.mu = b.mu;
      rep.lambda = b.lambda;
      rep.final_d_norm = b.d_norm;
      break;
    }
    classify_working_set(b, cfg.wis_rel_tol);
    rep.trace.push_back({k, u, J_u, b.d_norm, active, b.working, t_prev, c_prev});
    rep.final_d_norm = b.d_norm;

    if (k == cfg.max_outer_iter) {
      rep.status = SolveStatus::MaxIterations;
      rep.final_active = active;
      rep.mu = b.mu;
      rep.lambda = b.lambda;
      rep.message = "no convergence within " +
                    std::to_string(cfg.max_outer_iter) + " iterations";
      break;
    }

    double scale = cfg.normalize_direction ? std::max(1.0, b.d_norm) : 1.0;
    Vector d_step = b.d / scale;
    double margin_coeff = 0.5 * b.d.squaredNorm() / scale;

    try {
      LineSearchResult pre = precorrection_linesearch(
          p, u, d_step, active, J_u, margin_coeff, cfg);
      CorrectionBasis basis = correction_basis(p, u, b.working);
      LineSearchResult post = corrected_linesearch(
          p, u, d_step, active, b.working, basis, pre.t, J_u, margin_coeff,
          cfg);
      t_prev = post.t;
      c_prev = post.corrections;
      u = std::move(post.u_next);
      J_u = post.J_next;
    } catch (const LineSearchStall& e) {
      rep.status = SolveStatus::Stalled;
      rep.final_active = active;
      rep.mu = b.mu;
      rep.lambda = b.lambda;
      rep.message = e.what();
      break;
    }
  }

  rep.final_u = u;
  rep.final_J = J_u;
  return rep;
}

// Rewrites box constraints a_i <= g_i(u) <= b_i as the doubled one-sided
// system: labels 1..m get g_i - b_i <= 0, labels m+1..2m get a_i - g_i <= 0.
struct BoundedConstraint {
  ConstraintFn fn;
  double lower = 0.0;
  double upper = 0.0;
};

inline Problem transform_two_sided(const std::string& name, int dim,
                                   ConstraintFn objective,
                                   const std::vector<BoundedConstraint>& bounds,
                                   std::vector<ConstraintFn> equalities = {}) {
  Problem out;
  out.name = name;
  out.dim = dim;
  out.objective = std::move(objective);
  out.objective.label = 0;
  const int m = static_cast<int>(bounds.size());
  for (int i = 0; i < m; ++i) {
    const BoundedConstraint& bc = bounds[static_cast<std::size_t>(i)];
    if (!(bc.lower < bc.upper))
      throw InvalidBounds("constraint " + std::to_string(i + 1) +
                          ": lower bound must be strictly below upper");
    ConstraintFn upper;
    upper.label = i + 1;
    upper.linear = bc.fn.linear;
    upper.value = [fn = bc.fn.value, b = bc.upper](const Vector& u) {
      return fn(u) - b;
    };
    upper.gradient = bc.fn.gradient;
    out.inequalities.push_back(std::move(upper));
  }
  for (int i = 0; i < m; ++i) {
    const BoundedConstraint& bc = bounds[static_cast<std::size_t>(i)];
    ConstraintFn lower;
    lower.label = m + i + 1;
    lower.linear = bc.fn.linear;
    lower.value = [fn = bc.fn.value, a = bc.lower](const Vector& u) {
      return a - fn(u);
    };
    lower.gradient = [fn = bc.fn.gradient](const Vector& u) {
      return Vector(-fn(u));
    };
    out.inequalities.push_back(std::move(lower));
  }
  for (std::size_t j = 0; j < equalities.size(); ++j) {
    equalities[j].label = static_cast<int>(j) + 1;
    out.equalities.push_back(std::move(equalities[j]));
  }
  return out;
}

// Residuals of the first-order optimality system for a finished report:
// stationarity ||J'(u) + sum mu_i g'_i + sum lambda_j h'_j||, worst
// complementarity |mu_i g_i(u)|, and worst primal violation.
struct KktResiduals {
  double stationarity = 0.0;
  double complementarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;  // most negative multiplier, clamped at 0
};

inline KktResiduals kkt_residuals(const Problem& p, const SolveReport& rep) {
  KktResiduals out;
  Vector r = eval_gradient(p.objective, rep.final_u);
  // Reports that end before multipliers exist (infeasible start, dependent
  // gradients) carry an empty mu; only primal residuals are meaningful then.
  if (rep.mu.size() != rep.final_active.size()) {
    for (const ConstraintFn& g : p.inequalities)
      out.primal = std::max(out.primal, eval_value(g, rep.final_u));
    for (const ConstraintFn& h : p.equalities)
      out.primal = std::max(out.primal, std::abs(eval_value(h, rep.final_u)));
    out.stationarity = r.norm();
    return out;
  }
  for (std::size_t i = 0; i < rep.final_active.size(); ++i) {
    const ConstraintFn& g =
        p.inequalities[static_cast<std::size_t>(rep.final_active[i]) - 1];
    r += rep.mu[i] * eval_gradient(g, rep.final_u);
    out.complementarity = std::max(
        out.complementarity, std::abs(rep.mu[i] * eval_value(g, rep.final_u)));
    out.dual = std::max(out.dual, -rep.mu[i]);
  }
  for (std::size_t j = 0; j < rep.lambda.size(); ++j)
    r += rep.lambda[j] * eval_gradient(p.equalities[j], rep.final_u);
  out.stationarity = r.norm();
  for (const ConstraintFn& g : p.inequalities)
    out.primal = std::max(out.primal, eval_value(g, rep.final_u));
  for (const ConstraintFn& h : p.equalities)
    out.primal = std::max(out.primal, std::abs(eval_value(h, rep.final_u)));
  return out;
}

}  // namespace csdm
