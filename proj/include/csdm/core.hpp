#pragma once
// Core types for the feasible-point working-set solver: problem data,
// solver configuration, per-iterate records, error taxonomy, and the basic
// numerical checks (feasibility classification, finite-difference gradients).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csdm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// 1-based constraint labels, kept sorted ascending.
using IndexSet = std::vector<int>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A function evaluation produced a non-finite value. `label` is the 1-based
// constraint index, 0 for the objective, -1 when not tied to a constraint.
struct EvaluationError : SolverError {
  int label;
  explicit EvaluationError(const std::string& msg, int lbl = -1)
      : SolverError(msg), label(lbl) {}
};

// Gradient set is (numerically) linearly dependent where independence is
// required: reciprocal condition of the Gram matrix below the floor.
struct LicqFailure : SolverError {
  using SolverError::SolverError;
};

// The sign-constrained coefficient QP ran out of iterations.
struct InnerSolverStall : SolverError {
  using SolverError::SolverError;
};

// A projection postcondition failed; indicates numerical inconsistency.
struct InternalProjectionError : SolverError {
  using SolverError::SolverError;
};

// Newton iteration for the boundary-restoring correction did not converge.
struct NewtonStall : SolverError {
  using SolverError::SolverError;
};

// Two-sided constraint with lower bound >= upper bound.
struct InvalidBounds : SolverError {
  using SolverError::SolverError;
};

// Unknown problem name.
struct NotFound : SolverError {
  using SolverError::SolverError;
};

// Malformed problem file or expression; carries the 1-based source line.
struct ParseError : SolverError {
  int line;
  explicit ParseError(const std::string& msg, int ln = 0)
      : SolverError(msg), line(ln) {}
};

// Either line search exhausted max_backtracks; mapped to a Stalled status.
struct LineSearchStall : SolverError {
  using SolverError::SolverError;
};

// ---------------------------------------------------------------------------
// Problem data
// ---------------------------------------------------------------------------

// A smooth scalar function with its analytic gradient. `label` is the 1-based
// constraint index (0 for objectives). `linear` marks affine functions; the
// solver skips the boundary-restoring correction when every basis constraint
// is affine, since a direction orthogonal to their gradients stays on them.
struct ConstraintFn {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  int label = 0;
  bool linear = false;
};

// Minimize `objective` over { u : g_i(u) <= 0 for all i, h_j(u) = 0 for all j }.
// Inequalities are labeled 1..m in order, equalities 1..p.
struct Problem {
  std::string name;
  int dim = 0;
  ConstraintFn objective;
  std::vector<ConstraintFn> inequalities;
  std::vector<ConstraintFn> equalities;
  Vector default_start;     // empty when the problem has no canonical start
  Vector box_lo, box_hi;    // sampling box for derivative checks; may be empty
};

inline void validate_problem(const Problem& p) {
  if (p.dim <= 0) throw SolverError("problem dimension must be positive");
  if (!p.objective.value || !p.objective.gradient)
    throw SolverError("problem objective must define value and gradient");
  for (std::size_t i = 0; i < p.inequalities.size(); ++i) {
    const ConstraintFn& g = p.inequalities[i];
    if (g.label != static_cast<int>(i) + 1)
      throw SolverError("inequality labels must be contiguous from 1");
    if (!g.value || !g.gradient)
      throw SolverError("inequality " + std::to_string(g.label) +
                        " must define value and gradient");
  }
  for (std::size_t j = 0; j < p.equalities.size(); ++j) {
    const ConstraintFn& h = p.equalities[j];
    if (h.label != static_cast<int>(j) + 1)
      throw SolverError("equality labels must be contiguous from 1");
    if (!h.value || !h.gradient)
      throw SolverError("equality " + std::to_string(h.label) +
                        " must define value and gradient");
  }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

// Knobs for the inner sign-constrained coefficient QP.
struct ProjectionOptions {
  double inner_eps = 1e-10;        // stop when ||truncated gradient|| <= this
  long long max_iter = 30000000;   // iteration budget before InnerSolverStall
  double quad_step_scale = 1.5;    // c_q: margin-derived stepsize multiple
  double zero_tol = 1e-12;         // coordinates at or below count as zero
  double cond_tol = 1e-12;         // Gram reciprocal-condition floor
};

struct SolverConfig {
  double tau = 1.0;                // initial trial stepsize
  double eps = 1e-4;               // terminate when ||d(u)|| < eps
  double feas_tol = 1e-7;          // strict margin required of inactive constraints
  double active_tol = 1e-5;        // |g_i(u)| <= active_tol marks i active
  double wis_rel_tol = 1e-5;       // working-set threshold on |<g'_i,d>|/||d||
  double newton_tol = 1e-10;       // correction residual target (sup norm)
  int newton_max_iter = 25;
  int max_outer_iter = 10000;
  double backtrack_factor = 0.5;
  int max_backtracks = 60;
  bool normalize_direction = false;  // scale steps by 1/max(1,||d||)
  ProjectionOptions projection{};
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

enum class FeasibilityKind { Interior, OnBoundary, Infeasible };

struct ConstraintViolation {
  int label = 0;
  double value = 0.0;
  bool equality = false;
};

struct FeasibilityVerdict {
  FeasibilityKind kind = FeasibilityKind::Interior;
  IndexSet active;  // inequality labels with |g_i(u)| <= active_tol
  std::vector<ConstraintViolation> violations;
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  InfeasibleStart,
  Stalled,
  LicqFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::InfeasibleStart: return "InfeasibleStart";
    case SolveStatus::Stalled: return "Stalled";
    case SolveStatus::LicqFailure: return "LicqFailure";
  }
  return "Unknown";
}

// State at iterate k plus the accepted step that produced it. `t` and
// `corrections` are absent/empty at k = 0; `working` is empty on the final
// record because termination short-circuits the classification.
struct IterateRecord {
  int k = 0;
  Vector u;
  double J = 0.0;
  double d_norm = 0.0;  // NaN when the direction could not be computed
  IndexSet active;
  IndexSet working;
  std::optional<double> t;
  std::vector<double> corrections;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Stalled;
  Vector final_u;
  double final_J = 0.0;
  double final_d_norm = 0.0;
  IndexSet final_active;
  std::vector<double> mu;      // multipliers aligned with final_active
  std::vector<double> lambda;  // equality multipliers, label order
  std::vector<IterateRecord> trace;
  std::string message;
};

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

inline double eval_value(const ConstraintFn& f, const Vector& u) {
  double v = f.value(u);
  if (!std::isfinite(v))
    throw EvaluationError("non-finite value from function with label " +
                              std::to_string(f.label),
                          f.label);
  return v;
}

inline Vector eval_gradient(const ConstraintFn& f, const Vector& u) {
  Vector g = f.gradient(u);
  if (!g.allFinite())
    throw EvaluationError("non-finite gradient from function with label " +
                              std::to_string(f.label),
                          f.label);
  return g;
}

// Classifies u against the constraint system: Infeasible lists every
// inequality with g_i(u) > active_tol and every equality with
// |h_j(u)| > active_tol; otherwise the active set collects inequalities with
// |g_i(u)| <= active_tol, and its emptiness separates Interior/OnBoundary.
inline FeasibilityVerdict check_feasibility(const Problem& p, const Vector& u,
                                            double /*feas_tol*/,
                                            double active_tol) {
  FeasibilityVerdict out;
  for (const ConstraintFn& g : p.inequalities) {
    double v = eval_value(g, u);
    if (v > active_tol)
      out.violations.push_back({g.label, v, false});
    else if (std::abs(v) <= active_tol)
      out.active.push_back(g.label);
  }
  for (const ConstraintFn& h : p.equalities) {
    double v = eval_value(h, u);
    if (std::abs(v) > active_tol) out.violations.push_back({h.label, v, true});
  }
  if (!out.violations.empty())
    out.kind = FeasibilityKind::Infeasible;
  else
    out.kind = out.active.empty() ? FeasibilityKind::Interior
                                  : FeasibilityKind::OnBoundary;
  return out;
}

// Central finite differences, componentwise stepsize h.
inline Vector finite_diff_gradient(
    const std::function<double(const Vector&)>& f, const Vector& u,
    double h = 1e-6) {
  Vector g(u.size());
  Vector up = u, um = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    up(i) = u(i) + h;
    um(i) = u(i) - h;
    double fp = f(up);
    double fm = f(um);
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw EvaluationError(
          "non-finite value while differencing coordinate " +
          std::to_string(i + 1));
    g(i) = (fp - fm) / (2.0 * h);
    up(i) = u(i);
    um(i) = u(i);
  }
  return g;
}

// ||fd - analytic|| / max(1, ||analytic||); the scale floor keeps the measure
// meaningful near stationary points.
inline double relative_gradient_error(const ConstraintFn& f, const Vector& u,
                                      double h = 1e-6) {
  Vector an = eval_gradient(f, u);
  Vector fd = finite_diff_gradient(f.value, u, h);
  return (fd - an).norm() / std::max(1.0, an.norm());
}

}  // namespace csdm
