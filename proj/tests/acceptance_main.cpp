// End-to-end acceptance harness: nine checks over the projection kernel, the
// direction machinery, the corrected descent loop, and the benchmark
// endpoints. Prints one PASS/FAIL line per check with the measured values and
// exits with the number of failures. argv[1] overrides the problem-file
// directory (default "problems").

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csdm/fuzz.hpp"
#include "csdm/problems.hpp"
#include "csdm/solver.hpp"

using namespace csdm;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string sci(double v) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(2) << v;
  return o.str();
}

std::string fix(double v, int prec = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

struct CheckResult {
  bool ok = false;
  std::string detail;
};

struct BenchResult {
  BenchmarkRun run;
  Problem problem;
  SolveReport report;
};

std::vector<BenchResult> run_benchmark_suite(double& wall) {
  std::vector<BenchResult> out;
  auto t0 = Clock::now();
  for (const BenchmarkRun& run : benchmark_suite()) {
    BenchResult br{run, builtin_problem(run.problem), {}};
    br.report = solve(br.problem, run.start);
    out.push_back(std::move(br));
  }
  wall = seconds_since(t0);
  return out;
}

// --- 1 & 2: random cone projections against the enumeration oracle ---------

CheckResult check_projection_oracle(const FuzzReport& rep, double wall) {
  bool ok = rep.instances == 1000 && rep.failures.empty() &&
            rep.max_point_err <= 1e-6 && wall <= 10.0;
  std::ostringstream d;
  d << rep.instances << " instances, max point err " << sci(rep.max_point_err)
    << ", " << rep.failures.size() << " failures, " << fix(wall, 2) << " s";
  if (!rep.failures.empty()) d << "; first: " << rep.failures.front().what;
  return {ok, d.str()};
}

CheckResult check_projection_identities(const FuzzReport& rep) {
  double worst = std::max({rep.max_orthogonality, rep.max_norm_identity,
                           rep.max_edge_obtuse, rep.max_free_align});
  bool ok = worst <= 1e-8;
  std::ostringstream d;
  d << "residual-projection orthogonality " << sci(rep.max_orthogonality)
    << ", norm split " << sci(rep.max_norm_identity) << ", edge obtuse "
    << sci(rep.max_edge_obtuse) << ", free alignment "
    << sci(rep.max_free_align);
  return {ok, d.str()};
}

// --- 3: direction identities along every benchmark trajectory --------------

CheckResult check_direction_identities(const std::vector<BenchResult>& bench) {
  SolverConfig cfg;
  double worst_inner = 0.0, worst_split = 0.0, worst_orth = 0.0;
  double worst_edge = -1e300, worst_face = 0.0;
  long iterates = 0;

  for (const BenchResult& br : bench) {
    for (const IterateRecord& rec : br.report.trace) {
      DirectionBundle b =
          descent_direction(br.problem, rec.u, rec.active, cfg.projection);
      ++iterates;
      double dsq = b.d.squaredNorm();
      double gsq = b.minus_grad.squaredNorm();
      worst_inner =
          std::max(worst_inner, std::abs(b.minus_grad.dot(b.d) - dsq) /
                                    std::max(1.0, dsq));
      worst_split = std::max(
          worst_split,
          std::abs(dsq - (gsq - b.projection.squaredNorm())) /
              std::max(1.0, gsq));
      worst_orth = std::max(worst_orth, std::abs(b.d.dot(b.projection)) /
                                            std::max(1.0, gsq));
      for (const Vector& g : b.active_gradients)
        worst_edge = std::max(worst_edge, g.dot(b.d));

      if (b.d_norm >= cfg.eps) {
        classify_working_set(b, cfg.wis_rel_tol);
        LabeledBasis face = active_cone_basis(br.problem, rec.u, b.working);
        ProjectionResult pr =
            project_onto_cone(face.basis, b.minus_grad, cfg.projection);
        worst_face = std::max(
            worst_face, (b.minus_grad - pr.point - b.d).norm() /
                            std::max(1.0, b.d_norm));
      }
    }
  }

  bool ok = worst_inner <= 1e-8 && worst_split <= 1e-8 && worst_orth <= 1e-8 &&
            worst_edge <= 1e-8 && worst_face <= 1e-8;
  std::ostringstream d;
  d << iterates << " iterates; <-J',d>=|d|^2 err " << sci(worst_inner)
    << ", norm split err " << sci(worst_split) << ", <d,proj> "
    << sci(worst_orth) << ", max <g',d> " << sci(worst_edge)
    << ", face reprojection " << sci(worst_face);
  return {ok, d.str()};
}

// --- 4: superlinear decay of the boundary correction ------------------------

CheckResult check_superlinear_correction() {
  auto t0 = Clock::now();
  SolverConfig cfg;
  struct Arc {
    Problem problem;
    std::vector<Vector> points;
  };
  std::vector<Arc> arcs;

  Arc disk{rosenbrock_disk_problem(), {}};
  for (double theta : {0.79, 0.80, 0.81, 0.82, 0.83})
    disk.points.push_back(vec2(std::sqrt(2.0) * std::cos(theta),
                               std::sqrt(2.0) * std::sin(theta)));
  arcs.push_back(std::move(disk));

  Arc bird{mishra_bird_problem(), {}};
  for (double phi : {2.33, 2.36, 2.39, 2.42, 2.45})
    bird.points.push_back(
        vec2(-5.0 + 5.0 * std::cos(phi), -5.0 + 5.0 * std::sin(phi)));
  arcs.push_back(std::move(bird));

  double worst_decay = 1e300;
  int points = 0;
  bool ok = true;
  for (const Arc& arc : arcs) {
    for (const Vector& u : arc.points) {
      DirectionBundle b = descent_direction(
          arc.problem, u, active_set(arc.problem, u, cfg.active_tol),
          cfg.projection);
      classify_working_set(b, cfg.wis_rel_tol);
      if (b.working != IndexSet{1}) {
        ok = false;
        continue;
      }
      CorrectionBasis basis = correction_basis(arc.problem, u, b.working);
      std::vector<ProbePoint> pts =
          superlinearity_probe(u, b.d, basis, {1e-2, 1e-3, 1e-4}, cfg);
      ++points;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double decay = pts[i].ratio / pts[i + 1].ratio;
        worst_decay = std::min(worst_decay, decay);
        ok = ok && decay >= 5.0;
      }
    }
  }
  double wall = seconds_since(t0);
  ok = ok && points == 10 && wall <= 5.0;
  std::ostringstream d;
  d << points << " boundary points, worst decay per decade "
    << fix(worst_decay, 2) << "x (need >= 5), " << fix(wall, 2) << " s";
  return {ok, d.str()};
}

// --- 5: monotone descent with the stated margin; feasible iterates ---------

CheckResult check_descent_and_feasibility(
    const std::vector<BenchResult>& bench) {
  SolverConfig cfg;
  long steps = 0, margin_violations = 0, infeasible = 0;
  double worst_slack = 1e300;

  for (const BenchResult& br : bench) {
    const std::vector<IterateRecord>& tr = br.report.trace;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (check_feasibility(br.problem, tr[i].u, cfg.feas_tol, cfg.active_tol)
              .kind == FeasibilityKind::Infeasible)
        ++infeasible;
      if (i == 0) continue;
      ++steps;
      double bound =
          -(tr[i].t.value() / 2.0) * tr[i - 1].d_norm * tr[i - 1].d_norm;
      double slack = bound * (1.0 - 1e-12) - (tr[i].J - tr[i - 1].J);
      worst_slack = std::min(worst_slack, slack);
      if (!(slack > 0.0)) ++margin_violations;
    }
  }
  bool ok = margin_violations == 0 && infeasible == 0;
  std::ostringstream d;
  d << steps << " accepted steps, " << margin_violations
    << " margin violations, " << infeasible
    << " infeasible iterates, tightest margin slack " << sci(worst_slack);
  return {ok, d.str()};
}

// --- 6: benchmark endpoints -------------------------------------------------

const BenchResult& find_run(const std::vector<BenchResult>& bench,
                            const std::string& tag) {
  for (const BenchResult& br : bench)
    if (br.run.tag == tag) return br;
  throw NotFound("missing benchmark tag " + tag);
}

CheckResult check_benchmark_endpoints(const std::vector<BenchResult>& bench,
                                      double suite_wall) {
  SolverConfig cfg;
  std::ostringstream d;
  bool ok = true;
  auto fail = [&](const std::string& why) {
    ok = false;
    d << " [" << why << "]";
  };
  auto near = [](const Vector& u, double x, double y, double tol) {
    return (u - vec2(x, y)).norm() <= tol;
  };

  {
    const BenchResult& br = find_run(bench, "cubic-above");
    d << "cubic-above -> (" << fix(br.report.final_u(0)) << ", "
      << fix(br.report.final_u(1)) << ") in " << br.report.trace.back().k
      << " iters;";
    if (br.report.status != SolveStatus::Converged) fail("cubic-above status");
    if (!near(br.report.final_u, 1.0, 1.0, 1e-3)) fail("cubic-above endpoint");
    if (br.report.trace.back().k > 200) fail("cubic-above iterations");
  }
  {
    const BenchResult& br = find_run(bench, "cubic-origin");
    double g1 = br.problem.inequalities[0].value(br.report.final_u);
    double prox = (br.report.final_u - vec2(0.0011, 0.0033)).norm();
    d << " cubic-origin -> (" << fix(br.report.final_u(0), 5) << ", "
      << fix(br.report.final_u(1), 5) << "), |d| "
      << sci(br.report.final_d_norm) << ", distance to (0.0011, 0.0033) "
      << sci(prox) << " (reported, not asserted);";
    if (br.report.status != SolveStatus::Converged) fail("cubic-origin status");
    if (br.report.final_active != IndexSet{1}) fail("cubic-origin active set");
    if (!(br.report.final_d_norm < 1e-4)) fail("cubic-origin |d|");
    if (std::abs(g1) > cfg.active_tol) fail("cubic-origin not on surface");
  }
  {
    const BenchResult& br = find_run(bench, "disk-rim");
    const auto& tr = br.report.trace;
    bool shed = false;
    for (std::size_t i = 1; i < tr.size(); ++i)
      shed = shed || (!tr[i - 1].active.empty() && tr[i].active.empty());
    d << " disk-rim -> (" << fix(br.report.final_u(0)) << ", "
      << fix(br.report.final_u(1)) << ") in " << tr.back().k << " iters;";
    if (br.report.status != SolveStatus::Converged) fail("disk-rim status");
    if (!near(br.report.final_u, 1.0, 1.0, 1e-2)) fail("disk-rim endpoint");
    if (!shed) fail("disk-rim active set never shed to empty");
    if (tr.back().k > 5000) fail("disk-rim iterations");
  }
  {
    const BenchResult& br = find_run(bench, "disk-upper-rim");
    const auto& tr = br.report.trace;
    bool empty_early = false;
    for (std::size_t i = 0; i < tr.size() && tr[i].k <= 5; ++i)
      empty_early = empty_early || tr[i].active.empty();
    d << " disk-upper-rim -> (" << fix(br.report.final_u(0)) << ", "
      << fix(br.report.final_u(1)) << ");";
    if (br.report.status != SolveStatus::Converged)
      fail("disk-upper-rim status");
    if (!near(br.report.final_u, 1.0, 1.0, 1e-2))
      fail("disk-upper-rim endpoint");
    if (!empty_early) fail("disk-upper-rim active set not empty within 5");
  }
  {
    const BenchResult& br = find_run(bench, "bird-tangency");
    d << " bird -> (" << fix(br.report.final_u(0)) << ", "
      << fix(br.report.final_u(1)) << "), J " << fix(br.report.final_J) << ";";
    if (br.report.status != SolveStatus::Converged) fail("bird status");
    if (!near(br.report.final_u, -3.1302, -1.5821, 1e-2))
      fail("bird endpoint");
    if (std::abs(br.report.final_J - (-106.7645)) > 1e-2) fail("bird J");
  }
  {
    const BenchResult& br = find_run(bench, "gomez-feasible");
    d << " gomez -> (" << fix(br.report.final_u(0)) << ", "
      << fix(br.report.final_u(1)) << "), J " << fix(br.report.final_J, 6)
      << ";";
    if (br.report.status != SolveStatus::Converged) fail("gomez status");
    if (!near(br.report.final_u, 0.0898, -0.7126, 1e-2))
      fail("gomez endpoint");
    if (std::abs(br.report.final_J - (-1.0316)) > 1e-3) fail("gomez J");
  }
  d << " suite " << fix(suite_wall, 2) << " s";
  if (suite_wall > 60.0) fail("suite runtime");
  return {ok, d.str()};
}

// --- 7: reductions ----------------------------------------------------------

CheckResult check_reductions() {
  std::ostringstream d;
  bool ok = true;

  // (a) Unconstrained: the trajectory must be bit-identical to a plain
  // steepest-descent loop sharing the stepsize rule.
  Problem rosen;
  rosen.name = "rosenbrock";
  rosen.dim = 2;
  rosen.objective = rosenbrock_cubic_problem().objective;
  SolverConfig cfg;
  cfg.max_outer_iter = 300;
  SolveReport rep = solve(rosen, vec2(-1.2, 1.0), cfg);

  long mismatches = 0;
  if (rep.status != SolveStatus::MaxIterations ||
      rep.trace.size() != static_cast<std::size_t>(cfg.max_outer_iter) + 1) {
    ok = false;
    d << "unexpected unconstrained run shape; ";
  } else {
    Vector u = vec2(-1.2, 1.0);
    double J_u = eval_value(rosen.objective, u);
    for (int k = 0; k <= cfg.max_outer_iter; ++k) {
      const IterateRecord& rec = rep.trace[static_cast<std::size_t>(k)];
      if (rec.u(0) != u(0) || rec.u(1) != u(1) || rec.J != J_u) ++mismatches;
      if (k == cfg.max_outer_iter) break;

      Vector dvec = -eval_gradient(rosen.objective, u);
      double scale = 1.0;
      Vector d_step = dvec / scale;
      double margin_coeff = 0.5 * dvec.squaredNorm() / scale;
      double t = cfg.tau;
      for (int j = 0; j <= cfg.max_backtracks; ++j, t *= cfg.backtrack_factor) {
        Vector trial = u + t * d_step;
        double J_t = rosen.objective.value(trial);
        if (!std::isfinite(J_t)) continue;
        if (!(J_t - J_u < -(t * margin_coeff))) continue;
        u = trial;
        J_u = J_t;
        break;
      }
      const IterateRecord& next = rep.trace[static_cast<std::size_t>(k) + 1];
      if (!next.t.has_value() || next.t.value() != t) ++mismatches;
    }
    ok = ok && mismatches == 0;
    d << "301 steepest-descent iterates, " << mismatches
      << " bitwise mismatches; ";
  }

  // (b) Affine working constraints: every recorded correction coefficient is
  // the exact zero of the linear fast path.
  auto all_linear_run = [&](const Problem& p, const Vector& start,
                            const char* label) {
    SolveReport r = solve(p, start);
    long coeffs = 0;
    bool zeros = true;
    bool saw_rows = false;
    for (const IterateRecord& rec : r.trace) {
      for (double c : rec.corrections) {
        ++coeffs;
        zeros = zeros && c == 0.0;
      }
      saw_rows = saw_rows || !rec.corrections.empty();
    }
    bool run_ok = r.status == SolveStatus::Converged && saw_rows && zeros;
    d << label << " " << coeffs << " correction coefficients"
      << (zeros ? ", all exactly zero" : ", NONZERO FOUND") << "; ";
    return run_ok;
  };

  Problem line;
  line.name = "line";
  line.dim = 2;
  line.objective = detail::make_fn(
      0, false, [](const Vector& u) { return u.squaredNorm(); },
      [](const Vector& u) { return Vector(2.0 * u); });
  line.equalities.push_back(detail::make_fn(
      1, true, [](const Vector& u) { return u(0) + u(1) - 1.0; },
      [](const Vector&) { return vec2(1.0, 1.0); }));
  ok = all_linear_run(line, vec2(1.0, 0.0), "equality line:") && ok;

  Problem half;
  half.name = "half";
  half.dim = 2;
  half.objective = detail::make_fn(
      0, false,
      [](const Vector& u) {
        return (u(0) - 2.0) * (u(0) - 2.0) + u(1) * u(1);
      },
      [](const Vector& u) { return vec2(2.0 * (u(0) - 2.0), 2.0 * u(1)); });
  half.inequalities.push_back(detail::make_fn(
      1, true, [](const Vector& u) { return u(1); },
      [](const Vector&) { return vec2(0.0, 1.0); }));
  ok = all_linear_run(half, vec2(0.0, 0.0), "active halfplane:") && ok;

  return {ok, d.str()};
}

// --- 8: the projected direction dominates every correctable probe ----------

CheckResult check_direction_optimality(const std::vector<BenchResult>& bench) {
  SolverConfig cfg;

  struct Candidate {
    const Problem* problem;
    const IterateRecord* rec;
    bool working_nonempty;
  };
  std::vector<Candidate> cands;
  for (const BenchResult& br : bench)
    for (const IterateRecord& rec : br.report.trace)
      if (std::isfinite(rec.d_norm) && rec.d_norm >= cfg.eps)
        cands.push_back({&br.problem, &rec, !rec.working.empty()});
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.working_nonempty > b.working_nonempty;
                   });
  if (cands.size() > 10) cands.resize(10);

  std::mt19937_64 rng(2026);
  std::normal_distribution<double> gauss(0.0, 1.0);
  long probes = 0, violations = 0;
  double worst_steepness = 1e300, worst_norm_gap = 1e300;

  for (const Candidate& cand : cands) {
    const Problem& p = *cand.problem;
    DirectionBundle b =
        descent_direction(p, cand.rec->u, cand.rec->active, cfg.projection);
    classify_working_set(b, cfg.wis_rel_tol);

    std::vector<Vector> cols;
    for (std::size_t i = 0; i < b.active.size(); ++i)
      if (detail::contains(b.working, b.active[i]))
        cols.push_back(b.active_gradients[i]);
    for (const ConstraintFn& h : p.equalities)
      cols.push_back(eval_gradient(h, cand.rec->u));
    Matrix D(b.d.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      D.col(static_cast<Eigen::Index>(i)) = cols[i];

    Vector grad = -b.minus_grad;
    double grad_sq = grad.squaredNorm();
    double dir_deriv = grad.dot(b.d);  // equals -|d|^2 by the identity
    double slack_sq = 1e-8 * std::max(1.0, grad_sq);
    double slack = 1e-8 * std::max(1.0, grad.norm());

    for (int rep = 0; rep < 100; ++rep) {
      Vector r(b.d.size());
      double norm = 0.0;
      do {
        for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = gauss(rng);
        if (D.cols() > 0) r -= D * D.colPivHouseholderQr().solve(r);
        norm = r.norm();
      } while (norm < 1e-8);
      r /= norm;

      ++probes;
      double a = grad.dot(r);  // probe direction is <-J', r> r
      worst_steepness = std::min(worst_steepness, -a * a - dir_deriv);
      worst_norm_gap = std::min(worst_norm_gap, b.d_norm - std::abs(a));
      bool probe_ok = dir_deriv <= -a * a + slack_sq &&
                      std::abs(a) <= b.d_norm + slack && dir_deriv <= slack_sq;
      if (!probe_ok) ++violations;
    }
  }

  bool ok = cands.size() == 10 && violations == 0;
  std::ostringstream d;
  d << cands.size() << " iterates x 100 probes, " << violations
    << " violations; min steepness margin " << sci(worst_steepness)
    << ", min norm margin " << sci(worst_norm_gap);
  return {ok, d.str()};
}

// --- 9: analytic gradients vs central differences --------------------------

double problem_gradcheck(const Problem& p, std::mt19937_64& rng) {
  double worst = 0.0;
  std::vector<const ConstraintFn*> fns;
  fns.push_back(&p.objective);
  for (const ConstraintFn& g : p.inequalities) fns.push_back(&g);
  for (const ConstraintFn& h : p.equalities) fns.push_back(&h);

  for (int s = 0; s < 100; ++s) {
    Vector u(p.dim);
    for (int i = 0; i < p.dim; ++i) {
      std::uniform_real_distribution<double> coord(p.box_lo(i), p.box_hi(i));
      u(i) = coord(rng);
    }
    for (const ConstraintFn* f : fns)
      worst = std::max(worst, relative_gradient_error(*f, u));
  }
  return worst;
}

CheckResult check_gradients(const std::string& problems_dir) {
  std::mt19937_64 rng(7);
  double worst_builtin = 0.0, worst_parsed = 0.0;
  for (const std::string& name : builtin_names()) {
    worst_builtin =
        std::max(worst_builtin, problem_gradcheck(builtin_problem(name), rng));
    Problem parsed = load_problem_file(problems_dir + "/" + name + ".prob");
    worst_parsed = std::max(worst_parsed, problem_gradcheck(parsed, rng));
  }
  bool ok = worst_builtin <= 1e-6 && worst_parsed <= 1e-6;
  std::ostringstream d;
  d << "builtins max rel err " << sci(worst_builtin)
    << ", parsed files max rel err " << sci(worst_parsed);
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::string problems_dir = argc > 1 ? argv[1] : "problems";
  int failures = 0;
  auto report = [&](int idx, const std::string& name, CheckResult r) {
    std::cout << (r.ok ? "[PASS] " : "[FAIL] ") << idx << ". " << name << ": "
              << r.detail << "\n";
    if (!r.ok) ++failures;
  };
  auto guarded = [](auto&& fn) -> CheckResult {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  FuzzReport fuzz;
  double fuzz_wall = 0.0;
  report(1, "random cone projections match the enumeration oracle",
         guarded([&] {
           auto t0 = Clock::now();
           fuzz = run_projection_fuzz(FuzzOptions{});
           fuzz_wall = seconds_since(t0);
           return check_projection_oracle(fuzz, fuzz_wall);
         }));
  report(2, "projection identities hold on the same instances",
         guarded([&] { return check_projection_identities(fuzz); }));

  std::vector<BenchResult> bench;
  double suite_wall = 0.0;
  report(3, "direction identities hold at every benchmark iterate",
         guarded([&] {
           bench = run_benchmark_suite(suite_wall);
           return check_direction_identities(bench);
         }));
  report(4, "boundary corrections decay superlinearly",
         guarded([&] { return check_superlinear_correction(); }));
  report(5, "accepted steps descend with margin and stay feasible",
         guarded([&] { return check_descent_and_feasibility(bench); }));
  report(6, "benchmark endpoints land where expected",
         guarded([&] { return check_benchmark_endpoints(bench, suite_wall); }));
  report(7, "unconstrained and affine runs reduce to their simple forms",
         guarded([&] { return check_reductions(); }));
  report(8, "projected direction dominates every correctable probe",
         guarded([&] { return check_direction_optimality(bench); }));
  report(9, "analytic gradients match central differences",
         guarded([&] { return check_gradients(problems_dir); }));

  std::cout << (failures == 0 ? "all acceptance checks passed"
                              : std::to_string(failures) + " check(s) failed")
            << "\n";
  return failures;
}
