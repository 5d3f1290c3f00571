// csdm: run the working-set descent solver on builtin or file-defined
// problems, emit iteration traces, and exercise the validation harnesses.
//
// Exit codes: 0 success / Converged; 2 solver failure (MaxIterations,
// Stalled, dependent gradients) or failed check; 3 infeasible start;
// 4 usage error (unresolvable problem, malformed flags, bad start vector).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csdm/core.hpp"
#include "csdm/fuzz.hpp"
#include "csdm/problems.hpp"
#include "csdm/solver.hpp"
#include "csdm/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitUsage = 4;

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_vector(const csdm::Vector& u) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (i) out += ", ";
    out += fmt4(u(i));
  }
  return out + ")";
}

std::string fmt_set(const csdm::IndexSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

// Resolves --problem: an existing path is parsed as a problem file, anything
// else must be a builtin name.
csdm::Problem resolve_problem(const std::string& selector) {
  if (std::filesystem::exists(selector))
    return csdm::load_problem_file(selector);
  return csdm::builtin_problem(selector);
}

csdm::Vector parse_start(const std::string& text, int dim) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream ss(cleaned);
  std::vector<double> vals;
  double v;
  while (ss >> v) vals.push_back(v);
  if (!ss.eof())
    throw csdm::ParseError("start vector '" + text + "' is not numeric");
  if (static_cast<int>(vals.size()) != dim)
    throw csdm::ParseError("start vector needs " + std::to_string(dim) +
                           " components, got " + std::to_string(vals.size()));
  return Eigen::Map<csdm::Vector>(vals.data(),
                                  static_cast<Eigen::Index>(vals.size()));
}

// Consecutive iterates sharing (I_A, I_W) collapse into one table row.
void print_set_evolution(const std::vector<csdm::IterateRecord>& trace) {
  std::cout << "active/working evolution:\n";
  std::size_t i = 0;
  while (i < trace.size()) {
    std::size_t j = i;
    while (j + 1 < trace.size() && trace[j + 1].active == trace[i].active &&
           trace[j + 1].working == trace[i].working)
      ++j;
    std::string range = "k " + std::to_string(trace[i].k);
    if (j > i) range += "-" + std::to_string(trace[j].k);
    std::printf("  %-12s I_A=%-10s I_W=%s\n", range.c_str(),
                fmt_set(trace[i].active).c_str(),
                fmt_set(trace[i].working).c_str());
    i = j + 1;
  }
}

void print_table_summary(const csdm::Problem& p, const csdm::SolveReport& rep) {
  std::printf("%-12s %s\n", "problem", p.name.c_str());
  std::printf("%-12s %s\n", "status", csdm::to_string(rep.status));
  std::printf("%-12s %d\n", "iterations",
              rep.trace.empty() ? 0 : rep.trace.back().k);
  std::printf("%-12s %s\n", "final u", fmt_vector(rep.final_u).c_str());
  std::printf("%-12s %s\n", "final J", fmt4(rep.final_J).c_str());
  std::printf("%-12s %s\n", "final |d|", fmt4(rep.final_d_norm).c_str());
  if (!rep.final_active.empty() &&
      rep.mu.size() == rep.final_active.size()) {
    std::string mus;
    for (std::size_t i = 0; i < rep.mu.size(); ++i) {
      if (i) mus += ", ";
      mus += "g" + std::to_string(rep.final_active[i]) + ": " + fmt4(rep.mu[i]);
    }
    std::printf("%-12s %s\n", "multipliers", mus.c_str());
  }
  for (std::size_t j = 0; j < rep.lambda.size(); ++j)
    std::printf("%-12s h%zu: %s\n", j ? "" : "equalities", j + 1,
                fmt4(rep.lambda[j]).c_str());
  if (!rep.message.empty())
    std::printf("%-12s %s\n", "note", rep.message.c_str());
  print_set_evolution(rep.trace);
}

void print_json_summary(const csdm::Problem& p, const csdm::SolveReport& rep,
                        const std::string& trace_path) {
  nlohmann::json j;
  j["problem"] = p.name;
  j["status"] = csdm::to_string(rep.status);
  j["iterations"] = rep.trace.empty() ? 0 : rep.trace.back().k;
  j["final_u"] = std::vector<double>(rep.final_u.data(),
                                     rep.final_u.data() + rep.final_u.size());
  j["final_J"] = rep.final_J;
  j["final_d_norm"] = rep.final_d_norm;
  j["final_active"] = rep.final_active;
  j["mu"] = rep.mu;
  j["lambda"] = rep.lambda;
  if (!rep.message.empty()) j["message"] = rep.message;
  if (!trace_path.empty()) j["trace"] = trace_path;
  std::cout << j.dump(2) << "\n";
}

int cmd_solve(const std::string& selector, const std::string& start_text,
              const csdm::SolverConfig& cfg, const std::string& trace_path,
              const std::string& format) {
  csdm::Problem p;
  try {
    p = resolve_problem(selector);
  } catch (const csdm::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  csdm::Vector start;
  try {
    start = start_text.empty() ? p.default_start : parse_start(start_text, p.dim);
  } catch (const csdm::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (start.size() != p.dim) {
    std::cerr << "error: problem '" << p.name
              << "' has no default start; pass --start\n";
    return kExitUsage;
  }

  csdm::SolveReport rep;
  try {
    rep = csdm::solve(p, start, cfg);
  } catch (const csdm::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }

  if (!trace_path.empty()) {
    std::ofstream os(trace_path, std::ios::binary);
    if (!os) {
      std::cerr << "error: cannot write trace file '" << trace_path << "'\n";
      return kExitUsage;
    }
    csdm::write_trace_csv(os, rep.trace, p.dim);
  }

  if (format == "json")
    print_json_summary(p, rep, trace_path);
  else
    print_table_summary(p, rep);

  switch (rep.status) {
    case csdm::SolveStatus::Converged: return kExitOk;
    case csdm::SolveStatus::InfeasibleStart: return kExitInfeasible;
    default: return kExitSolverFailure;
  }
}

int cmd_list() {
  for (const std::string& name : csdm::builtin_names()) {
    csdm::Problem p = csdm::builtin_problem(name);
    std::printf("%-20s dim=%d ineq=%zu eq=%zu start=%s\n", name.c_str(), p.dim,
                p.inequalities.size(), p.equalities.size(),
                fmt_vector(p.default_start).c_str());
  }
  return kExitOk;
}

int gradcheck_one(const csdm::Problem& p, int samples, std::uint64_t seed,
                  double tol) {
  std::mt19937_64 rng(seed);
  csdm::Vector lo = p.box_lo.size() == p.dim
                        ? p.box_lo
                        : csdm::Vector::Constant(p.dim, -2.0);
  csdm::Vector hi = p.box_hi.size() == p.dim
                        ? p.box_hi
                        : csdm::Vector::Constant(p.dim, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<const csdm::ConstraintFn*> fns{&p.objective};
  std::vector<std::string> names{"objective"};
  for (const csdm::ConstraintFn& g : p.inequalities) {
    fns.push_back(&g);
    names.push_back("g" + std::to_string(g.label));
  }
  for (const csdm::ConstraintFn& h : p.equalities) {
    fns.push_back(&h);
    names.push_back("h" + std::to_string(h.label));
  }

  bool ok = true;
  for (std::size_t f = 0; f < fns.size(); ++f) {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      csdm::Vector u(p.dim);
      for (int i = 0; i < p.dim; ++i)
        u(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
      worst = std::max(worst, csdm::relative_gradient_error(*fns[f], u));
    }
    bool pass = worst <= tol;
    ok = ok && pass;
    std::printf("%-20s %-10s max rel err %.3e %s\n", p.name.c_str(),
                names[f].c_str(), worst, pass ? "ok" : "FAIL");
  }
  return ok ? kExitOk : kExitSolverFailure;
}

int cmd_gradcheck(const std::string& selector, int samples,
                  std::uint64_t seed) {
  std::vector<csdm::Problem> targets;
  try {
    if (selector.empty())
      for (const std::string& name : csdm::builtin_names())
        targets.push_back(csdm::builtin_problem(name));
    else
      targets.push_back(resolve_problem(selector));
  } catch (const csdm::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  int rc = kExitOk;
  for (const csdm::Problem& p : targets) {
    try {
      rc = std::max(rc, gradcheck_one(p, samples, seed, 1e-6));
    } catch (const csdm::EvaluationError& e) {
      std::cerr << "error while sampling '" << p.name << "': " << e.what()
                << "\n";
      rc = std::max(rc, kExitSolverFailure);
    }
  }
  return rc;
}

int cmd_fuzz(const csdm::FuzzOptions& opt) {
  csdm::FuzzReport rep = csdm::run_projection_fuzz(opt);
  std::printf("instances            %lld\n", rep.instances);
  std::printf("regenerated          %lld dependent, %lld ill-conditioned\n",
              rep.regenerated_dependent, rep.regenerated_conditioning);
  std::printf("inner iterations     %lld\n", rep.total_inner_iterations);
  std::printf("max point err        %.3e\n", rep.max_point_err);
  std::printf("max coefficient err  %.3e\n", rep.max_mu_err);
  std::printf("max orthogonality    %.3e\n", rep.max_orthogonality);
  std::printf("max norm identity    %.3e\n", rep.max_norm_identity);
  std::printf("max edge obtuse      %.3e\n", rep.max_edge_obtuse);
  std::printf("max free align       %.3e\n", rep.max_free_align);
  for (const csdm::FuzzFailure& f : rep.failures)
    std::printf("instance %lld failed: %s\n", f.index, f.what.c_str());
  bool ok = rep.pass(opt) && rep.max_mu_err <= opt.point_tol;
  std::printf("result               %s\n", ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitSolverFailure;
}

int cmd_validate(const std::string& path) {
  try {
    csdm::Problem p = csdm::load_problem_file(path);
    int linear = 0;
    for (const csdm::ConstraintFn& g : p.inequalities) linear += g.linear;
    std::printf("%s: ok (dim=%d, %zu inequalities [%d affine], %zu equalities%s)\n",
                p.name.c_str(), p.dim, p.inequalities.size(), linear,
                p.equalities.size(),
                p.default_start.size() == p.dim ? ", start given" : "");
    return kExitOk;
  } catch (const csdm::SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasible-point descent solver with working-set reduction"};
  app.require_subcommand(1);

  // solve
  std::string selector, start_text, trace_path, format = "table";
  csdm::SolverConfig cfg;
  CLI::App* solve = app.add_subcommand("solve", "Run the solver on a problem");
  solve->add_option("--problem", selector, "Builtin name or problem file")
      ->required();
  solve->add_option("--start", start_text, "Start vector, e.g. 0.5,1.5");
  solve->add_option("--eps", cfg.eps, "Termination threshold on ||d||");
  solve->add_option("--tau", cfg.tau, "Initial trial stepsize");
  solve->add_option("--max-iter", cfg.max_outer_iter, "Outer iteration budget");
  solve->add_flag("--normalize", cfg.normalize_direction,
                  "Scale steps by 1/max(1, ||d||)");
  solve->add_option("--trace", trace_path, "Write the iteration trace CSV here");
  solve->add_option("--format", format, "Summary format")
      ->check(CLI::IsMember({"table", "json"}));

  // list
  CLI::App* list = app.add_subcommand("list", "List builtin problems");

  // gradcheck
  std::string gc_selector;
  int gc_samples = 100;
  std::uint64_t gc_seed = 7;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against central differences");
  gradcheck->add_option("--problem", gc_selector,
                        "Builtin name or problem file (default: all builtins)");
  gradcheck->add_option("--samples", gc_samples, "Sample points per function")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "Sampling seed");

  // fuzz-projection
  csdm::FuzzOptions fuzz;
  CLI::App* fz = app.add_subcommand(
      "fuzz-projection",
      "Randomized projection vs subset-enumeration oracle");
  fz->add_option("--count", fuzz.count, "Instances")->check(CLI::NonNegativeNumber);
  fz->add_option("--max-dim", fuzz.max_dim, "Max ambient dimension")
      ->check(CLI::PositiveNumber);
  fz->add_option("--max-edges", fuzz.max_edges, "Max cone edges (<= 20)");
  fz->add_option("--max-free", fuzz.max_free, "Max free-subspace vectors")
      ->check(CLI::NonNegativeNumber);
  fz->add_option("--seed", fuzz.seed, "Generator seed");

  // validate
  std::string validate_path;
  CLI::App* validate =
      app.add_subcommand("validate", "Parse and check a problem file");
  validate->add_option("file", validate_path, "Problem file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (solve->parsed())
    return cmd_solve(selector, start_text, cfg, trace_path, format);
  if (list->parsed()) return cmd_list();
  if (gradcheck->parsed())
    return cmd_gradcheck(gc_selector, gc_samples, gc_seed);
  if (fz->parsed()) {
    if (fuzz.max_edges < 1 || fuzz.max_edges > 20) {
      std::cerr << "error: --max-edges must be in [1, 20]\n";
      return kExitUsage;
    }
    return cmd_fuzz(fuzz);
  }
  if (validate->parsed()) return cmd_validate(validate_path);
  return kExitUsage;
}
