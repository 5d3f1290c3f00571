#pragma once
// Benchmark problem catalog (hand-coded analytic gradients) and the problem
// file reader. File format, one directive per line, '#' starts a comment:
//
//   dim N
//   objective EXPR
//   ineq EXPR        # repeatable, means EXPR <= 0, labeled 1..m in order
//   eq EXPR          # repeatable, means EXPR = 0
//   start V1 V2 ...  # optional; commas or whitespace
//
// Expressions follow the grammar in expr.hpp.

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "csdm/core.hpp"
#include "csdm/expr.hpp"

namespace csdm {

namespace detail {

inline ConstraintFn make_fn(int label, bool linear,
                            std::function<double(const Vector&)> v,
                            std::function<Vector(const Vector&)> g) {
  ConstraintFn f;
  f.label = label;
  f.linear = linear;
  f.value = std::move(v);
  f.gradient = std::move(g);
  return f;
}

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace detail

// Rosenbrock objective restricted by a cubic boundary and a halfplane;
// minimum at (1,1) in the corner of the two constraints.
inline Problem rosenbrock_cubic_problem() {
  using detail::make_fn;
  Problem p;
  p.name = "rosenbrock-cubic";
  p.dim = 2;
  p.objective = make_fn(
      0, false,
      [](const Vector& u) {
        double a = 1.0 - u(0), b = u(1) - u(0) * u(0);
        return a * a + 100.0 * b * b;
      },
      [](const Vector& u) {
        double b = u(1) - u(0) * u(0);
        return detail::vec2(-2.0 * (1.0 - u(0)) - 400.0 * u(0) * b, 200.0 * b);
      });
  p.inequalities.push_back(make_fn(
      1, false,
      [](const Vector& u) {
        double c = u(0) - 1.0;
        return c * c * c - u(1) + 1.0;
      },
      [](const Vector& u) {
        double c = u(0) - 1.0;
        return detail::vec2(3.0 * c * c, -1.0);
      }));
  p.inequalities.push_back(
      make_fn(2, true, [](const Vector& u) { return u(0) + u(1) - 2.0; },
              [](const Vector&) { return detail::vec2(1.0, 1.0); }));
  p.default_start = detail::vec2(0.5, 1.5);
  p.box_lo = detail::vec2(-1.5, -0.5);
  p.box_hi = detail::vec2(1.5, 2.5);
  return p;
}

// Rosenbrock objective inside a disk of radius sqrt(2), with two forbidden
// disks carved out; minimum at (1,1) on the outer circle.
inline Problem rosenbrock_disk_problem() {
  using detail::make_fn;
  Problem p;
  p.name = "rosenbrock-disk";
  p.dim = 2;
  p.objective = rosenbrock_cubic_problem().objective;
  p.inequalities.push_back(make_fn(
      1, false,
      [](const Vector& u) { return u(0) * u(0) + u(1) * u(1) - 2.0; },
      [](const Vector& u) { return detail::vec2(2.0 * u(0), 2.0 * u(1)); }));
  p.inequalities.push_back(make_fn(
      2, false,
      [](const Vector& u) {
        double a = u(0) - 1.0;
        return 0.16 - a * a - u(1) * u(1);
      },
      [](const Vector& u) {
        return detail::vec2(-2.0 * (u(0) - 1.0), -2.0 * u(1));
      }));
  p.inequalities.push_back(make_fn(
      3, false,
      [](const Vector& u) {
        double b = u(1) - 2.0;
        return 1.0 - u(0) * u(0) - b * b;
      },
      [](const Vector& u) {
        return detail::vec2(-2.0 * u(0), -2.0 * (u(1) - 2.0));
      }));
  p.default_start = detail::vec2(1.0, -1.0);
  p.box_lo = detail::vec2(-1.4, -1.4);
  p.box_hi = detail::vec2(1.4, 1.4);
  return p;
}

// Bird-shaped multimodal objective over a disk around (-5,-5) intersected
// with the box [-9,-1] x [-8,0]; the global constrained minimum is the
// interior point near (-3.13, -1.58) with value near -106.76.
inline Problem mishra_bird_problem() {
  using detail::make_fn;
  Problem p;
  p.name = "mishra-bird";
  p.dim = 2;
  p.objective = make_fn(
      0, false,
      [](const Vector& u) {
        double cx = std::cos(u(0)), sy = std::sin(u(1));
        double A = std::exp((1.0 - cx) * (1.0 - cx));
        double B = std::exp((1.0 - sy) * (1.0 - sy));
        double d = u(0) - u(1);
        return sy * A + cx * B + d * d;
      },
      [](const Vector& u) {
        double cx = std::cos(u(0)), sx = std::sin(u(0));
        double cy = std::cos(u(1)), sy = std::sin(u(1));
        double A = std::exp((1.0 - cx) * (1.0 - cx));
        double B = std::exp((1.0 - sy) * (1.0 - sy));
        double d = u(0) - u(1);
        return detail::vec2(
            sy * A * 2.0 * (1.0 - cx) * sx - sx * B + 2.0 * d,
            cy * A - cx * B * 2.0 * (1.0 - sy) * cy - 2.0 * d);
      });
  p.inequalities.push_back(make_fn(
      1, false,
      [](const Vector& u) {
        double a = u(0) + 5.0, b = u(1) + 5.0;
        return a * a + b * b - 25.0;
      },
      [](const Vector& u) {
        return detail::vec2(2.0 * (u(0) + 5.0), 2.0 * (u(1) + 5.0));
      }));
  p.inequalities.push_back(
      make_fn(2, true, [](const Vector& u) { return u(0) + 1.0; },
              [](const Vector&) { return detail::vec2(1.0, 0.0); }));
  p.inequalities.push_back(
      make_fn(3, true, [](const Vector& u) { return -9.0 - u(0); },
              [](const Vector&) { return detail::vec2(-1.0, 0.0); }));
  p.inequalities.push_back(
      make_fn(4, true, [](const Vector& u) { return u(1); },
              [](const Vector&) { return detail::vec2(0.0, 1.0); }));
  p.inequalities.push_back(
      make_fn(5, true, [](const Vector& u) { return -8.0 - u(1); },
              [](const Vector&) { return detail::vec2(0.0, -1.0); }));
  p.default_start = detail::vec2(-5.0, 0.0);
  p.box_lo = detail::vec2(-9.0, -8.0);
  p.box_hi = detail::vec2(-1.0, 0.0);
  return p;
}

// Six-hump-camel objective under a sinusoidal band plus box and sign
// restrictions; the feasible global minimum is near (0.0898, -0.7127) with
// value near -1.0316. The often-quoted start (-1,-1) violates g7 = u1*u2 <= 0
// and is kept only as an infeasibility fixture; the canonical feasible start
// here is (0.5, -0.5).
inline Problem gomez_levy_problem() {
  using detail::make_fn;
  using std::numbers::pi;
  Problem p;
  p.name = "gomez-levy";
  p.dim = 2;
  p.objective = make_fn(
      0, false,
      [](const Vector& u) {
        double x = u(0), y = u(1);
        double x2 = x * x, y2 = y * y;
        return 4.0 * x2 - 2.1 * x2 * x2 + x2 * x2 * x2 / 3.0 + x * y -
               4.0 * y2 + 4.0 * y2 * y2;
      },
      [](const Vector& u) {
        double x = u(0), y = u(1);
        return detail::vec2(
            8.0 * x - 8.4 * x * x * x + 2.0 * x * x * x * x * x + y,
            x - 8.0 * y + 16.0 * y * y * y);
      });
  p.inequalities.push_back(make_fn(
      1, false,
      [](const Vector& u) {
        double s = std::sin(2.0 * pi * u(1));
        return -std::sin(4.0 * pi * u(0)) + 2.0 * s * s - 1.5;
      },
      [](const Vector& u) {
        return detail::vec2(-4.0 * pi * std::cos(4.0 * pi * u(0)),
                            4.0 * pi * std::sin(4.0 * pi * u(1)));
      }));
  p.inequalities.push_back(
      make_fn(2, true, [](const Vector& u) { return -1.0 - u(0); },
              [](const Vector&) { return detail::vec2(-1.0, 0.0); }));
  p.inequalities.push_back(
      make_fn(3, true, [](const Vector& u) { return u(0) - 0.75; },
              [](const Vector&) { return detail::vec2(1.0, 0.0); }));
  p.inequalities.push_back(
      make_fn(4, true, [](const Vector& u) { return -1.0 - u(1); },
              [](const Vector&) { return detail::vec2(0.0, -1.0); }));
  p.inequalities.push_back(
      make_fn(5, true, [](const Vector& u) { return u(1) - 1.0; },
              [](const Vector&) { return detail::vec2(0.0, 1.0); }));
  p.inequalities.push_back(
      make_fn(6, true, [](const Vector& u) { return u(1) - u(0); },
              [](const Vector&) { return detail::vec2(-1.0, 1.0); }));
  p.inequalities.push_back(
      make_fn(7, false, [](const Vector& u) { return u(0) * u(1); },
              [](const Vector& u) { return detail::vec2(u(1), u(0)); }));
  p.default_start = detail::vec2(0.5, -0.5);
  p.box_lo = detail::vec2(-1.0, -1.0);
  p.box_hi = detail::vec2(1.0, 1.0);
  return p;
}

// Strictly convex quadratic over the nonnegative orthant: the coordinate
// gradients -e_i make every projection step explicit, which exercises the
// all-affine fast path end to end. Minimum at (0.5, 0, 0) with value 4.75.
inline Problem orthant_quadratic_problem() {
  using detail::make_fn;
  Problem p;
  p.name = "orthant-quadratic";
  p.dim = 3;
  Matrix G(3, 3);
  G << 4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0;
  Vector target(3);
  target << 1.0, -2.0, 0.5;
  p.objective = make_fn(
      0, false,
      [G, target](const Vector& u) {
        Vector d = u - target;
        return 0.5 * d.dot(G * d);
      },
      [G, target](const Vector& u) { return Vector(G * (u - target)); });
  for (int i = 0; i < 3; ++i) {
    p.inequalities.push_back(make_fn(
        i + 1, true, [i](const Vector& u) { return -u(i); },
        [i](const Vector& u) {
          Vector g = Vector::Zero(u.size());
          g(i) = -1.0;
          return g;
        }));
  }
  p.default_start = Vector::Ones(3);
  p.box_lo = Vector::Zero(3);
  p.box_hi = Vector::Constant(3, 3.0);
  return p;
}

inline std::vector<std::string> builtin_names() {
  return {"rosenbrock-cubic", "rosenbrock-disk", "mishra-bird", "gomez-levy",
          "orthant-quadratic"};
}

inline Problem builtin_problem(const std::string& name) {
  if (name == "rosenbrock-cubic") return rosenbrock_cubic_problem();
  if (name == "rosenbrock-disk") return rosenbrock_disk_problem();
  if (name == "mishra-bird") return mishra_bird_problem();
  if (name == "gomez-levy") return gomez_levy_problem();
  if (name == "orthant-quadratic") return orthant_quadratic_problem();
  std::string known;
  for (const std::string& n : builtin_names())
    known += (known.empty() ? "" : ", ") + n;
  throw NotFound("unknown problem '" + name + "' (known: " + known + ")");
}

// The canonical benchmark runs: every documented feasible start of the
// catalog problems. Used by the trajectory-wide verification suites.
struct BenchmarkRun {
  std::string problem;
  Vector start;
  std::string tag;
};

inline std::vector<BenchmarkRun> benchmark_suite() {
  return {
      {"rosenbrock-cubic", detail::vec2(0.0, 0.0), "cubic-origin"},
      {"rosenbrock-cubic", detail::vec2(0.5, 1.5), "cubic-above"},
      {"rosenbrock-cubic", detail::vec2(0.0, 1.0), "cubic-left"},
      {"rosenbrock-disk", detail::vec2(1.0, -1.0), "disk-rim"},
      {"rosenbrock-disk", detail::vec2(1.25, std::sqrt(7.0) / 4.0),
       "disk-upper-rim"},
      {"mishra-bird", detail::vec2(-5.0, 0.0), "bird-tangency"},
      {"gomez-levy", detail::vec2(0.5, -0.5), "gomez-feasible"},
  };
}

// ---------------------------------------------------------------------------
// Problem files
// ---------------------------------------------------------------------------

inline Problem parse_problem(std::istream& in, const std::string& name) {
  Problem p;
  p.name = name;
  bool have_dim = false, have_objective = false;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);

    if (key == "dim") {
      std::istringstream rs(rest);
      if (!(rs >> p.dim) || p.dim <= 0)
        throw ParseError("line " + std::to_string(lineno) +
                             ": dim needs a positive integer",
                         lineno);
      have_dim = true;
    } else if (key == "objective" || key == "ineq" || key == "eq") {
      if (!have_dim)
        throw ParseError("line " + std::to_string(lineno) +
                             ": dim must come before " + key,
                         lineno);
      expr::NodePtr ast = expr::parse_expression(rest, p.dim, lineno);
      if (key == "objective") {
        if (have_objective)
          throw ParseError("line " + std::to_string(lineno) +
                               ": duplicate objective",
                           lineno);
        p.objective = expr::to_constraint(ast, 0);
        have_objective = true;
      } else if (key == "ineq") {
        p.inequalities.push_back(expr::to_constraint(
            ast, static_cast<int>(p.inequalities.size()) + 1));
      } else {
        p.equalities.push_back(expr::to_constraint(
            ast, static_cast<int>(p.equalities.size()) + 1));
      }
    } else if (key == "start") {
      if (!have_dim)
        throw ParseError("line " + std::to_string(lineno) +
                             ": dim must come before start",
                         lineno);
      for (char& ch : rest)
        if (ch == ',') ch = ' ';
      std::istringstream rs(rest);
      std::vector<double> vals;
      double v;
      while (rs >> v) vals.push_back(v);
      if (static_cast<int>(vals.size()) != p.dim)
        throw ParseError("line " + std::to_string(lineno) + ": start needs " +
                             std::to_string(p.dim) + " values",
                         lineno);
      p.default_start =
          Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    } else {
      throw ParseError(
          "line " + std::to_string(lineno) + ": unknown directive '" + key + "'",
          lineno);
    }
  }
  if (!have_dim) throw ParseError("missing 'dim' directive", 0);
  if (!have_objective) throw ParseError("missing 'objective' directive", 0);
  p.box_lo = Vector::Constant(p.dim, -2.0);
  p.box_hi = Vector::Constant(p.dim, 2.0);
  validate_problem(p);
  return p;
}

inline Problem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open problem file '" + path + "'");
  std::string name = path;
  std::size_t slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  std::size_t dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_problem(in, name);
}

}  // namespace csdm
