#pragma once
// Randomized cross-validation of the iterative cone projection against the
// subset-enumeration oracle, plus the orthogonality identities that
// characterize a Euclidean projection:
//
//   <P, v-P> = 0,   <v, P> = ||P||^2,   <v, v-P> = ||v-P||^2,
//   <e_i, v-P> <= 0 for every edge,     <f_j, v-P> = 0 for free directions.
//
// All quadratic-scale deviations are normalized by max(1, ||v||^2), point
// deviations by max(1, ||v||). Draws whose generator Gram matrix is too
// ill-conditioned are regenerated and counted: below the independence floor
// they are invalid inputs, and below the (much larger) conditioning floor the
// first-order inner iteration would need O(condition) iterations while the
// comparison would only re-measure rounding error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "csdm/cone_projection.hpp"
#include "csdm/core.hpp"

namespace csdm {

struct FuzzOptions {
  long long count = 1000;
  int max_dim = 6;
  int max_edges = 6;
  int max_free = 2;
  std::uint64_t seed = 42;
  double point_tol = 1e-6;      // projection-vs-oracle agreement
  double identity_tol = 1e-8;   // orthogonality identity budget
  double regen_rcond = 1e-6;    // regenerate draws conditioned worse than this
  ProjectionOptions projection{};
};

struct FuzzFailure {
  long long index = 0;
  std::string what;
};

struct FuzzReport {
  long long instances = 0;
  long long regenerated_dependent = 0;     // below the independence floor
  long long regenerated_conditioning = 0;  // below regen_rcond
  long long total_inner_iterations = 0;
  double max_point_err = 0.0;      // ||P - P_oracle|| / max(1, ||v||)
  double max_mu_err = 0.0;         // coefficient deviation, same scale
  double max_orthogonality = 0.0;  // |<P, v-P>| / max(1, ||v||^2)
  double max_norm_identity = 0.0;  // |<v,P>-||P||^2|, |<v,v-P>-||v-P||^2|
  double max_edge_obtuse = 0.0;    // max(0, <e_i, v-P>) / (||e_i|| max(1,||v||))
  double max_free_align = 0.0;     // |<f_j, v-P>| / (||f_j|| max(1,||v||))
  std::vector<FuzzFailure> failures;  // oracle/projection disagreements

  bool pass(const FuzzOptions& opt) const {
    return failures.empty() && max_point_err <= opt.point_tol &&
           max_orthogonality <= opt.identity_tol &&
           max_norm_identity <= opt.identity_tol &&
           max_edge_obtuse <= opt.identity_tol &&
           max_free_align <= opt.identity_tol;
  }
};

inline FuzzReport run_projection_fuzz(const FuzzOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  FuzzReport rep;

  auto unit_vector = [&](int dim) {
    Vector v(dim);
    double n = 0.0;
    do {
      for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
      n = v.norm();
    } while (n < 1e-8);
    return Vector(v / n);
  };

  for (long long idx = 0; idx < opt.count; ++idx) {
    // Draw until the generator Gram matrix is acceptably conditioned.
    ConeBasis basis;
    Vector v;
    for (;;) {
      basis.edges.clear();
      basis.free_dirs.clear();
      int dim = std::uniform_int_distribution<int>(1, opt.max_dim)(rng);
      int nfree = std::uniform_int_distribution<int>(
          0, std::min(opt.max_free, dim - 1))(rng);
      int nedges = std::uniform_int_distribution<int>(
          1, std::max(1, std::min(opt.max_edges, dim - nfree)))(rng);
      for (int i = 0; i < nedges; ++i) basis.edges.push_back(unit_vector(dim));
      for (int j = 0; j < nfree; ++j)
        basis.free_dirs.push_back(unit_vector(dim));
      v.resize(dim);
      for (int i = 0; i < dim; ++i) v(i) = 3.0 * gauss(rng);

      Matrix G = basis.as_matrix().transpose() * basis.as_matrix();
      Eigen::SelfAdjointEigenSolver<Matrix> es(G);
      double lo = es.eigenvalues().minCoeff();
      double hi = es.eigenvalues().maxCoeff();
      double rcond = hi > 0.0 ? lo / hi : 0.0;
      if (rcond < opt.projection.cond_tol) {
        ++rep.regenerated_dependent;
        continue;
      }
      if (rcond < opt.regen_rcond) {
        ++rep.regenerated_conditioning;
        continue;
      }
      break;
    }

    ++rep.instances;
    const double vscale = std::max(1.0, v.norm());
    const double qscale = std::max(1.0, v.squaredNorm());
    try {
      ProjectionResult got = project_onto_cone(basis, v, opt.projection);
      ProjectionResult want = oracle_project_subset_enumeration(basis, v);
      rep.total_inner_iterations += got.inner_iterations;

      rep.max_point_err = std::max(
          rep.max_point_err, (got.point - want.point).norm() / vscale);
      for (std::size_t i = 0; i < got.mu.size(); ++i)
        rep.max_mu_err = std::max(
            rep.max_mu_err, std::abs(got.mu[i] - want.mu[i]) / vscale);

      const Vector& r = got.residual;
      rep.max_orthogonality = std::max(
          rep.max_orthogonality, std::abs(got.point.dot(r)) / qscale);
      rep.max_norm_identity = std::max(
          rep.max_norm_identity,
          std::abs(v.dot(got.point) - got.point.squaredNorm()) / qscale);
      rep.max_norm_identity = std::max(
          rep.max_norm_identity,
          std::abs(v.dot(r) - r.squaredNorm()) / qscale);
      for (const Vector& e : basis.edges)
        rep.max_edge_obtuse =
            std::max(rep.max_edge_obtuse,
                     std::max(0.0, e.dot(r)) / (e.norm() * vscale));
      for (const Vector& f : basis.free_dirs)
        rep.max_free_align = std::max(
            rep.max_free_align, std::abs(f.dot(r)) / (f.norm() * vscale));
    } catch (const SolverError& e) {
      rep.failures.push_back({idx, e.what()});
    }
  }
  return rep;
}

}  // namespace csdm
