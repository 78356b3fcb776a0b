#pragma once

#include "gdgc/geometry.hpp"
#include "gdgc/transforms.hpp"

namespace gdgc {

struct SolverSpec {
  std::string kind = "gdgc_explicit";
  int horizon = 10;
  double tol = 1e-10;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Couplings over finite product spaces (Sinkhorn, EM).
// ---------------------------------------------------------------------------

struct DiscreteCoupling {
  Mat m;  // nonnegative entries

  Vec row_marginal() const { return m.rowwise().sum(); }
  Vec col_marginal() const { return m.colwise().sum().transpose(); }
  double total_mass() const { return m.sum(); }
  void validate(bool unit_mass) const;
};

// KL(p | q) for nonnegative vectors, with 0 log 0 = 0.
double kl_divergence(const Vec& p, const Vec& q);
double kl_divergence(const Mat& p, const Mat& q);

// ---------------------------------------------------------------------------
// Closed convex sets with closed-form projections (POCS subroutines).
// ---------------------------------------------------------------------------

struct ConvexSet {
  std::string kind;
  std::function<Vec(const Vec&)> project;

  Vec operator()(const Vec& x) const { return project(x); }
  double distance(const Vec& x) const { return (x - project(x)).norm(); }
  bool contains(const Vec& x, double tol = 1e-10) const { return distance(x) <= tol; }
};

ConvexSet halfspace_set(const Vec& a, double b);  // { x : <a, x> <= b }
ConvexSet ball_set(const Vec& center, double radius);
ConvexSet box_set(const Vec& lo, const Vec& hi);
ConvexSet affine_set(const Mat& A, const Vec& b);  // { x : A x = b }

// ---------------------------------------------------------------------------
// Solvers. Every solver emits a SolverTrace whose recorded objective is the
// quantity its convergence theory bounds.
// ---------------------------------------------------------------------------

// Alternating minimization of a surrogate phi; enforces the descent property
// as a runtime assertion.
SolverTrace alternating_minimize(const Surrogate& phi, const Vec& x0, const SolverSpec& spec,
                                 const SearchConfig& cfg);

// Explicit two-step scheme: y-step via the c-exponential of -grad f, x-step by
// solving grad_x c = 0.
SolverTrace gdgc_explicit(const Objective& f, const CostFunction& c, const Vec& x0,
                          const SolverSpec& spec);

// The same scheme through the numeric c-transform surrogate.
SolverTrace gdgc_surrogate(const Objective& f, const CostFunction& c, const Vec& x0,
                           const SolverSpec& spec, const SearchConfig& cfg);

// Forward step on f, backward (proximal) step on g.
SolverTrace forward_backward(const Objective& f, const Objective& g, const CostFunction& c,
                             const Vec& x0, const SolverSpec& spec, const SearchConfig& cfg);

SolverTrace gradient_descent(const Objective& f, double L, const Vec& x0, int horizon);
SolverTrace mirror_descent(const Objective& f, const ConvexPotential& u, const Vec& x0,
                           int horizon);
SolverTrace natural_gradient(const Objective& f, const ConvexPotential& u, const Vec& x0,
                             int horizon);
SolverTrace newton(const Objective& f, const Vec& x0, int horizon);
SolverTrace log_divergence_gd(const Objective& f, const ConvexPotential& u, double alpha,
                              const Vec& x0, int horizon);
SolverTrace riemannian_sphere_gd(const Objective& f, double L, const Vec& x0, int horizon);

// Primal alternating minimization form of Sinkhorn; runs in the log domain
// when exp(-b/eps) would underflow.
SolverTrace sinkhorn(const Mat& b, double eps, const Vec& mu, const Vec& nu, int horizon);

SolverTrace pocs(const ConvexSet& B, const ConvexSet& C, const Vec& x0, int horizon);

// Finite-space EM for the model p_theta(x, z) = K(x|z) theta(z) with Theta the
// full simplex.
SolverTrace latent_em(const Mat& K, const Vec& mu, const Vec& theta0, int horizon);

// Reshape a flattened coupling stored in a trace step back into a matrix.
Mat coupling_from_step(const SolverTrace& trace, int n, int rows, int cols);

// Classical row/column scaling Sinkhorn; the independent oracle for the
// primal alternating-minimization formulation.
std::vector<Mat> sinkhorn_scaling_oracle(const Mat& b, double eps, const Vec& mu, const Vec& nu,
                                         int horizon);

}  // namespace gdgc
