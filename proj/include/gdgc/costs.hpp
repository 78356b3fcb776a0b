#pragma once

#include "gdgc/core.hpp"

namespace gdgc {

// ---------------------------------------------------------------------------
// ConvexPotential: u with derivatives, optional closed-form gradient inverse,
// directional third derivative and convex conjugate.
// ---------------------------------------------------------------------------

struct ConvexPotential {
  std::string name = "potential";
  int dim = 0;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::function<Vec(const Vec&)> grad_inverse;  // optional closed form
  // D^3 u(x)[a,b,c], optional
  std::function<double(const Vec&, const Vec&, const Vec&, const Vec&)> third;
  std::function<bool(const Vec&)> domain;      // optional, default everywhere
  std::function<double(const Vec&)> conjugate; // u*(y), optional closed form
  Vec interior_point;  // start for numeric gradient inversion

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  bool in_domain(const Vec& x) const;
  bool has_grad_inverse() const { return static_cast<bool>(grad_inverse); }
  bool has_third() const { return static_cast<bool>(third); }

  // Closed form when available, else damped Newton on grad(x) = z.
  Vec gradient_inverse(const Vec& z) const;
  // u*(y); closed form or <x*, y> - u(x*) with x* = gradient_inverse(y).
  double conjugate_value(const Vec& y) const;
  // Matrix M(j,k) = D^3 u(x)[v, e_j, e_k]; finite differences of hess when
  // no analytic third derivative is coded.
  Mat third_contracted(const Vec& x, const Vec& v) const;

  Objective as_objective() const;
};

ConvexPotential quadratic_potential(double L, const Vec& anchor);
ConvexPotential quadratic_potential(double L, int dim);
ConvexPotential negative_entropy_potential(int dim);
ConvexPotential log_sum_exp_potential(int dim);

// ---------------------------------------------------------------------------
// Diffeomorphisms for the mapped quadratic cost.
// ---------------------------------------------------------------------------

struct Diffeo {
  std::string name = "map";
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;
  std::function<Vec(const Vec&)> inverse;  // optional
  // sum_k r_k * Hess(A_k)(x), optional (enables analytic hess_xx/hess_yy)
  std::function<Mat(const Vec&, const Vec&)> weighted_hessian;
  std::function<bool(const Vec&)> domain;  // optional

  Vec operator()(const Vec& x) const;
  bool in_domain(const Vec& x) const;
};

Diffeo identity_diffeo(int dim);
Diffeo scaling_diffeo(double s, int dim);
Diffeo componentwise_exp_diffeo(int dim);

// ---------------------------------------------------------------------------
// CostFunction: c(x, y) with derivatives, domain predicate and optional
// closed-form hooks used by the geometry and solver layers.
// ---------------------------------------------------------------------------

struct CostFunction {
  std::string name = "cost";
  int dim_x = 0;
  int dim_y = 0;
  std::function<double(const Vec&, const Vec&)> eval;
  std::function<Vec(const Vec&, const Vec&)> grad_x;
  std::function<Vec(const Vec&, const Vec&)> grad_y;
  std::function<Mat(const Vec&, const Vec&)> hess_xx;
  std::function<Mat(const Vec&, const Vec&)> hess_xy;
  std::function<Mat(const Vec&, const Vec&)> hess_yy;
  std::function<bool(const Vec&, const Vec&)> domain_check;

  // Optional closed forms.
  std::function<Vec(const Vec&, const Vec&)> cexp;        // (x, xi) -> y solving xi = -grad_x
  std::function<Vec(const Vec&)> argmin_in_x;             // y -> argmin_x c(., y)
  std::function<Vec(const Vec&)> argmin_in_y;             // x -> argmin_y c(x, .)
  // (x_start, x_end, t) -> point on the horizontal c-segment (when closed form)
  std::function<Vec(const Vec&, const Vec&, double)> segment_point;

  double value(const Vec& x, const Vec& y) const;
  Vec gradient_x(const Vec& x, const Vec& y) const;
  Vec gradient_y(const Vec& x, const Vec& y) const;
  Mat hessian_xx(const Vec& x, const Vec& y) const;
  Mat hessian_xy(const Vec& x, const Vec& y) const;
  Mat hessian_yy(const Vec& x, const Vec& y) const;
  bool in_domain(const Vec& x, const Vec& y) const;

  // Fill missing derivatives with finite-difference fallbacks built on eval.
  void finish();
};

CostFunction quadratic_cost(double L, int dim);
CostFunction mapped_quadratic_cost(const Diffeo& A, const Diffeo& B, int dim);
CostFunction bregman_cost(const ConvexPotential& u);
CostFunction reverse_bregman_cost(const ConvexPotential& u);
CostFunction fenchel_young_cost(const ConvexPotential& u);
CostFunction log_divergence_cost(const ConvexPotential& u, double alpha);

// Root of the scalar equation alpha*mu*<(grad u)^{-1}(mu w) - x, w> - mu + 1
// = 0, picked on the branch that tends to 1 as alpha -> 0 (the Bregman
// limit). Used by the log-divergence c-exponential and solver step.
double log_divergence_multiplier(const ConvexPotential& u, double alpha, const Vec& x,
                                 const Vec& w);
CostFunction exponential_kernel_cost(const Mat& K, double eps);
CostFunction sphere_geodesic_cost(double L, int dim);
CostFunction tensor_product_cost(const CostFunction& c1, const CostFunction& c2);

// Geodesic sphere cost expressed in normal-coordinate charts around a pair of
// (non-antipodal) anchor points; used to sample cross-curvature on the sphere
// where the ambient representation has a rank-deficient mixed Hessian.
CostFunction sphere_chart_cost(double L, const Vec& anchor_x, const Vec& anchor_y);

// Finite-difference mixed Hessian d^2 c / dx dy; numeric fallback and
// validator for hess_xy.
Mat fd_mixed_hessian(const CostFunction& c, const Vec& x, const Vec& y, double step = 0.0);

// c~(y, x) := c(x, y) on the swapped product space.
CostFunction swap_cost(const CostFunction& c);
// c(x, y) + g(x) + h(y)
CostFunction add_separable(const CostFunction& c, const Objective& g, const Objective& h);

// Closed-form exponential map on the unit sphere.
Vec sphere_exp(const Vec& x, const Vec& v);
Vec sphere_tangent_project(const Vec& x, const Vec& v);

}  // namespace gdgc
