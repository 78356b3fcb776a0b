#pragma once

#include "gdgc/costs.hpp"

namespace gdgc {

// Damped Newton for residual(z) = 0; halves the step while the candidate is
// inadmissible or fails to reduce the residual norm.
Vec newton_solve(const std::function<Vec(const Vec&)>& residual,
                 const std::function<Mat(const Vec&)>& jacobian,
                 const std::function<bool(const Vec&)>& admissible, Vec guess, double tol,
                 int max_iter, const std::string& what);

// Solves xi = -grad_x c(x, y) for y. Uses the cost's closed form when
// available, otherwise damped Newton with Jacobian hess_xy.
Vec c_exponential(const CostFunction& c, const Vec& x, const Vec& xi);

// Solves grad_x c(x, y) = 0 for x (the x-step of the explicit solvers).
Vec cost_argmin_in_x(const CostFunction& c, const Vec& y, const Vec& x_guess);
// Solves grad_y c(x, y) = 0 for y.
Vec cost_argmin_in_y(const CostFunction& c, const Vec& x, const Vec& y_guess);

struct CSegment {
  std::string cost_name;
  bool horizontal = true;  // y fixed
  Vec fixed_point;
  std::vector<double> ts;
  std::vector<Vec> points;

  const Vec& start() const { return points.front(); }
  const Vec& end() const { return points.back(); }
  int size() const { return static_cast<int>(points.size()); }
};

struct SegmentOptions {
  int rk_steps = 64;
  int max_newton = 30;
  double tol = 1e-7;
};

// Horizontal c-segment from x_start to x_end with y fixed: two-point boundary
// problem for x'' + c^{km}c_{mij} x'^i x'^j = 0, solved by shooting unless the
// cost provides a closed form.
CSegment c_segment(const CostFunction& c, const Vec& x_start, const Vec& x_end, const Vec& y,
                   int steps, const SegmentOptions& opt = {});

// delta_c(x', y'; x, y) = c(x,y') + c(x',y) - c(x,y) - c(x',y')
double cross_difference(const CostFunction& c, const Vec& xp, const Vec& yp, const Vec& x,
                        const Vec& y);

// -xi^T (hess_xy c) eta
double kim_mccann_metric(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                         const Vec& eta);

struct CurvatureResult {
  double value = 0.0;
  double noise_floor = 0.0;
  bool below_noise = false;  // |value| < 10x estimated fd noise floor
};

// Cross-curvature S_c(x,y)(xi,eta) via the coordinate formula
//   (c_ikm c^{mr} c_rjl - c_ijkl) xi^i eta^j xi^k eta^l,
// built from first differences of the analytic mixed Hessian.
CurvatureResult cross_curvature(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                                const Vec& eta);

// Cross-check: -d^4/ds^2 dt^2 c(x(s), y + t eta) along an integrated
// c-segment; loose accuracy, used to validate the coordinate formula.
double cross_curvature_via_path(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                                const Vec& eta);

struct ConvexityReport {
  double min_second_difference = 0.0;
  double scale = 1.0;
  bool is_convex = false;
};

ConvexityReport convexity_along_segment(const std::function<double(const Vec&)>& fn,
                                        const CSegment& seg);

}  // namespace gdgc
