#pragma once

#include "gdgc/solvers.hpp"

namespace gdgc {

// ---------------------------------------------------------------------------
// Property reports. A "pass" is a sampled statement, never a proof; reports
// carry the sample count, seed and noise floor to keep claims replayable.
// ---------------------------------------------------------------------------

struct Witness {
  std::vector<std::pair<std::string, Vec>> points;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs beyond tolerance
  int index = -1;       // sample or step index
};

struct PropertyReport {
  std::string property;
  int samples = 0;
  std::vector<Witness> violations;
  bool passed = false;
  double noise_floor = 0.0;
  std::uint64_t seed = 0;
  // Cross-convexity: status of the second-order necessary condition, reported
  // separately; it is never used to infer the property itself.
  std::optional<bool> necessary_condition;
};

enum class CheckMode { direct, semilocal };

struct CheckConfig {
  SearchConfig search;
  double tol = 1e-7;
  bool weak_variant = false;  // five-point: the weaker historical inequality
  CheckMode mode = CheckMode::direct;
  int segment_steps = 33;
};

// Five-point property of a surrogate, sampled over (x, y, y0) triples.
// lambda = 0 tests the plain property; lambda in (0,1) the strong form.
PropertyReport check_five_point(const Surrogate& phi, double lambda, int samples,
                                const CheckConfig& cfg);

// Local criterion at coupled pairs (xbar, yhat = cexp(xbar, -grad f)):
// hess f(xbar) <= hess_xx c(xbar, yhat).
PropertyReport check_c_concavity(const Objective& f, const CostFunction& c, int samples,
                                 const CheckConfig& cfg);

// Cross-convexity of f relative to c. direct mode samples the defining
// four-point inequality; semilocal mode tests convexity of f - lambda*c(.,
// ybar) along c-segments through stationary base points.
PropertyReport check_cross_convexity(const Objective& f, const CostFunction& c, double lambda,
                                     int samples, const CheckConfig& cfg);

// Cross-concavity of -g relative to c (the backward-step condition).
PropertyReport check_cross_concavity(const Objective& g, const CostFunction& c, double lambda,
                                     int samples, const CheckConfig& cfg);

// ---------------------------------------------------------------------------
// Rate certificates.
// ---------------------------------------------------------------------------

struct RateParams {
  double lambda = 0.0;
  double mu = 0.0;
  double tol_scale = 1e-9;  // bound checked as lhs <= rhs + tol_scale * scale
  int from_n = 1;           // first step index the bound is asserted at
  const CostFunction* cost = nullptr;
  const Objective* objective = nullptr;    // f
  const Objective* objective_g = nullptr;  // g (forward-backward)
  const Surrogate* surrogate = nullptr;    // phi (alternating minimization)
  std::optional<Vec> reference_dual;       // y of the reference pair
  std::optional<double> reference_value;   // overrides the evaluated reference objective
  std::optional<double> numerator;         // overrides the bound constant
};

RateCertificate rate_certificate(const SolverTrace& trace, RateKind kind, const Vec& reference,
                                 const RateParams& params);

// Lyapunov potential along an alternating-minimization trace:
// V_n = n (phi(x_n,y_n) - phi(x,y)) + phi(x, y_n) - f_star must not increase.
PropertyReport lyapunov_check(const SolverTrace& trace, const Surrogate& phi, const Vec& anchor_x,
                              const Vec& anchor_y, double f_star = 0.0);

// Per-step descent inequality f(x_{n+1}) <= f(x_n) - gap_n with
// gap_n = c(x_n, y_{n+1}) - c(x_{n+1}, y_{n+1}), plus the min-gap stopping
// bound min_k gap_k <= (f(x_0) - f_*) / n with f_* the best recorded value.
PropertyReport check_descent_gap(const SolverTrace& trace, const Objective& f,
                                 const CostFunction& c);

// Minimum eigenvalue after symmetrizing; reports the asymmetry magnitude.
double min_eigenvalue_sym(const Mat& M, double* asymmetry = nullptr);

}  // namespace gdgc
