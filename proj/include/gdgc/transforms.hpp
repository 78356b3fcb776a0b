#pragma once

#include "gdgc/costs.hpp"

namespace gdgc {

// ---------------------------------------------------------------------------
// Multi-start search. Every stochastic choice flows from `seed` through a
// counter-based generator; identical configs give identical results.
// ---------------------------------------------------------------------------

struct SearchConfig {
  int restarts = 8;
  int max_iter = 200;
  double tol = 1e-10;
  Vec box_lo;
  Vec box_hi;
  std::uint64_t seed = 0;
  double ceiling = 1e12;   // unboundedness detection threshold
  double box_slack = 1.0;  // searches stay inside the box inflated by this
                           // fraction of its width on each side

  void validate(int dim) const;
  SearchConfig with_seed(std::uint64_t s) const;
};

struct MinimizeResult {
  Vec x;
  double value = 0.0;
  bool converged = false;
};

// BFGS with backtracking line search; DomainError during trials is treated as
// an infinite value (the step is rejected).
MinimizeResult minimize_bfgs(const std::function<double(const Vec&)>& fn, const Vec& x0,
                             const SearchConfig& cfg);

// Restarts sampled uniformly in the box, reduced deterministically in restart
// order; optional warm start is tried first.
MinimizeResult minimize_multistart(const std::function<double(const Vec&)>& fn,
                                   const SearchConfig& cfg,
                                   const std::optional<Vec>& warm_start = std::nullopt);

// ---------------------------------------------------------------------------
// Surrogate phi(x, y) = c(x, y) + f^c(y), or the split form c + g(x) + h(y).
// ---------------------------------------------------------------------------

struct Surrogate {
  CostFunction cost;
  std::function<double(const Vec&)> f_c;  // c-transform term (optional)
  std::function<double(const Vec&)> g;    // optional
  std::function<double(const Vec&)> h;    // optional

  double phi(const Vec& x, const Vec& y) const;
  // gradient of phi in x (g must be differentiable when present)
  Vec grad_x_phi(const Vec& x, const Vec& y, const Objective* g_obj = nullptr) const;
};

struct TransformResult {
  double value = 0.0;
  Vec arg;
};

// f^c(y) = sup_x f(x) - c(x, y), by multi-start quasi-Newton maximization.
TransformResult c_transform(const Objective& f, const CostFunction& c, const Vec& y,
                            const SearchConfig& cfg);

// Surrogate built from the numeric c-transform of f.
Surrogate make_surrogate(const Objective& f, const CostFunction& c, const SearchConfig& cfg);
// Surrogate phi = c + g(x) + h(y).
Surrogate make_split_surrogate(const CostFunction& c, const std::function<double(const Vec&)>& g,
                               const std::function<double(const Vec&)>& h);

// F(x) = inf_y phi(x, y)
TransformResult marginal_F(const Surrogate& s, const Vec& x, const SearchConfig& cfg,
                           const std::optional<Vec>& warm_start = std::nullopt);

struct EnvelopeReport {
  Vec numeric_grad;    // finite differences of x -> marginal_F(x)
  Vec analytic_grad;   // grad_x phi(x, argmin_y)
  Vec argmin_y;
  double max_abs_deviation = 0.0;
};

// Envelope check: grad F(x) against grad_x phi(x, y*(x)).
EnvelopeReport check_envelope(const Surrogate& s, const Vec& x, const SearchConfig& cfg,
                              const Objective* g_obj = nullptr);

}  // namespace gdgc
