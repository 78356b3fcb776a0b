#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdgc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = Vec;

// ---------------------------------------------------------------------------
// Errors. Non-finite intermediate values raise instead of propagating NaN,
// so that certificate checks can never silently pass on NaN comparisons.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};
struct AntipodalError : DomainError {
  using DomainError::DomainError;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct ShootingFailure : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct ConjugateUnavailable : Error {
  using Error::Error;
};
struct UnboundedError : Error {
  using Error::Error;
};
struct InnerSolveFailure : Error {
  using Error::Error;
};
struct MonotonicityViolation : Error {
  using Error::Error;
};
struct SingularHessian : Error {
  using Error::Error;
};
struct NoRootError : Error {
  using Error::Error;
};
struct ZeroMarginal : Error {
  using Error::Error;
};
struct ZeroMass : Error {
  using Error::Error;
};
struct KindMismatch : Error {
  using Error::Error;
};
struct MissingDualIterates : Error {
  using Error::Error;
};

double require_finite(double v, const std::string& what);
const Vec& require_finite(const Vec& v, const std::string& what);

// ---------------------------------------------------------------------------
// Deterministic counter-based generator. Every random draw is a pure
// function of (seed, stream, counter); identical seeds replay identically.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next();  // uniform in [0, 1)
  double uniform(double lo, double hi);
  Vec uniform_vec(const Vec& lo, const Vec& hi);
  Vec uniform_vec(int dim, double lo, double hi);
  Vec direction(int dim);  // unit vector

  // Stable seed derivation for named sub-streams (per-experiment seeds).
  static std::uint64_t hash_name(const std::string& name);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Objective: f, optionally with analytic gradient and Hessian. Missing
// derivatives fall back to finite differences.
// ---------------------------------------------------------------------------

struct Objective {
  std::string name = "objective";
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;      // optional
  std::function<Mat(const Vec&)> hess;      // optional
  std::function<bool(const Vec&)> domain;   // optional, default: everywhere

  double operator()(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  bool in_domain(const Vec& x) const;
  bool has_hessian() const { return static_cast<bool>(hess); }
};

// ---------------------------------------------------------------------------
// Finite differences: central differences with one Richardson level.
// Default step 1e-4 * (1 + |x|); fourth-derivative consumers (cross-
// curvature) need the extrapolation for noise control.
// ---------------------------------------------------------------------------

double default_fd_step(const Vec& x);

Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x, double step = 0.0);
Mat fd_hessian(const std::function<double(const Vec&)>& fn, const Vec& x, double step = 0.0);

// d/ds fn(x + s*dir) at s=0, for vector-valued fn.
Vec fd_directional(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& dir,
                   double step = 0.0);
// d^2/ds^2 fn(x + s*dir) at s=0, for vector-valued fn.
Vec fd_directional_second(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& dir,
                          double step = 0.0);
// d^2/(ds dt) m(s,t) at (0,0).
double fd_mixed_directional(const std::function<double(double, double)>& m, double step);

// ---------------------------------------------------------------------------
// Solver traces.
// ---------------------------------------------------------------------------

struct TraceStep {
  int n = 0;
  Vec x;
  std::optional<Vec> y;        // dual iterate paired with x_n
  double value = 0.0;          // solver's recorded objective at step n
  std::optional<double> phi;   // surrogate value phi(x_n, y_n) when defined
  std::optional<double> gap;   // c(x_n, y_{n+1}) - c(x_{n+1}, y_{n+1})
  std::optional<Vec> dual;     // auxiliary dual-view variable (natural gradient)
};

struct SolverTrace {
  std::string solver;
  std::string cost;
  std::uint64_t seed = 0;
  int horizon = 0;
  std::vector<TraceStep> steps;

  int size() const { return static_cast<int>(steps.size()); }
  const TraceStep& step(int n) const { return steps.at(static_cast<std::size_t>(n)); }
  // length >= 1, finite values, indices contiguous from 0
  void validate() const;
};

// ---------------------------------------------------------------------------
// Rate certificates: pointwise-in-n verification of a convergence bound.
// ---------------------------------------------------------------------------

enum class RateKind {
  am_sublinear,
  am_linear,
  gdgc_sublinear,
  gdgc_linear,
  fb_sublinear,
  fb_linear,
  descent,
  lyapunov,
};

std::string rate_kind_name(RateKind kind);
RateKind rate_kind_from_name(const std::string& name);

struct RateRow {
  int n = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

struct RateCertificate {
  RateKind kind = RateKind::descent;
  Vec reference;
  std::vector<RateRow> per_n;
  bool overall = false;

  void finalize();  // overall = conjunction of per-row flags
};

}  // namespace gdgc
