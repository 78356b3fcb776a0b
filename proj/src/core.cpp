#include "gdgc/core.hpp"

#include <cmath>

namespace gdgc {

double require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw DomainError("non-finite value in " + what);
  return v;
}

const Vec& require_finite(const Vec& v, const std::string& what) {
  if (!v.allFinite()) throw DomainError("non-finite vector in " + what);
  return v;
}

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream * 0xda942042e4dd58b5ULL))) {}

std::uint64_t Rng::next_u64() { return mix64(key_ ^ mix64(++counter_)); }

double Rng::next() {
  // 53 random bits into [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

Vec Rng::uniform_vec(const Vec& lo, const Vec& hi) {
  Vec out(lo.size());
  for (int i = 0; i < lo.size(); ++i) out[i] = uniform(lo[i], hi[i]);
  return out;
}

Vec Rng::uniform_vec(int dim, double lo, double hi) {
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = uniform(lo, hi);
  return out;
}

Vec Rng::direction(int dim) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec v = uniform_vec(dim, -1.0, 1.0);
    double n = v.norm();
    if (n > 1e-3) return v / n;
  }
  Vec e = Vec::Zero(dim);
  e[0] = 1.0;
  return e;
}

std::uint64_t Rng::hash_name(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

double Objective::operator()(const Vec& x) const {
  return require_finite(eval(x), "objective " + name);
}

Vec Objective::gradient(const Vec& x) const {
  if (grad) return require_finite(grad(x), "gradient of " + name);
  return fd_gradient(eval, x);
}

Mat Objective::hessian(const Vec& x) const {
  if (hess) {
    Mat h = hess(x);
    if (!h.allFinite()) throw DomainError("non-finite hessian of " + name);
    return h;
  }
  return fd_hessian(eval, x);
}

bool Objective::in_domain(const Vec& x) const { return domain ? domain(x) : true; }

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

double default_fd_step(const Vec& x) { return 1e-4 * (1.0 + x.norm()); }

namespace {

double checked(const std::function<double(const Vec&)>& fn, const Vec& x) {
  return require_finite(fn(x), "finite-difference evaluation");
}

}  // namespace

Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x, double step) {
  const double h = step > 0.0 ? step : default_fd_step(x);
  const int d = static_cast<int>(x.size());
  Vec g(d);
  Vec xp = x;
  auto central = [&](int i, double hh) {
    xp[i] = x[i] + hh;
    double fp = checked(fn, xp);
    xp[i] = x[i] - hh;
    double fm = checked(fn, xp);
    xp[i] = x[i];
    return (fp - fm) / (2.0 * hh);
  };
  for (int i = 0; i < d; ++i) {
    double d1 = central(i, h);
    double d2 = central(i, h / 2.0);
    g[i] = (4.0 * d2 - d1) / 3.0;
  }
  return g;
}

Mat fd_hessian(const std::function<double(const Vec&)>& fn, const Vec& x, double step) {
  const double h = step > 0.0 ? step : default_fd_step(x);
  const int d = static_cast<int>(x.size());
  const double f0 = checked(fn, x);
  Vec xp = x;

  auto second_diag = [&](int i, double hh) {
    xp[i] = x[i] + hh;
    double fp = checked(fn, xp);
    xp[i] = x[i] - hh;
    double fm = checked(fn, xp);
    xp[i] = x[i];
    return (fp - 2.0 * f0 + fm) / (hh * hh);
  };
  auto second_off = [&](int i, int j, double hh) {
    xp[i] = x[i] + hh;
    xp[j] = x[j] + hh;
    double fpp = checked(fn, xp);
    xp[j] = x[j] - hh;
    double fpm = checked(fn, xp);
    xp[i] = x[i] - hh;
    double fmm = checked(fn, xp);
    xp[j] = x[j] + hh;
    double fmp = checked(fn, xp);
    xp[i] = x[i];
    xp[j] = x[j];
    return (fpp - fpm - fmp + fmm) / (4.0 * hh * hh);
  };

  Mat H(d, d);
  for (int i = 0; i < d; ++i) {
    double a = second_diag(i, h);
    double b = second_diag(i, h / 2.0);
    H(i, i) = (4.0 * b - a) / 3.0;
    for (int j = i + 1; j < d; ++j) {
      double a2 = second_off(i, j, h);
      double b2 = second_off(i, j, h / 2.0);
      double v = (4.0 * b2 - a2) / 3.0;
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return 0.5 * (H + H.transpose());
}

Vec fd_directional(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& dir,
                   double step) {
  const double h = step > 0.0 ? step : default_fd_step(x);
  auto central = [&](double hh) -> Vec {
    Vec fp = fn(x + hh * dir);
    Vec fm = fn(x - hh * dir);
    return (fp - fm) / (2.0 * hh);
  };
  Vec d1 = central(h);
  Vec d2 = central(h / 2.0);
  Vec out = (4.0 * d2 - d1) / 3.0;
  require_finite(out, "directional derivative");
  return out;
}

Vec fd_directional_second(const std::function<Vec(const Vec&)>& fn, const Vec& x, const Vec& dir,
                          double step) {
  const double h = step > 0.0 ? step : default_fd_step(x);
  Vec f0 = fn(x);
  auto central = [&](double hh) -> Vec {
    Vec fp = fn(x + hh * dir);
    Vec fm = fn(x - hh * dir);
    return (fp - 2.0 * f0 + fm) / (hh * hh);
  };
  Vec d1 = central(h);
  Vec d2 = central(h / 2.0);
  Vec out = (4.0 * d2 - d1) / 3.0;
  require_finite(out, "second directional derivative");
  return out;
}

double fd_mixed_directional(const std::function<double(double, double)>& m, double step) {
  const double h = step > 0.0 ? step : 1e-4;
  auto mixed = [&](double hh) {
    return (m(hh, hh) - m(hh, -hh) - m(-hh, hh) + m(-hh, -hh)) / (4.0 * hh * hh);
  };
  double a = mixed(h);
  double b = mixed(h / 2.0);
  return require_finite((4.0 * b - a) / 3.0, "mixed directional derivative");
}

// ---------------------------------------------------------------------------
// SolverTrace / RateCertificate
// ---------------------------------------------------------------------------

void SolverTrace::validate() const {
  if (steps.empty()) throw Error("trace must contain at least one step");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const TraceStep& s = steps[k];
    if (s.n != static_cast<int>(k)) throw Error("trace indices must be contiguous from 0");
    require_finite(s.value, "trace value");
    require_finite(s.x, "trace iterate");
    if (s.y) require_finite(*s.y, "trace dual iterate");
    if (s.phi) require_finite(*s.phi, "trace surrogate value");
    if (s.gap) require_finite(*s.gap, "trace gap");
  }
}

std::string rate_kind_name(RateKind kind) {
  switch (kind) {
    case RateKind::am_sublinear: return "am_sublinear";
    case RateKind::am_linear: return "am_linear";
    case RateKind::gdgc_sublinear: return "gdgc_sublinear";
    case RateKind::gdgc_linear: return "gdgc_linear";
    case RateKind::fb_sublinear: return "fb_sublinear";
    case RateKind::fb_linear: return "fb_linear";
    case RateKind::descent: return "descent";
    case RateKind::lyapunov: return "lyapunov";
  }
  return "unknown";
}

RateKind rate_kind_from_name(const std::string& name) {
  for (RateKind k : {RateKind::am_sublinear, RateKind::am_linear, RateKind::gdgc_sublinear,
                     RateKind::gdgc_linear, RateKind::fb_sublinear, RateKind::fb_linear,
                     RateKind::descent, RateKind::lyapunov}) {
    if (rate_kind_name(k) == name) return k;
  }
  throw KindMismatch("unknown rate kind: " + name);
}

void RateCertificate::finalize() {
  overall = true;
  for (const RateRow& row : per_n) overall = overall && row.satisfied;
}

}  // namespace gdgc
