#include "gdgc/transforms.hpp"

#include <cmath>
#include <limits>

namespace gdgc {

void SearchConfig::validate(int dim) const {
  if (restarts < 1) throw ConfigError("search config needs restarts >= 1");
  if (tol <= 0.0) throw ConfigError("search config needs tol > 0");
  if (box_lo.size() != dim || box_hi.size() != dim)
    throw ConfigError("search box dimension mismatch");
  for (int i = 0; i < dim; ++i)
    if (!(box_lo[i] < box_hi[i])) throw ConfigError("search box must have positive extent");
}

SearchConfig SearchConfig::with_seed(std::uint64_t s) const {
  SearchConfig out = *this;
  out.seed = s;
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Evaluation that maps domain errors and non-finite values to +inf.
double safe_eval(const std::function<double(const Vec&)>& fn, const Vec& x) {
  try {
    double v = fn(x);
    return std::isfinite(v) ? v : kInf;
  } catch (const DomainError&) {
    return kInf;
  }
}

}  // namespace

MinimizeResult minimize_bfgs(const std::function<double(const Vec&)>& fn, const Vec& x0,
                             const SearchConfig& cfg) {
  const int d = static_cast<int>(x0.size());

  // The box is a sampling region, but iterates are confined to an inflated
  // copy of it; far outside, transform-based surrogates lose all precision
  // to cancellation.
  std::function<double(const Vec&)> fn_boxed = fn;
  if (cfg.box_lo.size() == d && cfg.box_hi.size() == d) {
    Vec width = cfg.box_hi - cfg.box_lo;
    Vec lo = cfg.box_lo - cfg.box_slack * width;
    Vec hi = cfg.box_hi + cfg.box_slack * width;
    fn_boxed = [fn, lo, hi](const Vec& x) -> double {
      if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any())
        throw DomainError("iterate left the inflated search box");
      return fn(x);
    };
  }

  MinimizeResult res;
  res.x = x0;
  res.value = safe_eval(fn_boxed, x0);
  if (!std::isfinite(res.value)) return res;

  auto grad_at = [&](const Vec& x) -> Vec {
    return fd_gradient([&](const Vec& xx) {
      double v = safe_eval(fn_boxed, xx);
      if (!std::isfinite(v)) throw DomainError("gradient sample outside domain");
      return v;
    }, x, 1e-6 * (1.0 + x.norm()));
  };

  Vec x = x0;
  double fx = res.value;
  Vec g;
  try {
    g = grad_at(x);
  } catch (const DomainError&) {
    return res;  // cannot differentiate here; keep the evaluated point
  }
  Mat H = Mat::Identity(d, d);

  int stalled = 0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    if (stalled >= 2) break;  // progress is below numerical resolution
    Vec dir = -(H * g);
    if (!dir.allFinite() || dir.dot(g) >= 0.0) {
      H = Mat::Identity(d, d);
      dir = -g;
    }
    double t = 1.0;
    const double slope = g.dot(dir);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vec cand = x + t * dir;
      double fc = safe_eval(fn_boxed, cand);
      if (fc <= fx + 1e-4 * t * slope) {
        Vec gc;
        try {
          gc = grad_at(cand);
        } catch (const DomainError&) {
          t *= 0.5;
          continue;
        }
        Vec s = cand - x;
        Vec yv = gc - g;
        double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
          Mat sm = s * s.transpose();
          Vec hy = H * yv;
          H += (sy + yv.dot(hy)) / (sy * sy) * sm -
               (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        if (fx - fc <= 1e-14 * (1.0 + std::abs(fx)))
          ++stalled;
        else
          stalled = 0;
        x = cand;
        fx = fc;
        g = gc;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no admissible decrease; stationary for our purposes
  }
  res.x = x;
  res.value = fx;
  if (!res.converged) res.converged = g.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + std::abs(fx));
  return res;
}

MinimizeResult minimize_multistart(const std::function<double(const Vec&)>& fn,
                                   const SearchConfig& cfg, const std::optional<Vec>& warm_start) {
  const int d = static_cast<int>(cfg.box_lo.size());
  cfg.validate(d);
  Rng rng(cfg.seed, Rng::hash_name("multistart"));

  MinimizeResult best;
  best.value = kInf;
  auto consider = [&](const Vec& start) {
    MinimizeResult r = minimize_bfgs(fn, start, cfg);
    if (r.value < best.value) best = r;
  };
  if (warm_start && warm_start->size() == d) consider(*warm_start);
  for (int r = 0; r < cfg.restarts; ++r) consider(rng.uniform_vec(cfg.box_lo, cfg.box_hi));

  if (!std::isfinite(best.value)) throw InnerSolveFailure("no admissible starting point found");
  if (best.value < -cfg.ceiling) throw UnboundedError("inner problem appears unbounded below");
  return best;
}

// ---------------------------------------------------------------------------
// Surrogates and c-transform
// ---------------------------------------------------------------------------

double Surrogate::phi(const Vec& x, const Vec& y) const {
  double v = cost.value(x, y);
  if (f_c) v += f_c(y);
  if (g) v += g(x);
  if (h) v += h(y);
  return require_finite(v, "surrogate value");
}

Vec Surrogate::grad_x_phi(const Vec& x, const Vec& y, const Objective* g_obj) const {
  Vec gx = cost.gradient_x(x, y);
  if (g) {
    if (g_obj) {
      gx += g_obj->gradient(x);
    } else {
      gx += fd_gradient(g, x);
    }
  }
  return gx;
}

TransformResult c_transform(const Objective& f, const CostFunction& c, const Vec& y,
                            const SearchConfig& cfg) {
  auto neg = [&](const Vec& x) -> double {
    if (!f.in_domain(x)) throw DomainError("objective outside domain");
    return c.value(x, y) - f(x);
  };
  MinimizeResult r = minimize_multistart(neg, cfg);
  TransformResult out;
  out.value = -r.value;
  out.arg = r.x;
  if (out.value > cfg.ceiling) throw UnboundedError("c-transform appears unbounded");
  return out;
}

Surrogate make_surrogate(const Objective& f, const CostFunction& c, const SearchConfig& cfg) {
  Surrogate s;
  s.cost = c;
  Objective fo = f;
  CostFunction cc = c;
  SearchConfig inner = cfg;
  s.f_c = [fo, cc, inner](const Vec& y) { return c_transform(fo, cc, y, inner).value; };
  return s;
}

Surrogate make_split_surrogate(const CostFunction& c, const std::function<double(const Vec&)>& g,
                               const std::function<double(const Vec&)>& h) {
  Surrogate s;
  s.cost = c;
  s.g = g;
  s.h = h;
  return s;
}

TransformResult marginal_F(const Surrogate& s, const Vec& x, const SearchConfig& cfg,
                           const std::optional<Vec>& warm_start) {
  auto fn = [&](const Vec& y) { return s.phi(x, y); };
  std::optional<Vec> warm = warm_start;
  if (!warm && s.cost.argmin_in_y) {
    try {
      warm = s.cost.argmin_in_y(x);
    } catch (const Error&) {
      warm = std::nullopt;
    }
  }
  MinimizeResult r = minimize_multistart(fn, cfg, warm);
  TransformResult out;
  out.value = r.value;
  out.arg = r.x;
  return out;
}

EnvelopeReport check_envelope(const Surrogate& s, const Vec& x, const SearchConfig& cfg,
                              const Objective* g_obj) {
  EnvelopeReport rep;
  TransformResult at_x = marginal_F(s, x, cfg);
  rep.argmin_y = at_x.arg;
  rep.analytic_grad = s.grad_x_phi(x, at_x.arg, g_obj);
  auto F = [&](const Vec& xx) {
    // warm-start the inner problem from the solution at x for stability
    return marginal_F(s, xx, cfg, at_x.arg).value;
  };
  rep.numeric_grad = fd_gradient(F, x, 1e-5 * (1.0 + x.norm()));
  rep.max_abs_deviation = (rep.numeric_grad - rep.analytic_grad).lpNorm<Eigen::Infinity>();
  return rep;
}

}  // namespace gdgc
