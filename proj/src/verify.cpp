#include "gdgc/verify.hpp"

#include <cmath>
#include <limits>

namespace gdgc {

double min_eigenvalue_sym(const Mat& M, double* asymmetry) {
  Mat S = 0.5 * (M + M.transpose());
  if (asymmetry) *asymmetry = (M - M.transpose()).lpNorm<Eigen::Infinity>();
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) throw Error("eigenvalue decomposition failed");
  return es.eigenvalues().minCoeff();
}

namespace {

Witness make_witness(std::initializer_list<std::pair<std::string, Vec>> pts, double lhs,
                     double rhs, double margin, int index) {
  Witness w;
  w.points.assign(pts);
  w.lhs = lhs;
  w.rhs = rhs;
  w.margin = margin;
  w.index = index;
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// Five-point property
// ---------------------------------------------------------------------------

PropertyReport check_five_point(const Surrogate& phi, double lambda, int samples,
                                const CheckConfig& cfg) {
  if (lambda < 0.0 || lambda >= 1.0)
    throw ConfigError("five-point checker accepts lambda in [0, 1) only");
  if (cfg.weak_variant && lambda != 0.0)
    throw ConfigError("the weak five-point variant has no strength parameter");
  PropertyReport rep;
  rep.property = cfg.weak_variant ? "five_point_weak" : "five_point";
  rep.samples = samples;
  rep.seed = cfg.search.seed;
  Rng rng(cfg.search.seed, Rng::hash_name(rep.property));

  double max_scale = 1.0;
  for (int k = 0; k < samples; ++k) {
    Vec x = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
    Vec y = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
    Vec y0 = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
    Vec x0, y1;
    try {
      if (!phi.g) {
        x0 = cost_argmin_in_x(phi.cost, y0, x);
      } else {
        auto in_x = [&](const Vec& xx) { return phi.phi(xx, y0); };
        x0 = minimize_multistart(in_x, cfg.search, x).x;
      }
      y1 = marginal_F(phi, x0, cfg.search).arg;
    } catch (const Error& e) {
      throw InnerSolveFailure(std::string("five-point inner solve failed: ") + e.what());
    }
    double phi_x_y1 = phi.phi(x, y1);
    double phi_x0_y0 = phi.phi(x0, y0);
    double phi_x_y = phi.phi(x, y);
    double phi_x_y0 = phi.phi(x, y0);
    double lhs, rhs;
    if (cfg.weak_variant) {
      lhs = phi_x_y1 + phi.phi(x0, y1);
      rhs = phi_x_y + phi_x_y0;
    } else {
      lhs = phi_x_y1 + (1.0 - lambda) * phi_x0_y0;
      rhs = phi_x_y + (1.0 - lambda) * phi_x_y0;
    }
    double scale = 1.0 + std::max({std::abs(phi_x_y1), std::abs(phi_x0_y0), std::abs(phi_x_y),
                                   std::abs(phi_x_y0)});
    max_scale = std::max(max_scale, scale);
    double margin = lhs - rhs - cfg.tol * scale;
    if (margin > 0.0) {
      rep.violations.push_back(make_witness(
          {{"x", x}, {"y", y}, {"y0", y0}, {"x0", x0}, {"y1", y1}}, lhs, rhs, margin, k));
    }
  }
  rep.noise_floor = cfg.tol * max_scale;
  rep.passed = rep.violations.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// c-concavity
// ---------------------------------------------------------------------------

PropertyReport check_c_concavity(const Objective& f, const CostFunction& c, int samples,
                                 const CheckConfig& cfg) {
  PropertyReport rep;
  rep.property = "c_concavity";
  rep.samples = samples;
  rep.seed = cfg.search.seed;
  Rng rng(cfg.search.seed, Rng::hash_name(rep.property));

  for (int k = 0; k < samples; ++k) {
    Vec xbar = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
    if (!f.in_domain(xbar)) continue;
    Vec yhat = c_exponential(c, xbar, Vec(-f.gradient(xbar)));
    Mat D = c.hessian_xx(xbar, yhat) - f.hessian(xbar);
    double asym = 0.0;
    double lam = min_eigenvalue_sym(D, &asym);
    double scale = 1.0 + D.lpNorm<Eigen::Infinity>();
    if (asym > 1e-8 * scale) {
      rep.violations.push_back(
          make_witness({{"xbar", xbar}, {"yhat", yhat}}, asym, 1e-8 * scale, asym, k));
      continue;
    }
    if (lam < -cfg.tol * scale) {
      rep.violations.push_back(
          make_witness({{"xbar", xbar}, {"yhat", yhat}}, lam, -cfg.tol * scale, -lam, k));
    }
    rep.noise_floor = std::max(rep.noise_floor, cfg.tol * scale);
  }
  rep.passed = rep.violations.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Cross-convexity / cross-concavity
// ---------------------------------------------------------------------------

namespace {

// Shared four-point sampler. sign = +1 tests the cross-convexity inequality
// for f; sign = -1 tests cross-concavity of -g via f = -g.
PropertyReport check_cross_property(const Objective& f, const CostFunction& c, double lambda,
                                    int samples, const CheckConfig& cfg, bool concave) {
  if (lambda < 0.0 || lambda >= 1.0)
    throw ConfigError("cross-convexity checker accepts lambda in [0, 1) only");
  PropertyReport rep;
  rep.property = concave ? "cross_concavity" : "cross_convexity";
  rep.samples = samples;
  rep.seed = cfg.search.seed;
  Rng rng(cfg.search.seed, Rng::hash_name(rep.property));

  bool necessary_ok = true;
  for (int k = 0; k < samples; ++k) {
    Vec xbar = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
    if (!f.in_domain(xbar)) continue;
    // stationary base: grad_x c(xbar, ybar) = 0
    Vec ybar = c_exponential(c, xbar, Vec(Vec::Zero(xbar.size())));
    // tangency point: -grad_x c(xbar, yhat) = -grad f(xbar), with f = -g in
    // the concave case
    Vec target = concave ? Vec(f.gradient(xbar)) : Vec(-f.gradient(xbar));
    Vec yhat = c_exponential(c, xbar, target);

    if (!concave) {
      // second-order necessary condition, reported separately:
      // hess f >= hess_xx c(xbar, yhat) - (1 - lambda) hess_xx c(xbar, ybar)
      Mat N = f.hessian(xbar) - c.hessian_xx(xbar, yhat) +
              (1.0 - lambda) * c.hessian_xx(xbar, ybar);
      double scale_n = 1.0 + N.lpNorm<Eigen::Infinity>();
      if (min_eigenvalue_sym(N) < -cfg.tol * scale_n) necessary_ok = false;
    }

    if (cfg.mode == CheckMode::direct) {
      Vec x = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
      if (!f.in_domain(x) || !c.in_domain(x, ybar) || !c.in_domain(x, yhat)) continue;
      double delta = cross_difference(c, x, ybar, xbar, yhat);
      double strength = lambda * (c.value(x, ybar) - c.value(xbar, ybar));
      double scale = 1.0 + std::abs(f(x)) + std::abs(delta) + std::abs(strength);
      rep.noise_floor = std::max(rep.noise_floor, cfg.tol * scale);
      if (!concave) {
        // f(x) >= f(xbar) + delta + lambda (c(x,ybar) - c(xbar,ybar))
        double lhs = f(xbar) + delta + strength;
        if (f(x) < lhs - cfg.tol * scale) {
          rep.violations.push_back(make_witness(
              {{"x", x}, {"xbar", xbar}, {"ybar", ybar}, {"yhat", yhat}}, lhs, f(x), lhs - f(x),
              k));
        }
      } else {
        // -g(x) <= -g(xbar) + delta - lambda (c(x,ybar) - c(xbar,ybar))
        double lhs = -f(x);
        double rhs = -f(xbar) + delta - strength;
        if (lhs > rhs + cfg.tol * scale) {
          rep.violations.push_back(make_witness(
              {{"x", x}, {"xbar", xbar}, {"ybar", ybar}, {"yhat", yhat}}, lhs, rhs, lhs - rhs,
              k));
        }
      }
    } else {
      // semilocal: convexity of the objective minus lambda * c(., base) along
      // the segment family anchored at xbar
      Vec x_end = rng.uniform_vec(cfg.search.box_lo, cfg.search.box_hi);
      const Vec base = concave ? yhat : ybar;
      CSegment seg;
      try {
        seg = c_segment(c, xbar, x_end, base, cfg.segment_steps);
      } catch (const Error&) {
        continue;  // no admissible segment through this sample
      }
      auto fn = [&](const Vec& p) { return f(p) - lambda * c.value(p, base); };
      ConvexityReport conv = convexity_along_segment(fn, seg);
      rep.noise_floor = std::max(rep.noise_floor, 1e-8 * conv.scale);
      if (!conv.is_convex) {
        rep.violations.push_back(make_witness({{"xbar", xbar}, {"x_end", x_end}, {"base", base}},
                                              conv.min_second_difference, 0.0,
                                              -conv.min_second_difference, k));
      }
    }
  }
  rep.passed = rep.violations.empty();
  if (!concave) rep.necessary_condition = necessary_ok;
  return rep;
}

}  // namespace

PropertyReport check_cross_convexity(const Objective& f, const CostFunction& c, double lambda,
                                     int samples, const CheckConfig& cfg) {
  return check_cross_property(f, c, lambda, samples, cfg, false);
}

PropertyReport check_cross_concavity(const Objective& g, const CostFunction& c, double lambda,
                                     int samples, const CheckConfig& cfg) {
  return check_cross_property(g, c, lambda, samples, cfg, true);
}

// ---------------------------------------------------------------------------
// Rate certificates
// ---------------------------------------------------------------------------

namespace {

double geometric_denominator(double Lambda, int n) {
  double t = static_cast<double>(n) * std::log(Lambda);
  if (t > 700.0) return std::numeric_limits<double>::infinity();
  return std::expm1(t);
}

}  // namespace

RateCertificate rate_certificate(const SolverTrace& trace, RateKind kind, const Vec& reference,
                                 const RateParams& p) {
  trace.validate();
  RateCertificate cert;
  cert.kind = kind;
  cert.reference = reference;
  const int N = trace.size();

  double scale = 1.0;
  for (const TraceStep& s : trace.steps) scale = std::max(scale, std::abs(s.value));
  const double tol = p.tol_scale;

  const int n_start = std::max(1, p.from_n);
  auto push = [&](int n, double lhs, double rhs) {
    if (n < n_start) return;
    RateRow row;
    row.n = n;
    row.lhs = lhs;
    row.rhs = rhs;
    row.satisfied = lhs <= rhs + tol * scale;
    cert.per_n.push_back(row);
  };

  switch (kind) {
    case RateKind::descent: {
      for (int n = 1; n < N; ++n) push(n, trace.step(n).value, trace.step(n - 1).value);
      break;
    }
    case RateKind::am_sublinear:
    case RateKind::am_linear: {
      double ref_value, numerator;
      if (p.numerator && p.reference_value) {
        ref_value = *p.reference_value;
        numerator = *p.numerator;
      } else {
        if (!p.surrogate) throw KindMismatch("am certificate needs the surrogate");
        if (!p.reference_dual) throw KindMismatch("am certificate needs a reference dual point");
        if (!trace.step(0).y)
          throw MissingDualIterates("am certificate needs the coupled initial pair");
        ref_value = p.reference_value ? *p.reference_value
                                      : p.surrogate->phi(reference, *p.reference_dual);
        numerator = p.numerator ? *p.numerator
                                : p.surrogate->phi(reference, *trace.step(0).y) -
                                      p.surrogate->phi(trace.step(0).x, *trace.step(0).y);
      }
      scale = std::max({scale, std::abs(ref_value), std::abs(numerator)});
      for (int n = 1; n < N; ++n) {
        double bound;
        if (kind == RateKind::am_sublinear) {
          bound = ref_value + numerator / n;
        } else {
          if (p.lambda <= 0.0 || p.lambda >= 1.0)
            throw ConfigError("linear certificate needs lambda in (0, 1)");
          bound = ref_value +
                  p.lambda * numerator / geometric_denominator(1.0 / (1.0 - p.lambda), n);
        }
        push(n, trace.step(n).value, bound);
      }
      break;
    }
    case RateKind::gdgc_sublinear:
    case RateKind::gdgc_linear: {
      double f_ref;
      if (p.reference_value) {
        f_ref = *p.reference_value;
      } else {
        if (!p.objective) throw KindMismatch("gdgc certificate needs the objective");
        f_ref = (*p.objective)(reference);
      }
      double numerator;
      if (p.numerator) {
        numerator = *p.numerator;
      } else {
        if (!p.cost) throw KindMismatch("gdgc certificate needs the cost");
        if (!trace.step(0).y)
          throw MissingDualIterates("gdgc certificate needs the coupled initial dual point");
        const Vec& y0 = *trace.step(0).y;
        numerator = p.cost->value(reference, y0) - p.cost->value(trace.step(0).x, y0);
      }
      scale = std::max({scale, std::abs(f_ref), std::abs(numerator)});
      for (int n = 1; n < N; ++n) {
        double bound;
        if (kind == RateKind::gdgc_sublinear) {
          bound = f_ref + numerator / n;
        } else {
          if (p.lambda <= 0.0 || p.lambda >= 1.0)
            throw ConfigError("linear certificate needs lambda in (0, 1)");
          bound =
              f_ref + p.lambda * numerator / geometric_denominator(1.0 / (1.0 - p.lambda), n);
        }
        push(n, trace.step(n).value, bound);
      }
      break;
    }
    case RateKind::fb_sublinear:
    case RateKind::fb_linear: {
      double F_ref;
      if (p.reference_value) {
        F_ref = *p.reference_value;
      } else {
        if (!p.objective || !p.objective_g)
          throw KindMismatch("fb certificate needs both objectives");
        F_ref = (*p.objective)(reference) + (*p.objective_g)(reference);
      }
      double numerator;
      if (p.numerator) {
        numerator = *p.numerator;
      } else {
        if (!p.cost) throw KindMismatch("fb certificate needs the cost");
        if (!trace.step(0).y)
          throw MissingDualIterates("fb certificate needs argmin_y c(x0, .) recorded");
        numerator = p.cost->value(reference, *trace.step(0).y);
      }
      scale = std::max({scale, std::abs(F_ref), std::abs(numerator)});
      for (int n = 1; n < N; ++n) {
        double bound;
        if (kind == RateKind::fb_sublinear) {
          bound = F_ref + numerator / n;
        } else {
          if (p.lambda < 0.0 || p.lambda >= 1.0 || p.mu < 0.0 || p.mu >= 1.0 ||
              p.lambda + p.mu <= 0.0)
            throw ConfigError("fb linear certificate needs lambda, mu in [0,1), lambda+mu > 0");
          double Lambda = (1.0 + p.mu) / (1.0 - p.lambda);
          bound = F_ref + (p.lambda + p.mu) * numerator / geometric_denominator(Lambda, n);
        }
        push(n, trace.step(n).value, bound);
      }
      break;
    }
    case RateKind::lyapunov: {
      if (!p.surrogate) throw KindMismatch("lyapunov certificate needs the surrogate");
      if (!p.reference_dual) throw KindMismatch("lyapunov certificate needs an anchor dual point");
      double anchor = p.surrogate->phi(reference, *p.reference_dual);
      double f_star = p.reference_value ? *p.reference_value : 0.0;
      std::vector<double> V(static_cast<std::size_t>(N));
      for (int n = 0; n < N; ++n) {
        if (!trace.step(n).y) throw MissingDualIterates("lyapunov check needs dual iterates");
        const TraceStep& s = trace.step(n);
        double phi_n = p.surrogate->phi(s.x, *s.y);
        V[static_cast<std::size_t>(n)] =
            n * (phi_n - anchor) + p.surrogate->phi(reference, *s.y) - f_star;
        scale = std::max(scale, std::abs(V[static_cast<std::size_t>(n)]));
      }
      for (int n = 1; n < N; ++n)
        push(n, V[static_cast<std::size_t>(n)], V[static_cast<std::size_t>(n - 1)]);
      break;
    }
  }
  cert.finalize();
  return cert;
}

PropertyReport lyapunov_check(const SolverTrace& trace, const Surrogate& phi, const Vec& anchor_x,
                              const Vec& anchor_y, double f_star) {
  RateParams p;
  p.surrogate = &phi;
  p.reference_dual = anchor_y;
  p.reference_value = f_star;
  RateCertificate cert = rate_certificate(trace, RateKind::lyapunov, anchor_x, p);
  PropertyReport rep;
  rep.property = "lyapunov";
  rep.samples = static_cast<int>(cert.per_n.size());
  for (const RateRow& row : cert.per_n) {
    if (!row.satisfied) {
      rep.violations.push_back(make_witness({{"x", trace.step(row.n).x}}, row.lhs, row.rhs,
                                            row.lhs - row.rhs, row.n));
    }
  }
  rep.passed = rep.violations.empty();
  return rep;
}

PropertyReport check_descent_gap(const SolverTrace& trace, const Objective& f,
                                 const CostFunction& c) {
  trace.validate();
  PropertyReport rep;
  rep.property = "descent_gap";
  const int N = trace.size();
  rep.samples = N - 1;

  double f_star = std::numeric_limits<double>::infinity();
  for (const TraceStep& s : trace.steps) f_star = std::min(f_star, f(s.x));

  std::vector<double> gaps;
  double scale = 1.0;
  for (int n = 0; n + 1 < N; ++n) {
    const TraceStep& s = trace.step(n);
    const TraceStep& t = trace.step(n + 1);
    if (!t.y) throw MissingDualIterates("descent-gap check needs dual iterates");
    double gap = c.value(s.x, *t.y) - c.value(t.x, *t.y);
    gaps.push_back(gap);
    double fn = f(s.x), fn1 = f(t.x);
    scale = std::max({scale, std::abs(fn), std::abs(fn1), std::abs(gap)});
    if (fn1 > fn - gap + 1e-9 * scale) {
      rep.violations.push_back(make_witness({{"x_n", s.x}, {"x_n1", t.x}}, fn1, fn - gap,
                                            fn1 - (fn - gap), n));
    }
  }
  double f0 = f(trace.step(0).x);
  double running_min = std::numeric_limits<double>::infinity();
  for (int n = 1; n < N; ++n) {
    running_min = std::min(running_min, gaps[static_cast<std::size_t>(n - 1)]);
    double bound = (f0 - f_star) / n;
    if (running_min > bound + 1e-9 * scale) {
      rep.violations.push_back(make_witness({{"x_n", trace.step(n).x}}, running_min, bound,
                                            running_min - bound, n));
    }
  }
  rep.noise_floor = 1e-9 * scale;
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace gdgc
