#include "gdgc/geometry.hpp"

#include <cmath>
#include <limits>

namespace gdgc {

Vec newton_solve(const std::function<Vec(const Vec&)>& residual,
                 const std::function<Mat(const Vec&)>& jacobian,
                 const std::function<bool(const Vec&)>& admissible, Vec z, double tol,
                 int max_iter, const std::string& what) {
  if (!admissible(z)) throw DomainError(what + ": infeasible starting point");
  double best = residual(z).norm();
  for (int it = 0; it < max_iter; ++it) {
    Vec r = residual(z);
    double rn = r.norm();
    if (rn <= tol) return z;
    Mat J = jacobian(z);
    Vec step = J.partialPivLu().solve(-r);
    if (!step.allFinite()) throw SingularHessian(what + ": singular Jacobian");
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vec cand = z + t * step;
      if (admissible(cand)) {
        Vec rc = residual(cand);
        if (rc.allFinite() && rc.norm() < rn) {
          z = cand;
          best = rc.norm();
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) throw NoConvergence(what + ": damped Newton stalled");
  }
  if (best <= tol * 10.0) return z;
  throw NoConvergence(what + ": damped Newton did not converge");
}

Vec c_exponential(const CostFunction& c, const Vec& x, const Vec& xi) {
  if (c.cexp) {
    Vec y = c.cexp(x, xi);
    require_finite(y, "c-exponential");
    return y;
  }
  const double tol = 1e-10 * (1.0 + xi.norm());
  auto residual = [&](const Vec& y) -> Vec { return c.grad_x(x, y) + xi; };
  auto jacobian = [&](const Vec& y) -> Mat { return c.hess_xy(x, y); };
  auto admissible = [&](const Vec& y) { return y.allFinite() && c.in_domain(x, y); };
  Vec y0 = x;  // X and Y have the same dimension under the non-degeneracy assumption
  return newton_solve(residual, jacobian, admissible, y0, tol, 100, "c-exponential");
}

Vec cost_argmin_in_x(const CostFunction& c, const Vec& y, const Vec& x_guess) {
  if (c.argmin_in_x) {
    Vec x = c.argmin_in_x(y);
    require_finite(x, "cost argmin in x");
    return x;
  }
  auto residual = [&](const Vec& x) -> Vec { return c.grad_x(x, y); };
  auto jacobian = [&](const Vec& x) -> Mat { return c.hess_xx(x, y); };
  auto admissible = [&](const Vec& x) { return x.allFinite() && c.in_domain(x, y); };
  return newton_solve(residual, jacobian, admissible, x_guess, 1e-11, 100, "cost argmin in x");
}

Vec cost_argmin_in_y(const CostFunction& c, const Vec& x, const Vec& y_guess) {
  if (c.argmin_in_y) {
    Vec y = c.argmin_in_y(x);
    require_finite(y, "cost argmin in y");
    return y;
  }
  auto residual = [&](const Vec& y) -> Vec { return c.grad_y(x, y); };
  auto jacobian = [&](const Vec& y) -> Mat { return c.hess_yy(x, y); };
  auto admissible = [&](const Vec& y) { return y.allFinite() && c.in_domain(x, y); };
  return newton_solve(residual, jacobian, admissible, y_guess, 1e-11, 100, "cost argmin in y");
}

// ---------------------------------------------------------------------------
// c-segments
// ---------------------------------------------------------------------------

namespace {

// Acceleration of the horizontal c-segment ODE at (x, v):
//   a = -A^{-T} w,  A = hess_xy(x, y),  w_m = d^2/ds^2 [grad_y c(x+s v, y)]_m
Vec segment_acceleration(const CostFunction& c, const Vec& x, const Vec& v, const Vec& y) {
  if (v.norm() < 1e-14) return Vec::Zero(x.size());
  auto grad_y_at = [&](const Vec& xx) -> Vec { return c.grad_y(xx, y); };
  double h = 1e-4 * (1.0 + x.norm()) / std::max(1.0, v.norm());
  Vec w = fd_directional_second(grad_y_at, x, v, h);
  Mat A = c.hess_xy(x, y);
  Vec a = A.transpose().partialPivLu().solve(-w);
  if (!a.allFinite()) throw ShootingFailure("c-segment ODE has singular mixed Hessian");
  return a;
}

// Classical 4th-order step for x'' = a(x, x').
void rk4_step(const CostFunction& c, const Vec& y, double h, Vec& x, Vec& v) {
  Vec k1x = v;
  Vec k1v = segment_acceleration(c, x, v, y);
  Vec k2x = v + 0.5 * h * k1v;
  Vec k2v = segment_acceleration(c, x + 0.5 * h * k1x, v + 0.5 * h * k1v, y);
  Vec k3x = v + 0.5 * h * k2v;
  Vec k3v = segment_acceleration(c, x + 0.5 * h * k2x, v + 0.5 * h * k2v, y);
  Vec k4x = v + h * k3v;
  Vec k4v = segment_acceleration(c, x + h * k3x, v + h * k3v, y);
  x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

// Integrate the segment ODE from (x0, v0) over [0, 1], recording n_samples.
std::vector<Vec> integrate_segment(const CostFunction& c, const Vec& x0, const Vec& v0,
                                   const Vec& y, int rk_steps, int n_samples) {
  std::vector<Vec> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  Vec x = x0, v = v0;
  const double h = 1.0 / rk_steps;
  int next_sample = 0;
  for (int k = 0; k <= rk_steps; ++k) {
    double t = static_cast<double>(k) / rk_steps;
    double t_needed = static_cast<double>(next_sample) / (n_samples - 1);
    if (next_sample < n_samples && t >= t_needed - 1e-12) {
      samples.push_back(x);
      ++next_sample;
    }
    if (k < rk_steps) {
      if (!c.in_domain(x, y)) throw DomainError("c-segment left the cost domain");
      rk4_step(c, y, h, x, v);
      if (!x.allFinite() || !v.allFinite()) throw ShootingFailure("c-segment integration diverged");
    }
  }
  while (static_cast<int>(samples.size()) < n_samples) samples.push_back(x);
  return samples;
}

}  // namespace

CSegment c_segment(const CostFunction& c, const Vec& x_start, const Vec& x_end, const Vec& y,
                   int steps, const SegmentOptions& opt) {
  if (steps < 2) throw ConfigError("c-segment needs at least two samples");
  CSegment seg;
  seg.cost_name = c.name;
  seg.horizontal = true;
  seg.fixed_point = y;
  seg.ts.resize(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) seg.ts[static_cast<std::size_t>(k)] = double(k) / (steps - 1);

  if (c.segment_point) {
    seg.points.reserve(static_cast<std::size_t>(steps));
    for (double t : seg.ts) {
      Vec p = c.segment_point(x_start, x_end, t);
      require_finite(p, "c-segment sample");
      seg.points.push_back(p);
    }
    return seg;
  }

  // Shooting: adjust the initial velocity until the terminal point matches.
  Vec v = x_end - x_start;
  const double scale = 1.0 + x_end.norm();
  auto terminal = [&](const Vec& v0) -> Vec {
    std::vector<Vec> path = integrate_segment(c, x_start, v0, y, opt.rk_steps, 2);
    return path.back() - x_end;
  };
  bool hit = false;
  for (int it = 0; it < opt.max_newton; ++it) {
    Vec miss = terminal(v);
    if (miss.norm() <= opt.tol * scale) {
      hit = true;
      break;
    }
    const int d = static_cast<int>(v.size());
    Mat J(d, d);
    double fd = 1e-6 * (1.0 + v.norm());
    for (int j = 0; j < d; ++j) {
      Vec vp = v;
      vp[j] += fd;
      J.col(j) = (terminal(vp) - miss) / fd;
    }
    Vec delta = J.partialPivLu().solve(-miss);
    if (!delta.allFinite()) throw ShootingFailure("shooting Jacobian is singular");
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vec cand = v + t * delta;
      try {
        if (terminal(cand).norm() < miss.norm()) {
          v = cand;
          moved = true;
          break;
        }
      } catch (const Error&) {
        // shrink and retry
      }
      t *= 0.5;
    }
    if (!moved) throw ShootingFailure("c-segment shooting stalled");
  }
  if (!hit) {
    Vec miss = terminal(v);
    if (miss.norm() > opt.tol * scale)
      throw ShootingFailure("c-segment shooting did not reach the endpoint");
  }
  seg.points = integrate_segment(c, x_start, v, y, opt.rk_steps, steps);
  return seg;
}

// ---------------------------------------------------------------------------

double cross_difference(const CostFunction& c, const Vec& xp, const Vec& yp, const Vec& x,
                        const Vec& y) {
  return require_finite(
      c.value(x, yp) + c.value(xp, y) - c.value(x, y) - c.value(xp, yp), "cross difference");
}

double kim_mccann_metric(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                         const Vec& eta) {
  if (!c.in_domain(x, y)) throw DomainError("pair outside domain of cost " + c.name);
  return require_finite(-xi.dot(c.hessian_xy(x, y) * eta), "kim-mccann metric");
}

// ---------------------------------------------------------------------------
// Cross-curvature
// ---------------------------------------------------------------------------

namespace {

double curvature_at_step(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                         const Vec& eta, double h) {
  // v_m = c_ikm xi^i xi^k : first difference of hess_xy^T xi along xi
  auto hxy_t_xi = [&](const Vec& xx) -> Vec { return c.hess_xy(xx, y).transpose() * xi; };
  Vec v = fd_directional(hxy_t_xi, x, xi, h);
  // w_r = c_rjl eta^j eta^l : first difference of hess_xy eta along eta
  auto hxy_eta = [&](const Vec& yy) -> Vec { return c.hess_xy(x, yy) * eta; };
  Vec w = fd_directional(hxy_eta, y, eta, h);
  // q = c_ijkl xi^i eta^j xi^k eta^l : mixed second difference of xi^T hess_xy eta
  auto m = [&](double s, double t) {
    return xi.dot(c.hess_xy(x + s * xi, y + t * eta) * eta);
  };
  double q = fd_mixed_directional(m, h);

  Mat A = c.hess_xy(x, y);
  Vec z = A.partialPivLu().solve(w);
  if (!z.allFinite()) throw SingularHessian("cross-curvature needs an invertible mixed Hessian");
  return v.dot(z) - q;
}

}  // namespace

CurvatureResult cross_curvature(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                                const Vec& eta) {
  if (!c.in_domain(x, y)) throw DomainError("pair outside domain of cost " + c.name);
  const double h1 = 1e-3 * (1.0 + std::max(x.norm(), y.norm()));
  double s1 = curvature_at_step(c, x, y, xi, eta, h1);
  double s2 = curvature_at_step(c, x, y, xi, eta, h1 / 2.0);
  CurvatureResult out;
  out.value = require_finite(s2, "cross-curvature");
  double scale = std::abs(s2) + xi.squaredNorm() * eta.squaredNorm();
  out.noise_floor = std::abs(s1 - s2) + 1e-13 * scale;
  out.below_noise = std::abs(out.value) < 10.0 * out.noise_floor;
  return out;
}

double cross_curvature_via_path(const CostFunction& c, const Vec& x, const Vec& y, const Vec& xi,
                                const Vec& eta) {
  // Integrate the c-segment through (x, xi) to short times +/- hs, take the
  // fourth-order mixed difference of c along (x(s), y + t eta).
  const double hs = 1e-2;
  const double ht = 1e-2 * (1.0 + y.norm());

  // The segment ODE is homogeneous of degree two in the velocity, so x(s)
  // equals the unit-time endpoint of the segment shot with velocity s*xi.
  auto x_at = [&](double s) -> Vec {
    if (s == 0.0) return x;
    std::vector<Vec> path = integrate_segment(c, x, Vec(s * xi), y, 16, 2);
    return path.back();
  };

  auto c_tt = [&](double s) {
    Vec xs = x_at(s);
    double cp = c.value(xs, y + ht * eta);
    double c0 = c.value(xs, y);
    double cm = c.value(xs, y - ht * eta);
    return (cp - 2.0 * c0 + cm) / (ht * ht);
  };
  double kp = c_tt(hs);
  double k0 = c_tt(0.0);
  double km = c_tt(-hs);
  return -(kp - 2.0 * k0 + km) / (hs * hs);
}

ConvexityReport convexity_along_segment(const std::function<double(const Vec&)>& fn,
                                        const CSegment& seg) {
  if (seg.size() < 3) throw ConfigError("segment must have at least three samples");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(seg.size()));
  double scale = 1.0;
  for (const Vec& p : seg.points) {
    double v = require_finite(fn(p), "function along segment");
    vals.push_back(v);
    scale = std::max(scale, std::abs(v));
  }
  ConvexityReport rep;
  rep.scale = scale;
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < vals.size(); ++k) {
    double d2 = vals[k + 1] - 2.0 * vals[k] + vals[k - 1];
    rep.min_second_difference = std::min(rep.min_second_difference, d2);
  }
  rep.is_convex = rep.min_second_difference >= -1e-8 * scale;
  return rep;
}

}  // namespace gdgc
