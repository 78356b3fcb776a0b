#include "gdgc/solvers.hpp"

#include <cmath>
#include <limits>

namespace gdgc {

void SolverSpec::validate() const {
  if (horizon < 1) throw ConfigError("solver horizon must be >= 1");
  if (tol <= 0.0) throw ConfigError("solver tolerance must be > 0");
}

// ---------------------------------------------------------------------------
// Couplings and KL
// ---------------------------------------------------------------------------

void DiscreteCoupling::validate(bool unit_mass) const {
  if ((m.array() < 0.0).any()) throw Error("coupling has negative entries");
  if (unit_mass && std::abs(total_mass() - 1.0) > 1e-12)
    throw Error("coupling mass differs from 1");
}

double kl_divergence(const Vec& p, const Vec& q) {
  double out = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("KL needs nonnegative entries");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw ZeroMass("KL divergence infinite: zero reference mass");
    out += p[i] * std::log(p[i] / q[i]);
  }
  return require_finite(out, "KL divergence");
}

double kl_divergence(const Mat& p, const Mat& q) {
  Vec pv = Eigen::Map<const Vec>(p.data(), p.size());
  Vec qv = Eigen::Map<const Vec>(q.data(), q.size());
  return kl_divergence(pv, qv);
}

// ---------------------------------------------------------------------------
// Convex sets
// ---------------------------------------------------------------------------

ConvexSet halfspace_set(const Vec& a, double b) {
  if (a.norm() == 0.0) throw ConfigError("halfspace normal must be nonzero");
  ConvexSet s;
  s.kind = "halfspace";
  double nn = a.squaredNorm();
  Vec av = a;
  s.project = [av, b, nn](const Vec& x) {
    double overshoot = av.dot(x) - b;
    if (overshoot <= 0.0) return x;
    return Vec(x - (overshoot / nn) * av);
  };
  return s;
}

ConvexSet ball_set(const Vec& center, double radius) {
  if (radius <= 0.0) throw ConfigError("ball radius must be positive");
  ConvexSet s;
  s.kind = "ball";
  Vec c = center;
  s.project = [c, radius](const Vec& x) {
    Vec d = x - c;
    double n = d.norm();
    if (n <= radius) return x;
    return Vec(c + (radius / n) * d);
  };
  return s;
}

ConvexSet box_set(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size() || (lo.array() > hi.array()).any())
    throw ConfigError("box bounds are inconsistent");
  ConvexSet s;
  s.kind = "box";
  Vec l = lo, h = hi;
  s.project = [l, h](const Vec& x) { return Vec(x.cwiseMax(l).cwiseMin(h)); };
  return s;
}

ConvexSet affine_set(const Mat& A, const Vec& b) {
  if (A.rows() != b.size()) throw ConfigError("affine set dimension mismatch");
  ConvexSet s;
  s.kind = "affine";
  Mat At = A.transpose();
  Eigen::PartialPivLU<Mat> gram((A * At).eval());
  Mat Am = A;
  Vec bv = b;
  s.project = [Am, At, gram, bv](const Vec& x) { return Vec(x - At * gram.solve(Am * x - bv)); };
  return s;
}

// ---------------------------------------------------------------------------
// Trace helpers
// ---------------------------------------------------------------------------

namespace {

TraceStep make_step(int n, const Vec& x, double value) {
  TraceStep s;
  s.n = n;
  s.x = x;
  s.value = require_finite(value, "trace value");
  return s;
}

// y0 paired with the initial iterate: the point with grad_x c(x0, y0) = 0,
// which is what the rate statements anchor their bound constants to.
std::optional<Vec> coupled_initial_dual(const CostFunction& c, const Vec& x0) {
  try {
    return c_exponential(c, x0, Vec(Vec::Zero(x0.size())));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Alternating minimization
// ---------------------------------------------------------------------------

SolverTrace alternating_minimize(const Surrogate& phi, const Vec& x0, const SolverSpec& spec,
                                 const SearchConfig& cfg) {
  spec.validate();
  SolverTrace trace;
  trace.solver = "alternating_min";
  trace.cost = phi.cost.name;
  trace.seed = cfg.seed;
  trace.horizon = spec.horizon;

  Vec x = x0;
  // pair the start with the dual point whose x-update returns x0, so that
  // the rate bounds can anchor their constants at step 0: grad_x phi = 0
  // reads grad_x c(x0, y0) = -grad g(x0)
  std::optional<Vec> y;
  try {
    Vec xi = phi.g ? Vec(fd_gradient(phi.g, x0)) : Vec(Vec::Zero(x0.size()));
    y = c_exponential(phi.cost, x0, xi);
  } catch (const Error&) {
    y = std::nullopt;
  }

  TraceStep s0 = make_step(0, x, 0.0);
  if (y) {
    s0.y = *y;
    s0.phi = phi.phi(x, *y);
    s0.value = *s0.phi;
  }
  trace.steps.push_back(s0);

  double scale = 1.0 + (y ? std::abs(*s0.phi) : 0.0);
  for (int n = 0; n < spec.horizon; ++n) {
    // y-step
    auto in_y = [&](const Vec& yy) { return phi.phi(x, yy); };
    MinimizeResult ystep;
    try {
      ystep = minimize_multistart(in_y, cfg, y);
    } catch (const UnboundedError&) {
      throw;
    } catch (const Error& e) {
      throw InnerSolveFailure(std::string("y-step failed: ") + e.what());
    }
    Vec y_next = ystep.x;
    double phi_x_ynext = ystep.value;

    // x-step
    Vec x_next;
    if (!phi.g) {
      // phi(., y) = c(., y) + const
      x_next = cost_argmin_in_x(phi.cost, y_next, x);
    } else {
      auto in_x = [&](const Vec& xx) { return phi.phi(xx, y_next); };
      MinimizeResult xstep;
      try {
        xstep = minimize_multistart(in_x, cfg, x);
      } catch (const Error& e) {
        throw InnerSolveFailure(std::string("x-step failed: ") + e.what());
      }
      x_next = xstep.x;
    }
    double phi_next = phi.phi(x_next, y_next);

    const double mono_tol = 1e-9 * scale;
    if (phi_next > phi_x_ynext + mono_tol || (y && phi.phi(x, *y) + mono_tol < phi_x_ynext))
      throw MonotonicityViolation("surrogate value increased along an alternating step");

    TraceStep s = make_step(n + 1, x_next, phi_next);
    s.y = y_next;
    s.phi = phi_next;
    trace.steps[static_cast<std::size_t>(n)].gap =
        phi.cost.value(x, y_next) - phi.cost.value(x_next, y_next);
    trace.steps.push_back(s);

    x = x_next;
    y = y_next;
    scale = std::max(scale, 1.0 + std::abs(phi_next));
  }
  if (!trace.steps[0].y) {
    // no coupled dual at the start; report the first surrogate value instead
    trace.steps[0].value = trace.steps[1].value;
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Explicit gradient descent with a general cost
// ---------------------------------------------------------------------------

SolverTrace gdgc_explicit(const Objective& f, const CostFunction& c, const Vec& x0,
                          const SolverSpec& spec) {
  spec.validate();
  SolverTrace trace;
  trace.solver = "gdgc_explicit";
  trace.cost = c.name;
  trace.horizon = spec.horizon;

  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  if (auto y0 = coupled_initial_dual(c, x0)) s0.y = *y0;
  trace.steps.push_back(s0);

  for (int n = 0; n < spec.horizon; ++n) {
    Vec y_next = c_exponential(c, x, Vec(-f.gradient(x)));
    Vec x_next = cost_argmin_in_x(c, y_next, x);
    trace.steps[static_cast<std::size_t>(n)].gap =
        c.value(x, y_next) - c.value(x_next, y_next);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = y_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

SolverTrace gdgc_surrogate(const Objective& f, const CostFunction& c, const Vec& x0,
                           const SolverSpec& spec, const SearchConfig& cfg) {
  spec.validate();
  Surrogate phi = make_surrogate(f, c, cfg);
  SolverTrace trace;
  trace.solver = "gdgc_surrogate";
  trace.cost = c.name;
  trace.seed = cfg.seed;
  trace.horizon = spec.horizon;

  Vec x = x0;
  std::optional<Vec> y = coupled_initial_dual(c, x0);
  TraceStep s0 = make_step(0, x, f(x));
  if (y) s0.y = *y;
  trace.steps.push_back(s0);

  for (int n = 0; n < spec.horizon; ++n) {
    auto in_y = [&](const Vec& yy) { return phi.phi(x, yy); };
    MinimizeResult ystep;
    try {
      ystep = minimize_multistart(in_y, cfg, y);
    } catch (const UnboundedError&) {
      throw;
    } catch (const Error& e) {
      throw InnerSolveFailure(std::string("surrogate y-step failed: ") + e.what());
    }
    Vec y_next = ystep.x;
    Vec x_next = cost_argmin_in_x(c, y_next, x);  // f^c(y_{n+1}) is constant in x
    trace.steps[static_cast<std::size_t>(n)].gap =
        c.value(x, y_next) - c.value(x_next, y_next);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = y_next;
    s.phi = phi.phi(x_next, y_next);
    trace.steps.push_back(s);
    x = x_next;
    y = y_next;
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Forward-backward
// ---------------------------------------------------------------------------

SolverTrace forward_backward(const Objective& f, const Objective& g, const CostFunction& c,
                             const Vec& x0, const SolverSpec& spec, const SearchConfig& cfg) {
  spec.validate();
  SolverTrace trace;
  trace.solver = "forward_backward";
  trace.cost = c.name;
  trace.seed = cfg.seed;
  trace.horizon = spec.horizon;

  Vec x = x0;
  auto F = [&](const Vec& xx) { return f(xx) + g(xx); };

  TraceStep s0 = make_step(0, x, F(x));
  try {
    // the fb rate bounds are anchored at argmin_y c(x0, y)
    s0.y = cost_argmin_in_y(c, x0, x0);
  } catch (const Error&) {
  }
  trace.steps.push_back(s0);

  for (int n = 0; n < spec.horizon; ++n) {
    Vec y_next = c_exponential(c, x, Vec(-f.gradient(x)));

    // backward step: grad_x c(x, y_next) + grad g(x) = 0
    Vec x_next;
    auto residual = [&](const Vec& xx) -> Vec { return c.grad_x(xx, y_next) + g.gradient(xx); };
    auto jacobian = [&](const Vec& xx) -> Mat {
      Mat J = c.hess_xx(xx, y_next);
      return Mat(J + g.hessian(xx));
    };
    auto admissible = [&](const Vec& xx) {
      return xx.allFinite() && c.in_domain(xx, y_next) && g.in_domain(xx);
    };
    try {
      x_next = newton_solve(residual, jacobian, admissible, x, spec.tol, 100, "backward step");
    } catch (const Error&) {
      auto prox = [&](const Vec& xx) { return c.value(xx, y_next) + g(xx); };
      try {
        x_next = minimize_multistart(prox, cfg, x).x;
      } catch (const Error& e) {
        throw InnerSolveFailure(std::string("backward step failed: ") + e.what());
      }
    }
    trace.steps[static_cast<std::size_t>(n)].gap =
        c.value(x, y_next) - c.value(x_next, y_next);
    TraceStep s = make_step(n + 1, x_next, F(x_next));
    s.y = y_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Closed-form specializations
// ---------------------------------------------------------------------------

SolverTrace gradient_descent(const Objective& f, double L, const Vec& x0, int horizon) {
  if (L <= 0.0) throw ConfigError("gradient descent requires L > 0");
  SolverTrace trace;
  trace.solver = "gradient_descent";
  trace.cost = "quadratic";
  trace.horizon = horizon;
  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  s0.y = x;
  trace.steps.push_back(s0);
  for (int n = 0; n < horizon; ++n) {
    Vec x_next = x - f.gradient(x) / L;
    trace.steps[static_cast<std::size_t>(n)].gap = 0.5 * L * (x - x_next).squaredNorm();
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = x_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

SolverTrace mirror_descent(const Objective& f, const ConvexPotential& u, const Vec& x0,
                           int horizon) {
  if (!u.has_grad_inverse() && !(u.grad && u.hess))
    throw ConfigError("mirror descent needs an invertible gradient for " + u.name);
  SolverTrace trace;
  trace.solver = "mirror_descent";
  trace.cost = "bregman(" + u.name + ")";
  trace.horizon = horizon;
  if (!u.in_domain(x0)) throw DomainError("mirror descent start outside dom u");
  auto bregman = [&](const Vec& a, const Vec& b) {
    return u.value(a) - u.value(b) - u.gradient(b).dot(a - b);
  };
  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  s0.y = x;
  trace.steps.push_back(s0);
  for (int n = 0; n < horizon; ++n) {
    Vec z = u.gradient(x) - f.gradient(x);
    Vec x_next = u.gradient_inverse(z);
    if (!u.in_domain(x_next)) throw DomainError("mirror descent iterate left dom u");
    trace.steps[static_cast<std::size_t>(n)].gap = bregman(x, x_next);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = x_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

SolverTrace natural_gradient(const Objective& f, const ConvexPotential& u, const Vec& x0,
                             int horizon) {
  SolverTrace trace;
  trace.solver = "natural_gradient";
  trace.cost = "reverse_bregman(" + u.name + ")";
  trace.horizon = horizon;
  if (!u.in_domain(x0)) throw DomainError("natural gradient start outside dom u");
  auto bregman = [&](const Vec& a, const Vec& b) {
    return u.value(a) - u.value(b) - u.gradient(b).dot(a - b);
  };
  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  s0.y = x;
  s0.dual = u.gradient(x);
  trace.steps.push_back(s0);
  for (int n = 0; n < horizon; ++n) {
    Mat H = u.hessian(x);
    Eigen::FullPivLU<Mat> lu(H);
    if (!lu.isInvertible()) throw SingularHessian("natural gradient hit a singular metric");
    Vec x_next = x - lu.solve(f.gradient(x));
    if (!x_next.allFinite()) throw SingularHessian("natural gradient step is not finite");
    if (!u.in_domain(x_next)) throw DomainError("natural gradient iterate left dom u");
    // gap for the reverse Bregman cost: c(x_n, y_{n+1}) = u(x_{n+1} | x_n)
    trace.steps[static_cast<std::size_t>(n)].gap = bregman(x_next, x);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = x_next;
    s.dual = u.gradient(x_next);
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

SolverTrace newton(const Objective& f, const Vec& x0, int horizon) {
  if (!f.has_hessian()) throw ConfigError("newton requires an objective with a Hessian");
  ConvexPotential u;
  u.name = f.name;
  u.dim = static_cast<int>(x0.size());
  Objective fo = f;
  u.eval = [fo](const Vec& x) { return fo(x); };
  u.grad = [fo](const Vec& x) { return fo.gradient(x); };
  u.hess = [fo](const Vec& x) { return fo.hessian(x); };
  u.domain = [fo](const Vec& x) { return fo.in_domain(x); };
  u.interior_point = x0;
  SolverTrace trace = natural_gradient(f, u, x0, horizon);
  trace.solver = "newton";
  return trace;
}

SolverTrace log_divergence_gd(const Objective& f, const ConvexPotential& u, double alpha,
                              const Vec& x0, int horizon) {
  if (alpha <= 0.0) throw ConfigError("log divergence descent requires alpha > 0");
  SolverTrace trace;
  trace.solver = "log_divergence_gd";
  trace.cost = "log_divergence(" + u.name + ")";
  trace.horizon = horizon;
  if (!u.in_domain(x0)) throw DomainError("start outside dom u");

  const bool quadratic_closed_form =
      u.name == "quadratic" && u.has_grad_inverse() && u.has_third();

  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  s0.y = x;
  trace.steps.push_back(s0);

  CostFunction cost = log_divergence_cost(u, alpha);

  for (int n = 0; n < horizon; ++n) {
    Vec grad_h = u.gradient(x) - f.gradient(x);  // h = u - f
    double mu;
    if (grad_h.norm() < 1e-14) {
      mu = 1.0;
    } else if (quadratic_closed_form) {
      // u = L/2 |x - a|^2: the scalar equation is a quadratic in mu
      Mat H = u.hessian(x);
      double L = H(0, 0);
      Vec a = x - u.gradient(x) / L;
      double A = alpha * grad_h.squaredNorm() / L;
      double B = alpha * (a - x).dot(grad_h) - 1.0;
      double C = 1.0;
      double disc = B * B - 4.0 * A * C;
      if (disc < 0.0) throw NoRootError("scalar equation has no real root");
      if (A < 1e-300) {
        mu = -C / B;
      } else {
        double denom = -B + std::sqrt(disc);
        if (denom <= 0.0) throw NoRootError("scalar equation has no positive root");
        mu = 2.0 * C / denom;
      }
    } else {
      mu = log_divergence_multiplier(u, alpha, x, grad_h);
    }
    if (mu <= 0.0) throw NoRootError("scalar equation produced a nonpositive multiplier");
    Vec x_next = u.gradient_inverse(Vec(mu * grad_h));
    if (!u.in_domain(x_next)) throw DomainError("log divergence iterate left dom u");
    if (!cost.in_domain(x, x_next)) throw DomainError("log divergence iterate left the cost domain");
    trace.steps[static_cast<std::size_t>(n)].gap =
        cost.value(x, x_next) - cost.value(x_next, x_next);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = x_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

SolverTrace riemannian_sphere_gd(const Objective& f, double L, const Vec& x0, int horizon) {
  if (L <= 0.0) throw ConfigError("sphere gradient descent requires L > 0");
  if (std::abs(x0.norm() - 1.0) > 1e-10)
    throw DomainError("sphere gradient descent must start on the unit sphere");
  CostFunction cost = sphere_geodesic_cost(L, static_cast<int>(x0.size()));
  SolverTrace trace;
  trace.solver = "riemannian_sphere";
  trace.cost = cost.name;
  trace.horizon = horizon;
  Vec x = x0;
  TraceStep s0 = make_step(0, x, f(x));
  s0.y = x;
  trace.steps.push_back(s0);
  for (int n = 0; n < horizon; ++n) {
    Vec g = sphere_tangent_project(x, f.gradient(x));
    Vec x_next = sphere_exp(x, Vec(-g / L));
    trace.steps[static_cast<std::size_t>(n)].gap = cost.value(x, x_next);
    TraceStep s = make_step(n + 1, x_next, f(x_next));
    s.y = x_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Sinkhorn
// ---------------------------------------------------------------------------

namespace {

void check_probability(const Vec& p, const char* what) {
  if ((p.array() <= 0.0).any()) throw ConfigError(std::string(what) + " must be strictly positive");
  if (std::abs(p.sum() - 1.0) > 1e-12)
    throw ConfigError(std::string(what) + " must sum to one");
}

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

double marginal_kl(const Mat& pi, const Vec& mu) {
  Vec r = pi.rowwise().sum();
  if ((r.array() <= 0.0).any()) throw ZeroMarginal("coupling has an empty row");
  double out = 0.0;
  for (int i = 0; i < r.size(); ++i) out += r[i] * std::log(r[i] / mu[i]);
  return require_finite(out, "marginal KL");
}

}  // namespace

SolverTrace sinkhorn(const Mat& b, double eps, const Vec& mu, const Vec& nu, int horizon) {
  if (eps <= 0.0) throw ConfigError("sinkhorn requires eps > 0");
  if (b.rows() != mu.size() || b.cols() != nu.size())
    throw ConfigError("sinkhorn dimension mismatch");
  if (!b.allFinite()) throw ConfigError("sinkhorn needs a finite cost matrix");
  check_probability(mu, "mu");
  check_probability(nu, "nu");

  const bool log_domain = (-b.maxCoeff() / eps) < std::log(1e-300);

  SolverTrace trace;
  trace.solver = "sinkhorn";
  trace.cost = "kl";
  trace.horizon = horizon;

  if (!log_domain) {
    Mat pi = ((-b / eps).array().exp()).matrix();
    for (int i = 0; i < pi.rows(); ++i)
      for (int j = 0; j < pi.cols(); ++j) pi(i, j) *= mu[i] * nu[j];
    TraceStep s0 = make_step(0, flatten(pi), marginal_kl(pi, mu));
    s0.y = flatten(pi);  // the rate bound is anchored at the initialization
    trace.steps.push_back(s0);
    for (int n = 0; n < horizon; ++n) {
      Vec r = pi.rowwise().sum();
      if ((r.array() <= 0.0).any()) throw ZeroMarginal("empty row marginal");
      Mat gamma = (mu.array() / r.array()).matrix().asDiagonal() * pi;
      Vec ccol = gamma.colwise().sum().transpose();
      if ((ccol.array() <= 0.0).any()) throw ZeroMarginal("empty column marginal");
      pi = gamma * (nu.array() / ccol.array()).matrix().asDiagonal();
      TraceStep s = make_step(n + 1, flatten(pi), marginal_kl(pi, mu));
      s.y = flatten(gamma);
      trace.steps.push_back(s);
    }
  } else {
    // log-domain scaling for underflow safety at small eps
    Mat lpi = (-b / eps);
    for (int i = 0; i < lpi.rows(); ++i)
      for (int j = 0; j < lpi.cols(); ++j) lpi(i, j) += std::log(mu[i]) + std::log(nu[j]);
    auto log_row_sums = [](const Mat& lm) {
      Vec out(lm.rows());
      for (int i = 0; i < lm.rows(); ++i) {
        double m = lm.row(i).maxCoeff();
        out[i] = m + std::log((lm.row(i).array() - m).exp().sum());
      }
      return out;
    };
    auto log_col_sums = [&](const Mat& lm) { return log_row_sums(lm.transpose()); };
    auto log_marginal_kl = [&](const Mat& lm) {
      Vec lr = log_row_sums(lm);
      double out = 0.0;
      for (int i = 0; i < lr.size(); ++i) out += std::exp(lr[i]) * (lr[i] - std::log(mu[i]));
      return require_finite(out, "marginal KL");
    };
    auto exp_mat = [](const Mat& lm) { return Mat(lm.array().exp().matrix()); };

    TraceStep s0 = make_step(0, flatten(exp_mat(lpi)), log_marginal_kl(lpi));
    s0.y = flatten(exp_mat(lpi));
    trace.steps.push_back(s0);
    for (int n = 0; n < horizon; ++n) {
      Vec lr = log_row_sums(lpi);
      Mat lgamma = lpi;
      for (int i = 0; i < lgamma.rows(); ++i)
        lgamma.row(i).array() += std::log(mu[i]) - lr[i];
      Vec lc = log_col_sums(lgamma);
      lpi = lgamma;
      for (int j = 0; j < lpi.cols(); ++j) lpi.col(j).array() += std::log(nu[j]) - lc[j];
      TraceStep s = make_step(n + 1, flatten(exp_mat(lpi)), log_marginal_kl(lpi));
      s.y = flatten(exp_mat(lgamma));
      trace.steps.push_back(s);
    }
  }
  trace.validate();
  return trace;
}

std::vector<Mat> sinkhorn_scaling_oracle(const Mat& b, double eps, const Vec& mu, const Vec& nu,
                                         int horizon) {
  Mat M = ((-b / eps).array().exp()).matrix();
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) M(i, j) *= mu[i] * nu[j];
  Vec u = Vec::Ones(mu.size());
  Vec v = Vec::Ones(nu.size());
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(horizon) + 1);
  auto coupled = [&]() { return Mat(u.asDiagonal() * M * v.asDiagonal()); };
  out.push_back(coupled());
  for (int n = 0; n < horizon; ++n) {
    u = mu.array() / (M * v).array();
    v = nu.array() / (M.transpose() * u).array();
    out.push_back(coupled());
  }
  return out;
}

// ---------------------------------------------------------------------------
// POCS
// ---------------------------------------------------------------------------

SolverTrace pocs(const ConvexSet& B, const ConvexSet& C, const Vec& x0, int horizon) {
  if (!B.contains(x0, 1e-9)) throw DomainError("pocs must start inside the first set");
  SolverTrace trace;
  trace.solver = "pocs";
  trace.cost = "quadratic";
  trace.horizon = horizon;
  Vec x = x0;
  auto dist2 = [&](const Vec& p) {
    double d = C.distance(p);
    return d * d;
  };
  TraceStep s0 = make_step(0, x, dist2(x));
  s0.y = x;  // x0 lies in B, so (x0, x0) is a coupled pair for the rate bound
  trace.steps.push_back(s0);
  for (int n = 0; n < horizon; ++n) {
    Vec y_next = C.project(x);
    Vec x_next = B.project(y_next);
    trace.steps[static_cast<std::size_t>(n)].gap =
        0.5 * (x - y_next).squaredNorm() - 0.5 * (x_next - y_next).squaredNorm();
    TraceStep s = make_step(n + 1, x_next, dist2(x_next));
    s.y = y_next;
    trace.steps.push_back(s);
    x = x_next;
  }
  trace.validate();
  return trace;
}

// ---------------------------------------------------------------------------
// Latent EM
// ---------------------------------------------------------------------------

SolverTrace latent_em(const Mat& K, const Vec& mu, const Vec& theta0, int horizon) {
  const int nx = static_cast<int>(K.rows());
  const int nz = static_cast<int>(K.cols());
  if (mu.size() != nx || theta0.size() != nz) throw ConfigError("latent EM dimension mismatch");
  if ((K.array() < 0.0).any()) throw ConfigError("kernel must be nonnegative");
  for (int k = 0; k < nz; ++k)
    if (std::abs(K.col(k).sum() - 1.0) > 1e-10)
      throw ConfigError("kernel columns must sum to one");
  check_probability(theta0, "theta0");
  if ((mu.array() < 0.0).any() || std::abs(mu.sum() - 1.0) > 1e-12)
    throw ConfigError("mu must be a probability vector");

  SolverTrace trace;
  trace.solver = "latent_em";
  trace.cost = "kl";
  trace.horizon = horizon;

  auto model_marginal = [&](const Vec& th) -> Vec { return K * th; };
  auto objective = [&](const Vec& th) {
    Vec m = model_marginal(th);
    for (int i = 0; i < nx; ++i)
      if (mu[i] > 0.0 && m[i] <= 0.0) throw ZeroMass("model assigns zero mass to observed data");
    double out = 0.0;
    for (int i = 0; i < nx; ++i)
      if (mu[i] > 0.0) out += mu[i] * std::log(mu[i] / m[i]);
    return require_finite(out, "EM objective");
  };

  Vec theta = theta0;
  trace.steps.push_back(make_step(0, theta, objective(theta)));
  for (int n = 0; n < horizon; ++n) {
    Vec m = model_marginal(theta);
    Mat pi(nx, nz);
    for (int i = 0; i < nx; ++i) {
      if (mu[i] > 0.0 && m[i] <= 0.0) throw ZeroMass("E-step hit zero model mass");
      for (int k = 0; k < nz; ++k)
        pi(i, k) = (mu[i] > 0.0) ? K(i, k) * theta[k] * mu[i] / m[i] : 0.0;
    }
    Vec theta_next = pi.colwise().sum().transpose();
    TraceStep s = make_step(n + 1, theta_next, objective(theta_next));
    s.y = flatten(pi);
    trace.steps.push_back(s);
    theta = theta_next;
  }
  trace.validate();
  return trace;
}

Mat coupling_from_step(const SolverTrace& trace, int n, int rows, int cols) {
  const TraceStep& s = trace.step(n);
  if (s.x.size() != rows * cols) throw KindMismatch("trace step does not hold a coupling");
  return Eigen::Map<const Mat>(s.x.data(), rows, cols);
}

}  // namespace gdgc
