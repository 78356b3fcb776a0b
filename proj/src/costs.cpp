#include "gdgc/costs.hpp"

#include <cmath>

namespace gdgc {

// ---------------------------------------------------------------------------
// ConvexPotential
// ---------------------------------------------------------------------------

double ConvexPotential::value(const Vec& x) const {
  if (!in_domain(x)) throw DomainError("point outside domain of potential " + name);
  return require_finite(eval(x), "potential " + name);
}

Vec ConvexPotential::gradient(const Vec& x) const {
  if (!in_domain(x)) throw DomainError("point outside domain of potential " + name);
  if (grad) {
    Vec g = grad(x);
    require_finite(g, "gradient of potential " + name);
    return g;
  }
  return fd_gradient(eval, x);
}

Mat ConvexPotential::hessian(const Vec& x) const {
  if (!in_domain(x)) throw DomainError("point outside domain of potential " + name);
  if (hess) {
    Mat h = hess(x);
    if (!h.allFinite()) throw DomainError("non-finite hessian of potential " + name);
    return h;
  }
  return fd_hessian(eval, x);
}

bool ConvexPotential::in_domain(const Vec& x) const { return domain ? domain(x) : true; }

Vec ConvexPotential::gradient_inverse(const Vec& z) const {
  if (grad_inverse) {
    Vec x = grad_inverse(z);
    require_finite(x, "gradient inverse of potential " + name);
    return x;
  }
  // Damped Newton on grad(x) = z.
  Vec x = interior_point.size() > 0 ? interior_point : Vec::Zero(dim > 0 ? dim : z.size());
  const double tol = 1e-12 * (1.0 + z.norm());
  for (int it = 0; it < 200; ++it) {
    Vec r = gradient(x) - z;
    if (r.norm() <= tol) return x;
    Mat H = hessian(x);
    Eigen::PartialPivLU<Mat> lu(H);
    Vec step = lu.solve(-r);
    if (!step.allFinite()) throw SingularHessian("singular hessian inverting gradient of " + name);
    double t = 1.0;
    double base = r.norm();
    for (int ls = 0; ls < 60; ++ls) {
      Vec cand = x + t * step;
      if (in_domain(cand)) {
        Vec rc = gradient(cand) - z;
        if (rc.allFinite() && rc.norm() < base) {
          x = cand;
          break;
        }
      }
      t *= 0.5;
      if (ls == 59) throw NoConvergence("gradient inversion stalled for potential " + name);
    }
  }
  throw NoConvergence("gradient inversion did not converge for potential " + name);
}

double ConvexPotential::conjugate_value(const Vec& y) const {
  if (conjugate) return require_finite(conjugate(y), "conjugate of potential " + name);
  if (!grad_inverse && !(grad && hess))
    throw ConjugateUnavailable("no conjugate available for potential " + name);
  try {
    Vec xs = gradient_inverse(y);
    return require_finite(xs.dot(y) - value(xs), "conjugate of potential " + name);
  } catch (const NoConvergence&) {
    throw ConjugateUnavailable("conjugate evaluation failed for potential " + name);
  } catch (const SingularHessian&) {
    throw ConjugateUnavailable("conjugate evaluation failed for potential " + name);
  }
}

Mat ConvexPotential::third_contracted(const Vec& x, const Vec& v) const {
  const int d = static_cast<int>(x.size());
  if (third) {
    Mat M(d, d);
    Vec ej = Vec::Zero(d), ek = Vec::Zero(d);
    for (int j = 0; j < d; ++j) {
      ej.setZero();
      ej[j] = 1.0;
      for (int k = j; k < d; ++k) {
        ek.setZero();
        ek[k] = 1.0;
        double t = third(x, v, ej, ek);
        M(j, k) = t;
        M(k, j) = t;
      }
    }
    return M;
  }
  // d/ds hess(x + s v) at s = 0, central difference with Richardson.
  const double h = default_fd_step(x);
  auto at = [&](double s) { return hessian(x + s * v); };
  Mat d1 = (at(h) - at(-h)) / (2.0 * h);
  Mat d2 = (at(h / 2.0) - at(-h / 2.0)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

Objective ConvexPotential::as_objective() const {
  Objective f;
  f.name = name;
  ConvexPotential u = *this;
  f.eval = [u](const Vec& x) { return u.value(x); };
  f.grad = [u](const Vec& x) { return u.gradient(x); };
  f.hess = [u](const Vec& x) { return u.hessian(x); };
  f.domain = [u](const Vec& x) { return u.in_domain(x); };
  return f;
}

ConvexPotential quadratic_potential(double L, const Vec& anchor) {
  if (L <= 0.0) throw ConfigError("quadratic potential requires L > 0");
  ConvexPotential u;
  u.name = "quadratic";
  u.dim = static_cast<int>(anchor.size());
  const int d = u.dim;
  Vec a = anchor;
  u.eval = [L, a](const Vec& x) { return 0.5 * L * (x - a).squaredNorm(); };
  u.grad = [L, a](const Vec& x) { return Vec(L * (x - a)); };
  u.hess = [L, d](const Vec&) { return Mat(L * Mat::Identity(d, d)); };
  u.grad_inverse = [L, a](const Vec& z) { return Vec(a + z / L); };
  u.third = [](const Vec&, const Vec&, const Vec&, const Vec&) { return 0.0; };
  u.conjugate = [L, a](const Vec& y) { return a.dot(y) + y.squaredNorm() / (2.0 * L); };
  u.interior_point = a;
  return u;
}

ConvexPotential quadratic_potential(double L, int dim) {
  return quadratic_potential(L, Vec(Vec::Zero(dim)));
}

ConvexPotential negative_entropy_potential(int dim) {
  ConvexPotential u;
  u.name = "negative_entropy";
  u.dim = dim;
  u.domain = [](const Vec& x) { return (x.array() > 0.0).all(); };
  u.eval = [](const Vec& x) { return (x.array() * x.array().log()).sum(); };
  u.grad = [](const Vec& x) { return Vec(1.0 + x.array().log()); };
  u.hess = [](const Vec& x) { return Mat(x.array().inverse().matrix().asDiagonal()); };
  u.grad_inverse = [](const Vec& z) { return Vec((z.array() - 1.0).exp()); };
  u.third = [](const Vec& x, const Vec& a, const Vec& b, const Vec& c) {
    return -(a.array() * b.array() * c.array() / (x.array() * x.array())).sum();
  };
  u.conjugate = [](const Vec& y) { return (y.array() - 1.0).exp().sum(); };
  u.interior_point = Vec::Ones(dim);
  return u;
}

ConvexPotential log_sum_exp_potential(int dim) {
  ConvexPotential u;
  u.name = "log_sum_exp";
  u.dim = dim;
  u.eval = [](const Vec& x) {
    double m = x.maxCoeff();
    return m + std::log((x.array() - m).exp().sum());
  };
  u.grad = [](const Vec& x) {
    double m = x.maxCoeff();
    Vec e = (x.array() - m).exp();
    return Vec(e / e.sum());
  };
  u.hess = [](const Vec& x) {
    double m = x.maxCoeff();
    Vec e = (x.array() - m).exp();
    Vec p = e / e.sum();
    return Mat(Mat(p.asDiagonal()) - p * p.transpose());
  };
  // Hessian is only positive semi-definite (softmax is shift-invariant), so
  // there is no gradient inverse or smooth conjugate on all of R^d.
  u.interior_point = Vec::Zero(dim);
  return u;
}

// ---------------------------------------------------------------------------
// Diffeo
// ---------------------------------------------------------------------------

Vec Diffeo::operator()(const Vec& x) const {
  if (!in_domain(x)) throw DomainError("point outside domain of map " + name);
  Vec v = eval(x);
  require_finite(v, "map " + name);
  return v;
}

bool Diffeo::in_domain(const Vec& x) const { return domain ? domain(x) : true; }

Diffeo identity_diffeo(int dim) {
  Diffeo m;
  m.name = "identity";
  m.eval = [](const Vec& x) { return x; };
  m.jacobian = [dim](const Vec&) { return Mat(Mat::Identity(dim, dim)); };
  m.inverse = [](const Vec& z) { return z; };
  m.weighted_hessian = [dim](const Vec&, const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  return m;
}

Diffeo scaling_diffeo(double s, int dim) {
  if (s == 0.0) throw ConfigError("scaling map must be nonzero");
  Diffeo m;
  m.name = "scaling";
  m.eval = [s](const Vec& x) { return Vec(s * x); };
  m.jacobian = [s, dim](const Vec&) { return Mat(s * Mat::Identity(dim, dim)); };
  m.inverse = [s](const Vec& z) { return Vec(z / s); };
  m.weighted_hessian = [dim](const Vec&, const Vec&) { return Mat(Mat::Zero(dim, dim)); };
  return m;
}

Diffeo componentwise_exp_diffeo(int dim) {
  Diffeo m;
  m.name = "exp";
  m.eval = [](const Vec& x) { return Vec(x.array().exp()); };
  m.jacobian = [](const Vec& x) { return Mat(x.array().exp().matrix().asDiagonal()); };
  m.inverse = [](const Vec& z) {
    if (!(z.array() > 0.0).all()) throw DomainError("exp map inverse needs positive input");
    return Vec(z.array().log());
  };
  m.weighted_hessian = [](const Vec& x, const Vec& r) {
    return Mat((r.array() * x.array().exp()).matrix().asDiagonal());
  };
  (void)dim;
  return m;
}

// ---------------------------------------------------------------------------
// CostFunction
// ---------------------------------------------------------------------------

double CostFunction::value(const Vec& x, const Vec& y) const {
  if (!in_domain(x, y)) throw DomainError("pair outside domain of cost " + name);
  return require_finite(eval(x, y), "cost " + name);
}

Vec CostFunction::gradient_x(const Vec& x, const Vec& y) const {
  if (!in_domain(x, y)) throw DomainError("pair outside domain of cost " + name);
  Vec g = grad_x(x, y);
  require_finite(g, "grad_x of cost " + name);
  return g;
}

Vec CostFunction::gradient_y(const Vec& x, const Vec& y) const {
  if (!in_domain(x, y)) throw DomainError("pair outside domain of cost " + name);
  Vec g = grad_y(x, y);
  require_finite(g, "grad_y of cost " + name);
  return g;
}

Mat CostFunction::hessian_xx(const Vec& x, const Vec& y) const {
  Mat h = hess_xx(x, y);
  if (!h.allFinite()) throw DomainError("non-finite hess_xx of cost " + name);
  return h;
}

Mat CostFunction::hessian_xy(const Vec& x, const Vec& y) const {
  Mat h = hess_xy(x, y);
  if (!h.allFinite()) throw DomainError("non-finite hess_xy of cost " + name);
  return h;
}

Mat CostFunction::hessian_yy(const Vec& x, const Vec& y) const {
  Mat h = hess_yy(x, y);
  if (!h.allFinite()) throw DomainError("non-finite hess_yy of cost " + name);
  return h;
}

bool CostFunction::in_domain(const Vec& x, const Vec& y) const {
  return domain_check ? domain_check(x, y) : true;
}

void CostFunction::finish() {
  if (!domain_check) domain_check = [](const Vec&, const Vec&) { return true; };
  auto ev = eval;
  if (!grad_x)
    grad_x = [ev](const Vec& x, const Vec& y) {
      return fd_gradient([&](const Vec& xx) { return ev(xx, y); }, x);
    };
  if (!grad_y)
    grad_y = [ev](const Vec& x, const Vec& y) {
      return fd_gradient([&](const Vec& yy) { return ev(x, yy); }, y);
    };
  if (!hess_xx)
    hess_xx = [ev](const Vec& x, const Vec& y) {
      return fd_hessian([&](const Vec& xx) { return ev(xx, y); }, x);
    };
  if (!hess_yy)
    hess_yy = [ev](const Vec& x, const Vec& y) {
      return fd_hessian([&](const Vec& yy) { return ev(x, yy); }, y);
    };
  if (!hess_xy) {
    auto gx = grad_x;
    hess_xy = [gx](const Vec& x, const Vec& y) {
      // columns are y-derivatives of grad_x
      const int dx = static_cast<int>(x.size());
      const int dy = static_cast<int>(y.size());
      Mat M(dx, dy);
      const double h = default_fd_step(y);
      Vec yp = y;
      for (int j = 0; j < dy; ++j) {
        auto central = [&](double hh) -> Vec {
          yp[j] = y[j] + hh;
          Vec gp = gx(x, yp);
          yp[j] = y[j] - hh;
          Vec gm = gx(x, yp);
          yp[j] = y[j];
          return (gp - gm) / (2.0 * hh);
        };
        Vec d1 = central(h);
        Vec d2 = central(h / 2.0);
        M.col(j) = (4.0 * d2 - d1) / 3.0;
      }
      return M;
    };
  }
}

// ---------------------------------------------------------------------------
// Cost families
// ---------------------------------------------------------------------------

CostFunction quadratic_cost(double L, int dim) {
  if (L <= 0.0) throw ConfigError("quadratic cost requires L > 0");
  CostFunction c;
  c.name = "quadratic";
  c.dim_x = c.dim_y = dim;
  c.eval = [L](const Vec& x, const Vec& y) { return 0.5 * L * (x - y).squaredNorm(); };
  c.grad_x = [L](const Vec& x, const Vec& y) { return Vec(L * (x - y)); };
  c.grad_y = [L](const Vec& x, const Vec& y) { return Vec(L * (y - x)); };
  c.hess_xx = [L, dim](const Vec&, const Vec&) { return Mat(L * Mat::Identity(dim, dim)); };
  c.hess_xy = [L, dim](const Vec&, const Vec&) { return Mat(-L * Mat::Identity(dim, dim)); };
  c.hess_yy = [L, dim](const Vec&, const Vec&) { return Mat(L * Mat::Identity(dim, dim)); };
  c.cexp = [L](const Vec& x, const Vec& xi) { return Vec(x + xi / L); };
  c.argmin_in_x = [](const Vec& y) { return y; };
  c.argmin_in_y = [](const Vec& x) { return x; };
  c.segment_point = [](const Vec& a, const Vec& b, double t) { return Vec((1.0 - t) * a + t * b); };
  c.finish();
  return c;
}

CostFunction mapped_quadratic_cost(const Diffeo& A, const Diffeo& B, int dim) {
  CostFunction c;
  c.name = "mapped_quadratic(" + A.name + "," + B.name + ")";
  c.dim_x = c.dim_y = dim;
  Diffeo a = A, b = B;
  c.domain_check = [a, b](const Vec& x, const Vec& y) { return a.in_domain(x) && b.in_domain(y); };
  c.eval = [a, b](const Vec& x, const Vec& y) { return (a(x) - b(y)).squaredNorm(); };
  c.grad_x = [a, b](const Vec& x, const Vec& y) {
    return Vec(2.0 * a.jacobian(x).transpose() * (a(x) - b(y)));
  };
  c.grad_y = [a, b](const Vec& x, const Vec& y) {
    return Vec(-2.0 * b.jacobian(y).transpose() * (a(x) - b(y)));
  };
  c.hess_xy = [a, b](const Vec& x, const Vec& y) {
    return Mat(-2.0 * a.jacobian(x).transpose() * b.jacobian(y));
  };
  if (a.weighted_hessian) {
    c.hess_xx = [a, b](const Vec& x, const Vec& y) {
      Mat J = a.jacobian(x);
      return Mat(2.0 * J.transpose() * J + 2.0 * a.weighted_hessian(x, a(x) - b(y)));
    };
  }
  if (b.weighted_hessian) {
    c.hess_yy = [a, b](const Vec& x, const Vec& y) {
      Mat J = b.jacobian(y);
      return Mat(2.0 * J.transpose() * J - 2.0 * b.weighted_hessian(y, a(x) - b(y)));
    };
  }
  if (b.inverse) {
    c.cexp = [a, b](const Vec& x, const Vec& xi) {
      Mat Jt = a.jacobian(x).transpose();
      Vec rhs = Jt.partialPivLu().solve(xi / 2.0);
      return b.inverse(a(x) + rhs);
    };
    c.argmin_in_y = [a, b](const Vec& x) { return b.inverse(a(x)); };
  }
  if (a.inverse) {
    c.argmin_in_x = [a, b](const Vec& y) { return a.inverse(b(y)); };
    c.segment_point = [a](const Vec& s, const Vec& e, double t) {
      return a.inverse((1.0 - t) * a(s) + t * a(e));
    };
  }
  c.finish();
  return c;
}

CostFunction bregman_cost(const ConvexPotential& u) {
  CostFunction c;
  c.name = "bregman(" + u.name + ")";
  c.dim_x = c.dim_y = u.dim;
  ConvexPotential pu = u;
  c.domain_check = [pu](const Vec& x, const Vec& y) { return pu.in_domain(x) && pu.in_domain(y); };
  c.eval = [pu](const Vec& x, const Vec& y) {
    return pu.value(x) - pu.value(y) - pu.gradient(y).dot(x - y);
  };
  c.grad_x = [pu](const Vec& x, const Vec& y) { return Vec(pu.gradient(x) - pu.gradient(y)); };
  c.grad_y = [pu](const Vec& x, const Vec& y) { return Vec(-(pu.hessian(y) * (x - y))); };
  c.hess_xx = [pu](const Vec& x, const Vec&) { return pu.hessian(x); };
  c.hess_xy = [pu](const Vec&, const Vec& y) { return Mat(-pu.hessian(y)); };
  c.hess_yy = [pu](const Vec& x, const Vec& y) {
    return Mat(pu.hessian(y) - pu.third_contracted(y, x - y));
  };
  if (pu.has_grad_inverse()) {
    c.cexp = [pu](const Vec& x, const Vec& xi) { return pu.gradient_inverse(pu.gradient(x) + xi); };
  }
  c.argmin_in_x = [](const Vec& y) { return y; };
  c.argmin_in_y = [](const Vec& x) { return x; };
  c.segment_point = [](const Vec& a, const Vec& b, double t) { return Vec((1.0 - t) * a + t * b); };
  c.finish();
  return c;
}

CostFunction reverse_bregman_cost(const ConvexPotential& u) {
  CostFunction c;
  c.name = "reverse_bregman(" + u.name + ")";
  c.dim_x = c.dim_y = u.dim;
  ConvexPotential pu = u;
  c.domain_check = [pu](const Vec& x, const Vec& y) { return pu.in_domain(x) && pu.in_domain(y); };
  c.eval = [pu](const Vec& x, const Vec& y) {
    return pu.value(y) - pu.value(x) - pu.gradient(x).dot(y - x);
  };
  c.grad_x = [pu](const Vec& x, const Vec& y) { return Vec(-(pu.hessian(x) * (y - x))); };
  c.grad_y = [pu](const Vec& x, const Vec& y) { return Vec(pu.gradient(y) - pu.gradient(x)); };
  c.hess_xx = [pu](const Vec& x, const Vec& y) {
    return Mat(pu.hessian(x) - pu.third_contracted(x, y - x));
  };
  c.hess_xy = [pu](const Vec& x, const Vec&) { return Mat(-pu.hessian(x)); };
  c.hess_yy = [pu](const Vec&, const Vec& y) { return pu.hessian(y); };
  c.cexp = [pu](const Vec& x, const Vec& xi) {
    Vec step = pu.hessian(x).partialPivLu().solve(xi);
    if (!step.allFinite()) throw SingularHessian("singular hessian in c-exponential");
    return Vec(x + step);
  };
  c.argmin_in_x = [](const Vec& y) { return y; };
  c.argmin_in_y = [](const Vec& x) { return x; };
  if (pu.has_grad_inverse() || (pu.grad && pu.hess)) {
    c.segment_point = [pu](const Vec& a, const Vec& b, double t) {
      return pu.gradient_inverse((1.0 - t) * pu.gradient(a) + t * pu.gradient(b));
    };
  }
  c.finish();
  return c;
}

CostFunction fenchel_young_cost(const ConvexPotential& u) {
  if (!u.conjugate && !u.grad_inverse && !(u.grad && u.hess))
    throw ConjugateUnavailable("fenchel_young_cost needs an evaluable conjugate for " + u.name);
  CostFunction c;
  c.name = "fenchel_young(" + u.name + ")";
  c.dim_x = c.dim_y = u.dim;
  ConvexPotential pu = u;
  c.domain_check = [pu](const Vec& x, const Vec&) { return pu.in_domain(x); };
  c.eval = [pu](const Vec& x, const Vec& y) {
    return pu.value(x) + pu.conjugate_value(y) - x.dot(y);
  };
  c.grad_x = [pu](const Vec& x, const Vec& y) { return Vec(pu.gradient(x) - y); };
  c.grad_y = [pu](const Vec& x, const Vec& y) { return Vec(pu.gradient_inverse(y) - x); };
  c.hess_xx = [pu](const Vec& x, const Vec&) { return pu.hessian(x); };
  c.hess_xy = [pu](const Vec& x, const Vec&) {
    const int d = static_cast<int>(x.size());
    return Mat(-Mat::Identity(d, d));
  };
  c.hess_yy = [pu](const Vec&, const Vec& y) {
    Mat H = pu.hessian(pu.gradient_inverse(y));
    return Mat(H.partialPivLu().inverse());
  };
  c.cexp = [pu](const Vec& x, const Vec& xi) { return Vec(pu.gradient(x) + xi); };
  c.argmin_in_x = [pu](const Vec& y) { return pu.gradient_inverse(y); };
  c.argmin_in_y = [pu](const Vec& x) { return pu.gradient(x); };
  c.segment_point = [](const Vec& a, const Vec& b, double t) { return Vec((1.0 - t) * a + t * b); };
  c.finish();
  return c;
}

double log_divergence_multiplier(const ConvexPotential& u, double alpha, const Vec& x,
                                 const Vec& w) {
  if (w.norm() < 1e-14) return 1.0;
  auto G = [&](double m) -> double {
    Vec z = u.gradient_inverse(Vec(m * w));
    return alpha * (z - x).dot(w) * m - m + 1.0;
  };
  // G(0+) = 1 > 0; expand the upper end until the sign flips
  double lo = 1e-8, hi = 1.0;
  double glo = G(lo), ghi = G(hi);
  if (std::abs(ghi) < 1e-15) return hi;
  int expand = 0;
  while (glo * ghi > 0.0 && expand < 200) {
    hi *= 1.25;
    try {
      ghi = G(hi);
    } catch (const Error&) {
      throw NoRootError("multiplier bracket left the admissible range");
    }
    ++expand;
  }
  if (glo * ghi > 0.0) throw NoRootError("multiplier bracket search exhausted");
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = G(mid);
    if (std::abs(gm) < 1e-15 || (hi - lo) < 1e-15 * (1.0 + hi)) return mid;
    if (glo * gm <= 0.0) {
      hi = mid;
      ghi = gm;
    } else {
      lo = mid;
      glo = gm;
    }
  }
  return 0.5 * (lo + hi);
}

CostFunction log_divergence_cost(const ConvexPotential& u, double alpha) {
  if (alpha <= 0.0) throw ConfigError("log divergence cost requires alpha > 0");
  CostFunction c;
  c.name = "log_divergence(" + u.name + ")";
  c.dim_x = c.dim_y = u.dim;
  ConvexPotential pu = u;
  auto argument = [pu, alpha](const Vec& x, const Vec& y) {
    return 1.0 - alpha * pu.gradient(y).dot(x - y);
  };
  c.domain_check = [pu, argument](const Vec& x, const Vec& y) {
    return pu.in_domain(x) && pu.in_domain(y) && argument(x, y) > 0.0;
  };
  c.eval = [pu, alpha, argument](const Vec& x, const Vec& y) {
    double arg = argument(x, y);
    if (arg <= 0.0) throw DomainError("log divergence argument non-positive");
    return pu.value(x) - pu.value(y) + std::log(arg) / alpha;
  };
  c.grad_x = [pu, argument](const Vec& x, const Vec& y) {
    return Vec(pu.gradient(x) - pu.gradient(y) / argument(x, y));
  };
  c.grad_y = [pu, argument](const Vec& x, const Vec& y) {
    Vec t = pu.hessian(y) * (x - y) - pu.gradient(y);
    return Vec(-pu.gradient(y) - t / argument(x, y));
  };
  c.hess_xx = [pu, alpha, argument](const Vec& x, const Vec& y) {
    double arg = argument(x, y);
    Vec gy = pu.gradient(y);
    return Mat(pu.hessian(x) - (alpha / (arg * arg)) * gy * gy.transpose());
  };
  c.hess_xy = [pu, alpha, argument](const Vec& x, const Vec& y) {
    double arg = argument(x, y);
    Vec gy = pu.gradient(y);
    Vec t = pu.hessian(y) * (x - y) - gy;
    return Mat(-(alpha / (arg * arg)) * gy * t.transpose() - pu.hessian(y) / arg);
  };
  c.argmin_in_x = [](const Vec& y) { return y; };
  c.argmin_in_y = [](const Vec& x) { return x; };
  if (pu.has_grad_inverse() || (pu.grad && pu.hess)) {
    // resolve xi = -grad_x c(x, y) on the multiplier branch continuous with
    // the Bregman limit (the y-Newton fallback may land on the other root)
    c.cexp = [pu, alpha](const Vec& x, const Vec& xi) {
      Vec w = pu.gradient(x) + xi;
      double mu = log_divergence_multiplier(pu, alpha, x, w);
      if (mu <= 0.0) throw NoRootError("log divergence multiplier is nonpositive");
      return pu.gradient_inverse(Vec(mu * w));
    };
  }
  c.finish();
  return c;
}

CostFunction exponential_kernel_cost(const Mat& K, double eps) {
  if (K.rows() != K.cols()) throw ConfigError("exponential kernel cost needs a square matrix");
  if (eps == 0.0) throw ConfigError("exponential kernel cost requires eps != 0");
  if (std::abs(K.determinant()) < 1e-14) throw ConfigError("kernel matrix must be invertible");
  CostFunction c;
  c.name = "exponential_kernel";
  const int d = static_cast<int>(K.rows());
  c.dim_x = c.dim_y = d;
  Mat Km = K;
  auto weights = [Km, eps, d](const Vec& x, const Vec& y) {
    Mat W(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) W(i, j) = std::exp((x[i] - y[j]) / eps) * Km(i, j);
    return W;
  };
  c.eval = [weights](const Vec& x, const Vec& y) { return weights(x, y).sum(); };
  c.grad_x = [weights, eps](const Vec& x, const Vec& y) {
    return Vec(weights(x, y).rowwise().sum() / eps);
  };
  c.grad_y = [weights, eps](const Vec& x, const Vec& y) {
    return Vec(-weights(x, y).colwise().sum().transpose() / eps);
  };
  c.hess_xx = [weights, eps](const Vec& x, const Vec& y) {
    return Mat(Vec(weights(x, y).rowwise().sum() / (eps * eps)).asDiagonal());
  };
  c.hess_yy = [weights, eps](const Vec& x, const Vec& y) {
    return Mat(Vec(weights(x, y).colwise().sum().transpose() / (eps * eps)).asDiagonal());
  };
  c.hess_xy = [weights, eps](const Vec& x, const Vec& y) {
    return Mat(-weights(x, y) / (eps * eps));
  };
  c.finish();
  return c;
}

// ---------------------------------------------------------------------------
// Sphere
// ---------------------------------------------------------------------------

namespace {

constexpr double kSphereTol = 1e-10;
constexpr double kAntipodalTol = 1e-8;

bool on_sphere(const Vec& x) { return std::abs(x.norm() - 1.0) <= kSphereTol; }

// theta / sin(theta) as a function of u = cos(theta)
double w_of(double theta) {
  if (theta < 1e-4) {
    double t2 = theta * theta;
    return 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
  }
  return theta / std::sin(theta);
}

// d/du [theta/sin(theta)] = -(sin t - t cos t)/sin^3 t
double w_prime_of(double theta) {
  if (theta < 1e-3) {
    double t2 = theta * theta;
    return -(1.0 / 3.0 + 2.0 * t2 / 15.0);
  }
  double s = std::sin(theta);
  return -(s - theta * std::cos(theta)) / (s * s * s);
}

double sphere_angle(const Vec& x, const Vec& y) {
  double u = std::clamp(x.dot(y), -1.0, 1.0);
  return std::acos(u);
}

void check_not_antipodal(const Vec& x, const Vec& y) {
  if (x.dot(y) <= -1.0 + kAntipodalTol)
    throw AntipodalError("sphere cost derivatives undefined at antipodal points");
}

}  // namespace

Vec sphere_tangent_project(const Vec& x, const Vec& v) { return v - x.dot(v) * x; }

Vec sphere_exp(const Vec& x, const Vec& v) {
  double n = v.norm();
  if (n < 1e-300) return x;
  Vec out = std::cos(n) * x + std::sin(n) * (v / n);
  return out / out.norm();
}

CostFunction sphere_geodesic_cost(double L, int dim) {
  if (L <= 0.0) throw ConfigError("sphere cost requires L > 0");
  if (dim < 2) throw ConfigError("sphere cost requires ambient dimension >= 2");
  CostFunction c;
  c.name = "sphere_geodesic";
  c.dim_x = c.dim_y = dim;
  c.domain_check = [](const Vec& x, const Vec& y) { return on_sphere(x) && on_sphere(y); };
  c.eval = [L](const Vec& x, const Vec& y) {
    if (!on_sphere(x) || !on_sphere(y)) throw DomainError("sphere cost needs unit-norm inputs");
    double th = sphere_angle(x, y);
    return 0.5 * L * th * th;
  };
  c.grad_x = [L](const Vec& x, const Vec& y) {
    check_not_antipodal(x, y);
    double th = sphere_angle(x, y);
    return Vec(-L * w_of(th) * sphere_tangent_project(x, y));
  };
  c.grad_y = [L](const Vec& x, const Vec& y) {
    check_not_antipodal(x, y);
    double th = sphere_angle(x, y);
    return Vec(-L * w_of(th) * sphere_tangent_project(y, x));
  };
  c.cexp = [L](const Vec& x, const Vec& xi) {
    if (!on_sphere(x)) throw DomainError("sphere c-exponential needs a unit-norm base point");
    return sphere_exp(x, sphere_tangent_project(x, xi) / L);
  };
  c.argmin_in_x = [](const Vec& y) { return y; };
  c.argmin_in_y = [](const Vec& x) { return x; };
  c.finish();
  return c;
}

CostFunction sphere_chart_cost(double L, const Vec& anchor_x, const Vec& anchor_y) {
  if (!on_sphere(anchor_x) || !on_sphere(anchor_y))
    throw DomainError("chart anchors must lie on the unit sphere");
  check_not_antipodal(anchor_x, anchor_y);
  const int d = static_cast<int>(anchor_x.size());

  // Orthonormal tangent frame at p: columns 1..d-1 of the Q factor of [p | I].
  auto frame_at = [d](const Vec& p) {
    Mat M(d, d);
    M.col(0) = p;
    M.block(0, 1, d, d - 1) = Mat::Identity(d, d).leftCols(d - 1);
    Eigen::HouseholderQR<Mat> qr(M);
    Mat Q = qr.householderQ();
    if (Q.col(0).dot(p) < 0.0) Q = -Q;
    return Mat(Q.rightCols(d - 1));
  };
  Mat Ex = frame_at(anchor_x);
  Mat Ey = frame_at(anchor_y);
  Vec px = anchor_x, py = anchor_y;

  struct Chart {
    Vec point;
    Mat jacobian;
  };
  auto chart = [d](const Vec& p, const Mat& E, const Vec& a) {
    double r = a.norm();
    Vec m = E * a;
    double s1, s2;  // sin(r)/r and (r cos r - sin r)/r^3
    if (r < 1e-3) {
      double r2 = r * r;
      s1 = 1.0 - r2 / 6.0 + r2 * r2 / 120.0;
      s2 = -1.0 / 3.0 + r2 / 30.0 - r2 * r2 / 840.0;
    } else {
      s1 = std::sin(r) / r;
      s2 = (r * std::cos(r) - std::sin(r)) / (r * r * r);
    }
    Chart out;
    out.point = std::cos(r) * p + s1 * m;
    out.jacobian = Mat(p.rows(), d - 1);
    for (int k = 0; k < d - 1; ++k)
      out.jacobian.col(k) = -a[k] * s1 * p + s2 * a[k] * m + s1 * E.col(k);
    return out;
  };

  CostFunction c;
  c.name = "sphere_chart";
  c.dim_x = c.dim_y = d - 1;
  c.domain_check = [chart, px, py, Ex, Ey](const Vec& a, const Vec& b) {
    Vec X = chart(px, Ex, a).point;
    Vec Y = chart(py, Ey, b).point;
    return X.dot(Y) > -1.0 + kAntipodalTol;
  };
  c.eval = [chart, px, py, Ex, Ey, L](const Vec& a, const Vec& b) {
    Vec X = chart(px, Ex, a).point;
    Vec Y = chart(py, Ey, b).point;
    double th = sphere_angle(X, Y);
    return 0.5 * L * th * th;
  };
  c.grad_x = [chart, px, py, Ex, Ey, L](const Vec& a, const Vec& b) {
    Chart X = chart(px, Ex, a);
    Chart Y = chart(py, Ey, b);
    check_not_antipodal(X.point, Y.point);
    double th = sphere_angle(X.point, Y.point);
    Vec ambient = -L * w_of(th) * Y.point;
    return Vec(X.jacobian.transpose() * ambient);
  };
  c.grad_y = [chart, px, py, Ex, Ey, L](const Vec& a, const Vec& b) {
    Chart X = chart(px, Ex, a);
    Chart Y = chart(py, Ey, b);
    check_not_antipodal(X.point, Y.point);
    double th = sphere_angle(X.point, Y.point);
    Vec ambient = -L * w_of(th) * X.point;
    return Vec(Y.jacobian.transpose() * ambient);
  };
  c.hess_xy = [chart, px, py, Ex, Ey, L, d](const Vec& a, const Vec& b) {
    Chart X = chart(px, Ex, a);
    Chart Y = chart(py, Ey, b);
    check_not_antipodal(X.point, Y.point);
    double th = sphere_angle(X.point, Y.point);
    Mat ambient = -L * (w_of(th) * Mat::Identity(d, d) +
                        w_prime_of(th) * Y.point * X.point.transpose());
    return Mat(X.jacobian.transpose() * ambient * Y.jacobian);
  };
  c.finish();
  return c;
}

// ---------------------------------------------------------------------------
// Combinators
// ---------------------------------------------------------------------------

CostFunction tensor_product_cost(const CostFunction& c1, const CostFunction& c2) {
  CostFunction c;
  c.name = "tensor(" + c1.name + "," + c2.name + ")";
  c.dim_x = c1.dim_x + c2.dim_x;
  c.dim_y = c1.dim_y + c2.dim_y;
  CostFunction a = c1, b = c2;
  const int ax = a.dim_x, ay = a.dim_y, bx = b.dim_x, by = b.dim_y;
  auto split_x = [ax, bx](const Vec& x) {
    if (x.size() != ax + bx) throw ConfigError("tensor cost: x dimension mismatch");
    return std::pair<Vec, Vec>(x.head(ax), x.tail(bx));
  };
  auto split_y = [ay, by](const Vec& y) {
    if (y.size() != ay + by) throw ConfigError("tensor cost: y dimension mismatch");
    return std::pair<Vec, Vec>(y.head(ay), y.tail(by));
  };
  c.domain_check = [a, b, split_x, split_y](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    return a.in_domain(x1, y1) && b.in_domain(x2, y2);
  };
  c.eval = [a, b, split_x, split_y](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    return a.eval(x1, y1) + b.eval(x2, y2);
  };
  c.grad_x = [a, b, split_x, split_y, ax, bx](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    Vec g(ax + bx);
    g.head(ax) = a.grad_x(x1, y1);
    g.tail(bx) = b.grad_x(x2, y2);
    return g;
  };
  c.grad_y = [a, b, split_x, split_y, ay, by](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    Vec g(ay + by);
    g.head(ay) = a.grad_y(x1, y1);
    g.tail(by) = b.grad_y(x2, y2);
    return g;
  };
  auto block2 = [](const Mat& m1, const Mat& m2) {
    Mat M = Mat::Zero(m1.rows() + m2.rows(), m1.cols() + m2.cols());
    M.topLeftCorner(m1.rows(), m1.cols()) = m1;
    M.bottomRightCorner(m2.rows(), m2.cols()) = m2;
    return M;
  };
  c.hess_xx = [a, b, split_x, split_y, block2](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    return block2(a.hess_xx(x1, y1), b.hess_xx(x2, y2));
  };
  c.hess_yy = [a, b, split_x, split_y, block2](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    return block2(a.hess_yy(x1, y1), b.hess_yy(x2, y2));
  };
  c.hess_xy = [a, b, split_x, split_y, block2](const Vec& x, const Vec& y) {
    auto [x1, x2] = split_x(x);
    auto [y1, y2] = split_y(y);
    return block2(a.hess_xy(x1, y1), b.hess_xy(x2, y2));
  };
  if (a.cexp && b.cexp) {
    c.cexp = [a, b, split_x, ax, ay, by](const Vec& x, const Vec& xi) {
      auto [x1, x2] = split_x(x);
      Vec y(ay + by);
      y.head(ay) = a.cexp(x1, xi.head(ax));
      y.tail(by) = b.cexp(x2, xi.tail(xi.size() - ax));
      return y;
    };
  }
  if (a.argmin_in_x && b.argmin_in_x) {
    c.argmin_in_x = [a, b, split_y, ax, bx](const Vec& y) {
      auto [y1, y2] = split_y(y);
      Vec x(ax + bx);
      x.head(ax) = a.argmin_in_x(y1);
      x.tail(bx) = b.argmin_in_x(y2);
      return x;
    };
  }
  if (a.argmin_in_y && b.argmin_in_y) {
    c.argmin_in_y = [a, b, split_x, ay, by](const Vec& x) {
      auto [x1, x2] = split_x(x);
      Vec y(ay + by);
      y.head(ay) = a.argmin_in_y(x1);
      y.tail(by) = b.argmin_in_y(x2);
      return y;
    };
  }
  if (a.segment_point && b.segment_point) {
    c.segment_point = [a, b, split_x, ax, bx](const Vec& s, const Vec& e, double t) {
      auto [s1, s2] = split_x(s);
      auto [e1, e2] = split_x(e);
      Vec p(ax + bx);
      p.head(ax) = a.segment_point(s1, e1, t);
      p.tail(bx) = b.segment_point(s2, e2, t);
      return p;
    };
  }
  c.finish();
  return c;
}

Mat fd_mixed_hessian(const CostFunction& c, const Vec& x, const Vec& y, double step) {
  if (!c.in_domain(x, y)) throw DomainError("pair outside domain of cost " + c.name);
  const double h = step > 0.0 ? step : 1e-4 * (1.0 + std::max(x.norm(), y.norm()));
  const int dx = static_cast<int>(x.size());
  const int dy = static_cast<int>(y.size());
  auto ev = [&](const Vec& xx, const Vec& yy) {
    return require_finite(c.eval(xx, yy), "cost " + c.name);
  };
  Mat M(dx, dy);
  Vec xp = x, yp = y;
  for (int i = 0; i < dx; ++i) {
    for (int j = 0; j < dy; ++j) {
      auto mixed = [&](double hh) {
        xp[i] = x[i] + hh;
        yp[j] = y[j] + hh;
        double fpp = ev(xp, yp);
        yp[j] = y[j] - hh;
        double fpm = ev(xp, yp);
        xp[i] = x[i] - hh;
        double fmm = ev(xp, yp);
        yp[j] = y[j] + hh;
        double fmp = ev(xp, yp);
        xp[i] = x[i];
        yp[j] = y[j];
        return (fpp - fpm - fmp + fmm) / (4.0 * hh * hh);
      };
      double a = mixed(h);
      double b = mixed(h / 2.0);
      M(i, j) = (4.0 * b - a) / 3.0;
    }
  }
  return M;
}

CostFunction swap_cost(const CostFunction& c) {
  CostFunction s;
  s.name = "swap(" + c.name + ")";
  s.dim_x = c.dim_y;
  s.dim_y = c.dim_x;
  CostFunction base = c;
  s.domain_check = [base](const Vec& a, const Vec& b) { return base.in_domain(b, a); };
  s.eval = [base](const Vec& a, const Vec& b) { return base.eval(b, a); };
  s.grad_x = [base](const Vec& a, const Vec& b) { return base.grad_y(b, a); };
  s.grad_y = [base](const Vec& a, const Vec& b) { return base.grad_x(b, a); };
  s.hess_xx = [base](const Vec& a, const Vec& b) { return base.hess_yy(b, a); };
  s.hess_yy = [base](const Vec& a, const Vec& b) { return base.hess_xx(b, a); };
  s.hess_xy = [base](const Vec& a, const Vec& b) { return Mat(base.hess_xy(b, a).transpose()); };
  s.finish();
  return s;
}

CostFunction add_separable(const CostFunction& c, const Objective& g, const Objective& h) {
  CostFunction s = c;
  s.name = c.name + "+g+h";
  CostFunction base = c;
  Objective gg = g, hh = h;
  s.domain_check = [base, gg, hh](const Vec& x, const Vec& y) {
    return base.in_domain(x, y) && gg.in_domain(x) && hh.in_domain(y);
  };
  s.eval = [base, gg, hh](const Vec& x, const Vec& y) {
    return base.eval(x, y) + gg.eval(x) + hh.eval(y);
  };
  s.grad_x = [base, gg](const Vec& x, const Vec& y) {
    return Vec(base.grad_x(x, y) + gg.gradient(x));
  };
  s.grad_y = [base, hh](const Vec& x, const Vec& y) {
    return Vec(base.grad_y(x, y) + hh.gradient(y));
  };
  s.hess_xx = [base, gg](const Vec& x, const Vec& y) {
    return Mat(base.hess_xx(x, y) + gg.hessian(x));
  };
  s.hess_yy = [base, hh](const Vec& x, const Vec& y) {
    return Mat(base.hess_yy(x, y) + hh.hessian(y));
  };
  s.hess_xy = [base](const Vec& x, const Vec& y) { return base.hess_xy(x, y); };
  // stationary-point hooks from the base cost no longer apply
  s.cexp = nullptr;
  s.argmin_in_x = nullptr;
  s.argmin_in_y = nullptr;
  s.finish();
  return s;
}

}  // namespace gdgc
