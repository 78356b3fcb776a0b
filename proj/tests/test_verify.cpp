#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdgc/verify.hpp"

#include <cmath>

using namespace gdgc;

namespace {

Vec vec1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

CheckConfig cfg_box(const Vec& lo, const Vec& hi, std::uint64_t seed = 1) {
  CheckConfig cc;
  cc.search.box_lo = lo;
  cc.search.box_hi = hi;
  cc.search.seed = seed;
  cc.search.restarts = 4;
  cc.search.max_iter = 100;
  return cc;
}

Objective quadratic_objective(double mu, const Vec& a) {
  Objective f;
  f.name = "quadratic";
  f.eval = [mu, a](const Vec& x) { return 0.5 * mu * (x - a).squaredNorm(); };
  f.grad = [mu, a](const Vec& x) { return Vec(mu * (x - a)); };
  f.hess = [mu, a](const Vec&) { return Mat(mu * Mat::Identity(a.size(), a.size())); };
  return f;
}

Objective sin_objective() {
  Objective f;
  f.name = "sin";
  f.eval = [](const Vec& x) { return x.array().sin().sum(); };
  f.grad = [](const Vec& x) { return Vec(x.array().cos()); };
  f.hess = [](const Vec& x) { return Mat((-x.array().sin()).matrix().asDiagonal()); };
  return f;
}

}  // namespace

TEST_CASE("five-point property holds for bregman costs with convex objectives") {
  ConvexPotential u = quadratic_potential(1.0, 1);
  CostFunction c = bregman_cost(u);
  Objective f = quadratic_objective(0.5, vec1(0.3));
  CheckConfig cc = cfg_box(vec1(-3.0), vec1(3.0), 7);
  Surrogate phi = make_surrogate(f, c, cc.search);
  PropertyReport rep = check_five_point(phi, 0.0, 25, cc);
  CHECK(rep.passed);
  CHECK(rep.samples == 25);

  // strong form with relative strong convexity 0.5
  PropertyReport strong = check_five_point(phi, 0.5, 15, cc);
  CHECK(strong.passed);

  CHECK_THROWS_AS(check_five_point(phi, 1.0, 5, cc), ConfigError);
  CHECK_THROWS_AS(check_five_point(phi, -0.1, 5, cc), ConfigError);
}

TEST_CASE("five-point violations are found for a nonconvex objective") {
  CostFunction c = quadratic_cost(1.0, 1);
  Objective f = sin_objective();
  CheckConfig cc = cfg_box(vec1(-6.0), vec1(6.0), 11);
  cc.search.restarts = 6;
  Surrogate phi = make_surrogate(f, c, cc.search);
  PropertyReport rep = check_five_point(phi, 0.0, 40, cc);
  CHECK_FALSE(rep.passed);
  REQUIRE(!rep.violations.empty());

  // the witness is reproducible by direct evaluation
  const Witness& w = rep.violations.front();
  auto pt = [&](const char* name) -> Vec {
    for (const auto& [k, v] : w.points)
      if (k == name) return v;
    REQUIRE(false);
    return Vec();
  };
  double lhs = phi.phi(pt("x"), pt("y1")) + phi.phi(pt("x0"), pt("y0"));
  double rhs = phi.phi(pt("x"), pt("y")) + phi.phi(pt("x"), pt("y0"));
  CHECK(lhs > rhs);
  CHECK(lhs == doctest::Approx(w.lhs));

  // replaying with the recorded seed reproduces the same witness
  CheckConfig replay = cfg_box(vec1(-6.0), vec1(6.0), rep.seed);
  replay.search.restarts = 6;
  PropertyReport rep2 = check_five_point(phi, 0.0, 40, replay);
  REQUIRE(!rep2.violations.empty());
  CHECK(rep2.violations.front().index == w.index);
  CHECK(rep2.violations.front().lhs == doctest::Approx(w.lhs));
}

TEST_CASE("weak historical five-point variant") {
  ConvexPotential u = quadratic_potential(1.0, 1);
  CostFunction c = bregman_cost(u);
  Objective f = quadratic_objective(0.5, vec1(0.0));
  CheckConfig cc = cfg_box(vec1(-2.0), vec1(2.0), 13);
  cc.weak_variant = true;
  Surrogate phi = make_surrogate(f, c, cc.search);
  PropertyReport rep = check_five_point(phi, 0.0, 10, cc);
  CHECK(rep.property == "five_point_weak");
  CHECK(rep.passed);
  CHECK_THROWS_AS(check_five_point(phi, 0.3, 5, cc), ConfigError);
}

TEST_CASE("c-concavity criterion is smoothness for quadratic costs") {
  CostFunction c = quadratic_cost(1.0, 2);
  CheckConfig cc = cfg_box(vec2(-2, -2), vec2(2, 2), 17);
  // mu <= L passes
  PropertyReport ok = check_c_concavity(quadratic_objective(0.8, vec2(0, 0)), c, 50, cc);
  CHECK(ok.passed);
  // mu > L fails with a witness carrying the eigenvalue gap
  PropertyReport bad = check_c_concavity(quadratic_objective(1.4, vec2(0, 0)), c, 50, cc);
  CHECK_FALSE(bad.passed);
  REQUIRE(!bad.violations.empty());
  CHECK(bad.violations.front().lhs == doctest::Approx(-0.4).epsilon(1e-6));
}

TEST_CASE("c-concavity for the reverse bregman cost uses the third derivative") {
  // where the criterion reads hess f <= D3u (hess u^{-1} grad f, ., .) + hess u
  ConvexPotential ent = negative_entropy_potential(1);
  CostFunction c = reverse_bregman_cost(ent);
  Vec xbar = vec1(0.9);
  Objective f = quadratic_objective(0.3, vec1(1.1));
  Vec yhat = c_exponential(c, xbar, Vec(-f.gradient(xbar)));
  Mat lhs = c.hessian_xx(xbar, yhat);
  // direct evaluation of the stated formula
  Vec v = ent.hessian(xbar).inverse() * f.gradient(xbar);
  Mat rhs = ent.third_contracted(xbar, v) + ent.hessian(xbar);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-9);

  // small gradients keep the checker satisfied on a safe box
  CheckConfig cc = cfg_box(vec1(0.7), vec1(1.4), 19);
  PropertyReport rep = check_c_concavity(f, c, 40, cc);
  CHECK(rep.passed);
}

TEST_CASE("cross-convexity of convex objectives relative to bregman costs") {
  ConvexPotential ent = negative_entropy_potential(1);
  CostFunction c = bregman_cost(ent);
  Objective f = quadratic_objective(0.4, vec1(1.0));
  CheckConfig cc = cfg_box(vec1(0.2), vec1(2.5), 23);
  PropertyReport direct = check_cross_convexity(f, c, 0.0, 60, cc);
  CHECK(direct.passed);
  CHECK(direct.necessary_condition.has_value());
  CHECK(*direct.necessary_condition);

  CheckConfig cc2 = cc;
  cc2.mode = CheckMode::semilocal;
  PropertyReport semi = check_cross_convexity(f, c, 0.0, 25, cc2);
  CHECK(semi.passed);

  // lambda-strong version: f - lambda u convex exactly when lambda is small
  Objective fs;
  fs.name = "entropy_mix";
  fs.domain = [](const Vec& x) { return (x.array() > 0.0).all(); };
  fs.eval = [](const Vec& x) { return 0.3 * (x.array() * x.array().log()).sum() + 0.2 * x.sum(); };
  fs.grad = [](const Vec& x) { return Vec(0.3 * (1.0 + x.array().log()) + 0.2); };
  fs.hess = [](const Vec& x) { return Mat((0.3 * x.array().inverse()).matrix().asDiagonal()); };
  PropertyReport strong = check_cross_convexity(fs, c, 0.3, 40, cc);
  CHECK(strong.passed);
  PropertyReport too_strong = check_cross_convexity(fs, c, 0.6, 60, cc);
  CHECK_FALSE(too_strong.passed);
}

TEST_CASE("cross-convexity fails for nonconvex objectives on flat costs") {
  CostFunction c = quadratic_cost(1.0, 1);
  Objective f = sin_objective();
  CheckConfig cc = cfg_box(vec1(-5.0), vec1(5.0), 29);
  PropertyReport rep = check_cross_convexity(f, c, 0.0, 80, cc);
  CHECK_FALSE(rep.passed);
  REQUIRE(!rep.violations.empty());
  // witness check by direct evaluation of the defining inequality
  const Witness& w = rep.violations.front();
  auto pt = [&](const char* name) -> Vec {
    for (const auto& [k, v] : w.points)
      if (k == name) return v;
    REQUIRE(false);
    return Vec();
  };
  double delta = cross_difference(c, pt("x"), pt("ybar"), pt("xbar"), pt("yhat"));
  CHECK(f(pt("x")) < f(pt("xbar")) + delta);
}

TEST_CASE("cross-convexity for the natural-gradient cost tracks the dual convexity") {
  ConvexPotential ent = negative_entropy_potential(1);
  CostFunction c = reverse_bregman_cost(ent);
  // f(x) = x^2 on x > 0: f(grad u^*(z)) = e^{2(z-1)} is convex in z -> pass
  Objective f;
  f.eval = [](const Vec& x) { return x[0] * x[0]; };
  f.grad = [](const Vec& x) { return vec1(2.0 * x[0]); };
  f.hess = [](const Vec&) {
    Mat h(1, 1);
    h << 2.0;
    return h;
  };
  CheckConfig cc = cfg_box(vec1(0.4), vec1(2.0), 31);
  cc.mode = CheckMode::semilocal;
  PropertyReport pass = check_cross_convexity(f, c, 0.0, 30, cc);
  CHECK(pass.passed);

  // f(x) = sqrt(x): f(grad u^*(z)) = e^{(z-1)/2} is convex, but -sqrt is not
  Objective g;
  g.domain = [](const Vec& x) { return (x.array() > 0.0).all(); };
  g.eval = [](const Vec& x) { return -std::sqrt(x[0]); };
  g.grad = [](const Vec& x) { return vec1(-0.5 / std::sqrt(x[0])); };
  g.hess = [](const Vec& x) {
    Mat h(1, 1);
    h << 0.25 * std::pow(x[0], -1.5);
    return h;
  };
  // -sqrt(grad u^*(z)) = -e^{(z-1)/2} is concave in the dual variable -> fail
  PropertyReport fail = check_cross_convexity(g, c, 0.0, 40, cc);
  CHECK_FALSE(fail.passed);
}

TEST_CASE("cross-concavity checks") {
  CostFunction c = quadratic_cost(1.0, 1);
  CheckConfig cc = cfg_box(vec1(-3.0), vec1(3.0), 37);

  // convex g makes -g cross-concave for the flat cost
  Objective g = quadratic_objective(0.7, vec1(0.2));
  CHECK(check_cross_concavity(g, c, 0.0, 60, cc).passed);
  CheckConfig semi = cc;
  semi.mode = CheckMode::semilocal;
  CHECK(check_cross_concavity(g, c, 0.0, 25, semi).passed);

  // strongly concave g violates the inequality
  Objective bad;
  bad.eval = [](const Vec& x) { return -x.squaredNorm(); };
  bad.grad = [](const Vec& x) { return Vec(-2.0 * x); };
  bad.hess = [](const Vec& x) { return Mat(-2.0 * Mat::Identity(x.size(), x.size())); };
  CHECK_FALSE(check_cross_concavity(bad, c, 0.0, 60, cc).passed);

  // the zero objective gives equality structure
  Objective zero;
  zero.eval = [](const Vec&) { return 0.0; };
  zero.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  zero.hess = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  CHECK(check_cross_concavity(zero, c, 0.0, 30, cc).passed);
}

TEST_CASE("chained checks imply the five-point property on seeded instances") {
  Rng rng(1234);
  for (int inst = 0; inst < 10; ++inst) {
    double mu = rng.uniform(0.1, 0.3);
    Vec a = vec1(rng.uniform(0.8, 1.6));
    ConvexPotential ent = negative_entropy_potential(1);
    CostFunction c = bregman_cost(ent);
    Objective f = quadratic_objective(mu, a);
    CheckConfig cc = cfg_box(vec1(0.3), vec1(2.5), 100 + inst);
    PropertyReport conc = check_c_concavity(f, c, 30, cc);
    PropertyReport conv = check_cross_convexity(f, c, 0.0, 30, cc);
    Surrogate phi = make_surrogate(f, c, cc.search);
    PropertyReport fpp = check_five_point(phi, 0.0, 10, cc);
    CHECK(conc.passed);
    CHECK(conv.passed);
    CHECK(fpp.passed);
  }
  // the same chain on the flat quadratic family
  for (int inst = 0; inst < 10; ++inst) {
    double L = rng.uniform(0.8, 1.6);
    double mu = rng.uniform(0.2, 0.9) * L;
    Vec a = vec1(rng.uniform(-1.0, 1.0));
    CostFunction c = quadratic_cost(L, 1);
    Objective f = quadratic_objective(mu, a);
    CheckConfig cc = cfg_box(vec1(-3.0), vec1(3.0), 200 + inst);
    CHECK(check_c_concavity(f, c, 30, cc).passed);
    CHECK(check_cross_convexity(f, c, 0.0, 30, cc).passed);
    Surrogate phi = make_surrogate(f, c, cc.search);
    CHECK(check_five_point(phi, 0.0, 8, cc).passed);
  }
}

TEST_CASE("rate certificates on gradient descent") {
  Objective f = quadratic_objective(1.0, vec1(0.0));
  CostFunction c = quadratic_cost(1.0, 1);
  SolverTrace t = gradient_descent(f, 1.0, vec1(1.0), 10);
  RateParams p;
  p.cost = &c;
  p.objective = &f;
  RateCertificate cert = rate_certificate(t, RateKind::gdgc_sublinear, vec1(0.0), p);
  CHECK(cert.overall);
  CHECK(cert.per_n.size() == 10);
  // for this instance f(x_n) = 0 for n >= 1 while the bound is 1/(2n)
  CHECK(cert.per_n[0].lhs == doctest::Approx(0.0));
  CHECK(cert.per_n[0].rhs == doctest::Approx(0.5));

  RateCertificate desc = rate_certificate(t, RateKind::descent, vec1(0.0), RateParams{});
  CHECK(desc.overall);
}

TEST_CASE("rate certificate kind validation") {
  Objective f = quadratic_objective(1.0, vec1(0.0));
  SolverTrace t = gradient_descent(f, 1.0, vec1(1.0), 5);
  RateParams p;  // no bindings
  CHECK_THROWS_AS(rate_certificate(t, RateKind::gdgc_sublinear, vec1(0.0), p), KindMismatch);
  CHECK_THROWS_AS(rate_certificate(t, RateKind::am_sublinear, vec1(0.0), p), KindMismatch);
  RateParams lin;
  CostFunction c = quadratic_cost(1.0, 1);
  lin.cost = &c;
  lin.objective = &f;
  lin.lambda = 1.5;
  CHECK_THROWS_AS(rate_certificate(t, RateKind::gdgc_linear, vec1(0.0), lin), ConfigError);
}

TEST_CASE("linear rate certificate under relative strong convexity") {
  // f = 0.3 u + 0.2 x relative to the entropy: strongly convex with 0.3
  ConvexPotential ent = negative_entropy_potential(1);
  CostFunction c = bregman_cost(ent);
  Objective f;
  f.domain = [](const Vec& x) { return (x.array() > 0.0).all(); };
  f.eval = [](const Vec& x) { return 0.3 * (x.array() * x.array().log()).sum() + 0.2 * x.sum(); };
  f.grad = [](const Vec& x) { return Vec(0.3 * (1.0 + x.array().log()) + 0.2); };
  f.hess = [](const Vec& x) { return Mat((0.3 * x.array().inverse()).matrix().asDiagonal()); };
  SolverTrace t = mirror_descent(f, ent, vec1(1.8), 60);
  // minimizer: 0.3 (1 + log x) + 0.2 = 0
  Vec xstar = vec1(std::exp(-0.2 / 0.3 - 1.0));
  RateParams p;
  p.cost = &c;
  p.objective = &f;
  RateCertificate sub = rate_certificate(t, RateKind::gdgc_sublinear, xstar, p);
  CHECK(sub.overall);
  p.lambda = 0.3;
  RateCertificate lin = rate_certificate(t, RateKind::gdgc_linear, xstar, p);
  CHECK(lin.overall);
}

TEST_CASE("forward-backward certificates") {
  double L = 2.0;
  CostFunction c = quadratic_cost(L, 2);
  Objective f = quadratic_objective(0.8, vec2(1.0, 0.0));
  Objective g = quadratic_objective(0.6, vec2(-1.0, 0.5));
  SolverSpec spec;
  spec.horizon = 120;
  SearchConfig cfg;
  cfg.box_lo = vec2(-4, -4);
  cfg.box_hi = vec2(4, 4);
  cfg.seed = 3;
  SolverTrace t = forward_backward(f, g, c, vec2(2.0, 2.0), spec, cfg);
  Vec xstar = vec2((0.8 * 1.0 - 0.6 * 1.0) / 1.4, (0.6 * 0.5) / 1.4);
  RateParams p;
  p.cost = &c;
  p.objective = &f;
  p.objective_g = &g;
  RateCertificate sub = rate_certificate(t, RateKind::fb_sublinear, xstar, p);
  CHECK(sub.overall);
  p.lambda = 0.4;  // hess f = 0.8 I = lambda L I
  p.mu = 0.3;      // hess g = 0.6 I = mu L I
  RateCertificate lin = rate_certificate(t, RateKind::fb_linear, xstar, p);
  CHECK(lin.overall);
}

TEST_CASE("alternating-minimization certificate and lyapunov potential") {
  CostFunction c = quadratic_cost(1.0, 1);
  Surrogate phi =
      make_split_surrogate(c, nullptr, [](const Vec& y) { return 0.5 * y.squaredNorm(); });
  SolverSpec spec;
  spec.kind = "alternating_min";
  spec.horizon = 25;
  SearchConfig cfg;
  cfg.box_lo = vec1(-3.0);
  cfg.box_hi = vec1(3.0);
  cfg.seed = 4;
  SolverTrace t = alternating_minimize(phi, vec1(1.0), spec, cfg);

  RateParams p;
  p.surrogate = &phi;
  p.reference_dual = vec1(0.0);
  RateCertificate cert = rate_certificate(t, RateKind::am_sublinear, vec1(0.0), p);
  CHECK(cert.overall);

  PropertyReport lyap = lyapunov_check(t, phi, vec1(0.0), vec1(0.0));
  CHECK(lyap.passed);

  // a stationary trace keeps the potential non-increasing as well
  SolverTrace st = alternating_minimize(phi, vec1(0.0), spec, cfg);
  CHECK(lyapunov_check(st, phi, vec1(0.0), vec1(0.0)).passed);

  // traces without dual iterates are rejected
  SolverTrace broken = t;
  for (TraceStep& s : broken.steps) s.y.reset();
  CHECK_THROWS_AS(lyapunov_check(broken, phi, vec1(0.0), vec1(0.0)), MissingDualIterates);
}

TEST_CASE("lyapunov potential on a trace without the five-point property") {
  // the sine objective violates cross-convexity, so the potential may rise;
  // any violation is recorded with its first offending step index
  Objective f = sin_objective();
  CostFunction c = quadratic_cost(1.0, 1);
  SearchConfig cfg;
  cfg.box_lo = vec1(-8.0);
  cfg.box_hi = vec1(8.0);
  cfg.seed = 77;
  cfg.restarts = 6;
  Surrogate phi = make_surrogate(f, c, cfg);
  SolverSpec spec;
  spec.horizon = 8;
  SolverTrace t = gdgc_explicit(f, c, vec1(2.9), spec);
  PropertyReport rep = lyapunov_check(t, phi, vec1(2.0), vec1(2.0));
  if (!rep.passed) {
    REQUIRE(!rep.violations.empty());
    CHECK(rep.violations.front().index >= 1);
    CHECK(rep.violations.front().lhs > rep.violations.front().rhs);
  }
}

TEST_CASE("bregman alternating minimization with both separable terms") {
  // phi = u(x|y) + g(x) + h(y) on the entropy divergence; the marginal
  // F(x) = inf_y phi(x, y) is convex, so the 1/n certificate holds
  ConvexPotential ent = negative_entropy_potential(1);
  CostFunction c = bregman_cost(ent);
  Surrogate phi = make_split_surrogate(
      c, [](const Vec& x) { return 0.4 * (x[0] - 1.2) * (x[0] - 1.2); },
      [](const Vec& y) { return 0.3 * (y[0] - 0.8) * (y[0] - 0.8); });
  SolverSpec spec;
  spec.kind = "alternating_min";
  spec.horizon = 40;
  SearchConfig cfg;
  cfg.box_lo = vec1(0.05);
  cfg.box_hi = vec1(3.0);
  cfg.seed = 91;
  SolverTrace t = alternating_minimize(phi, vec1(2.0), spec, cfg);
  for (int n = 1; n < t.size(); ++n) CHECK(t.step(n).value <= t.step(n - 1).value + 1e-10);

  RateParams p;
  p.surrogate = &phi;
  p.reference_dual = *t.steps.back().y;
  RateCertificate cert =
      rate_certificate(t, RateKind::am_sublinear, t.steps.back().x, p);
  CHECK(cert.overall);
  CHECK(lyapunov_check(t, phi, t.steps.back().x, *t.steps.back().y).passed);
}

TEST_CASE("descent-gap report") {
  // gradient descent on a smooth quadratic: gap = |grad f|^2 / (2L)
  double L = 2.0;
  Objective f = quadratic_objective(1.0, vec1(0.0));
  CostFunction c = quadratic_cost(L, 1);
  SolverTrace t = gradient_descent(f, L, vec1(1.5), 20);
  PropertyReport rep = check_descent_gap(t, f, c);
  CHECK(rep.passed);
  for (int n = 0; n + 1 < t.size(); ++n) {
    double expected = f.gradient(t.step(n).x).squaredNorm() / (2.0 * L);
    CHECK(*t.step(n).gap == doctest::Approx(expected).epsilon(1e-12));
  }

  // stationary start: all gaps vanish
  SolverTrace st = gradient_descent(f, L, vec1(0.0), 5);
  PropertyReport rep2 = check_descent_gap(st, f, c);
  CHECK(rep2.passed);
  for (int n = 0; n + 1 < st.size(); ++n) CHECK(*st.step(n).gap == doctest::Approx(0.0));

  // sphere descent: the recorded gap equals |grad|^2 / (2L) as well
  Objective lin;
  lin.eval = [](const Vec& x) { return x[0]; };
  lin.grad = [](const Vec& x) { return Vec(Vec::Unit(x.size(), 0)); };
  Vec e2 = Vec::Unit(3, 1);
  SolverTrace sph = riemannian_sphere_gd(lin, 1.5, e2, 15);
  CostFunction csph = sphere_geodesic_cost(1.5, 3);
  PropertyReport rep3 = check_descent_gap(sph, lin, csph);
  CHECK(rep3.passed);
  for (int n = 0; n + 1 < sph.size(); ++n) {
    Vec gt = sphere_tangent_project(sph.step(n).x, lin.gradient(sph.step(n).x));
    CHECK(*sph.step(n).gap == doctest::Approx(gt.squaredNorm() / 3.0).epsilon(1e-9));
  }
}

TEST_CASE("eigenvalue helper reports asymmetry") {
  Mat M(2, 2);
  M << 1.0, 2.0, 0.0, 3.0;
  double asym = 0.0;
  min_eigenvalue_sym(M, &asym);
  CHECK(asym == doctest::Approx(2.0));
}
