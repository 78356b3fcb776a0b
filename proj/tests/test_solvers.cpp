#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdgc/solvers.hpp"

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

SearchConfig box(const Vec& lo, const Vec& hi, std::uint64_t seed = 1) {
  SearchConfig cfg;
  cfg.box_lo = lo;
  cfg.box_hi = hi;
  cfg.seed = seed;
  cfg.restarts = 4;
  cfg.max_iter = 120;
  return cfg;
}

Objective quadratic_objective(double mu, const Vec& a) {
  Objective f;
  f.name = "quadratic";
  f.eval = [mu, a](const Vec& x) { return 0.5 * mu * (x - a).squaredNorm(); };
  f.grad = [mu, a](const Vec& x) { return Vec(mu * (x - a)); };
  f.hess = [mu, a](const Vec&) { return Mat(mu * Mat::Identity(a.size(), a.size())); };
  return f;
}

double max_x_gap(const SolverTrace& a, const SolverTrace& b) {
  REQUIRE(a.size() == b.size());
  double out = 0.0;
  for (int n = 0; n < a.size(); ++n)
    out = std::max(out, (a.step(n).x - b.step(n).x).lpNorm<Eigen::Infinity>());
  return out;
}

}  // namespace

TEST_CASE("alternating minimization of the quadratic split surrogate") {
  // phi = 1/2 (x-y)^2 + 1/2 y^2: the hand recursion halves x each sweep
  CostFunction c = quadratic_cost(1.0, 1);
  Surrogate phi =
      make_split_surrogate(c, nullptr, [](const Vec& y) { return 0.5 * y.squaredNorm(); });
  SolverSpec spec;
  spec.kind = "alternating_min";
  spec.horizon = 8;
  SearchConfig cfg = box(vec1(-3.0), vec1(3.0), 2);
  SolverTrace t = alternating_minimize(phi, vec1(1.0), spec, cfg);
  double expect_x = 1.0;
  for (int n = 1; n < t.size(); ++n) {
    double expect_y = expect_x / 2.0;
    expect_x = expect_y;
    CHECK(t.step(n).x[0] == doctest::Approx(expect_x).epsilon(1e-6));
    CHECK((*t.step(n).y)[0] == doctest::Approx(expect_y).epsilon(1e-6));
  }
  // the surrogate value never increases along the sweep
  for (int n = 1; n < t.size(); ++n) CHECK(t.step(n).value <= t.step(n - 1).value + 1e-12);

  // a stationary start stays stationary
  SolverTrace s = alternating_minimize(phi, vec1(0.0), spec, cfg);
  for (int n = 0; n < s.size(); ++n) CHECK(std::abs(s.step(n).x[0]) <= 1e-7);
}

TEST_CASE("explicit solver: one quadratic step reaches the minimizer") {
  CostFunction c = quadratic_cost(1.0, 1);
  Objective f = quadratic_objective(1.0, vec1(0.0));
  SolverSpec spec;
  spec.horizon = 3;
  SolverTrace t = gdgc_explicit(f, c, vec1(1.0), spec);
  CHECK(t.step(1).x[0] == doctest::Approx(0.0));
  CHECK(t.step(0).y.has_value());  // coupled initial dual point
  CHECK((*t.step(0).y)[0] == doctest::Approx(1.0));
}

TEST_CASE("solver equivalences on closed forms") {
  SolverSpec spec;
  spec.horizon = 50;

  // quadratic cost reproduces gradient descent with step 1/L
  double L = 2.0;
  Objective f = quadratic_objective(0.7, vec2(0.4, -0.2));
  SolverTrace a = gdgc_explicit(f, quadratic_cost(L, 2), vec2(2.0, 1.0), spec);
  SolverTrace b = gradient_descent(f, L, vec2(2.0, 1.0), 50);
  CHECK(max_x_gap(a, b) <= 1e-10);

  // Bregman cost reproduces mirror descent
  ConvexPotential ent = negative_entropy_potential(2);
  Objective fp = quadratic_objective(0.2, vec2(1.0, 0.5));
  SolverTrace c1 = gdgc_explicit(fp, bregman_cost(ent), vec2(0.5, 1.5), spec);
  SolverTrace c2 = mirror_descent(fp, ent, vec2(0.5, 1.5), 50);
  CHECK(max_x_gap(c1, c2) <= 1e-10);

  // reverse Bregman cost reproduces natural gradient descent
  SolverTrace d1 = gdgc_explicit(fp, reverse_bregman_cost(ent), vec2(0.8, 0.9), spec);
  SolverTrace d2 = natural_gradient(fp, ent, vec2(0.8, 0.9), 50);
  CHECK(max_x_gap(d1, d2) <= 1e-10);

  // natural gradient with u = f is Newton's method
  Objective g;
  g.name = "exp_quad";
  g.eval = [](const Vec& x) { return x.array().exp().sum() + 0.5 * x.squaredNorm(); };
  g.grad = [](const Vec& x) { return Vec(x.array().exp().matrix() + x); };
  g.hess = [](const Vec& x) {
    Mat H = x.array().exp().matrix().asDiagonal();
    H.diagonal().array() += 1.0;
    return H;
  };
  ConvexPotential gu;
  gu.name = "exp_quad";
  gu.dim = 2;
  gu.eval = g.eval;
  gu.grad = g.grad;
  gu.hess = g.hess;
  gu.interior_point = vec2(0, 0);
  SolverTrace e1 = natural_gradient(g, gu, vec2(1.0, -0.5), 50);
  SolverTrace e2 = newton(g, vec2(1.0, -0.5), 50);
  CHECK(max_x_gap(e1, e2) <= 1e-10);
}

TEST_CASE("fenchel-young and bregman costs give identical primal iterates") {
  ConvexPotential ent = negative_entropy_potential(2);
  Objective f = quadratic_objective(0.2, vec2(1.0, 0.5));
  SolverSpec spec;
  spec.horizon = 40;
  SolverTrace a = gdgc_explicit(f, bregman_cost(ent), vec2(0.5, 1.5), spec);
  SolverTrace b = gdgc_explicit(f, fenchel_young_cost(ent), vec2(0.5, 1.5), spec);
  CHECK(max_x_gap(a, b) <= 1e-10);
  // dual iterates are related by the mirror map
  for (int n = 1; n < a.size(); ++n) {
    Vec lifted = ent.gradient(*a.step(n).y);
    CHECK((lifted - *b.step(n).y).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("forward-backward with g = 0 reproduces the explicit solver") {
  CostFunction c = quadratic_cost(1.5, 1);
  Objective f = quadratic_objective(0.8, vec1(0.6));
  Objective zero;
  zero.eval = [](const Vec&) { return 0.0; };
  zero.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  zero.hess = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  SolverSpec spec;
  spec.horizon = 25;
  SearchConfig cfg = box(vec1(-3.0), vec1(3.0), 5);
  SolverTrace fb = forward_backward(f, zero, c, vec1(2.0), spec, cfg);
  SolverTrace ex = gdgc_explicit(f, c, vec1(2.0), spec);
  CHECK(max_x_gap(fb, ex) <= 1e-9);
}

TEST_CASE("forward-backward with f = 0 is the proximal point method") {
  double L = 2.0;
  CostFunction c = quadratic_cost(L, 1);
  Objective zero;
  zero.eval = [](const Vec&) { return 0.0; };
  zero.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  zero.hess = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
  Objective g = quadratic_objective(1.0, vec1(1.0));
  SolverSpec spec;
  spec.horizon = 15;
  SearchConfig cfg = box(vec1(-3.0), vec1(3.0), 6);
  SolverTrace t = forward_backward(zero, g, c, vec1(-1.0), spec, cfg);
  // prox step in closed form: x' = (L x + mu a) / (L + mu)
  double x = -1.0;
  for (int n = 1; n < t.size(); ++n) {
    x = (L * x + 1.0) / (L + 1.0);
    CHECK(t.step(n).x[0] == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("forward-backward quadratics follow the affine recursion") {
  double L = 1.0, muf = 0.5, mug = 0.8, af = 1.0, ag = -0.5;
  CostFunction c = quadratic_cost(L, 1);
  Objective f = quadratic_objective(muf, vec1(af));
  Objective g = quadratic_objective(mug, vec1(ag));
  SolverSpec spec;
  spec.horizon = 20;
  SearchConfig cfg = box(vec1(-3.0), vec1(3.0), 7);
  SolverTrace t = forward_backward(f, g, c, vec1(2.0), spec, cfg);
  // y_{n+1} = x_n - muf (x_n - af)/L; x_{n+1} solves L(x - y) + mug (x - ag) = 0
  double x = 2.0;
  for (int n = 1; n < t.size(); ++n) {
    double y = x - muf * (x - af) / L;
    x = (L * y + mug * ag) / (L + mug);
    CHECK(t.step(n).x[0] == doctest::Approx(x).epsilon(1e-9));
    CHECK((*t.step(n).y)[0] == doctest::Approx(y).epsilon(1e-9));
  }
}

TEST_CASE("mirror descent closed forms") {
  // quadratic mirror map: plain gradient descent with step 1/L
  ConvexPotential q = quadratic_potential(2.0, 2);
  Objective f = quadratic_objective(1.0, vec2(1.0, -1.0));
  SolverTrace t = mirror_descent(f, q, vec2(0.0, 0.0), 10);
  SolverTrace gd = gradient_descent(f, 2.0, vec2(0.0, 0.0), 10);
  CHECK(max_x_gap(t, gd) <= 1e-12);

  // entropy mirror map with a linear objective: multiplicative update
  ConvexPotential ent = negative_entropy_potential(2);
  Vec s = vec2(0.3, -0.4);
  Objective lin;
  lin.eval = [s](const Vec& x) { return s.dot(x); };
  lin.grad = [s](const Vec&) { return s; };
  SolverTrace m = mirror_descent(lin, ent, vec2(1.0, 1.0), 5);
  for (int n = 1; n < m.size(); ++n) {
    Vec expect = (m.step(n - 1).x.array() * (-s).array().exp()).matrix();
    CHECK((m.step(n).x - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  // constant objective: stationary
  Objective c0;
  c0.eval = [](const Vec&) { return 4.0; };
  c0.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  SolverTrace st = mirror_descent(c0, ent, vec2(0.7, 0.2), 5);
  CHECK(max_x_gap(st, st) == 0.0);
  for (int n = 0; n < st.size(); ++n)
    CHECK((st.step(n).x - vec2(0.7, 0.2)).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("natural gradient dual view is a mirror descent") {
  ConvexPotential ent = negative_entropy_potential(2);
  Objective f = quadratic_objective(0.3, vec2(1.0, 1.2));
  Vec x0 = vec2(0.8, 0.9);
  SolverTrace t = natural_gradient(f, ent, x0, 30);

  // z_n = grad u(x_n) follows the mirror descent of f(grad u^*(z)) with
  // mirror map u^*
  Vec z = ent.gradient(x0);
  for (int n = 0; n < t.size(); ++n) {
    CHECK((*t.step(n).dual - z).lpNorm<Eigen::Infinity>() <= 1e-8);
    if (n + 1 < t.size()) {
      // mirror update in z: grad u*(z') = grad u*(z) - grad f~(z), with
      // grad f~(z) = (grad^2 u*)(z) grad f(x) and grad u* = (grad u)^{-1}
      Vec x = ent.gradient_inverse(z);
      Mat hess_ustar = ent.hessian(x).inverse();
      Vec zn = z - hess_ustar.inverse() * (hess_ustar * f.gradient(x));
      // simplification: z' = grad u(x - hess u(x)^{-1} grad f(x))
      Vec xn = x - ent.hessian(x).inverse() * f.gradient(x);
      zn = ent.gradient(xn);
      z = zn;
    }
  }
}

TEST_CASE("newton closed forms") {
  // a convex quadratic is solved in one step
  Objective f = quadratic_objective(0.9, vec2(2.0, -1.0));
  SolverTrace t = newton(f, vec2(0.0, 0.0), 3);
  CHECK((t.step(1).x - vec2(2.0, -1.0)).lpNorm<Eigen::Infinity>() <= 1e-12);

  // f(x) = e^x steps by exactly -1
  Objective e;
  e.eval = [](const Vec& x) { return std::exp(x[0]); };
  e.grad = [](const Vec& x) { return vec1(std::exp(x[0])); };
  e.hess = [](const Vec& x) {
    Mat h(1, 1);
    h << std::exp(x[0]);
    return h;
  };
  SolverTrace te = newton(e, vec1(1.5), 4);
  for (int n = 0; n < te.size(); ++n)
    CHECK(te.step(n).x[0] == doctest::Approx(1.5 - n).epsilon(1e-12));

  // descent on the regularized exponential
  Objective g;
  g.eval = [](const Vec& x) { return x.array().exp().sum() + 0.5 * x.squaredNorm(); };
  g.grad = [](const Vec& x) { return Vec(x.array().exp().matrix() + x); };
  g.hess = [](const Vec& x) {
    Mat H = x.array().exp().matrix().asDiagonal();
    H.diagonal().array() += 1.0;
    return H;
  };
  SolverTrace tg = newton(g, vec2(1.0, 2.0), 20);
  for (int n = 1; n < tg.size(); ++n) CHECK(tg.step(n).value <= tg.step(n - 1).value + 1e-12);
}

TEST_CASE("log divergence descent") {
  // with grad h = 0 the multiplier is one and the step is the mirror step
  ConvexPotential q = quadratic_potential(1.0, 1);
  Objective f = quadratic_objective(1.0, vec1(0.0));
  SolverTrace t = log_divergence_gd(f, q, 0.5, vec1(1.0), 3);
  CHECK(t.step(1).x[0] == doctest::Approx(0.0).epsilon(1e-12));

  Objective c0;
  c0.eval = [](const Vec&) { return 1.0; };
  c0.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  SolverTrace st = log_divergence_gd(c0, q, 0.5, vec1(0.8), 4);
  for (int n = 0; n < st.size(); ++n) CHECK(st.step(n).x[0] == doctest::Approx(0.8));

  // the alpha -> 0 limit recovers mirror descent
  ConvexPotential q2 = quadratic_potential(2.0, 2);
  Objective f2 = quadratic_objective(0.6, vec2(0.3, -0.2));
  SolverTrace md = mirror_descent(f2, q2, vec2(1.0, 1.0), 10);
  SolverTrace ld = log_divergence_gd(f2, q2, 1e-4, vec2(1.0, 1.0), 10);
  CHECK(max_x_gap(md, ld) <= 1e-3);

  // and the explicit solver on the log-divergence cost matches exactly
  CostFunction c = log_divergence_cost(q2, 0.5);
  SolverSpec spec;
  spec.horizon = 10;
  SolverTrace ex = gdgc_explicit(f2, c, vec2(1.0, 1.0), spec);
  SolverTrace ld2 = log_divergence_gd(f2, q2, 0.5, vec2(1.0, 1.0), 10);
  CHECK(max_x_gap(ex, ld2) <= 1e-8);

  // the scalar equation solved by bisection matches the quadratic closed form
  ConvexPotential qn = q2;
  qn.name = "custom_quadratic";  // disables the closed-form branch
  SolverTrace ld3 = log_divergence_gd(f2, qn, 0.5, vec2(1.0, 1.0), 10);
  CHECK(max_x_gap(ld2, ld3) <= 1e-9);
}

TEST_CASE("riemannian gradient descent on the sphere") {
  // stationary when the tangent gradient vanishes
  Objective f;
  f.eval = [](const Vec& x) { return x[1]; };
  f.grad = [](const Vec& x) { return Vec(Vec::Unit(x.size(), 1)); };
  Vec e2 = Vec::Unit(3, 1);
  SolverTrace st = riemannian_sphere_gd(f, 1.0, e2, 5);
  for (int n = 0; n < st.size(); ++n)
    CHECK((st.step(n).x - e2).lpNorm<Eigen::Infinity>() <= 1e-14);

  // explicit first step for f = <e1, x> from e2
  Objective f1;
  f1.eval = [](const Vec& x) { return x[0]; };
  f1.grad = [](const Vec& x) { return Vec(Vec::Unit(x.size(), 0)); };
  SolverTrace t = riemannian_sphere_gd(f1, 1.0, e2, 40);
  Vec expect = std::cos(1.0) * e2 - std::sin(1.0) * Vec::Unit(3, 0);
  CHECK((t.step(1).x - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  for (int n = 0; n < t.size(); ++n) CHECK(std::abs(t.step(n).x.norm() - 1.0) <= 1e-12);

  Vec off = vec2(1.0, 1.0);
  CHECK_THROWS_AS(riemannian_sphere_gd(f1, 1.0, Vec(Vec::Ones(3)), 3), DomainError);
  (void)off;
}

TEST_CASE("sinkhorn basics") {
  // zero cost with uniform marginals is immediately optimal
  int n = 4;
  Vec mu = Vec::Constant(n, 1.0 / n);
  Vec nu = Vec::Constant(n, 1.0 / n);
  SolverTrace t = sinkhorn(Mat::Zero(n, n), 1.0, mu, nu, 3);
  Mat pi1 = coupling_from_step(t, 1, n, n);
  CHECK((pi1 - mu * nu.transpose()).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(t.step(1).value <= 1e-15);

  // the column marginal is matched exactly after every full sweep
  Rng rng(41);
  Mat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.next();
  Vec mu2(n), nu2(n);
  for (int i = 0; i < n; ++i) mu2[i] = 0.3 + rng.next();
  for (int j = 0; j < n; ++j) nu2[j] = 0.3 + rng.next();
  mu2 /= mu2.sum();
  nu2 /= nu2.sum();
  SolverTrace t2 = sinkhorn(b, 1.0, mu2, nu2, 10);
  for (int k = 1; k <= 10; ++k) {
    Mat pik = coupling_from_step(t2, k, n, n);
    CHECK((Vec(pik.colwise().sum().transpose()) - nu2).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
}

TEST_CASE("sinkhorn equals the classical scaling oracle") {
  Rng rng(42);
  int n = 12;
  Mat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.next();
  Vec mu(n), nu(n);
  for (int i = 0; i < n; ++i) mu[i] = 0.2 + rng.next();
  for (int j = 0; j < n; ++j) nu[j] = 0.2 + rng.next();
  mu /= mu.sum();
  nu /= nu.sum();
  int horizon = 60;
  SolverTrace t = sinkhorn(b, 1.0, mu, nu, horizon);
  std::vector<Mat> oracle = sinkhorn_scaling_oracle(b, 1.0, mu, nu, horizon);
  for (int k = 0; k <= horizon; ++k) {
    Mat pik = coupling_from_step(t, k, n, n);
    CHECK((pik - oracle[static_cast<std::size_t>(k)]).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("sinkhorn log-domain path survives tiny regularization") {
  Rng rng(43);
  int n = 6;
  Mat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.next();
  Vec mu = Vec::Constant(n, 1.0 / n);
  Vec nu = Vec::Constant(n, 1.0 / n);
  // eps small enough that exp(-b/eps) underflows
  SolverTrace t = sinkhorn(b, 1e-3, mu, nu, 50);
  CHECK(t.step(50).value < t.step(1).value + 1e-12);
  Mat fin = coupling_from_step(t, 50, n, n);
  CHECK((Vec(fin.colwise().sum().transpose()) - nu).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((fin.array() >= 0.0).all());
}

TEST_CASE("sinkhorn input validation") {
  Vec mu = Vec::Constant(2, 0.5);
  Vec bad = Vec::Constant(2, 0.6);
  CHECK_THROWS_AS(sinkhorn(Mat::Zero(2, 2), 1.0, mu, bad, 2), ConfigError);
  Vec neg(2);
  neg << 1.2, -0.2;
  CHECK_THROWS_AS(sinkhorn(Mat::Zero(2, 2), 1.0, neg, mu, 2), ConfigError);
}

TEST_CASE("pocs on halfspace and ball") {
  // spec geometry: B = {x1 >= 1}, C = unit ball
  Vec a = vec2(-1.0, 0.0);
  ConvexSet B = halfspace_set(a, -1.0);
  ConvexSet C = ball_set(vec2(0.0, 0.0), 1.0);
  SolverTrace t = pocs(B, C, vec2(2.0, 0.0), 5);
  CHECK(((*t.step(1).y) - vec2(1.0, 0.0)).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((t.step(1).x - vec2(1.0, 0.0)).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK(t.step(1).value <= 1e-28);

  // a point already in both sets stays put
  ConvexSet C2 = ball_set(vec2(0.0, 0.0), 2.0);
  SolverTrace st = pocs(B, C2, vec2(1.5, 0.0), 4);
  for (int n = 0; n < st.size(); ++n)
    CHECK((st.step(n).x - vec2(1.5, 0.0)).lpNorm<Eigen::Infinity>() <= 1e-14);

  // disjoint parallel halfspaces: the squared distance decreases towards the
  // squared gap
  ConvexSet H1 = halfspace_set(vec2(1.0, 0.0), 0.0);   // x1 <= 0
  ConvexSet H2 = halfspace_set(vec2(-1.0, 0.0), -1.0); // x1 >= 1
  SolverTrace d = pocs(H1, H2, vec2(-2.0, 0.3), 30);
  for (int n = 1; n < d.size(); ++n) CHECK(d.step(n).value <= d.step(n - 1).value + 1e-14);
  CHECK(d.steps.back().value >= 1.0 - 1e-12);
  CHECK(d.steps.back().value <= 1.0 + 1e-6);

  CHECK_THROWS_AS(pocs(H2, H1, vec2(-2.0, 0.0), 3), DomainError);
}

TEST_CASE("pocs projection helpers") {
  ConvexSet bx = box_set(vec2(0.0, 0.0), vec2(1.0, 1.0));
  CHECK((bx.project(vec2(2.0, -1.0)) - vec2(1.0, 0.0)).norm() == 0.0);
  CHECK(bx.project(bx.project(vec2(2.0, -1.0))) == bx.project(vec2(2.0, -1.0)));

  Mat A(1, 2);
  A << 1.0, 1.0;
  Vec b1 = vec1(1.0);
  ConvexSet aff = affine_set(A, b1);
  Vec p = aff.project(vec2(1.0, 1.0));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  // projection distance is a true distance (grid oracle on the ball)
  ConvexSet ball = ball_set(vec2(0.5, 0.0), 1.0);
  Vec q = vec2(2.5, 1.0);
  double best = 1e30;
  for (double tx = -1.0; tx <= 2.0; tx += 1e-3)
    for (double ty = -1.2; ty <= 1.2; ty += 1e-2) {
      Vec cand = vec2(tx, ty);
      if ((cand - vec2(0.5, 0.0)).norm() <= 1.0) best = std::min(best, (q - cand).norm());
    }
  CHECK(ball.distance(q) == doctest::Approx(best).epsilon(1e-3));
}

TEST_CASE("latent EM") {
  // identity kernel recovers the observed marginal in one sweep
  Vec mu(3);
  mu << 0.5, 0.3, 0.2;
  Vec theta0 = Vec::Constant(3, 1.0 / 3.0);
  SolverTrace t = latent_em(Mat::Identity(3, 3), mu, theta0, 3);
  CHECK((t.step(1).x - mu).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK(t.step(1).value <= 1e-14);

  // an already optimal parameter is a fixed point
  Rng rng(51);
  Mat K(4, 2);
  for (int k = 0; k < 2; ++k) {
    Vec col(4);
    for (int i = 0; i < 4; ++i) col[i] = 0.2 + rng.next();
    K.col(k) = col / col.sum();
  }
  Vec theta_opt(2);
  theta_opt << 0.4, 0.6;
  Vec mu_model = K * theta_opt;
  SolverTrace st = latent_em(K, mu_model, theta_opt, 4);
  for (int n = 0; n < st.size(); ++n)
    CHECK((st.step(n).x - theta_opt).lpNorm<Eigen::Infinity>() <= 1e-12);

  // random instance: the likelihood divergence never increases
  Mat K2(5, 3);
  for (int k = 0; k < 3; ++k) {
    Vec col(5);
    for (int i = 0; i < 5; ++i) col[i] = 0.1 + rng.next();
    K2.col(k) = col / col.sum();
  }
  Vec mu2(5);
  for (int i = 0; i < 5; ++i) mu2[i] = 0.1 + rng.next();
  mu2 /= mu2.sum();
  SolverTrace t2 = latent_em(K2, mu2, Vec(Vec::Constant(3, 1.0 / 3.0)), 60);
  for (int n = 1; n < t2.size(); ++n) CHECK(t2.step(n).value <= t2.step(n - 1).value + 1e-13);
}

TEST_CASE("surrogate solver matches the explicit solver on a c-concave objective") {
  Objective f;
  f.name = "sin";
  f.eval = [](const Vec& x) { return x.array().sin().sum(); };
  f.grad = [](const Vec& x) { return Vec(x.array().cos()); };
  CostFunction c = quadratic_cost(1.0, 1);
  SolverSpec spec;
  spec.horizon = 6;
  SearchConfig cfg = box(vec1(-8.0), vec1(8.0), 31);
  cfg.restarts = 6;
  SolverTrace a = gdgc_surrogate(f, c, vec1(1.0), spec, cfg);
  SolverTrace b = gdgc_explicit(f, c, vec1(1.0), spec);
  CHECK(max_x_gap(a, b) <= 1e-5);
}

TEST_CASE("every solver's recorded objective is non-increasing on its trace") {
  std::vector<SolverTrace> traces;
  Objective fq = quadratic_objective(0.5, vec2(1.0, -0.5));
  traces.push_back(gradient_descent(fq, 1.0, vec2(2.0, 2.0), 30));

  ConvexPotential ent = negative_entropy_potential(2);
  Objective fp = quadratic_objective(0.2, vec2(1.0, 0.5));
  traces.push_back(mirror_descent(fp, ent, vec2(0.5, 1.5), 30));

  Objective fn = quadratic_objective(0.3, vec2(1.0, 1.2));
  traces.push_back(natural_gradient(fn, ent, vec2(0.8, 0.9), 30));

  Objective fe;
  fe.eval = [](const Vec& x) { return x.array().exp().sum() + 0.5 * x.squaredNorm(); };
  fe.grad = [](const Vec& x) { return Vec(x.array().exp().matrix() + x); };
  fe.hess = [](const Vec& x) {
    Mat H = x.array().exp().matrix().asDiagonal();
    H.diagonal().array() += 1.0;
    return H;
  };
  traces.push_back(newton(fe, vec2(1.0, 2.0), 20));

  ConvexPotential q2 = quadratic_potential(2.0, 2);
  traces.push_back(log_divergence_gd(quadratic_objective(0.6, vec2(0.3, -0.2)), q2, 0.5,
                                     vec2(1.0, 1.0), 20));

  Objective lin;
  lin.eval = [](const Vec& x) { return x[0]; };
  lin.grad = [](const Vec& x) { return Vec(Vec::Unit(x.size(), 0)); };
  traces.push_back(riemannian_sphere_gd(lin, 1.0, Vec(Vec::Unit(3, 1)), 30));

  SolverSpec spec;
  spec.horizon = 15;
  traces.push_back(gdgc_explicit(fq, quadratic_cost(1.0, 2), vec2(2.0, 2.0), spec));

  Objective g = quadratic_objective(0.6, vec2(-1.0, 0.5));
  SearchConfig cfg = box(vec2(-4, -4), vec2(4, 4), 71);
  traces.push_back(forward_backward(fq, g, quadratic_cost(2.0, 2), vec2(2.0, 2.0), spec, cfg));

  Rng rng(72);
  Mat K(4, 2);
  for (int k = 0; k < 2; ++k) {
    Vec col(4);
    for (int i = 0; i < 4; ++i) col[i] = 0.2 + rng.next();
    K.col(k) = col / col.sum();
  }
  Vec mu(4);
  for (int i = 0; i < 4; ++i) mu[i] = 0.2 + rng.next();
  mu /= mu.sum();
  traces.push_back(latent_em(K, mu, Vec(Vec::Constant(2, 0.5)), 30));

  ConvexSet B = halfspace_set(vec2(-1.0, 0.0), -1.0);
  ConvexSet C = ball_set(vec2(0.0, 0.0), 2.0);
  traces.push_back(pocs(B, C, vec2(2.5, 0.5), 30));

  for (const SolverTrace& t : traces) {
    INFO(t.solver);
    for (int n = 1; n < t.size(); ++n) CHECK(t.step(n).value <= t.step(n - 1).value + 1e-11);
  }

  // sinkhorn descends once the iterates satisfy the column constraint
  Mat b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) b(i, j) = rng.next();
  Vec nu = mu;
  SolverTrace sk = sinkhorn(b, 1.0, mu, nu, 30);
  for (int n = 2; n < sk.size(); ++n) CHECK(sk.step(n).value <= sk.step(n - 1).value + 1e-13);
}

TEST_CASE("latent EM raises when observed data has zero model mass") {
  Mat K(3, 2);
  K << 0.5, 0.5, 0.5, 0.5, 0.0, 0.0;  // the third outcome is unreachable
  Vec mu(3);
  mu << 0.3, 0.3, 0.4;
  Vec theta0 = Vec::Constant(2, 0.5);
  CHECK_THROWS_AS(latent_em(K, mu, theta0, 3), ZeroMass);
}

TEST_CASE("kl divergence helper") {
  Vec p(2), q(2);
  p << 0.5, 0.5;
  q << 0.25, 0.75;
  double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(kl_divergence(p, q) == doctest::Approx(expected));
  Vec z(2);
  z << 1.0, 0.0;
  CHECK(kl_divergence(z, q) == doctest::Approx(std::log(4.0)));
  CHECK_THROWS_AS(kl_divergence(q, z), ZeroMass);
}
