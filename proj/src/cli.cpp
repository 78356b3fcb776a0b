#include "gdgc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace gdgc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Number formatting and trace files
// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const fs::path& path, const std::vector<TraceFileRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path.string());
  out << "n,f,phi,gap,bound_lhs,bound_rhs\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const TraceFileRow& r : rows) {
    out << r.n << ',' << format_double(r.f) << ',' << cell(r.phi) << ',' << cell(r.gap) << ','
        << cell(r.bound_lhs) << ',' << cell(r.bound_rhs) << '\n';
  }
}

std::vector<TraceFileRow> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty trace file: " + path.string());
  std::vector<TraceFileRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 6) cells.emplace_back();
    TraceFileRow r;
    r.n = std::stoi(cells[0]);
    r.f = std::stod(cells[1]);
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    r.phi = opt(cells[2]);
    r.gap = opt(cells[3]);
    r.bound_lhs = opt(cells[4]);
    r.bound_rhs = opt(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

bool verify_trace_file(const fs::path& path, const std::string& kind, double tol_scale) {
  std::vector<TraceFileRow> rows = read_trace_csv(path);
  if (rows.empty()) return false;
  double scale = 1.0;
  for (const TraceFileRow& r : rows) scale = std::max(scale, std::abs(r.f));
  if (kind == "descent") {
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (rows[k].f > rows[k - 1].f + tol_scale * scale) return false;
    return true;
  }
  // rate kinds: validate the recorded bound columns
  rate_kind_from_name(kind);  // throws KindMismatch for unknown kinds
  bool any = false;
  for (const TraceFileRow& r : rows) {
    if (!r.bound_lhs || !r.bound_rhs) continue;
    any = true;
    if (*r.bound_lhs > *r.bound_rhs + tol_scale * std::max(scale, std::abs(*r.bound_rhs)))
      return false;
  }
  return any;
}

bool verify_trace_file_sublinear(const fs::path& path, double reference_value, double numerator,
                                 double tol_scale) {
  // recompute the sublinear bound from the f column alone; must agree with
  // the in-memory certificate thanks to the 17-digit round-trip format
  std::vector<TraceFileRow> rows = read_trace_csv(path);
  double scale = std::max(1.0, std::abs(reference_value) + std::abs(numerator));
  for (const TraceFileRow& r : rows) {
    scale = std::max(scale, std::abs(r.f));
    if (r.n < 1) continue;
    if (r.f > reference_value + numerator / r.n + tol_scale * scale) return false;
  }
  return rows.size() > 1;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

json parse_scalar(const std::string& raw) {
  std::string s = raw;
  auto trim = [](std::string& t) {
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
  };
  trim(s);
  if (s.empty()) return json();
  if (s.front() == '[') return json::parse(s);
  if (s == "true") return json(true);
  if (s == "false") return json(false);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return json(s.substr(1, s.size() - 2));
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == s.size()) {
      if (s.find_first_of(".eE") == std::string::npos) {
        long long iv = std::stoll(s);
        if (static_cast<double>(iv) == v) return json(iv);
      }
      return json(v);
    }
  } catch (...) {
  }
  return json(s);
}

void insert_dotted(json& doc, const std::string& dotted, const json& value) {
  json* node = &doc;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& key = parts[i];
    bool is_index = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
    if (i + 1 == parts.size()) {
      if (is_index) {
        std::size_t idx = std::stoul(key);
        if (!node->is_array()) *node = json::array();
        while (node->size() <= idx) node->push_back(json());
        (*node)[idx] = value;
      } else {
        (*node)[key] = value;
      }
    } else {
      if (is_index) {
        std::size_t idx = std::stoul(key);
        if (!node->is_array()) *node = json::array();
        while (node->size() <= idx) node->push_back(json::object());
        node = &(*node)[idx];
      } else {
        if (!node->contains(key)) (*node)[key] = json::object();
        node = &(*node)[key];
      }
    }
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return ExperimentConfig::from_json(json::parse(text));
  json doc = json::object();
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t nonspace = line.find_first_not_of(" \t\r\n");
    if (nonspace == std::string::npos) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    insert_dotted(doc, key, parse_scalar(line.substr(eq + 1)));
  }
  return ExperimentConfig::from_json(doc);
}

ExperimentConfig load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  ExperimentConfig cfg;
  try {
    cfg.name = doc.at("name").get<std::string>();
    if (!doc.contains("seed")) throw ConfigError("config requires an explicit seed");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("output")) cfg.output = doc.at("output").get<std::string>();
    if (doc.contains("cost")) cfg.cost = doc.at("cost");
    if (doc.contains("objective")) cfg.objective = doc.at("objective");
    if (doc.contains("objective_g")) cfg.objective_g = doc.at("objective_g");
    cfg.solver = doc.at("solver");
    if (doc.contains("search")) cfg.search = doc.at("search");
    if (doc.contains("verify")) {
      for (const json& v : doc.at("verify")) cfg.verify.push_back(v);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json ExperimentConfig::to_json() const {
  json doc;
  doc["name"] = name;
  doc["seed"] = seed;
  if (!output.empty()) doc["output"] = output;
  if (!cost.is_null()) doc["cost"] = cost;
  if (!objective.is_null()) doc["objective"] = objective;
  if (!objective_g.is_null()) doc["objective_g"] = objective_g;
  doc["solver"] = solver;
  if (!search.is_null()) doc["search"] = search;
  doc["verify"] = json::array();
  for (const json& v : verify) doc["verify"].push_back(v);
  return doc;
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("experiment name must not be empty");
  if (!solver.contains("kind")) throw ConfigError("solver.kind is required");
  if (solver.contains("horizon") && solver.at("horizon").get<int>() < 1)
    throw ConfigError("solver.horizon must be >= 1");
}

// ---------------------------------------------------------------------------
// Registries
// ---------------------------------------------------------------------------

namespace {

Vec json_vec(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double jget(const json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

int jget_int(const json& j, const char* key, int dflt) {
  return j.contains(key) ? j.at(key).get<int>() : dflt;
}

std::string jget_str(const json& j, const char* key, const std::string& dflt) {
  return j.contains(key) ? j.at(key).get<std::string>() : dflt;
}

}  // namespace

ConvexPotential make_potential(const json& spec) {
  std::string kind = jget_str(spec, "kind", "");
  if (kind == "quadratic") {
    double L = jget(spec, "L", 1.0);
    if (spec.contains("anchor")) return quadratic_potential(L, json_vec(spec.at("anchor")));
    return quadratic_potential(L, jget_int(spec, "dim", 1));
  }
  if (kind == "negative_entropy") return negative_entropy_potential(jget_int(spec, "dim", 1));
  if (kind == "log_sum_exp") return log_sum_exp_potential(jget_int(spec, "dim", 1));
  throw ConfigError("unknown potential kind: " + kind);
}

CostFunction make_cost(const json& spec) {
  std::string family = jget_str(spec, "family", "");
  if (family == "quadratic")
    return quadratic_cost(jget(spec, "L", 1.0), jget_int(spec, "dim", 1));
  if (family == "mapped_quadratic") {
    int dim = jget_int(spec, "dim", 1);
    auto pick = [dim](const std::string& name, double scale) {
      if (name == "identity") return identity_diffeo(dim);
      if (name == "scale") return scaling_diffeo(scale, dim);
      if (name == "exp") return componentwise_exp_diffeo(dim);
      throw ConfigError("unknown map: " + name);
    };
    return mapped_quadratic_cost(pick(jget_str(spec, "map_a", "identity"), jget(spec, "scale_a", 2.0)),
                                 pick(jget_str(spec, "map_b", "identity"), jget(spec, "scale_b", 2.0)),
                                 dim);
  }
  if (family == "bregman") return bregman_cost(make_potential(spec.at("potential")));
  if (family == "reverse_bregman") return reverse_bregman_cost(make_potential(spec.at("potential")));
  if (family == "fenchel_young") return fenchel_young_cost(make_potential(spec.at("potential")));
  if (family == "log_divergence")
    return log_divergence_cost(make_potential(spec.at("potential")), jget(spec, "alpha", 0.5));
  if (family == "exponential_kernel") {
    int dim = jget_int(spec, "dim", 2);
    double eps = jget(spec, "eps", 1.0);
    std::string kernel = jget_str(spec, "kernel", "identity");
    Mat K = Mat::Identity(dim, dim);
    if (kernel == "random") {
      Rng rng(spec.contains("kernel_seed") ? spec.at("kernel_seed").get<std::uint64_t>() : 7,
              Rng::hash_name("kernel"));
      K = Mat::Identity(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) K(i, j) += 0.3 * rng.uniform(-1.0, 1.0);
    } else if (kernel != "identity") {
      throw ConfigError("unknown kernel: " + kernel);
    }
    return exponential_kernel_cost(K, eps);
  }
  if (family == "sphere")
    return sphere_geodesic_cost(jget(spec, "L", 1.0), jget_int(spec, "dim", 3));
  if (family == "tensor_quadratic") {
    CostFunction c1 = quadratic_cost(jget(spec, "L1", 1.0), jget_int(spec, "dim1", 1));
    CostFunction c2 = quadratic_cost(jget(spec, "L2", 2.0), jget_int(spec, "dim2", 1));
    return tensor_product_cost(c1, c2);
  }
  throw ConfigError("unknown cost family: " + family);
}

Objective make_objective(const json& spec) {
  std::string family = jget_str(spec, "family", "");
  Objective f;
  f.name = family;
  if (family == "quadratic") {
    double mu = jget(spec, "mu", 1.0);
    Vec a = json_vec(spec.at("anchor"));
    f.eval = [mu, a](const Vec& x) { return 0.5 * mu * (x - a).squaredNorm(); };
    f.grad = [mu, a](const Vec& x) { return Vec(mu * (x - a)); };
    f.hess = [mu, a](const Vec& x) {
      (void)x;
      return Mat(mu * Mat::Identity(a.size(), a.size()));
    };
    return f;
  }
  if (family == "linear") {
    Vec s = json_vec(spec.at("s"));
    f.eval = [s](const Vec& x) { return s.dot(x); };
    f.grad = [s](const Vec& x) {
      (void)x;
      return s;
    };
    f.hess = [s](const Vec& x) {
      (void)x;
      return Mat(Mat::Zero(s.size(), s.size()));
    };
    return f;
  }
  if (family == "sin") {
    double amp = jget(spec, "amp", 1.0);
    f.eval = [amp](const Vec& x) { return amp * x.array().sin().sum(); };
    f.grad = [amp](const Vec& x) { return Vec(amp * x.array().cos()); };
    f.hess = [amp](const Vec& x) { return Mat((-amp * x.array().sin()).matrix().asDiagonal()); };
    return f;
  }
  if (family == "sum_exp") {
    f.eval = [](const Vec& x) { return x.array().exp().sum(); };
    f.grad = [](const Vec& x) { return Vec(x.array().exp()); };
    f.hess = [](const Vec& x) { return Mat(x.array().exp().matrix().asDiagonal()); };
    return f;
  }
  if (family == "sum_exp_reg") {
    double eps = jget(spec, "eps", 0.01);
    f.eval = [eps](const Vec& x) { return x.array().exp().sum() + 0.5 * eps * x.squaredNorm(); };
    f.grad = [eps](const Vec& x) { return Vec(x.array().exp().matrix() + eps * x); };
    f.hess = [eps](const Vec& x) {
      Mat H = x.array().exp().matrix().asDiagonal();
      H.diagonal().array() += eps;
      return H;
    };
    return f;
  }
  if (family == "entropy_mix") {
    double beta = jget(spec, "beta", 0.3);
    Vec s = json_vec(spec.at("s"));
    f.domain = [](const Vec& x) { return (x.array() > 0.0).all(); };
    f.eval = [beta, s](const Vec& x) {
      return beta * (x.array() * x.array().log()).sum() + s.dot(x);
    };
    f.grad = [beta, s](const Vec& x) {
      return Vec(beta * (1.0 + x.array().log()).matrix() + s);
    };
    f.hess = [beta](const Vec& x) {
      return Mat((beta * x.array().inverse()).matrix().asDiagonal());
    };
    return f;
  }
  if (family == "zero") {
    int dim = jget_int(spec, "dim", 1);
    f.eval = [](const Vec&) { return 0.0; };
    f.grad = [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
    f.hess = [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); };
    return f;
  }
  throw ConfigError("unknown objective family: " + family);
}

SearchConfig make_search_config(const json& spec, int dim, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.seed = seed;
  cfg.restarts = jget_int(spec, "restarts", 8);
  cfg.max_iter = jget_int(spec, "max_iter", 200);
  cfg.tol = jget(spec, "tol", 1e-10);
  cfg.ceiling = jget(spec, "ceiling", 1e12);
  if (spec.contains("box_lo")) {
    cfg.box_lo = json_vec(spec.at("box_lo"));
    cfg.box_hi = json_vec(spec.at("box_hi"));
  } else {
    cfg.box_lo = Vec::Constant(dim, -5.0);
    cfg.box_hi = Vec::Constant(dim, 5.0);
  }
  if (cfg.box_lo.size() != dim) throw ConfigError("search box dimension mismatch");
  return cfg;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

struct BuiltInstance {
  std::optional<CostFunction> cost;
  std::optional<Objective> objective;
  std::optional<Objective> objective_g;
  std::optional<ConvexPotential> potential;
  std::optional<SearchConfig> search;
  SolverTrace trace;
};

ConvexSet make_convex_set(const json& spec) {
  std::string kind = jget_str(spec, "kind", "");
  if (kind == "halfspace") return halfspace_set(json_vec(spec.at("a")), spec.at("b").get<double>());
  if (kind == "ball")
    return ball_set(json_vec(spec.at("center")), spec.at("radius").get<double>());
  if (kind == "box") return box_set(json_vec(spec.at("lo")), json_vec(spec.at("hi")));
  if (kind == "affine") {
    Vec b = json_vec(spec.at("b"));
    const json& rows = spec.at("A");
    Mat A(rows.size(), json_vec(rows[0]).size());
    for (std::size_t i = 0; i < rows.size(); ++i) A.row(static_cast<int>(i)) = json_vec(rows[i]);
    return affine_set(A, b);
  }
  throw ConfigError("unknown convex set kind: " + kind);
}

BuiltInstance run_solver(const ExperimentConfig& config) {
  BuiltInstance built;
  const json& sv = config.solver;
  std::string kind = sv.at("kind").get<std::string>();
  int horizon = jget_int(sv, "horizon", 10);

  if (!config.cost.is_null()) built.cost = make_cost(config.cost);
  if (!config.objective.is_null()) built.objective = make_objective(config.objective);
  if (!config.objective_g.is_null()) built.objective_g = make_objective(config.objective_g);
  if (config.cost.contains("potential")) built.potential = make_potential(config.cost.at("potential"));

  SolverSpec spec;
  spec.kind = kind;
  spec.horizon = horizon;
  spec.tol = jget(sv, "tol", 1e-10);

  auto x0 = [&]() { return json_vec(sv.at("x0")); };
  auto search = [&](int dim) {
    SearchConfig cfg = make_search_config(config.search, dim, config.seed);
    built.search = cfg;
    return cfg;
  };

  if (kind == "gradient_descent") {
    built.trace = gradient_descent(*built.objective, jget(sv, "L", 1.0), x0(), horizon);
  } else if (kind == "mirror_descent") {
    if (!built.potential) throw ConfigError("mirror descent needs a Bregman cost with a potential");
    built.trace = mirror_descent(*built.objective, *built.potential, x0(), horizon);
  } else if (kind == "natural_gradient") {
    if (!built.potential) throw ConfigError("natural gradient needs a reverse Bregman cost");
    built.trace = natural_gradient(*built.objective, *built.potential, x0(), horizon);
  } else if (kind == "newton") {
    built.trace = newton(*built.objective, x0(), horizon);
  } else if (kind == "log_divergence_gd") {
    if (!built.potential) throw ConfigError("log divergence descent needs its cost potential");
    double alpha = jget(config.cost, "alpha", 0.5);
    built.trace = log_divergence_gd(*built.objective, *built.potential, alpha, x0(), horizon);
  } else if (kind == "riemannian_sphere") {
    double L = jget(config.cost, "L", 1.0);
    built.trace = riemannian_sphere_gd(*built.objective, L, x0(), horizon);
  } else if (kind == "gdgc_explicit") {
    built.trace = gdgc_explicit(*built.objective, *built.cost, x0(), spec);
  } else if (kind == "gdgc_surrogate") {
    Vec start = x0();
    built.trace = gdgc_surrogate(*built.objective, *built.cost, start, spec,
                                 search(static_cast<int>(start.size())));
  } else if (kind == "alternating_min") {
    Vec start = x0();
    SearchConfig cfg = search(static_cast<int>(start.size()));
    Surrogate phi = make_surrogate(*built.objective, *built.cost, cfg);
    built.trace = alternating_minimize(phi, start, spec, cfg);
  } else if (kind == "forward_backward") {
    Vec start = x0();
    built.trace = forward_backward(*built.objective, *built.objective_g, *built.cost, start, spec,
                                   search(static_cast<int>(start.size())));
  } else if (kind == "sinkhorn") {
    int rows = jget_int(sv, "rows", 20);
    int cols = jget_int(sv, "cols", 20);
    double eps = jget(sv, "eps", 1.0);
    Rng rng(config.seed, Rng::hash_name("sinkhorn-instance"));
    Mat b(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) b(i, j) = rng.next();
    Vec mu(rows), nu(cols);
    for (int i = 0; i < rows; ++i) mu[i] = 0.2 + rng.next();
    for (int j = 0; j < cols; ++j) nu[j] = 0.2 + rng.next();
    mu /= mu.sum();
    nu /= nu.sum();
    built.trace = sinkhorn(b, eps, mu, nu, horizon);
  } else if (kind == "pocs") {
    ConvexSet B = make_convex_set(sv.at("set_b"));
    ConvexSet C = make_convex_set(sv.at("set_c"));
    built.trace = pocs(B, C, x0(), horizon);
  } else if (kind == "latent_em") {
    int nx = jget_int(sv, "nx", 5);
    int nz = jget_int(sv, "nz", 3);
    Rng rng(config.seed, Rng::hash_name("em-instance"));
    Mat K(nx, nz);
    for (int k = 0; k < nz; ++k) {
      Vec col(nx);
      for (int i = 0; i < nx; ++i) col[i] = 0.1 + rng.next();
      K.col(k) = col / col.sum();
    }
    Vec mu(nx);
    for (int i = 0; i < nx; ++i) mu[i] = 0.1 + rng.next();
    mu /= mu.sum();
    Vec theta0 = Vec::Constant(nz, 1.0 / nz);
    built.trace = latent_em(K, mu, theta0, horizon);
  } else {
    throw ConfigError("unknown solver kind: " + kind);
  }
  return built;
}

json witness_json(const Witness& w) {
  json out;
  out["index"] = w.index;
  out["lhs"] = w.lhs;
  out["rhs"] = w.rhs;
  out["margin"] = w.margin;
  json pts = json::object();
  for (const auto& [name, p] : w.points) pts[name] = vec_json(p);
  out["points"] = pts;
  return out;
}

json property_json(const PropertyReport& rep) {
  json out;
  out["property"] = rep.property;
  out["samples"] = rep.samples;
  out["passed"] = rep.passed;
  out["violations"] = rep.violations.size();
  out["noise_floor"] = rep.noise_floor;
  out["seed"] = rep.seed;
  if (rep.necessary_condition) out["necessary_condition"] = *rep.necessary_condition;
  if (!rep.violations.empty()) out["first_witness"] = witness_json(rep.violations.front());
  return out;
}

json certificate_json(const RateCertificate& cert) {
  json out;
  out["kind"] = rate_kind_name(cert.kind);
  out["reference"] = vec_json(cert.reference);
  out["overall"] = cert.overall;
  out["rows"] = cert.per_n.size();
  const RateRow* bad = nullptr;
  for (const RateRow& row : cert.per_n)
    if (!row.satisfied) {
      bad = &row;
      break;
    }
  if (bad) {
    json b;
    b["n"] = bad->n;
    b["lhs"] = bad->lhs;
    b["rhs"] = bad->rhs;
    out["first_violation"] = b;
  }
  return out;
}

// Executes one declared check; returns {echo, passed, payload}.
json run_check(const json& check, const ExperimentConfig& config, BuiltInstance& built,
               RateCertificate* first_rate) {
  std::string kind = check.at("kind").get<std::string>();
  std::string expect = jget_str(check, "expect", "pass");
  json out;
  out["declared"] = check;
  bool raw_pass = false;
  json payload;

  int dim = static_cast<int>(built.trace.step(0).x.size());
  auto search_for = [&](int d) {
    SearchConfig cfg = make_search_config(config.search, d, config.seed);
    return cfg;
  };
  auto check_cfg = [&](int d) {
    CheckConfig cc;
    cc.search = search_for(d);
    cc.tol = jget(check, "tol", 1e-7);
    cc.segment_steps = jget_int(check, "segment_steps", 33);
    std::string mode = jget_str(check, "mode", "direct");
    cc.mode = (mode == "semilocal") ? CheckMode::semilocal : CheckMode::direct;
    cc.weak_variant = check.contains("weak") && check.at("weak").get<bool>();
    return cc;
  };

  if (kind == "rate") {
    RateKind rk = rate_kind_from_name(check.at("rate").get<std::string>());
    RateParams params;
    params.lambda = jget(check, "lambda", 0.0);
    params.mu = jget(check, "mu", 0.0);
    params.tol_scale = jget(check, "tol_scale", 1e-9);
    params.from_n = jget_int(check, "from_n", 1);
    if (built.cost) params.cost = &*built.cost;
    if (built.objective) params.objective = &*built.objective;
    if (built.objective_g) params.objective_g = &*built.objective_g;

    Vec reference;
    std::string ref_spec = check.contains("reference") && check.at("reference").is_string()
                               ? check.at("reference").get<std::string>()
                               : "";
    if (ref_spec == "final") {
      reference = built.trace.steps.back().x;
      if (built.trace.steps.back().y) params.reference_dual = *built.trace.steps.back().y;
    } else if (ref_spec == "x0") {
      reference = built.trace.step(0).x;
    } else if (check.contains("reference")) {
      reference = json_vec(check.at("reference"));
    } else {
      reference = built.trace.steps.back().x;
    }
    if (check.contains("reference_value"))
      params.reference_value = check.at("reference_value").get<double>();

    std::string num_mode = jget_str(check, "numerator_mode", "auto");
    if (num_mode == "value0_minus_ref") {
      double ref_value =
          params.reference_value ? *params.reference_value : (*built.objective)(reference);
      params.reference_value = ref_value;
      params.numerator = built.trace.step(0).value - ref_value;
    } else if (num_mode == "sq_dist_ref_x0") {
      params.reference_value = params.reference_value.value_or(0.0);
      params.numerator = (reference - built.trace.step(0).x).squaredNorm();
    } else if (num_mode == "kl_final_vs_y0") {
      // KL(final coupling | initialization), both stored in the trace
      const Vec& fin = built.trace.steps.back().x;
      if (!built.trace.step(0).y) throw KindMismatch("trace lacks the initial coupling");
      params.reference_value = params.reference_value.value_or(0.0);
      params.numerator = kl_divergence(fin, *built.trace.step(0).y);
    } else if (num_mode != "auto") {
      throw ConfigError("unknown numerator mode: " + num_mode);
    }

    // alternating-minimization kinds evaluated through the surrogate
    std::optional<Surrogate> phi;
    if ((rk == RateKind::am_sublinear || rk == RateKind::am_linear ||
         rk == RateKind::lyapunov) &&
        !params.numerator && built.cost && built.objective) {
      phi = make_surrogate(*built.objective, *built.cost, search_for(dim));
      params.surrogate = &*phi;
      if (!params.reference_dual && built.trace.steps.back().y)
        params.reference_dual = *built.trace.steps.back().y;
    }

    RateCertificate cert = rate_certificate(built.trace, rk, reference, params);
    raw_pass = cert.overall;
    payload = certificate_json(cert);
    if (first_rate && first_rate->per_n.empty()) *first_rate = cert;
  } else if (kind == "descent_gap") {
    PropertyReport rep = check_descent_gap(built.trace, *built.objective, *built.cost);
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "five_point") {
    CheckConfig cc = check_cfg(dim);
    Surrogate phi = make_surrogate(*built.objective, *built.cost, cc.search);
    PropertyReport rep =
        check_five_point(phi, jget(check, "lambda", 0.0), jget_int(check, "samples", 50), cc);
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "c_concavity") {
    PropertyReport rep = check_c_concavity(*built.objective, *built.cost,
                                           jget_int(check, "samples", 200), check_cfg(dim));
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "cross_convexity") {
    PropertyReport rep =
        check_cross_convexity(*built.objective, *built.cost, jget(check, "lambda", 0.0),
                              jget_int(check, "samples", 200), check_cfg(dim));
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "cross_concavity") {
    const Objective& g = built.objective_g ? *built.objective_g : *built.objective;
    PropertyReport rep = check_cross_concavity(g, *built.cost, jget(check, "lambda", 0.0),
                                               jget_int(check, "samples", 200), check_cfg(dim));
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "cross_curvature") {
    // zoology check: sampled sign or identity of S_c
    int samples = jget_int(check, "samples", 200);
    std::string sign = jget_str(check, "sign", "zero");
    double tol = jget(check, "tol", 1e-5);
    PropertyReport rep;
    rep.property = "cross_curvature_" + sign;
    rep.samples = samples;
    rep.seed = config.seed;
    Rng rng(config.seed, Rng::hash_name("cross-curvature"));
    SearchConfig sc = search_for(dim);
    const bool sphere = built.cost && built.cost->name == "sphere_geodesic";
    for (int k = 0; k < samples; ++k) {
      CurvatureResult cur;
      double identity_target = 0.0;
      if (sphere) {
        int d = built.cost->dim_x;
        Vec px = rng.direction(d);
        Vec py = rng.direction(d);
        if (px.dot(py) < -0.9) continue;  // keep clear of the antipode
        CostFunction chart = sphere_chart_cost(jget(config.cost, "L", 1.0), px, py);
        Vec xi = rng.direction(d - 1), eta = rng.direction(d - 1);
        Vec origin = Vec::Zero(d - 1);
        cur = cross_curvature(chart, origin, origin, xi, eta);
      } else {
        Vec x = rng.uniform_vec(sc.box_lo, sc.box_hi);
        Vec y = rng.uniform_vec(sc.box_lo, sc.box_hi);
        if (!built.cost->in_domain(x, y)) continue;
        Vec xi = rng.direction(built.cost->dim_x);
        Vec eta = rng.direction(built.cost->dim_x);
        cur = cross_curvature(*built.cost, x, y, xi, eta);
        if (sign == "log_div_identity") {
          double alpha = jget(config.cost, "alpha", 0.5);
          double m = -kim_mccann_metric(*built.cost, x, y, xi, eta);
          identity_target = 2.0 * alpha * m * m;
        }
      }
      rep.noise_floor = std::max(rep.noise_floor, cur.noise_floor);
      bool ok = true;
      double lhs = cur.value, rhs = 0.0;
      if (sign == "zero") {
        ok = std::abs(cur.value) <= tol;
        lhs = std::abs(cur.value), rhs = tol;
      } else if (sign == "nonneg") {
        ok = cur.value >= -tol;
        rhs = -tol;
      } else if (sign == "log_div_identity") {
        double scale = std::abs(identity_target) + 1e-9;
        ok = std::abs(cur.value - identity_target) <= tol * scale;
        lhs = std::abs(cur.value - identity_target), rhs = tol * scale;
      } else {
        throw ConfigError("unknown cross-curvature sign mode: " + sign);
      }
      if (!ok) {
        Witness w;
        w.lhs = lhs;
        w.rhs = rhs;
        w.margin = lhs - rhs;
        w.index = k;
        rep.violations.push_back(w);
      }
    }
    rep.passed = rep.violations.empty();
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "envelope") {
    int points = jget_int(check, "points", 3);
    double tol = jget(check, "tol", 1e-5);
    SearchConfig sc = search_for(dim);
    Surrogate phi = make_surrogate(*built.objective, *built.cost, sc);
    Rng rng(config.seed, Rng::hash_name("envelope"));
    PropertyReport rep;
    rep.property = "envelope";
    rep.samples = points;
    rep.seed = config.seed;
    for (int k = 0; k < points; ++k) {
      Vec x = rng.uniform_vec(sc.box_lo, sc.box_hi);
      EnvelopeReport er = check_envelope(phi, x, sc);
      rep.noise_floor = std::max(rep.noise_floor, tol);
      if (er.max_abs_deviation > tol) {
        Witness w;
        w.points = {{"x", x}, {"argmin_y", er.argmin_y}};
        w.lhs = er.max_abs_deviation;
        w.rhs = tol;
        w.margin = er.max_abs_deviation - tol;
        w.index = k;
        rep.violations.push_back(w);
      }
    }
    rep.passed = rep.violations.empty();
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else if (kind == "lyapunov") {
    SearchConfig sc = search_for(dim);
    Surrogate phi = make_surrogate(*built.objective, *built.cost, sc);
    const TraceStep& last = built.trace.steps.back();
    if (!last.y) throw MissingDualIterates("lyapunov check needs dual iterates");
    PropertyReport rep =
        lyapunov_check(built.trace, phi, last.x, *last.y, jget(check, "f_star", 0.0));
    raw_pass = rep.passed;
    payload = property_json(rep);
  } else {
    throw ConfigError("unknown check kind: " + kind);
  }

  bool passed = (expect == "fail") ? !raw_pass : raw_pass;
  out["raw_pass"] = raw_pass;
  out["passed"] = passed;
  out["result"] = payload;
  return out;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config_echo = config.to_json();
  report.config_echo.erase("output");  // a relocation must not change the echo

  fs::path out_dir = config.output.empty() ? fs::path(config.name) : fs::path(config.output);
  if (const char* env = std::getenv("GDGC_OUT")) out_dir = fs::path(env) / config.name;
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "config.json");
    out << report.config_echo.dump(2) << '\n';
  }

  BuiltInstance built;
  try {
    built = run_solver(config);
  } catch (const Error& e) {
    // solver errors are recorded in the report before propagating
    json rj = report.to_json();
    rj["error"] = e.what();
    rj["all_passed"] = false;
    std::ofstream out(out_dir / "report.json");
    out << rj.dump(2) << '\n';
    throw;
  }

  RateCertificate first_rate;
  json checks = json::array();
  bool all_passed = true;
  for (const json& check : config.verify) {
    json res;
    try {
      res = run_check(check, config, built, &first_rate);
    } catch (const Error& e) {
      res["declared"] = check;
      res["passed"] = false;
      res["error"] = e.what();
    }
    all_passed = all_passed && res.at("passed").get<bool>();
    if (res.at("declared").value("kind", "") == "rate")
      report.certificates.push_back(res);
    else
      report.property_reports.push_back(res);
    checks.push_back(res);
  }

  // trace.csv with the first declared rate certificate's bound columns
  std::vector<TraceFileRow> rows;
  rows.reserve(built.trace.steps.size());
  for (const TraceStep& s : built.trace.steps) {
    TraceFileRow r;
    r.n = s.n;
    r.f = s.value;
    r.phi = s.phi;
    r.gap = s.gap;
    rows.push_back(r);
  }
  for (const RateRow& rr : first_rate.per_n) {
    if (rr.n >= 0 && rr.n < static_cast<int>(rows.size())) {
      rows[static_cast<std::size_t>(rr.n)].bound_lhs = rr.lhs;
      rows[static_cast<std::size_t>(rr.n)].bound_rhs = rr.rhs;
    }
  }
  fs::path trace_path = out_dir / "trace.csv";
  write_trace_csv(trace_path, rows);
  report.trace_path = trace_path.string();

  report.all_passed = all_passed;
  json rj = report.to_json();
  rj["checks"] = checks;
  {
    std::ofstream out(out_dir / "report.json");
    out << rj.dump(2) << '\n';
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

json RunReport::to_json() const {
  json out;
  out["name"] = config_echo.value("name", "");
  out["seed"] = config_echo.contains("seed") ? config_echo.at("seed") : json(0);
  out["trace"] = "trace.csv";
  out["all_passed"] = all_passed;
  return out;
}

// ---------------------------------------------------------------------------
// Builtin experiments
// ---------------------------------------------------------------------------

namespace {

json potential_json(const std::string& kind, double L, int dim) {
  json p;
  p["kind"] = kind;
  if (kind == "quadratic") p["L"] = L;
  p["dim"] = dim;
  return p;
}

ExperimentConfig builtin_from_json(const json& doc) { return ExperimentConfig::from_json(doc); }

std::vector<std::pair<CatalogEntry, json>> builtin_table() {
  std::vector<std::pair<CatalogEntry, json>> table;
  auto add = [&](const std::string& name, const std::string& desc, const std::string& group,
                 json doc) {
    doc["name"] = name;
    table.push_back({CatalogEntry{name, desc, group}, doc});
  };

  // vanilla gradient descent with a quadratic movement limiter
  {
    json d;
    d["seed"] = 11;
    d["cost"] = {{"family", "quadratic"}, {"L", 1.0}, {"dim", 2}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.5}, {"anchor", {1.0, -0.5}}};
    d["solver"] = {{"kind", "gradient_descent"}, {"L", 1.0}, {"horizon", 50}, {"x0", {3.0, 2.0}}};
    d["search"] = {{"box_lo", {-4.0, -4.0}}, {"box_hi", {4.0, 4.0}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "gdgc_sublinear"}, {"reference", {1.0, -0.5}}},
        json{{"kind", "descent_gap"}},
        json{{"kind", "c_concavity"}, {"samples", 50}},
        json{{"kind", "cross_convexity"}, {"samples", 50}},
    });
    add("gd-quadratic", "gradient descent, fixed step, sublinear certificate", "gradient-descent",
        d);
  }
  // mirror descent with the entropy mirror map
  {
    json d;
    d["seed"] = 12;
    d["cost"] = {{"family", "bregman"}, {"potential", potential_json("negative_entropy", 0, 2)}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.2}, {"anchor", {1.0, 0.5}}};
    d["solver"] = {{"kind", "mirror_descent"}, {"horizon", 60}, {"x0", {0.5, 1.5}}};
    d["search"] = {{"box_lo", {0.05, 0.05}}, {"box_hi", {3.0, 3.0}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "gdgc_sublinear"}, {"reference", {1.0, 0.5}}},
        json{{"kind", "rate"}, {"rate", "descent"}},
        json{{"kind", "c_concavity"}, {"samples", 50}},
        json{{"kind", "cross_convexity"}, {"samples", 50}},
    });
    add("mirror-entropy", "entropy mirror descent with sublinear certificate", "mirror-descent",
        d);
  }
  // natural gradient descent on the entropy metric
  {
    json d;
    d["seed"] = 13;
    d["cost"] = {{"family", "reverse_bregman"},
                 {"potential", potential_json("negative_entropy", 0, 2)}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.3}, {"anchor", {1.0, 1.2}}};
    d["solver"] = {{"kind", "natural_gradient"}, {"horizon", 40}, {"x0", {0.8, 0.9}}};
    d["search"] = {{"box_lo", {0.65, 0.65}}, {"box_hi", {2.0, 2.0}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "gdgc_sublinear"}, {"reference", {1.0, 1.2}}},
        json{{"kind", "rate"}, {"rate", "descent"}},
        json{{"kind", "c_concavity"}, {"samples", 50}},
    });
    add("natural-gradient-entropy", "natural gradient descent on a Hessian metric",
        "natural-gradient", d);
  }
  // Newton's method on a separable exponential objective
  {
    json d;
    d["seed"] = 14;
    d["objective"] = {{"family", "sum_exp"}};
    d["solver"] = {{"kind", "newton"}, {"horizon", 100}, {"x0", {1.0, -0.5, 2.0}}};
    d["search"] = {{"box_lo", {-2.0, -2.0, -2.0}}, {"box_hi", {2.0, 2.0, 2.0}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "rate"},
             {"rate", "gdgc_sublinear"},
             {"reference", {-2.0, -2.0, -2.0}},
             {"numerator_mode", "value0_minus_ref"}},
        json{{"kind", "rate"}, {"rate", "descent"}},
    });
    add("newton-exp", "global sublinear certificate for Newton's method", "newton", d);
  }
  // Riemannian gradient descent on the unit sphere
  {
    json d;
    d["seed"] = 15;
    d["cost"] = {{"family", "sphere"}, {"L", 1.0}, {"dim", 3}};
    d["objective"] = {{"family", "linear"}, {"s", {1.0, 0.0, 0.0}}};
    d["solver"] = {{"kind", "riemannian_sphere"}, {"horizon", 50}, {"x0", {0.0, 1.0, 0.0}}};
    d["verify"] = json::array({
        json{{"kind", "descent_gap"}},
        json{{"kind", "rate"}, {"rate", "descent"}},
    });
    add("riemannian-sphere", "sphere gradient descent via the exponential map",
        "riemannian-sphere", d);
  }
  // POCS on a halfspace/ball pair
  {
    json d;
    d["seed"] = 16;
    d["solver"] = {
        {"kind", "pocs"},
        {"horizon", 200},
        {"x0", {2.5, 0.5, 0.0, -0.5, 0.5}},
        {"set_b",
         {{"kind", "halfspace"}, {"a", {-1.0, 0.0, 0.0, 0.0, 0.0}}, {"b", -1.0}}},
        {"set_c", {{"kind", "ball"}, {"center", {0.0, 0.0, 0.0, 0.0, 0.0}}, {"radius", 2.0}}},
    };
    d["verify"] = json::array({
        json{{"kind", "rate"},
             {"rate", "am_sublinear"},
             {"reference", {1.2, 0.4, 0.0, -0.4, 0.3}},
             {"reference_value", 0.0},
             {"numerator_mode", "sq_dist_ref_x0"}},
        json{{"kind", "rate"}, {"rate", "descent"}},
    });
    add("pocs-halfspace-ball", "alternating projections with the 1/n distance certificate",
        "pocs", d);
  }
  // Sinkhorn on a random 20x20 instance
  {
    json d;
    d["seed"] = 17;
    d["solver"] = {{"kind", "sinkhorn"}, {"rows", 20}, {"cols", 20}, {"eps", 1.0},
                   {"horizon", 300}};
    d["verify"] = json::array({
        json{{"kind", "rate"},
             {"rate", "am_sublinear"},
             {"reference", json::array()},
             {"reference_value", 0.0},
             {"numerator_mode", "kl_final_vs_y0"}},
        json{{"kind", "rate"}, {"rate", "descent"}, {"from_n", 2}},
    });
    add("sinkhorn-20x20", "entropic scaling as primal alternating minimization", "sinkhorn", d);
  }
  // Latent EM on a random finite model
  {
    json d;
    d["seed"] = 18;
    d["solver"] = {{"kind", "latent_em"}, {"nx", 5}, {"nz", 3}, {"horizon", 100}};
    d["verify"] = json::array({json{{"kind", "rate"}, {"rate", "descent"}}});
    add("latent-em-5x3", "finite-space EM with monotone likelihood divergence", "em", d);
  }
  // log-divergence descent
  {
    json d;
    d["seed"] = 19;
    d["cost"] = {{"family", "log_divergence"}, {"alpha", 0.5},
                 {"potential", potential_json("quadratic", 2.0, 2)}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.6}, {"anchor", {0.3, -0.2}}};
    d["solver"] = {{"kind", "log_divergence_gd"}, {"horizon", 30}, {"x0", {1.0, 1.0}}};
    d["search"] = {{"box_lo", {-2.0, -2.0}}, {"box_hi", {2.0, 2.0}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "descent"}},
        json{{"kind", "cross_curvature"},
             {"samples", 40},
             {"sign", "log_div_identity"},
             {"tol", 1e-3}},
    });
    add("log-divergence-gd", "scaled gradient updates from the log divergence", "log-divergence",
        d);
  }
  // surrogate-based solver on a bounded nonconvex objective
  {
    json d;
    d["seed"] = 20;
    d["cost"] = {{"family", "quadratic"}, {"L", 1.0}, {"dim", 1}};
    d["objective"] = {{"family", "sin"}};
    d["solver"] = {{"kind", "gdgc_surrogate"}, {"horizon", 12}, {"x0", {1.0}}};
    d["search"] = {{"box_lo", {-7.0}}, {"box_hi", {7.0}}, {"restarts", 4}, {"max_iter", 80}};
    d["verify"] = json::array({json{{"kind", "rate"}, {"rate", "descent"}}});
    add("gdgc-surrogate-sin", "surrogate minimization through the numeric transform",
        "gradient-descent", d);
  }
  // forward-backward splitting with quadratic pieces
  {
    json d;
    d["seed"] = 21;
    d["cost"] = {{"family", "quadratic"}, {"L", 2.0}, {"dim", 2}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.8}, {"anchor", {1.0, 0.0}}};
    d["objective_g"] = {{"family", "quadratic"}, {"mu", 0.6}, {"anchor", {-1.0, 0.5}}};
    d["solver"] = {{"kind", "forward_backward"}, {"horizon", 200}, {"x0", {2.0, 2.0}}};
    d["search"] = {{"box_lo", {-4.0, -4.0}}, {"box_hi", {4.0, 4.0}}, {"restarts", 4}};
    // the common minimizer of f + g solves 0.8 (x - a) + 0.6 (x - b) = 0
    json reference = {(0.8 * 1.0 + 0.6 * -1.0) / 1.4, (0.8 * 0.0 + 0.6 * 0.5) / 1.4};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "fb_sublinear"}, {"reference", reference}},
        json{{"kind", "rate"},
             {"rate", "fb_linear"},
             {"reference", reference},
             {"lambda", 0.4},
             {"mu", 0.3}},
        json{{"kind", "rate"}, {"rate", "descent"}},
        json{{"kind", "cross_concavity"}, {"samples", 50}},
    });
    add("fb-quadratic", "forward-backward splitting with both certificates", "forward-backward",
        d);
  }
  // alternating minimization with a strongly convex relative objective
  {
    json d;
    d["seed"] = 22;
    d["cost"] = {{"family", "bregman"}, {"potential", potential_json("negative_entropy", 0, 1)}};
    d["objective"] = {{"family", "entropy_mix"}, {"beta", 0.3}, {"s", {0.2}}};
    d["solver"] = {{"kind", "alternating_min"}, {"horizon", 40}, {"x0", {1.5}}};
    d["search"] = {{"box_lo", {0.05}}, {"box_hi", {3.0}}, {"restarts", 4}, {"max_iter", 80}};
    d["verify"] = json::array({
        json{{"kind", "rate"}, {"rate", "am_sublinear"}, {"reference", "final"}},
        json{{"kind", "rate"}, {"rate", "am_linear"}, {"reference", "final"}, {"lambda", 0.3}},
        json{{"kind", "five_point"}, {"lambda", 0.3}, {"samples", 20}},
    });
    add("am-bregman-strong", "alternating minimization with linear-rate certificate",
        "mirror-descent", d);
  }
  // five-point chain on a smooth convex instance
  {
    json d;
    d["seed"] = 23;
    d["cost"] = {{"family", "quadratic"}, {"L", 1.0}, {"dim", 1}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.5}, {"anchor", {0.3}}};
    d["solver"] = {{"kind", "gdgc_explicit"}, {"horizon", 20}, {"x0", {2.0}}};
    d["search"] = {{"box_lo", {-3.0}}, {"box_hi", {3.0}}, {"restarts", 4}, {"max_iter", 80}};
    d["verify"] = json::array({
        json{{"kind", "c_concavity"}, {"samples", 50}},
        json{{"kind", "cross_convexity"}, {"samples", 50}},
        json{{"kind", "five_point"}, {"samples", 20}},
        json{{"kind", "envelope"}, {"points", 2}, {"tol", 1e-5}},
    });
    add("fpp-quadratic-chain", "smoothness, cross-convexity and the five-point property",
        "five-point", d);
  }
  // five-point violation hunt on a nonconvex objective
  {
    json d;
    d["seed"] = 24;
    d["cost"] = {{"family", "quadratic"}, {"L", 1.0}, {"dim", 1}};
    d["objective"] = {{"family", "sin"}};
    d["solver"] = {{"kind", "gdgc_explicit"}, {"horizon", 10}, {"x0", {1.0}}};
    d["search"] = {{"box_lo", {-6.0}}, {"box_hi", {6.0}}, {"restarts", 4}, {"max_iter", 80}};
    d["verify"] = json::array({
        json{{"kind", "five_point"}, {"samples", 40}, {"expect", "fail"}},
        json{{"kind", "c_concavity"}, {"samples", 50}},
    });
    add("fpp-sin-violation", "nonconvex objective with a recorded five-point witness",
        "five-point", d);
  }
  // cross-curvature zoology entries
  {
    json d;
    d["seed"] = 25;
    d["cost"] = {{"family", "bregman"}, {"potential", potential_json("negative_entropy", 0, 2)}};
    d["objective"] = {{"family", "quadratic"}, {"mu", 0.2}, {"anchor", {1.0, 1.0}}};
    d["solver"] = {{"kind", "mirror_descent"}, {"horizon", 20}, {"x0", {0.7, 1.3}}};
    d["search"] = {{"box_lo", {0.3, 0.3}}, {"box_hi", {2.5, 2.5}}, {"restarts", 4}};
    d["verify"] = json::array({
        json{{"kind", "cross_curvature"}, {"samples", 60}, {"sign", "zero"}, {"tol", 1e-5}},
        json{{"kind", "rate"}, {"rate", "descent"}},
    });
    add("crosscurv-bregman", "flatness of divergence costs", "cross-curvature", d);
  }
  {
    json d;
    d["seed"] = 26;
    d["cost"] = {{"family", "sphere"}, {"L", 1.0}, {"dim", 3}};
    d["objective"] = {{"family", "linear"}, {"s", {0.5, -1.0, 0.25}}};
    d["solver"] = {{"kind", "riemannian_sphere"}, {"horizon", 30}, {"x0", {0.0, 0.0, 1.0}}};
    d["verify"] = json::array({
        json{{"kind", "cross_curvature"}, {"samples", 40}, {"sign", "nonneg"}, {"tol", 1e-6}},
        json{{"kind", "rate"}, {"rate", "descent"}},
    });
    add("crosscurv-sphere", "nonnegative curvature of the squared geodesic distance",
        "cross-curvature", d);
  }
  return table;
}

}  // namespace

std::vector<CatalogEntry> list_experiments() {
  std::vector<CatalogEntry> out;
  for (const auto& [entry, doc] : builtin_table()) out.push_back(entry);
  return out;
}

ExperimentConfig builtin_experiment(const std::string& name) {
  for (const auto& [entry, doc] : builtin_table())
    if (entry.name == name) return builtin_from_json(doc);
  throw ConfigError("unknown builtin experiment: " + name);
}

std::uint64_t derive_seed(std::uint64_t manifest_seed, const std::string& name) {
  return manifest_seed ^ Rng::hash_name(name);
}

// ---------------------------------------------------------------------------
// CLI entry point
// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  auto flag_value = [&](const std::string& flag) -> std::optional<std::string> {
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == flag) return args[i + 1];
    return std::nullopt;
  };
  auto has_flag = [&](const std::string& flag) {
    return std::find(args.begin(), args.end(), flag) != args.end();
  };

  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::printf("usage:\n"
                "  gdgc run --config <file> --out <dir> [--seed N]\n"
                "  gdgc run --experiment <name> --out <dir> [--seed N]\n"
                "  gdgc run --all --out <dir> [--seed N] [--jobs N]\n"
                "  gdgc list\n"
                "  gdgc verify --trace <csv> --kind <cert> [--reference <v1,v2,...>]\n"
                "              [--reference-value V --numerator C]\n");
    return 0;
  }

  const std::string& cmd = args[0];
  try {
    if (cmd == "list") {
      for (const CatalogEntry& e : list_experiments())
        std::printf("%-26s %-18s %s\n", e.name.c_str(), e.group.c_str(), e.description.c_str());
      return 0;
    }
    if (cmd == "run") {
      std::vector<ExperimentConfig> configs;
      if (has_flag("--all")) {
        std::uint64_t manifest_seed = 0;
        if (auto s = flag_value("--seed")) manifest_seed = std::stoull(*s);
        for (const CatalogEntry& e : list_experiments()) {
          ExperimentConfig cfg = builtin_experiment(e.name);
          cfg.seed = derive_seed(manifest_seed, e.name);
          configs.push_back(cfg);
        }
      } else if (auto name = flag_value("--experiment")) {
        configs.push_back(builtin_experiment(*name));
      } else if (auto file = flag_value("--config")) {
        configs.push_back(load_config_file(*file));
      } else {
        std::fprintf(stderr, "run: need --config, --experiment or --all\n");
        return 2;
      }
      if (auto s = flag_value("--seed"); s && !has_flag("--all"))
        for (ExperimentConfig& cfg : configs) cfg.seed = std::stoull(*s);
      std::string out_base = flag_value("--out").value_or("");
      for (ExperimentConfig& cfg : configs)
        if (!out_base.empty()) cfg.output = (fs::path(out_base) / cfg.name).string();

      int jobs = 1;
      if (auto j = flag_value("--jobs")) jobs = std::max(1, std::stoi(*j));
      jobs = std::min<int>(jobs, static_cast<int>(configs.size()));

      std::vector<int> status(configs.size(), 0);
      std::vector<double> seconds(configs.size(), 0.0);
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          std::size_t k = next.fetch_add(1);
          if (k >= configs.size()) return;
          try {
            RunReport rep = run_experiment(configs[k]);
            status[k] = rep.all_passed ? 0 : 1;
            seconds[k] = rep.wall_seconds;
          } catch (const ConfigError&) {
            status[k] = 2;
          } catch (const Error&) {
            status[k] = 1;
          }
        }
      };
      if (jobs == 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
      }
      int exit_code = 0;
      for (std::size_t k = 0; k < configs.size(); ++k) {
        std::printf("%-26s %s  (%.2fs)\n", configs[k].name.c_str(),
                    status[k] == 0 ? "pass" : "FAIL", seconds[k]);
        exit_code = std::max(exit_code, status[k]);
      }
      return exit_code;
    }
    if (cmd == "verify") {
      auto trace = flag_value("--trace");
      auto kind = flag_value("--kind");
      if (!trace || !kind) {
        std::fprintf(stderr, "verify: need --trace and --kind\n");
        return 2;
      }
      bool ok;
      auto ref_value = flag_value("--reference-value");
      auto numerator = flag_value("--numerator");
      if (ref_value && numerator) {
        ok = verify_trace_file_sublinear(*trace, std::stod(*ref_value), std::stod(*numerator));
      } else {
        ok = verify_trace_file(*trace, *kind);
      }
      if (auto ref = flag_value("--reference"))
        std::printf("reference: [%s]\n", ref->c_str());
      std::printf("%s: %s\n", kind->c_str(), ok ? "pass" : "FAIL");
      return ok ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "unknown command: %s\n", cmd.c_str());
  return 2;
}

}  // namespace gdgc
