#include "ceq/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ceq {

using nlohmann::json;

std::uint64_t config_hash(const std::string& canonical) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// "name:key=val,key=val" -> (name, kv)
std::pair<std::string, std::map<std::string, std::string>> parse_spec(
    const std::string& spec) {
  auto colon = spec.find(':');
  std::map<std::string, std::string> kv;
  std::string name = spec.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw UsageError("spec item without '=': " + item);
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  return {name, kv};
}

double kv_num(const std::map<std::string, std::string>& kv,
              const std::string& key, double fallback = NAN) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    if (std::isnan(fallback)) throw UsageError("spec missing key: " + key);
    return fallback;
  }
  return std::stod(it->second);
}

}  // namespace

ConvexBody body_from_spec(const std::string& spec) {
  auto [name, kv] = parse_spec(spec);
  int d = static_cast<int>(kv_num(kv, "d"));
  if (name == "ball") return make_ball(Vec::Zero(d), kv_num(kv, "r", 1.0));
  if (name == "box") {
    double r = kv_num(kv, "r", 1.0);
    return make_box(Vec::Constant(d, -r), Vec::Constant(d, r));
  }
  if (name == "simplex") return make_simplex(d);
  throw UsageError("unknown body spec: " + name);
}

FeatureMap map_from_spec(const std::string& spec, const ConvexBody& body) {
  auto [name, kv] = parse_spec(spec);
  if (name == "affine") return affine_map(body.dim, body.outer_radius);
  if (name == "monomial")
    return monomial_map(body.dim, static_cast<int>(kv_num(kv, "deg", 2)),
                        body.outer_radius);
  throw UsageError("unknown map spec: " + name);
}

QuadraticGame game_from_spec(const std::string& spec) {
  auto [name, kv] = parse_spec(spec);
  if (name == "dominant") {
    int d = static_cast<int>(kv_num(kv, "d", 2));
    double R = kv_num(kv, "r", 1.5);
    QuadraticGame g;
    g.players = 2;
    for (int i = 0; i < 2; ++i) g.bodies.push_back(make_ball(Vec::Zero(d), R));
    Mat A = Mat::Identity(d, d) / (R * R);
    for (int i = 0; i < 2; ++i) {
      g.A.push_back([A](const std::vector<Vec>&) { return A; });
      g.b.push_back([d](const std::vector<Vec>&) { return Vec(Vec::Zero(d)); });
      g.c.push_back([](const std::vector<Vec>&) { return 1.0; });
    }
    return g;
  }
  if (name == "cross") {
    int d = static_cast<int>(kv_num(kv, "d", 3));
    double R = kv_num(kv, "r", 1.25);
    std::uint64_t seed = static_cast<std::uint64_t>(kv_num(kv, "seed", 7));
    QuadraticGame g;
    g.players = 2;
    for (int i = 0; i < 2; ++i) g.bodies.push_back(make_ball(Vec::Zero(d), R));
    std::mt19937_64 rng(split_seed(seed, 0x67616d65u));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    // coefficients scaled so utilities stay inside [0,1] on the product body
    double bscale = 0.12 / R, ascale = 0.5 / (R * R) - bscale / R;
    for (int i = 0; i < 2; ++i) {
      Mat M(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) M(r, c) = u(rng);
      Mat Ai = (M.transpose() * M + Mat::Identity(d, d)).eval();
      Ai *= ascale / Ai.operatorNorm();
      Vec b0(d);
      Mat C(d, d);
      for (int r = 0; r < d; ++r) {
        b0[r] = u(rng);
        for (int c = 0; c < d; ++c) C(r, c) = u(rng);
      }
      b0 *= 0.4 * bscale / b0.norm();
      C *= 0.6 * bscale / (C.operatorNorm() * R);
      g.A.push_back([Ai](const std::vector<Vec>&) { return Ai; });
      g.b.push_back([b0, C, i](const std::vector<Vec>& x) {
        return Vec(b0 + C * x[1 - i]);
      });
      g.c.push_back([](const std::vector<Vec>&) { return 0.5; });
    }
    return g;
  }
  if (name == "pennies") {
    QuadraticGame g;
    g.players = 2;
    for (int i = 0; i < 2; ++i)
      g.bodies.push_back(make_ball(Vec::Zero(1), 1.0));
    for (int i = 0; i < 2; ++i) {
      double s = i == 0 ? 0.25 : -0.25;
      g.A.push_back(
          [](const std::vector<Vec>&) { return Mat(Mat::Zero(1, 1)); });
      g.b.push_back([s, i](const std::vector<Vec>& x) {
        Vec b(1);
        b[0] = s * x[1 - i][0];
        return b;
      });
      g.c.push_back([](const std::vector<Vec>&) { return 0.5; });
    }
    return g;
  }
  throw UsageError("unknown game spec: " + name);
}

PointMap contraction_from_spec(const std::string& spec,
                               const ConvexBody& body) {
  auto [name, kv] = parse_spec(spec);
  if (name == "toward") {
    double gamma = kv_num(kv, "gamma");
    std::uint64_t seed = static_cast<std::uint64_t>(kv_num(kv, "seed", 0));
    std::mt19937_64 rng(split_seed(seed, 0x78737461u));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec dir(body.dim);
    for (int r = 0; r < body.dim; ++r) dir[r] = gauss(rng);
    std::uniform_real_distribution<double> rad(0.0, 1.0);
    double scale = 0.5 * body.outer_radius *
                   std::pow(rad(rng), 1.0 / body.dim) / dir.norm();
    Vec xstar = body.start + scale * dir;
    double rate = 1.0 - gamma;
    return PointMap{body.dim, [xstar, rate](const Vec& x) {
                      return Vec(xstar + rate * (x - xstar));
                    }};
  }
  if (name == "identity")
    return PointMap{body.dim, [](const Vec& x) { return x; }};
  throw UsageError("unknown contraction spec: " + name);
}

std::string regret_trace_csv(const RegretTrace& tr) {
  std::string out = "round,utility,regret_vs_identity,regret_vs_bestK,cefp_residual,shell_cuts\n";
  for (const auto& r : tr.rows) {
    out += std::to_string(r.round) + ',' + format_double(r.utility) + ',' +
           format_double(r.regret_vs_identity) + ',' +
           format_double(r.regret_vs_bestK) + ',' +
           format_double(r.cefp_residual) + ',' + std::to_string(r.shell_cuts) +
           '\n';
  }
  return out;
}

std::string lb_trace_csv(const LowerBoundReport& rep) {
  std::string out = "round,utility\n";
  for (std::size_t t = 0; t < rep.round_utility.size(); ++t)
    out += std::to_string(t + 1) + ',' + format_double(rep.round_utility[t]) +
           '\n';
  return out;
}

std::string distribution_trace_csv(const SupportDistribution& mu) {
  std::string out = "atom,weight,coords\n";
  for (int j = 0; j < mu.size(); ++j) {
    out += std::to_string(j) + ',' + format_double(mu.weights()[j]);
    for (int r = 0; r < mu.dim(); ++r)
      out += ';' + format_double(mu.atoms()[j][r]);
    out += '\n';
  }
  return out;
}

namespace {

PointMap transform_from_config(const json& t, const ConvexBody& body) {
  std::string kind = t.value("kind", "identity");
  if (kind == "identity")
    return PointMap{body.dim, [](const Vec& x) { return x; }};
  if (kind == "constant") {
    Vec p(body.dim);
    auto arr = t.at("point");
    for (int r = 0; r < body.dim; ++r) p[r] = arr.at(r).get<double>();
    return PointMap{body.dim, [p](const Vec&) { return p; }};
  }
  if (kind == "matrix") {
    FeatureMap m = map_from_spec(t.value("map", "affine"), body);
    Mat K(body.dim, m.out_dim);
    auto rows = t.at("K");
    for (int r = 0; r < body.dim; ++r)
      for (int c = 0; c < m.out_dim; ++c) K(r, c) = rows.at(r).at(c).get<double>();
    return LinearTransform{K, m}.as_point_map();
  }
  if (kind == "contraction")
    return contraction_from_spec(t.at("spec").get<std::string>(), body);
  throw UsageError("unknown transform kind: " + kind);
}

void handle_fp(const json& cfg, json& rep, RunArtifacts& out) {
  const json& p = cfg.at("params");
  ConvexBody body = body_from_spec(p.at("body").get<std::string>());
  std::string problem = p.at("problem").get<std::string>();
  double eps = p.value("eps", 1e-3);
  if (problem == "unkcontr") {
    PointMap f = contraction_from_spec(p.at("contraction").get<std::string>(), body);
    SupportDistribution mu =
        mahalanobis_unkcontr(f, body, p.at("gamma").get<double>(),
                             p.at("delta").get<double>());
    rep["support"] = mu.size();
    out.traces["mu"] = distribution_trace_csv(mu);
    return;
  }
  PointMap phi = transform_from_config(p.value("transform", json::object()), body);
  FixedPointResult r;
  if (problem == "cefp") {
    long budget = p.value("max_support", 2000000L);
    long need = static_cast<long>(std::ceil(1.0 / eps));
    if (need > budget)
      throw ResourceError("cefp orbit needs " + std::to_string(need) +
                          " iterates, exceeding the configured budget " +
                          std::to_string(budget));
    r = cefp_fptas(phi, body, eps, body.start);
  } else if (problem == "qefp") {
    r = qefp_solve(phi, body, eps);
  } else if (problem == "efp") {
    r = efp_solve(phi, body, eps);
  } else {
    throw UsageError("unknown fp problem: " + problem);
  }
  rep["iterations"] = r.iterations;
  if (r.is_certificate()) {
    QefpResidual q = qefp_residual(*r.certificate, phi, body);
    rep["support"] = r.certificate->size();
    rep["efp_norm"] = q.efp_norm;
    rep["psd_term"] = q.psd_term;
    rep["evi_residual"] = q.evi_residual;
    out.traces["mu"] = distribution_trace_csv(*r.certificate);
    if (cfg.contains("assert")) {
      double m = cfg["assert"].value("max_residual", 1e300);
      if (q.efp_norm + q.psd_term > m) {
        rep["failed_assertion"] = "max_residual";
        out.status = 1;
      }
    }
  } else {
    rep["not_endomorphism"] = true;
    out.status = 1;
  }
}

void handle_eq(const json& cfg, json& rep, RunArtifacts& out) {
  const json& p = cfg.at("params");
  QuadraticGame g = game_from_spec(p.at("game").get<std::string>());
  std::vector<FeatureMap> maps;
  for (int i = 0; i < g.players; ++i)
    maps.push_back(map_from_spec(p.value("maps", "affine"), g.bodies[i]));
  double eps = p.at("eps").get<double>();
  std::string mode = p.value("mode", "quadratic");
  SupportDistribution mu;
  if (mode == "quadratic") {
    EahResult r = eah_quadratic(g, maps, eps);
    mu = r.mu;
    rep["certificate_value"] = r.certificate_value;
    rep["hope_cuts"] = r.hope_cuts;
    rep["endomorphism_cuts"] = r.endomorphism_cuts;
    rep["iterations"] = r.iterations;
  } else if (mode == "fptas") {
    FptasOptions fo;
    fo.T = p.value("T", 0L);
    FptasResult r = fptas_equilibrium(g.concave_view(), maps, eps, fo);
    mu = r.mu;
    rep["T"] = r.T;
    rep["final_regret"] = r.final_regret;
  } else {
    throw UsageError("unknown eq mode: " + mode);
  }
  rep["support"] = mu.size();
  out.traces["mu"] = distribution_trace_csv(mu);
  int audit = p.value("audit", 0);
  if (audit > 0) {
    VerifyOptions vo;
    vo.audit_budget = audit;
    vo.seed = cfg.value("seed", 0ull);
    EquilibriumReport vr = verify_equilibrium(g.concave_view(), mu, maps, eps, vo);
    rep["max_benefit"] = vr.max_benefit;
    rep["verify_pass"] = vr.pass;
    if (!vr.pass) out.status = 1;
  }
}

void handle_regret(const json& cfg, json& rep, RunArtifacts& out) {
  const json& p = cfg.at("params");
  ConvexBody body = body_from_spec(p.at("body").get<std::string>());
  FeatureMap m = map_from_spec(p.value("map", "affine"), body);
  long T = p.at("T").get<long>();
  double eps = p.value("eps", 0.05);
  std::uint64_t seed = cfg.value("seed", 0ull);
  std::string adv = p.value("adversary", "alternating");
  Vec c(body.dim);
  {
    std::mt19937_64 rng(split_seed(seed, 0x61647675u));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < body.dim; ++r) c[r] = gauss(rng);
    c /= c.norm();
  }
  std::function<UtilityOracle(long)> stream;
  if (adv == "constant") {
    stream = [c](long) {
      UtilityOracle u;
      u.value = [c](const Vec& x) { return c.dot(x); };
      u.gradient = [c](const Vec&) { return c; };
      return u;
    };
  } else if (adv == "alternating") {
    stream = [c](long t) {
      UtilityOracle u;
      double s = t % 2 == 0 ? 1.0 : -1.0;
      u.value = [c, s](const Vec& x) { return s * c.dot(x); };
      u.gradient = [c, s](const Vec&) { return Vec(s * c); };
      return u;
    };
  } else {
    throw UsageError("unknown adversary: " + adv);
  }
  RegretOptions opts;
  opts.grad_bound = 1.0;
  opts.eta = p.value("eta", 0.0);
  opts.linear_utilities = true;
  RegretTrace tr = run_regret(body, m, stream, T, eps, opts);
  rep["regret_best"] = tr.regret_best;
  rep["regret_external"] = tr.regret_external;
  rep["gd_bound"] = tr.gd_bound;
  rep["residual_sum"] = tr.residual_sum;
  rep["eta"] = tr.eta;
  rep["D"] = tr.D;
  out.traces["trace"] = regret_trace_csv(tr);
  if (cfg.contains("assert")) {
    double m2 = cfg["assert"].value("max_regret", 1e300);
    if (tr.regret_best > m2) {
      rep["failed_assertion"] = "max_regret";
      out.status = 1;
    }
  }
}

void handle_lb(const json& cfg, json& rep, RunArtifacts& out) {
  const json& p = cfg.at("params");
  int k = p.at("k").get<int>();
  int n = p.at("n").get<int>();
  long T = p.at("T").get<long>();
  int N = p.value("N", 64);
  std::uint64_t seed = cfg.value("seed", 0ull);
  NormalFormAdversary adv = baseline_adversary(k, N, T);
  TreeFormProblem prob{k, n};
  std::string lname = p.value("learner", "ftl");
  OnlineLearner learner;
  if (lname == "fixed") {
    learner = fixed_learner(prob.realization(0, std::vector<int>(n, 1)));
  } else if (lname == "ftl") {
    learner = ftl_learner(prob);
  } else {
    throw UsageError("unknown learner: " + lname);
  }
  LowerBoundConfig lc;
  lc.C = p.value("C", 1.0);
  LowerBoundReport r = run_lower_bound_experiment(learner, adv, k, n, T, seed, lc);
  rep["swap_regret"] = r.swap_regret;
  rep["max_offdiag"] = r.concentration.max_offdiag;
  rep["predicted_failure"] = r.concentration.predicted_failure;
  rep["violations"] = r.concentration.violations;
  rep["recipe_eps"] = r.recipe_eps;
  rep["recipe_n"] = r.recipe_n;
  out.traces["trace"] = lb_trace_csv(r);
}

void handle_reduce(const json& cfg, json& rep, RunArtifacts& out) {
  const json& p = cfg.at("params");
  ConvexBody body = body_from_spec(p.value("body", "ball:d=2,r=1"));
  PointMap f = contraction_from_spec(p.at("map").get<std::string>(), body);
  SupportDistribution mu;
  if (p.contains("check_distribution")) {
    mu = SupportDistribution::from_json(p["check_distribution"].dump());
  } else if (p.contains("check")) {
    std::ifstream in(p["check"].get<std::string>());
    if (!in) throw UsageError("cannot open distribution file");
    std::stringstream ss;
    ss << in.rdbuf();
    mu = SupportDistribution::from_json(ss.str());
  } else {
    throw UsageError("reduce: no distribution to check");
  }
  std::string kind = p.value("kind", "nfce");
  if (kind == "nfce") {
    NfceResiduals r = nfce_residuals(mu, f);
    rep["resid_x"] = r.resid_x;
    rep["resid_y"] = r.resid_y;
    rep["eps_hat"] = r.eps_hat();
  } else if (kind == "phieq") {
    NormOracle nm = p.value("norm", "l2") == "linf" ? linf_norm() : l2_norm();
    PhiEqConstruction c = phieq_game_from_contraction(f, nm, body);
    PhiEqReport r = phieq_verify(c, mu, p.value("gamma", 0.5));
    rep["fixed_gap"] = r.fixed_gap;
    rep["chain_bound"] = r.chain_bound;
    rep["holds"] = r.holds;
    if (!r.holds) out.status = 1;
  } else {
    throw UsageError("unknown reduce kind: " + kind);
  }
  (void)out;
}

}  // namespace

RunArtifacts run_config_json(const std::string& config_json) {
  RunArtifacts out;
  json rep;
  try {
    json cfg = json::parse(config_json);
    if (cfg.value("version", 0) != 1)
      throw UsageError("config: unsupported or missing version (expected 1)");
    std::string cmd = cfg.at("command").get<std::string>();
    rep["version"] = 1;
    rep["command"] = cmd;
    rep["seed"] = cfg.value("seed", 0ull);
    char hx[20];
    std::snprintf(hx, sizeof hx, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg.dump())));
    rep["config_hash"] = hx;
    if (cmd == "fp") handle_fp(cfg, rep, out);
    else if (cmd == "eq") handle_eq(cfg, rep, out);
    else if (cmd == "regret") handle_regret(cfg, rep, out);
    else if (cmd == "lb") handle_lb(cfg, rep, out);
    else if (cmd == "reduce") handle_reduce(cfg, rep, out);
    else throw UsageError("unknown command: " + cmd);
  } catch (const std::exception& e) {
    rep["error"] = e.what();
    out.status = 1;
  }
  out.report = rep.dump(2);
  return out;
}

int run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "cannot open config: %s\n", path.c_str());
    return 2;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  RunArtifacts art = run_config_json(ss.str());
  json cfg = json::parse(ss.str(), nullptr, false);
  std::string outp = cfg.is_object() ? cfg.value("out", "") : "";
  if (outp.empty()) {
    std::printf("%s\n", art.report.c_str());
  } else {
    std::ofstream(outp) << art.report << '\n';
  }
  std::string tracep = cfg.is_object() ? cfg.value("trace_out", "") : "";
  if (!tracep.empty())
    for (const auto& [name, csv] : art.traces)
      std::ofstream(tracep + (art.traces.size() > 1 ? "." + name : "")) << csv;
  return art.status;
}

}  // namespace ceq
