#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ceq/harness.hpp"

using nlohmann::json;

namespace {

int dispatch(json cfg, const std::string& out, const std::string& trace_out) {
  cfg["version"] = 1;
  if (!out.empty()) cfg["out"] = out;
  if (!trace_out.empty()) cfg["trace_out"] = trace_out;
  ceq::RunArtifacts art = ceq::run_config_json(cfg.dump());
  if (out.empty()) {
    std::printf("%s\n", art.report.c_str());
  } else {
    std::ofstream(out) << art.report << '\n';
  }
  if (!trace_out.empty())
    for (const auto& [name, csv] : art.traces)
      std::ofstream(trace_out + (art.traces.size() > 1 ? "." + name : ""))
          << csv;
  return art.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlated-equilibrium and fixed-point toolkit"};
  app.require_subcommand(1);

  std::string out, trace_out, config_path;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run a JSON config file");
  run->add_option("config", config_path, "config path")->required();

  // fp {efp,qefp,cefp,unkcontr}
  auto* fp = app.add_subcommand("fp", "expected fixed point solvers");
  std::string fp_problem, fp_body = "ball:d=2,r=1", fp_contraction;
  double fp_eps = 1e-3, fp_gamma = 0.25, fp_delta = 1e-3;
  fp->add_option("problem", fp_problem, "efp|qefp|cefp|unkcontr")->required();
  fp->add_option("--body", fp_body);
  fp->add_option("--eps", fp_eps);
  fp->add_option("--contraction", fp_contraction, "e.g. toward:gamma=0.25,seed=1");
  fp->add_option("--gamma", fp_gamma);
  fp->add_option("--delta", fp_delta);

  auto* eq = app.add_subcommand("eq", "equilibrium computation");
  auto* eq_solve = eq->add_subcommand("solve");
  std::string eq_game = "cross:d=3,r=1.25,seed=7", eq_maps = "affine",
              eq_mode = "quadratic";
  double eq_eps = 1e-2;
  int eq_audit = 0;
  eq_solve->add_option("--game", eq_game);
  eq_solve->add_option("--maps", eq_maps);
  eq_solve->add_option("--eps", eq_eps);
  eq_solve->add_option("--mode", eq_mode, "quadratic|fptas");
  eq_solve->add_option("--audit", eq_audit, "verification sample budget");

  auto* rg = app.add_subcommand("regret", "online Phi-regret minimization");
  auto* rg_run = rg->add_subcommand("run");
  std::string rg_body = "ball:d=2,r=1", rg_map = "affine",
              rg_adversary = "alternating";
  long rg_T = 200;
  double rg_eta = 0.0, rg_eps = 0.05;
  rg_run->add_option("--body", rg_body);
  rg_run->add_option("--map", rg_map);
  rg_run->add_option("--adversary", rg_adversary, "constant|alternating");
  rg_run->add_option("--T", rg_T);
  rg_run->add_option("--eta", rg_eta);
  rg_run->add_option("--eps", rg_eps);

  auto* lb = app.add_subcommand("lb", "swap-regret lower-bound harness");
  auto* lb_run = lb->add_subcommand("run");
  int lb_k = 4, lb_n = 512, lb_N = 64;
  long lb_T = 200;
  std::string lb_learner = "ftl", lb_adversary = "baseline";
  lb_run->add_option("--k", lb_k);
  lb_run->add_option("--n", lb_n);
  lb_run->add_option("--N", lb_N);
  lb_run->add_option("--T", lb_T);
  lb_run->add_option("--learner", lb_learner, "fixed|ftl");
  lb_run->add_option("--adversary", lb_adversary, "baseline");

  auto* rd = app.add_subcommand("reduce", "reduction constructions");
  std::string rd_kind = "nfce", rd_map, rd_check, rd_body = "ball:d=2,r=1",
              rd_norm = "l2";
  double rd_gamma = 0.5;
  rd->add_option("--kind", rd_kind, "nfce|phieq");
  rd->add_option("--map", rd_map, "contraction spec")->required();
  rd->add_option("--check", rd_check, "distribution JSON file")->required();
  rd->add_option("--body", rd_body);
  rd->add_option("--norm", rd_norm, "l2|linf");
  rd->add_option("--gamma", rd_gamma);

  for (auto* sc : {fp, eq_solve, rg_run, lb_run, rd}) {
    sc->add_option("--seed", seed);
    sc->add_option("--out", out, "report path (stdout if absent)");
    sc->add_option("--trace-out", trace_out, "CSV trace path");
  }

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return ceq::run_config(config_path);

  json cfg;
  cfg["seed"] = seed;
  if (fp->parsed()) {
    cfg["command"] = "fp";
    cfg["params"] = {{"problem", fp_problem}, {"body", fp_body}, {"eps", fp_eps}};
    if (!fp_contraction.empty()) {
      if (fp_problem == "unkcontr") {
        cfg["params"]["contraction"] = fp_contraction;
        cfg["params"]["gamma"] = fp_gamma;
        cfg["params"]["delta"] = fp_delta;
      } else {
        cfg["params"]["transform"] = {{"kind", "contraction"},
                                      {"spec", fp_contraction}};
      }
    }
  } else if (eq_solve->parsed()) {
    cfg["command"] = "eq";
    cfg["params"] = {{"game", eq_game},
                     {"maps", eq_maps},
                     {"eps", eq_eps},
                     {"mode", eq_mode},
                     {"audit", eq_audit}};
  } else if (rg_run->parsed()) {
    cfg["command"] = "regret";
    cfg["params"] = {{"body", rg_body},
                     {"map", rg_map},
                     {"adversary", rg_adversary},
                     {"T", rg_T},
                     {"eta", rg_eta},
                     {"eps", rg_eps}};
  } else if (lb_run->parsed()) {
    cfg["command"] = "lb";
    cfg["params"] = {{"k", lb_k},       {"n", lb_n},
                     {"N", lb_N},       {"T", lb_T},
                     {"learner", lb_learner}, {"adversary", lb_adversary}};
  } else if (rd->parsed()) {
    cfg["command"] = "reduce";
    cfg["params"] = {{"kind", rd_kind},   {"map", rd_map},
                     {"check", rd_check}, {"body", rd_body},
                     {"norm", rd_norm},   {"gamma", rd_gamma}};
  }
  return dispatch(std::move(cfg), out, trace_out);
}
