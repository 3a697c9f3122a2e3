// Command-line front end: Monte-Carlo scaling runs, model compression,
// model comparison, scalar-lemma verification, and a synthetic model
// generator for quick end-to-end runs.
//
// Exit codes: 0 success, 1 runtime or data error, 2 bad usage or config,
// 3 verification failure. Every nonzero exit writes a one-line JSON error
// object to stderr.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowrank/lowrank.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int emit_error(int code, const std::string& type, const std::string& message) {
  json err;
  err["error"]["type"] = type;
  err["error"]["message"] = message;
  std::cerr << err.dump() << "\n";
  return code;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config file " + path + ": " + e.what());
  }
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config key '") + key +
                                "': " + e.what());
  }
}

struct SimulateArgs {
  std::string config;
  std::string scenario;
  std::vector<int> sweep;
  int trials = 20;
  std::uint64_t seed = 0;
  std::string out;
  int r = 2, d = 16, d2 = 16;
  double sigma = 0.5, beta = 0.5, alpha = 1.0, epsilon = 0.0;
  double proj_tol = 1e-7;
  int proj_max_iter = 2000;
  double mle_tol = 1e-6;
  int mle_max_iter = 500;
};

int run_simulate(const CLI::App& sub, const SimulateArgs& a) {
  lowrank::ScenarioConfig cfg;
  if (!a.config.empty()) {
    const json j = load_json_file(a.config);
    std::string scen;
    take(j, "scenario", scen);
    if (!scen.empty()) {
      try {
        cfg.scenario = lowrank::scenario_from_string(scen);
      } catch (const lowrank::FormatError& e) {
        throw std::invalid_argument(e.what());
      }
    }
    take(j, "sweep", cfg.sweep);
    take(j, "trials", cfg.trials);
    take(j, "seed", cfg.base_seed);
    take(j, "out", cfg.out_path);
    take(j, "r", cfg.r);
    take(j, "d", cfg.d);
    take(j, "d2", cfg.d2);
    take(j, "sigma", cfg.sigma);
    take(j, "beta", cfg.beta);
    take(j, "alpha", cfg.alpha);
    take(j, "epsilon", cfg.epsilon);
    take(j, "proj_tol", cfg.proj_tol);
    take(j, "proj_max_iter", cfg.proj_max_iter);
    take(j, "mle_tol", cfg.mle_tol);
    take(j, "mle_max_iter", cfg.mle_max_iter);
  }
  // Explicit flags win over the config file.
  if (sub.count("--scenario")) {
    try {
      cfg.scenario = lowrank::scenario_from_string(a.scenario);
    } catch (const lowrank::FormatError& e) {
      throw std::invalid_argument(e.what());
    }
  }
  if (sub.count("--sweep")) cfg.sweep = a.sweep;
  if (sub.count("--trials")) cfg.trials = a.trials;
  if (sub.count("--seed")) cfg.base_seed = a.seed;
  if (sub.count("--out")) cfg.out_path = a.out;
  if (sub.count("--r")) cfg.r = a.r;
  if (sub.count("--d")) cfg.d = a.d;
  if (sub.count("--d2")) cfg.d2 = a.d2;
  if (sub.count("--sigma")) cfg.sigma = a.sigma;
  if (sub.count("--beta")) cfg.beta = a.beta;
  if (sub.count("--alpha")) cfg.alpha = a.alpha;
  if (sub.count("--epsilon")) cfg.epsilon = a.epsilon;
  if (sub.count("--proj-tol")) cfg.proj_tol = a.proj_tol;
  if (sub.count("--proj-max-iter")) cfg.proj_max_iter = a.proj_max_iter;
  if (sub.count("--mle-tol")) cfg.mle_tol = a.mle_tol;
  if (sub.count("--mle-max-iter")) cfg.mle_max_iter = a.mle_max_iter;

  const auto rep = lowrank::run_scenario(cfg);

  std::printf("scenario %s  dims %zu  trials/dim %d  seed %llu\n",
              lowrank::to_string(rep.scenario).c_str(), cfg.sweep.size(),
              cfg.trials, static_cast<unsigned long long>(cfg.base_seed));
  for (const auto& [dim, med] : rep.median_mse)
    std::printf("  dim %6d   median mse %.6g   mean mse %.6g\n", dim, med,
                rep.mean_mse.at(dim));
  if (rep.slope_fitted) {
    std::printf("log-log slope %.4f   bootstrap 95%% ci [%.4f, %.4f]\n",
                rep.fit.slope, rep.fit.ci_lo, rep.fit.ci_hi);
    if (rep.fit.excluded_trials || rep.fit.excluded_dimensions)
      std::printf("excluded: %d non-converged trials, %d degenerate dims\n",
                  rep.fit.excluded_trials, rep.fit.excluded_dimensions);
  }
  if (rep.censoring_band_checked) {
    std::printf(
        "censoring-cost band (engineering sanity check, not a theoretical guarantee): "
        "median censored <= 4x median uncensored at every dim: %s\n",
        rep.censoring_band_ok ? "yes" : "NO");
    for (const auto& [dim, med] : rep.reference_median)
      std::printf("  dim %6d   uncensored median mse %.6g\n", dim, med);
  }
  if (!cfg.out_path.empty()) std::printf("csv written to %s\n", cfg.out_path.c_str());
  return 0;
}

struct CompressArgs {
  std::string config;
  std::string model;
  std::string calib;
  std::vector<int> ranks;
  std::string method = "closed_form";
  std::string out;
  double alpha = 0.0;
  double sigma = 0.1;
  double proj_tol = 1e-7;
  int proj_max_iter = 2000;
  double solver_tol = 1e-6;
  int solver_max_iter = 400;
  bool use_original = false;
};

lowrank::CompressMethod method_from_string(const std::string& s) {
  if (s == "closed_form") return lowrank::CompressMethod::closed_form;
  if (s == "convex") return lowrank::CompressMethod::convex;
  if (s == "relu_mle") return lowrank::CompressMethod::relu_mle;
  throw std::invalid_argument("unknown method: " + s);
}

int run_compress(const CLI::App& sub, CompressArgs a) {
  if (!a.config.empty()) {
    const json j = load_json_file(a.config);
    auto keep = [&](const char* key, auto& dst) {
      if (!sub.count(std::string("--") + key)) take(j, key, dst);
    };
    keep("model", a.model);
    keep("calib", a.calib);
    keep("ranks", a.ranks);
    keep("method", a.method);
    keep("out", a.out);
    keep("alpha", a.alpha);
    keep("sigma", a.sigma);
    keep("proj_tol", a.proj_tol);
    keep("proj_max_iter", a.proj_max_iter);
    keep("solver_tol", a.solver_tol);
    keep("solver_max_iter", a.solver_max_iter);
    if (!sub.count("--use-original-activations"))
      take(j, "use_original_activations", a.use_original);
  }
  if (a.model.empty() || a.calib.empty() || a.out.empty() || a.ranks.empty())
    throw std::invalid_argument(
        "compress needs --model, --calib, --ranks and --out (flags or config)");

  const auto model = lowrank::load_model(a.model);
  const lowrank::Matrix calib = lowrank::read_lrm(a.calib);

  lowrank::CompressParams prm;
  if (sub.count("--alpha") || a.alpha != 0.0) prm.alpha = a.alpha;
  prm.sigma = a.sigma;
  prm.proj_tol = a.proj_tol;
  prm.proj_max_iter = a.proj_max_iter;
  prm.solver_tol = a.solver_tol;
  prm.solver_max_iter = a.solver_max_iter;
  prm.use_original_activations = a.use_original;

  const auto [compressed, rep] = lowrank::compress_model(
      model, calib, a.ranks, method_from_string(a.method), prm);

  fs::create_directories(a.out);
  const auto manifest = lowrank::save_model(a.out, compressed);

  json jrep;
  jrep["method"] = a.method;
  jrep["compression_ratio"] = rep.compression_ratio;
  jrep["output_mse"] = rep.output_mse;
  jrep["layers"] = json::array();
  for (const auto& l : rep.layers) {
    json jl;
    jl["rank"] = l.rank;
    jl["params_before"] = l.params_before;
    jl["params_after"] = l.params_after;
    jl["activation_mse"] = l.activation_mse;
    jl["truncation_residual"] = l.truncation_residual;
    jl["solver_converged"] = l.solver_converged;
    jrep["layers"].push_back(jl);
  }
  const fs::path rep_path = fs::path(a.out) / "report.json";
  std::ofstream os(rep_path);
  if (!os) throw lowrank::FormatError("cannot write " + rep_path.string());
  os << jrep.dump(2) << "\n";

  for (std::size_t i = 0; i < rep.layers.size(); ++i) {
    const auto& l = rep.layers[i];
    std::printf(
        "layer %zu: rank %d  params %zu -> %zu  activation mse %.6g  "
        "truncation residual %.6g  converged %s\n",
        i + 1, l.rank, l.params_before, l.params_after, l.activation_mse,
        l.truncation_residual, l.solver_converged ? "yes" : "no");
  }
  std::printf("compression ratio %.6g  output mse %.6g\n",
              rep.compression_ratio, rep.output_mse);
  std::printf("model written to %s\nreport written to %s\n",
              manifest.string().c_str(), rep_path.string().c_str());
  return 0;
}

int run_eval(const std::string& model_a, const std::string& model_b,
             const std::string& data) {
  const auto ma = lowrank::load_model(model_a);
  const auto mb = lowrank::load_model(model_b);
  const lowrank::Matrix x = lowrank::read_lrm(data);
  const auto rep = lowrank::evaluate(ma, mb, x);
  json j;
  j["output_mse"] = rep.output_mse;
  j["per_layer_mse"] = rep.per_layer_mse;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_verify(double alpha, double sigma, int grid) {
  const auto rep = lowrank::verify_scalar_lemmas(alpha, sigma, grid);
  const double tol = 1e-7;
  struct Line {
    const char* name;
    double value;
    bool ok;
  };
  const bool ratio_ok = rep.tightness_ratio_at_10sigma >= 1.0 - tol &&
                        rep.tightness_ratio_at_10sigma <= 1.1;
  const Line lines[] = {
      {"curvature upper margin", rep.curvature_upper_margin,
       rep.curvature_upper_margin >= -tol},
      {"curvature lower margin", rep.curvature_lower_margin,
       rep.curvature_lower_margin >= -tol},
      {"first-order taylor margin", rep.taylor_margin,
       rep.taylor_margin >= -tol},
      {"score-ratio sup margin", rep.lipschitz_margin,
       rep.lipschitz_margin >= -tol},
      {"inverse-information sup margin", rep.beta_margin,
       rep.beta_margin >= -tol},
      {"hellinger-vs-kl margin", rep.hellinger_margin,
       rep.hellinger_margin >= -tol},
      {"tail-tightness margin", rep.tightness_margin,
       rep.tightness_margin >= -tol},
      {"tail ratio at 10 sigma", rep.tightness_ratio_at_10sigma, ratio_ok},
  };
  std::printf("alpha %.6g  sigma %.6g  grid %d  pairs %d\n", alpha, sigma,
              rep.grid_n, rep.pair_n);
  std::printf("score-ratio sup %.6g (bound %.6g), inverse-information sup "
              "%.6g (bound %.6g)\n",
              rep.lipschitz_sup, rep.lipschitz_bound, rep.beta_sup,
              rep.beta_bound);
  bool all_ok = true;
  for (const auto& l : lines) {
    std::printf("  %-32s % .9e  %s\n", l.name, l.value,
                l.ok ? "PASS" : "FAIL");
    all_ok = all_ok && l.ok;
  }
  if (!all_ok)
    return emit_error(3, "verification_failed",
                      "one or more scalar inequality checks failed");
  std::printf("all checks passed\n");
  return 0;
}

struct GenModelArgs {
  std::vector<int> dims;
  std::vector<int> ranks;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int rows = 256;
  std::string out;
};

int run_gen_model(const CLI::App& sub, const GenModelArgs& a) {
  lowrank::SeededRng rng(a.seed, 0);
  std::optional<std::vector<int>> planted;
  if (sub.count("--ranks")) planted = a.ranks;
  const auto model = lowrank::gen_mlp(a.dims, rng, planted, a.noise);
  const lowrank::Matrix calib =
      rng.gaussian_matrix(a.rows, model.input_dim());
  const auto manifest = lowrank::save_model(a.out, model);
  lowrank::write_lrm(fs::path(a.out) / "calib.lrm", calib);
  std::printf("model written to %s\ncalibration data written to %s\n",
              manifest.string().c_str(),
              (fs::path(a.out) / "calib.lrm").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank recovery and MLP compression toolkit"};
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim = app.add_subcommand(
      "simulate", "run a Monte-Carlo error-scaling sweep, write CSV");
  sim->add_option("--config", sa.config, "JSON config file");
  sim->add_option("--scenario", sa.scenario, "thm1, thm2 or thm3")
      ->check(CLI::IsMember({"thm1", "thm2", "thm3"}));
  sim->add_option("--sweep", sa.sweep, "swept dimensions, e.g. 64,128,256")
      ->delimiter(',');
  sim->add_option("--trials", sa.trials, "trials per dimension");
  sim->add_option("--seed", sa.seed, "base seed");
  sim->add_option("--out", sa.out, "CSV output path");
  sim->add_option("--r", sa.r, "planted rank");
  sim->add_option("--d", sa.d, "design width (thm1)");
  sim->add_option("--d2", sa.d2, "output width (thm1)");
  sim->add_option("--sigma", sa.sigma, "gaussian noise level");
  sim->add_option("--beta", sa.beta, "bounded noise level (thm2)");
  sim->add_option("--alpha", sa.alpha, "sup-norm scale (thm2/thm3)");
  sim->add_option("--epsilon", sa.epsilon, "structured perturbation (thm1)");
  sim->add_option("--proj-tol", sa.proj_tol, "projection tolerance");
  sim->add_option("--proj-max-iter", sa.proj_max_iter, "projection sweep cap");
  sim->add_option("--mle-tol", sa.mle_tol, "ascent stopping tolerance");
  sim->add_option("--mle-max-iter", sa.mle_max_iter, "ascent iteration cap");

  CompressArgs ca;
  auto* cmp = app.add_subcommand(
      "compress", "fit low-rank substitutes for every layer of a model");
  cmp->add_option("--config", ca.config, "JSON config file");
  cmp->add_option("--model", ca.model, "model manifest (json)");
  cmp->add_option("--calib", ca.calib, "calibration inputs (.lrm)");
  cmp->add_option("--ranks", ca.ranks, "per-layer target ranks, e.g. 8,8,4")
      ->delimiter(',');
  cmp->add_option("--method", ca.method, "closed_form, convex or relu_mle")
      ->check(CLI::IsMember({"closed_form", "convex", "relu_mle"}));
  cmp->add_option("--out", ca.out, "output directory");
  cmp->add_option("--alpha", ca.alpha,
                  "sup-norm bound (default: estimated per layer)");
  cmp->add_option("--sigma", ca.sigma, "censored-noise scale for relu_mle");
  cmp->add_option("--proj-tol", ca.proj_tol, "projection tolerance");
  cmp->add_option("--proj-max-iter", ca.proj_max_iter, "projection sweep cap");
  cmp->add_option("--solver-tol", ca.solver_tol, "ascent stopping tolerance");
  cmp->add_option("--solver-max-iter", ca.solver_max_iter,
                  "ascent iteration cap");
  cmp->add_flag("--use-original-activations", ca.use_original,
                "ablation: calibrate every layer on the original activations");

  std::string ea_model_a, ea_model_b, ea_data;
  auto* evl = app.add_subcommand(
      "eval", "activation MSE between two architecture-matched models");
  evl->add_option("--model-a", ea_model_a, "first model manifest")->required();
  evl->add_option("--model-b", ea_model_b, "second model manifest")->required();
  evl->add_option("--data", ea_data, "input data (.lrm)")->required();

  double va = 2.0, vs = 1.0;
  int vg = 100000;
  auto* ver = app.add_subcommand(
      "verify-lemmas", "audit the scalar inequalities behind the censored fit");
  ver->add_option("--alpha", va, "interval half-width");
  ver->add_option("--sigma", vs, "noise scale");
  ver->add_option("--grid", vg, "grid points");

  GenModelArgs ga;
  auto* gen = app.add_subcommand(
      "gen-model", "generate a synthetic model plus calibration data");
  gen->add_option("--dims", ga.dims, "layer widths, e.g. 32,32,32,16")
      ->delimiter(',')
      ->required();
  gen->add_option("--ranks", ga.ranks, "planted per-layer ranks")
      ->delimiter(',');
  gen->add_option("--noise", ga.noise, "relative weight perturbation");
  gen->add_option("--seed", ga.seed, "seed");
  gen->add_option("--rows", ga.rows, "calibration rows");
  gen->add_option("--out", ga.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    return emit_error(2, "usage", e.what());
  }

  try {
    if (sim->parsed()) return run_simulate(*sim, sa);
    if (cmp->parsed()) return run_compress(*cmp, ca);
    if (evl->parsed()) return run_eval(ea_model_a, ea_model_b, ea_data);
    if (ver->parsed()) return run_verify(va, vs, vg);
    if (gen->parsed()) return run_gen_model(*gen, ga);
  } catch (const std::invalid_argument& e) {
    return emit_error(2, "invalid_argument", e.what());
  } catch (const lowrank::FormatError& e) {
    return emit_error(1, "format_error", e.what());
  } catch (const lowrank::GenerationError& e) {
    return emit_error(1, "generation_error", e.what());
  } catch (const lowrank::RankDeficientError& e) {
    return emit_error(1, "rank_deficient", e.what());
  } catch (const lowrank::NumericError& e) {
    return emit_error(1, "numeric_error", e.what());
  } catch (const std::exception& e) {
    return emit_error(1, "runtime_error", e.what());
  }
  return emit_error(2, "usage", "no subcommand given");
}
