#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowrank/dense_linalg.hpp"
#include "lowrank/lrm_io.hpp"
#include "lowrank/mlp.hpp"
#include "lowrank/rng.hpp"

namespace lowrank {

enum class NoiseKind { bounded_uniform, gaussian };

struct InstanceParams {
  int d1 = 0, d = 0, d2 = 0, r = 0;
  double alpha = 0.0, sigma = 0.0, beta = 0.0, epsilon = 0.0;
  std::uint64_t seed = 0, stream = 0;
  std::string kind;
};

// A synthetic problem with known ground truth:
//   x_check (d1 x d) design, m (d x d2) planted weights, y = x_check * m,
//   g additive noise, e optional structured perturbation,
//   observation = y + g (+ e), censored at zero for the relu kind.
struct PlantedInstance {
  Matrix x_check;
  Matrix m;
  Matrix y;
  Matrix g;
  std::optional<Matrix> e;
  Matrix observation;
  InstanceParams params;
};

namespace detail {

inline void check_full_column_rank(const Matrix& x, const char* who) {
  if (numerical_rank(x) != x.cols())
    throw GenerationError(std::string(who) + ": design matrix came out rank deficient");
}

}  // namespace detail

// Instance with exactly rank-r planted weights, Gaussian noise of standard
// deviation sigma, and an optional rank-one perturbation e with squared
// operator norm exactly epsilon * d1.
inline PlantedInstance gen_exact_rank_instance(int d1, int d, int d2, int r,
                                               double sigma, double epsilon,
                                               SeededRng& rng) {
  require_arg(r >= 1, "gen_exact_rank_instance: r must be positive");
  require_arg(d >= r && d2 >= r,
              "gen_exact_rank_instance: r must be <= min(d, d2)");
  require_arg(d1 >= d, "gen_exact_rank_instance: need d1 >= d");
  require_arg(sigma >= 0.0 && epsilon >= 0.0,
              "gen_exact_rank_instance: sigma and epsilon must be >= 0");

  PlantedInstance inst;
  inst.x_check = rng.gaussian_matrix(d1, d);
  detail::check_full_column_rank(inst.x_check, "gen_exact_rank_instance");

  inst.m = (rng.gaussian_matrix(d, r) * rng.gaussian_matrix(r, d2)) /
           std::sqrt(static_cast<double>(r));
  if (numerical_rank(inst.m) != r)
    throw GenerationError("gen_exact_rank_instance: planted weights missed rank r");
  inst.y = inst.x_check * inst.m;

  inst.g = sigma > 0.0 ? rng.gaussian_matrix(d1, d2, sigma)
                       : Matrix::Zero(d1, d2);
  inst.observation = inst.y + inst.g;

  if (epsilon > 0.0) {
    Vector u = rng.gaussian_matrix(d1, 1);
    Vector v = rng.gaussian_matrix(d2, 1);
    u /= u.norm();
    v /= v.norm();
    const Matrix e = std::sqrt(epsilon * d1) * (u * v.transpose());
    inst.observation += e;
    inst.e = e;
  }

  inst.params = {d1, d, d2, r, 0.0, sigma, 0.0, epsilon,
                 rng.seed(), rng.stream_id(), "exact_rank"};
  return inst;
}

// Instance whose target y has unit leading singular values, a geometric
// singular-value tail (ratio 0.1) past index r, columns inside the span of
// x_check, and sup norm rescaled to exactly alpha. The nuclear-vs-sup-norm
// rank condition is asserted after construction; if it fails the tail is
// shrunk and construction retried (at most 10 times).
inline PlantedInstance gen_approx_rank_instance(int d1, int d, int d2, int r,
                                                double alpha,
                                                NoiseKind noise_kind,
                                                double noise_level,
                                                bool relu_censor,
                                                SeededRng& rng) {
  require_arg(r >= 1 && r <= std::min(d, d2),
              "gen_approx_rank_instance: r out of range");
  require_arg(d1 >= d, "gen_approx_rank_instance: need d1 >= d");
  require_arg(alpha > 0.0, "gen_approx_rank_instance: alpha must be positive");
  require_arg(noise_level >= 0.0,
              "gen_approx_rank_instance: noise level must be >= 0");

  PlantedInstance inst;
  inst.x_check = rng.gaussian_matrix(d1, d);
  detail::check_full_column_rank(inst.x_check, "gen_approx_rank_instance");

  const Matrix base = inst.x_check * rng.gaussian_matrix(d, d2);
  const SvdFactors f = svd(base);
  const int k_eff = numerical_rank(f.s);
  if (k_eff < r)
    throw GenerationError("gen_approx_rank_instance: base rank below r");

  Matrix y0;
  double tail = 0.1;
  bool ok = false;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    Vector spectrum = Vector::Zero(f.s.size());
    for (int i = 0; i < k_eff; ++i)
      spectrum(i) = i < r ? 1.0 : std::pow(tail, i - r + 1);
    y0 = f.u * spectrum.asDiagonal() * f.v.transpose();
    y0 *= alpha / y0.cwiseAbs().maxCoeff();
    if (is_approx_rank(y0, r)) {
      ok = true;
      break;
    }
    tail *= 0.1;
  }
  if (!ok)
    throw GenerationError(
        "gen_approx_rank_instance: rank condition failed after retries");

  inst.m = pinv(inst.x_check) * y0;
  inst.y = inst.x_check * inst.m;
  if (std::abs(inst.y.cwiseAbs().maxCoeff() - alpha) > 1e-9 * alpha ||
      !is_approx_rank(inst.y, r))
    throw GenerationError(
        "gen_approx_rank_instance: pullback broke the construction");

  inst.params.d1 = d1;
  inst.params.d = d;
  inst.params.d2 = d2;
  inst.params.r = r;
  inst.params.alpha = alpha;
  inst.params.seed = rng.seed();
  inst.params.stream = rng.stream_id();

  if (noise_kind == NoiseKind::bounded_uniform) {
    inst.g = noise_level > 0.0
                 ? rng.uniform_matrix(d1, d2, -noise_level, noise_level)
                 : Matrix::Zero(d1, d2);
    if (inst.g.cwiseAbs().maxCoeff() > noise_level)
      throw GenerationError("gen_approx_rank_instance: noise bound violated");
    inst.params.beta = noise_level;
  } else {
    inst.g = noise_level > 0.0 ? rng.gaussian_matrix(d1, d2, noise_level)
                               : Matrix::Zero(d1, d2);
    inst.params.sigma = noise_level;
  }
  inst.observation = inst.y + inst.g;
  if (relu_censor) inst.observation = inst.observation.cwiseMax(0.0);
  inst.params.kind = relu_censor ? "approx_rank_relu" : "approx_rank_linear";
  return inst;
}

// Random MLP with He-scaled Gaussian weights (variance 2/fan_in). With
// plant_ranks, each weight is an exact low-rank factor product at matched
// entry variance; weight_noise adds i.i.d. Gaussian perturbation scaled
// relative to the He standard deviation (turning an exactly low-rank
// network into a nearby full-rank one). Hidden layers use relu, the final
// layer identity.
inline MlpModel gen_mlp(const std::vector<int>& dims, SeededRng& rng,
                        const std::optional<std::vector<int>>& plant_ranks =
                            std::nullopt,
                        double weight_noise = 0.0) {
  require_arg(dims.size() >= 2, "gen_mlp: need at least two dimensions");
  for (int n : dims) require_arg(n >= 1, "gen_mlp: dimensions must be positive");
  require_arg(weight_noise >= 0.0, "gen_mlp: weight_noise must be >= 0");
  const std::size_t n_layers = dims.size() - 1;
  if (plant_ranks) {
    require_arg(plant_ranks->size() == n_layers,
                "gen_mlp: one rank per layer required");
    for (std::size_t i = 0; i < n_layers; ++i)
      require_arg((*plant_ranks)[i] >= 1 &&
                      (*plant_ranks)[i] <= std::min(dims[i], dims[i + 1]),
                  "gen_mlp: plant rank out of range");
  }

  MlpModel model;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    const double he_std = std::sqrt(2.0 / fan_in);
    Matrix w;
    if (plant_ranks) {
      const int r = (*plant_ranks)[i];
      w = rng.gaussian_matrix(fan_in, r) * rng.gaussian_matrix(r, fan_out) *
          (he_std / std::sqrt(static_cast<double>(r)));
    } else {
      w = rng.gaussian_matrix(fan_in, fan_out, he_std);
    }
    if (weight_noise > 0.0)
      w += rng.gaussian_matrix(fan_in, fan_out, weight_noise * he_std);
    Layer layer;
    layer.weights = std::move(w);
    layer.activation =
        i + 1 == n_layers ? Activation::identity : Activation::relu;
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

// Instance directory layout: params.json plus one LRM file per matrix
// (x_check, m, y, g, observation, and e when present).
inline void save_instance(const std::filesystem::path& dir,
                          const PlantedInstance& inst) {
  std::filesystem::create_directories(dir);
  write_lrm(dir / "x_check.lrm", inst.x_check);
  write_lrm(dir / "m.lrm", inst.m);
  write_lrm(dir / "y.lrm", inst.y);
  write_lrm(dir / "g.lrm", inst.g);
  write_lrm(dir / "observation.lrm", inst.observation);
  if (inst.e) write_lrm(dir / "e.lrm", *inst.e);
  nlohmann::json doc;
  doc["d1"] = inst.params.d1;
  doc["d"] = inst.params.d;
  doc["d2"] = inst.params.d2;
  doc["r"] = inst.params.r;
  doc["alpha"] = inst.params.alpha;
  doc["sigma"] = inst.params.sigma;
  doc["beta"] = inst.params.beta;
  doc["epsilon"] = inst.params.epsilon;
  doc["seed"] = inst.params.seed;
  doc["stream"] = inst.params.stream;
  doc["kind"] = inst.params.kind;
  std::ofstream os(dir / "params.json");
  if (!os) throw FormatError("save_instance: cannot write params.json");
  os << doc.dump(2) << "\n";
}

inline PlantedInstance load_instance(const std::filesystem::path& dir) {
  std::ifstream is(dir / "params.json");
  if (!is) throw FormatError("load_instance: cannot open params.json");
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_instance: bad JSON: " + std::string(e.what()));
  }
  PlantedInstance inst;
  try {
    inst.params.d1 = doc.at("d1").get<int>();
    inst.params.d = doc.at("d").get<int>();
    inst.params.d2 = doc.at("d2").get<int>();
    inst.params.r = doc.at("r").get<int>();
    inst.params.alpha = doc.at("alpha").get<double>();
    inst.params.sigma = doc.at("sigma").get<double>();
    inst.params.beta = doc.at("beta").get<double>();
    inst.params.epsilon = doc.at("epsilon").get<double>();
    inst.params.seed = doc.at("seed").get<std::uint64_t>();
    inst.params.stream = doc.at("stream").get<std::uint64_t>();
    inst.params.kind = doc.at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_instance: missing field: " + std::string(e.what()));
  }
  inst.x_check = read_lrm(dir / "x_check.lrm");
  inst.m = read_lrm(dir / "m.lrm");
  inst.y = read_lrm(dir / "y.lrm");
  inst.g = read_lrm(dir / "g.lrm");
  inst.observation = read_lrm(dir / "observation.lrm");
  if (std::filesystem::exists(dir / "e.lrm"))
    inst.e = read_lrm(dir / "e.lrm");
  if (inst.x_check.rows() != inst.params.d1 ||
      inst.x_check.cols() != inst.params.d ||
      inst.m.rows() != inst.params.d || inst.m.cols() != inst.params.d2)
    throw FormatError("load_instance: matrix shapes disagree with params");
  if ((inst.y - inst.x_check * inst.m).norm() >
      1e-12 * std::max(1.0, inst.y.norm()))
    throw FormatError("load_instance: y does not equal x_check * m");
  return inst;
}

}  // namespace lowrank
