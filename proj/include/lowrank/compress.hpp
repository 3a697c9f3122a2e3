#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lowrank/mlp.hpp"
#include "lowrank/recover_convex.hpp"
#include "lowrank/recover_rank.hpp"
#include "lowrank/recover_relu.hpp"

namespace lowrank {

enum class CompressMethod { closed_form, convex, relu_mle };

inline std::string to_string(CompressMethod m) {
  switch (m) {
    case CompressMethod::closed_form: return "closed_form";
    case CompressMethod::convex: return "convex";
    case CompressMethod::relu_mle: return "relu_mle";
  }
  return "closed_form";
}

struct CompressParams {
  // Sup-norm bound for the constrained methods; when absent it is estimated
  // as the sup norm of the layer's reference pre-activation.
  std::optional<double> alpha;
  double sigma = 0.1;      // censored-noise scale for relu_mle
  double solver_tol = 1e-6;
  int solver_max_iter = 400;
  double proj_tol = 1e-7;
  int proj_max_iter = 2000;
  // Ablation: feed every layer the original activations on both sides
  // instead of propagating the compressed-model activations.
  bool use_original_activations = false;
};

struct LayerReport {
  int rank = 0;
  std::size_t params_before = 0;  // N_{i-1} * N_i
  std::size_t params_after = 0;   // r * (N_{i-1} + N_i)
  double activation_mse = 0.0;    // ||x_orig w - x_comp m_hat||_F^2 / (m N_i)
  double truncation_residual = 0.0;  // ||m_hat - [m_hat]_r||_F
  bool solver_converged = true;
};

struct CompressionReport {
  std::vector<LayerReport> layers;
  double compression_ratio = 0.0;  // total params after / before
  double output_mse = 0.0;         // final-activation MSE on the calibration set
};

// Replace one layer's weight with a rank-r substitute fitted on calibration
// activations: x_orig feeds the target pre-activation x_orig * w, x_comp is
// the design the substitute will actually see. The solver's m_hat is
// factored as A = U_r sqrt(s), B = sqrt(s) V_r^T; for solvers whose output
// is only approximately low rank the truncation cost is recorded.
inline std::pair<FactoredWeights, LayerReport> compress_layer(
    const Matrix& x_orig, const Matrix& x_comp, const Matrix& w, int r,
    CompressMethod method, const CompressParams& prm = {}) {
  require_nonempty(x_orig, "compress_layer: x_orig");
  require_nonempty(x_comp, "compress_layer: x_comp");
  require_nonempty(w, "compress_layer: w");
  require_arg(x_orig.rows() == x_comp.rows(),
              "compress_layer: calibration sample counts differ");
  require_arg(x_orig.cols() == w.rows() && x_comp.cols() == w.rows(),
              "compress_layer: activation width must match weight rows");
  require_arg(r >= 1 && r <= std::min(w.rows(), w.cols()),
              "compress_layer: r out of range");
  require_finite(x_orig, "compress_layer: x_orig");
  require_finite(x_comp, "compress_layer: x_comp");
  require_finite(w, "compress_layer: w");

  const Matrix target = x_orig * w;
  const double alpha_used = prm.alpha.value_or([&] {
    const double a = target.cwiseAbs().maxCoeff();
    return a > 0.0 ? a : 1.0;
  }());

  Matrix m_hat;
  bool converged = true;
  switch (method) {
    case CompressMethod::closed_form: {
      // ReLU layers upstream can leave dead units (exactly-zero design
      // columns); those calibration matrices take the span-restricted path.
      const bool full_rank = x_comp.rows() >= x_comp.cols() &&
                             numerical_rank(x_comp) == x_comp.cols();
      m_hat = full_rank ? solve_rank_constrained(x_comp, target, r).m_hat
                        : solve_rank_spanned(x_comp, target, r).m_hat;
      break;
    }
    case CompressMethod::convex: {
      const PsiParams p{x_comp, alpha_used, r};
      auto res = solve_constrained(target, p, prm.proj_tol, prm.proj_max_iter);
      m_hat = std::move(res.m_hat);
      converged = res.diagnostics.converged;
      break;
    }
    case CompressMethod::relu_mle: {
      const PsiParams p{x_comp, alpha_used, r};
      CensoredObservation obs{target.cwiseMax(0.0), prm.sigma};
      MleOptions opt;
      opt.tol = prm.solver_tol;
      opt.max_iter = prm.solver_max_iter;
      opt.proj_tol = prm.proj_tol;
      opt.proj_max_iter = prm.proj_max_iter;
      auto res = solve_mle(obs, p, opt);
      m_hat = std::move(res.m_hat);
      converged = res.converged;
      break;
    }
  }

  const SvdFactors f = svd(m_hat);
  const Vector root = f.s.head(r).array().sqrt();
  FactoredWeights fw{f.u.leftCols(r) * root.asDiagonal(),
                     root.asDiagonal() * f.v.leftCols(r).transpose()};
  double tail_sq = 0.0;
  for (Index i = r; i < f.s.size(); ++i) tail_sq += f.s(i) * f.s(i);

  LayerReport rep;
  rep.rank = r;
  rep.params_before =
      static_cast<std::size_t>(w.rows()) * static_cast<std::size_t>(w.cols());
  rep.params_after = static_cast<std::size_t>(r) *
                     static_cast<std::size_t>(w.rows() + w.cols());
  rep.activation_mse = (target - x_comp * m_hat).squaredNorm() /
                       (static_cast<double>(target.rows()) *
                        static_cast<double>(target.cols()));
  rep.truncation_residual = std::sqrt(tail_sq);
  rep.solver_converged = converged;
  return {std::move(fw), rep};
}

namespace detail {

[[noreturn]] inline void rethrow_with_layer(std::size_t i) {
  const std::string prefix = "layer " + std::to_string(i + 1) + ": ";
  try {
    throw;
  } catch (const RankDeficientError& e) {
    throw RankDeficientError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const GenerationError& e) {
    throw GenerationError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

}  // namespace detail

// Layer-by-layer compression against calibration data. Two activation
// streams are maintained: the original model's (defining each layer's
// target) and the compressed prefix's (defining the design the substitute
// sees at inference time).
inline std::pair<MlpModel, CompressionReport> compress_model(
    const MlpModel& model, const Matrix& x0, const std::vector<int>& ranks,
    CompressMethod method, const CompressParams& prm = {}) {
  model.validate();
  require_arg(ranks.size() == model.layers.size(),
              "compress_model: one rank per layer required");

  Matrix x_orig = fold_bias_input(model, x0);
  Matrix x_comp = x_orig;

  MlpModel out;
  CompressionReport rep;
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& lay = model.layers[i];
    const Matrix w = lay.effective_weight();
    FactoredWeights fw;
    LayerReport lrep;
    try {
      const Matrix& design = prm.use_original_activations ? x_orig : x_comp;
      auto got = compress_layer(x_orig, design, w, ranks[i], method, prm);
      fw = std::move(got.first);
      lrep = got.second;
    } catch (...) {
      detail::rethrow_with_layer(i);
    }
    x_orig = apply_activation(x_orig * w, lay.activation);
    x_comp = apply_activation((x_comp * fw.a) * fw.b, lay.activation);
    out.layers.push_back(Layer{std::move(fw), lay.activation});
    before += lrep.params_before;
    after += lrep.params_after;
    rep.layers.push_back(lrep);
  }
  rep.compression_ratio =
      static_cast<double>(after) / static_cast<double>(before);
  rep.output_mse = (x_orig - x_comp).squaredNorm() /
                   (static_cast<double>(x_orig.rows()) *
                    static_cast<double>(x_orig.cols()));
  return {std::move(out), rep};
}

struct EvalReport {
  double output_mse = 0.0;
  std::vector<double> per_layer_mse;  // one entry per layer, input excluded
};

// Mean squared activation differences between two architecture-matched
// models on shared input.
inline EvalReport evaluate(const MlpModel& model_a, const MlpModel& model_b,
                           const Matrix& x) {
  model_a.validate();
  model_b.validate();
  require_arg(model_a.layers.size() == model_b.layers.size(),
              "evaluate: layer counts differ");
  for (std::size_t i = 0; i < model_a.layers.size(); ++i)
    require_arg(model_a.layers[i].in_dim() == model_b.layers[i].in_dim() &&
                    model_a.layers[i].out_dim() == model_b.layers[i].out_dim(),
                "evaluate: layer dimensions differ");

  const auto acts_a = forward_collect(model_a, x);
  const auto acts_b = forward_collect(model_b, x);
  EvalReport rep;
  for (std::size_t i = 1; i < acts_a.size(); ++i) {
    const double mse = (acts_a[i] - acts_b[i]).squaredNorm() /
                       (static_cast<double>(acts_a[i].rows()) *
                        static_cast<double>(acts_a[i].cols()));
    rep.per_layer_mse.push_back(mse);
  }
  rep.output_mse = rep.per_layer_mse.back();
  return rep;
}

}  // namespace lowrank
