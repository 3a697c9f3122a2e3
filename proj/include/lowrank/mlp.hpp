#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lowrank/errors.hpp"
#include "lowrank/lrm_io.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

enum class Activation { relu, identity };

inline Matrix apply_activation(const Matrix& x, Activation a) {
  return a == Activation::relu ? x.cwiseMax(0.0).eval() : x;
}

inline std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "identity";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw FormatError("unknown activation kind: " + s);
}

// Rank-revealing weight pair; the effective weight is a * b.
struct FactoredWeights {
  Matrix a;  // in_dim x r
  Matrix b;  // r x out_dim
};

// One layer: a dense weight or a factored pair, plus the activation applied
// after the matrix product. Bias is folded into the weight as an extra
// input coordinate, so there is no separate bias vector anywhere.
struct Layer {
  std::variant<Matrix, FactoredWeights> weights;
  Activation activation = Activation::relu;

  bool factored() const {
    return std::holds_alternative<FactoredWeights>(weights);
  }

  Index in_dim() const {
    if (factored()) return std::get<FactoredWeights>(weights).a.rows();
    return std::get<Matrix>(weights).rows();
  }

  Index out_dim() const {
    if (factored()) return std::get<FactoredWeights>(weights).b.cols();
    return std::get<Matrix>(weights).cols();
  }

  Index rank_bound() const {
    if (factored()) return std::get<FactoredWeights>(weights).a.cols();
    return std::min(in_dim(), out_dim());
  }

  // x * W, computed as (x * A) * B for factored layers.
  Matrix apply_linear(const Matrix& x) const {
    if (factored()) {
      const auto& f = std::get<FactoredWeights>(weights);
      return (x * f.a) * f.b;
    }
    return x * std::get<Matrix>(weights);
  }

  Matrix apply(const Matrix& x) const {
    return apply_activation(apply_linear(x), activation);
  }

  Matrix effective_weight() const {
    if (factored()) {
      const auto& f = std::get<FactoredWeights>(weights);
      return f.a * f.b;
    }
    return std::get<Matrix>(weights);
  }

  std::size_t param_count() const {
    if (factored()) {
      const auto& f = std::get<FactoredWeights>(weights);
      return static_cast<std::size_t>(f.a.size()) +
             static_cast<std::size_t>(f.b.size());
    }
    return static_cast<std::size_t>(std::get<Matrix>(weights).size());
  }
};

struct MlpModel {
  std::vector<Layer> layers;

  void validate() const {
    require_arg(!layers.empty(), "MlpModel: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Layer& l = layers[i];
      if (l.factored()) {
        const auto& f = std::get<FactoredWeights>(l.weights);
        require_nonempty(f.a, "MlpModel: factor a");
        require_nonempty(f.b, "MlpModel: factor b");
        require_finite(f.a, "MlpModel: factor a");
        require_finite(f.b, "MlpModel: factor b");
        require_arg(f.a.cols() == f.b.rows(),
                    "MlpModel: factor inner dimensions disagree");
      } else {
        const auto& w = std::get<Matrix>(l.weights);
        require_nonempty(w, "MlpModel: weight");
        require_finite(w, "MlpModel: weight");
      }
      if (i > 0)
        require_arg(layers[i - 1].out_dim() == l.in_dim(),
                    "MlpModel: adjacent layer dimensions do not chain");
    }
  }

  Index input_dim() const { return layers.front().in_dim(); }
  Index output_dim() const { return layers.back().out_dim(); }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.param_count();
    return n;
  }
};

// Accepts calibration input with either input_dim columns (used as-is) or
// input_dim - 1 columns (a constant-one column is appended for the folded
// bias coordinate).
inline Matrix fold_bias_input(const MlpModel& model, const Matrix& x0) {
  require_nonempty(x0, "input");
  require_finite(x0, "input");
  const Index want = model.input_dim();
  if (x0.cols() == want) return x0;
  if (x0.cols() == want - 1) {
    Matrix x(x0.rows(), want);
    x << x0, Matrix::Ones(x0.rows(), 1);
    return x;
  }
  throw std::invalid_argument(
      "input has " + std::to_string(x0.cols()) + " columns, expected " +
      std::to_string(want) + " (or one fewer before bias folding)");
}

// All activations X(0), ..., X(L) of a forward pass, X(0) included.
inline std::vector<Matrix> forward_collect(const MlpModel& model,
                                           const Matrix& x0) {
  model.validate();
  std::vector<Matrix> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(fold_bias_input(model, x0));
  for (const Layer& l : model.layers) acts.push_back(l.apply(acts.back()));
  return acts;
}

inline Matrix forward(const MlpModel& model, const Matrix& x0) {
  model.validate();
  Matrix x = fold_bias_input(model, x0);
  for (const Layer& l : model.layers) x = l.apply(x);
  return x;
}

// Manifest format: a JSON file listing layers in order. Dense layers carry
// {"weight": "w1.lrm", "activation": "relu"}; factored layers carry
// {"a": "l1_a.lrm", "b": "l1_b.lrm", "activation": "relu"}. Matrix paths
// are relative to the manifest's directory.
inline MlpModel load_model(const std::filesystem::path& manifest) {
  std::ifstream is(manifest);
  if (!is) throw FormatError("model manifest: cannot open " + manifest.string());
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model manifest: bad JSON: " + std::string(e.what()));
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
    throw FormatError("model manifest: expected top-level \"layers\" array");
  const auto dir = manifest.parent_path();
  MlpModel model;
  for (const auto& entry : doc["layers"]) {
    if (!entry.is_object())
      throw FormatError("model manifest: layer entries must be objects");
    Layer layer;
    if (!entry.contains("activation") || !entry["activation"].is_string())
      throw FormatError("model manifest: layer missing activation");
    layer.activation =
        activation_from_string(entry["activation"].get<std::string>());
    if (entry.contains("weight")) {
      layer.weights = read_lrm(dir / entry["weight"].get<std::string>());
    } else if (entry.contains("a") && entry.contains("b")) {
      layer.weights =
          FactoredWeights{read_lrm(dir / entry["a"].get<std::string>()),
                          read_lrm(dir / entry["b"].get<std::string>())};
    } else {
      throw FormatError(
          "model manifest: layer needs \"weight\" or \"a\"/\"b\"");
    }
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

// Writes the manifest as <dir>/<name> plus one LRM file per weight matrix.
inline std::filesystem::path save_model(const std::filesystem::path& dir,
                                        const MlpModel& model,
                                        const std::string& name = "model.json") {
  model.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json doc;
  doc["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    nlohmann::json entry;
    entry["activation"] = to_string(l.activation);
    const std::string stem = std::to_string(i + 1);
    if (l.factored()) {
      const auto& f = std::get<FactoredWeights>(l.weights);
      entry["a"] = "l" + stem + "_a.lrm";
      entry["b"] = "l" + stem + "_b.lrm";
      write_lrm(dir / entry["a"].get<std::string>(), f.a);
      write_lrm(dir / entry["b"].get<std::string>(), f.b);
    } else {
      entry["weight"] = "w" + stem + ".lrm";
      write_lrm(dir / entry["weight"].get<std::string>(),
                std::get<Matrix>(l.weights));
    }
    doc["layers"].push_back(entry);
  }
  const auto path = dir / name;
  std::ofstream os(path);
  if (!os) throw FormatError("model manifest: cannot write " + path.string());
  os << doc.dump(2) << "\n";
  return path;
}

}  // namespace lowrank
