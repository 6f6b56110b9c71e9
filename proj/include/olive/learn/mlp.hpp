#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "olive/matrix.hpp"
#include "olive/random.hpp"

namespace olive {

struct MlpArchitecture {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden;
  // Layer-normalize the input of every layer after the first.
  bool layer_norm = false;

  bool operator==(const MlpArchitecture&) const = default;
};

/// Feed-forward ReLU regressor with a scalar linear output. Parameters live in
/// one flat vector; per layer l the layout is [gamma, beta] (when layer l is
/// normalized), then W (out x in, row-major), then b.
class MlpNetwork {
 public:
  explicit MlpNetwork(MlpArchitecture arch);

  // He-uniform hidden weights, zero biases, unit LN gains, zero output layer.
  void initialize(Rng& rng);

  const MlpArchitecture& architecture() const noexcept { return arch_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  double forward(std::span<const double> x) const;

  /// Mean squared error over `rows` of (x, y).
  double loss(const Matrix& x, std::span<const double> y,
              std::span<const std::size_t> rows) const;

  /// Same loss; writes d(loss)/d(params) into `grad` (overwritten).
  double loss_and_gradient(const Matrix& x, std::span<const double> y,
                           std::span<const std::size_t> rows, std::span<double> grad) const;

  nlohmann::json to_json() const;
  static MlpNetwork from_json(const nlohmann::json& j);

  bool operator==(const MlpNetwork&) const = default;

 private:
  struct Layer {
    std::size_t in = 0, out = 0;
    bool norm = false;
    std::size_t gamma = 0, beta = 0, weights = 0, bias = 0;  // offsets into params_

    bool operator==(const Layer&) const = default;
  };

  struct Workspace;
  double forward_cached(std::span<const double> x, Workspace& ws) const;

  MlpArchitecture arch_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

}  // namespace olive
