#include "olive/learn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "olive/error.hpp"

namespace olive {

namespace {
constexpr double kNormEps = 1e-5;
}

MlpNetwork::MlpNetwork(MlpArchitecture arch) : arch_(std::move(arch)) {
  if (arch_.inputs == 0) throw ConfigError("network needs at least one input");
  std::vector<std::size_t> widths{arch_.inputs};
  widths.insert(widths.end(), arch_.hidden.begin(), arch_.hidden.end());
  widths.push_back(1);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    if (layer.in == 0) throw ConfigError("hidden layers must have at least one unit");
    layer.norm = arch_.layer_norm && l > 0;
    if (layer.norm) {
      layer.gamma = offset;
      layer.beta = offset + layer.in;
      offset += 2 * layer.in;
    }
    layer.weights = offset;
    offset += layer.in * layer.out;
    layer.bias = offset;
    offset += layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

void MlpNetwork::initialize(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    if (layer.norm) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(layer.gamma), layer.in, 1.0);
    }
    if (l + 1 == layers_.size()) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in));
    for (std::size_t i = 0; i < layer.in * layer.out; ++i) {
      params_[layer.weights + i] = rng.uniform(-bound, bound);
    }
  }
}

struct MlpNetwork::Workspace {
  // Per layer: raw input, normalized input (what W sees), pre-activation,
  // and layer-norm statistics.
  std::vector<std::vector<double>> raw, input, pre;
  std::vector<double> inv_std;

  explicit Workspace(const std::vector<Layer>& layers)
      : raw(layers.size()), input(layers.size()), pre(layers.size()), inv_std(layers.size()) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      raw[l].resize(layers[l].in);
      input[l].resize(layers[l].in);
      pre[l].resize(layers[l].out);
    }
  }
};

double MlpNetwork::forward_cached(std::span<const double> x, Workspace& ws) const {
  std::copy(x.begin(), x.end(), ws.raw[0].begin());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    auto& raw = ws.raw[l];
    auto& in = ws.input[l];
    if (layer.norm) {
      const double m = static_cast<double>(layer.in);
      const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / m;
      double var = 0.0;
      for (double v : raw) var += (v - mean) * (v - mean);
      var /= m;
      const double inv = 1.0 / std::sqrt(var + kNormEps);
      ws.inv_std[l] = inv;
      for (std::size_t i = 0; i < layer.in; ++i) {
        const double xhat = (raw[i] - mean) * inv;
        in[i] = params_[layer.gamma + i] * xhat + params_[layer.beta + i];
      }
    } else {
      in = raw;
    }
    auto& pre = ws.pre[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = params_.data() + layer.weights + o * layer.in;
      double z = params_[layer.bias + o];
      for (std::size_t i = 0; i < layer.in; ++i) z += w[i] * in[i];
      pre[o] = z;
    }
    if (l + 1 < layers_.size()) {
      auto& next = ws.raw[l + 1];
      for (std::size_t o = 0; o < layer.out; ++o) next[o] = std::max(0.0, pre[o]);
    }
  }
  return ws.pre.back()[0];
}

double MlpNetwork::forward(std::span<const double> x) const {
  if (x.size() != arch_.inputs) throw DataError("network input width mismatch");
  Workspace ws(layers_);
  return forward_cached(x, ws);
}

double MlpNetwork::loss(const Matrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows) const {
  Workspace ws(layers_);
  double total = 0.0;
  for (std::size_t r : rows) {
    const double err = forward_cached(x.row(r), ws) - y[r];
    total += err * err;
  }
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

double MlpNetwork::loss_and_gradient(const Matrix& x, std::span<const double> y,
                                     std::span<const std::size_t> rows,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size()) throw DataError("gradient buffer has the wrong size");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (rows.empty()) return 0.0;
  Workspace ws(layers_);
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<std::vector<double>> delta(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) delta[l].resize(layers_[l].out);
  std::vector<double> d_in, d_raw;

  double total = 0.0;
  for (std::size_t r : rows) {
    const double err = forward_cached(x.row(r), ws) - y[r];
    total += err * err;
    delta.back()[0] = 2.0 * err * scale;

    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      const auto& in = ws.input[l];
      const auto& dz = delta[l];
      d_in.assign(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (dz[o] == 0.0) continue;
        grad[layer.bias + o] += dz[o];
        double* gw = grad.data() + layer.weights + o * layer.in;
        const double* w = params_.data() + layer.weights + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) {
          gw[i] += dz[o] * in[i];
          d_in[i] += dz[o] * w[i];
        }
      }
      if (l == 0) break;

      // Back through layer norm (if any) to the previous activation.
      const auto& raw = ws.raw[l];
      if (layer.norm) {
        const double m = static_cast<double>(layer.in);
        const double inv = ws.inv_std[l];
        const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / m;
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        d_raw.assign(layer.in, 0.0);
        for (std::size_t i = 0; i < layer.in; ++i) {
          const double xhat = (raw[i] - mean) * inv;
          grad[layer.gamma + i] += d_in[i] * xhat;
          grad[layer.beta + i] += d_in[i];
          const double dxhat = d_in[i] * params_[layer.gamma + i];
          d_raw[i] = dxhat;
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
        }
        for (std::size_t i = 0; i < layer.in; ++i) {
          const double xhat = (raw[i] - mean) * inv;
          d_raw[i] = inv / m * (m * d_raw[i] - sum_dxhat - xhat * sum_dxhat_xhat);
        }
      } else {
        d_raw = d_in;
      }
      // ReLU of the previous layer.
      const auto& pre = ws.pre[l - 1];
      auto& prev = delta[l - 1];
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] = pre[i] > 0.0 ? d_raw[i] : 0.0;
    }
  }
  return total * scale;
}

nlohmann::json MlpNetwork::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : layers_) {
    nlohmann::json entry;
    nlohmann::json weights = nlohmann::json::array();
    for (std::size_t o = 0; o < layer.out; ++o) {
      weights.push_back(std::vector<double>(
          params_.begin() + static_cast<std::ptrdiff_t>(layer.weights + o * layer.in),
          params_.begin() + static_cast<std::ptrdiff_t>(layer.weights + (o + 1) * layer.in)));
    }
    entry["weights"] = weights;
    entry["bias"] = std::vector<double>(
        params_.begin() + static_cast<std::ptrdiff_t>(layer.bias),
        params_.begin() + static_cast<std::ptrdiff_t>(layer.bias + layer.out));
    if (layer.norm) {
      entry["norm_gain"] = std::vector<double>(
          params_.begin() + static_cast<std::ptrdiff_t>(layer.gamma),
          params_.begin() + static_cast<std::ptrdiff_t>(layer.gamma + layer.in));
      entry["norm_bias"] = std::vector<double>(
          params_.begin() + static_cast<std::ptrdiff_t>(layer.beta),
          params_.begin() + static_cast<std::ptrdiff_t>(layer.beta + layer.in));
    }
    layers.push_back(entry);
  }
  return {{"inputs", arch_.inputs},
          {"hidden", arch_.hidden},
          {"layer_norm", arch_.layer_norm},
          {"layers", layers}};
}

MlpNetwork MlpNetwork::from_json(const nlohmann::json& j) {
  MlpArchitecture arch;
  arch.inputs = j.at("inputs").get<std::size_t>();
  arch.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  arch.layer_norm = j.at("layer_norm").get<bool>();
  MlpNetwork net(arch);
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers_.size()) throw DataError("network layer count mismatch");
  auto fill = [&](const std::vector<double>& src, std::size_t offset, std::size_t n) {
    if (src.size() != n) throw DataError("network parameter block has the wrong size");
    std::copy(src.begin(), src.end(), net.params_.begin() + static_cast<std::ptrdiff_t>(offset));
  };
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const Layer& layer = net.layers_[l];
    const auto weights = layers[l].at("weights").get<std::vector<std::vector<double>>>();
    if (weights.size() != layer.out) throw DataError("network weight matrix has the wrong shape");
    for (std::size_t o = 0; o < layer.out; ++o) fill(weights[o], layer.weights + o * layer.in, layer.in);
    fill(layers[l].at("bias").get<std::vector<double>>(), layer.bias, layer.out);
    if (layer.norm) {
      fill(layers[l].at("norm_gain").get<std::vector<double>>(), layer.gamma, layer.in);
      fill(layers[l].at("norm_bias").get<std::vector<double>>(), layer.beta, layer.in);
    }
  }
  return net;
}

}  // namespace olive
