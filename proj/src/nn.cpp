#include "nn.hpp"

#include <algorithm>
#include <cstring>

#include "errors.hpp"

namespace comorec::nn {

std::span<const double> EmbeddingTable::row(uint32_t i) const {
  return std::span<const double>(data.data() + static_cast<size_t>(i) * dim, dim);
}

std::span<double> EmbeddingTable::row(uint32_t i) {
  return std::span<double>(data.data() + static_cast<size_t>(i) * dim, dim);
}

EmbeddingTable make_embedding(uint32_t rows, uint32_t dim, Rng& rng) {
  EmbeddingTable table;
  table.rows = rows;
  table.dim = dim;
  table.data.resize(static_cast<size_t>(rows) * dim);
  for (double& w : table.data) {
    w = rng.next_range(-0.05, 0.05);
  }
  return table;
}

DenseLayer make_dense(uint32_t in, uint32_t out, Activation activation, Rng& rng) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.activation = activation;
  layer.weights.resize(static_cast<size_t>(in) * out);
  layer.bias.assign(out, 0.0);
  double limit = std::sqrt(6.0 / (static_cast<double>(in) + static_cast<double>(out)));
  for (double& w : layer.weights) {
    w = rng.next_range(-limit, limit);
  }
  return layer;
}

namespace {

void apply_activation(Activation activation, std::span<double> z) {
  switch (activation) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      for (double& v : z) {
        if (v < 0) v = 0.0;
      }
      break;
    case Activation::Sigmoid:
      for (double& v : z) {
        v = sigmoid(v);
      }
      break;
  }
}

void affine(const DenseLayer& layer, std::span<const double> x, std::span<double> out) {
  for (uint32_t j = 0; j < layer.out; j++) {
    double acc = layer.bias[j];
    const double* w = layer.weights.data() + static_cast<size_t>(j) * layer.in;
    for (uint32_t i = 0; i < layer.in; i++) {
      acc += w[i] * x[i];
    }
    out[j] = acc;
  }
}

}  // namespace

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in) {
    throw UsageError("dense layer expects input of size " + std::to_string(layer.in) +
                     ", got " + std::to_string(x.size()));
  }
  std::vector<double> out(layer.out);
  affine(layer, x, out);
  apply_activation(layer.activation, out);
  return out;
}

uint32_t EmbeddingNet::concat_dim() const {
  uint32_t total = 0;
  for (const auto& table : embeddings) {
    total += table.dim;
  }
  return total;
}

void EmbeddingNet::validate() const {
  if (embeddings.empty()) {
    throw UsageError("network has no embedding tables");
  }
  if (embeddings.size() > 3) {
    throw UsageError("network supports at most three embedding tables");
  }
  if (layers.empty()) {
    throw UsageError("network has no layers");
  }
  uint32_t width = concat_dim();
  for (size_t l = 0; l < layers.size(); l++) {
    if (layers[l].in != width) {
      throw UsageError("layer " + std::to_string(l) + " expects input of size " +
                       std::to_string(layers[l].in) + ", got " + std::to_string(width));
    }
    width = layers[l].out;
  }
  const DenseLayer& last = layers.back();
  if (last.out != 1 || last.activation != Activation::Sigmoid) {
    throw UsageError("output layer must be a single sigmoid unit");
  }
}

namespace {

// Scratch space for one example's forward pass; reused across the batch.
struct ForwardCache {
  std::vector<double> input;                       // concatenated embeddings
  std::vector<std::vector<double>> activations;    // post-activation per layer
};

double forward_cached(const EmbeddingNet& net, std::span<const uint32_t> indices,
                      ForwardCache& cache) {
  cache.input.clear();
  for (size_t f = 0; f < net.embeddings.size(); f++) {
    auto row = net.embeddings[f].row(indices[f]);
    cache.input.insert(cache.input.end(), row.begin(), row.end());
  }
  cache.activations.resize(net.layers.size());
  const std::vector<double>* x = &cache.input;
  for (size_t l = 0; l < net.layers.size(); l++) {
    const DenseLayer& layer = net.layers[l];
    cache.activations[l].resize(layer.out);
    affine(layer, *x, cache.activations[l]);
    apply_activation(layer.activation, cache.activations[l]);
    x = &cache.activations[l];
  }
  return cache.activations.back()[0];
}

void check_indices(const EmbeddingNet& net, std::span<const uint32_t> indices) {
  for (size_t f = 0; f < net.embeddings.size(); f++) {
    if (indices[f] >= net.embeddings[f].rows) {
      throw UsageError("embedding index " + std::to_string(indices[f]) +
                       " out of range for table of " + std::to_string(net.embeddings[f].rows) +
                       " rows");
    }
  }
}

}  // namespace

double EmbeddingNet::forward(std::span<const uint32_t> indices) const {
  if (indices.size() < arity()) {
    throw UsageError("expected " + std::to_string(arity()) + " indices, got " +
                     std::to_string(indices.size()));
  }
  check_indices(*this, indices);
  ForwardCache cache;
  return forward_cached(*this, indices, cache);
}

Gradients zero_gradients(const EmbeddingNet& net) {
  Gradients grads;
  grads.embeddings.resize(net.embeddings.size());
  for (size_t f = 0; f < net.embeddings.size(); f++) {
    grads.embeddings[f].assign(net.embeddings[f].data.size(), 0.0);
  }
  grads.layers.resize(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); l++) {
    grads.layers[l].weights.assign(net.layers[l].weights.size(), 0.0);
    grads.layers[l].bias.assign(net.layers[l].bias.size(), 0.0);
  }
  return grads;
}

std::vector<double> forward_batch(const EmbeddingNet& net, std::span<const Example> batch) {
  ForwardCache cache;
  std::vector<double> out;
  out.reserve(batch.size());
  for (const Example& ex : batch) {
    check_indices(net, ex.idx);
    out.push_back(forward_cached(net, ex.idx, cache));
  }
  return out;
}

double mean_loss(const EmbeddingNet& net, std::span<const Example> batch) {
  if (batch.empty()) {
    throw UsageError("loss of an empty batch is undefined");
  }
  ForwardCache cache;
  double total = 0.0;
  for (const Example& ex : batch) {
    check_indices(net, ex.idx);
    double p = forward_cached(net, ex.idx, cache);
    total += bce_loss(p, ex.label);
  }
  return total / static_cast<double>(batch.size());
}

double backward(const EmbeddingNet& net, std::span<const Example> batch, Gradients& grads) {
  if (batch.empty()) {
    throw UsageError("cannot backpropagate an empty batch");
  }
  net.validate();
  if (grads.embeddings.size() != net.embeddings.size() || grads.layers.size() != net.layers.size()) {
    grads = zero_gradients(net);
  } else {
    for (auto& g : grads.embeddings) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : grads.layers) {
      std::fill(g.weights.begin(), g.weights.end(), 0.0);
      std::fill(g.bias.begin(), g.bias.end(), 0.0);
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  ForwardCache cache;
  std::vector<double> delta;       // dL/dz of the current layer
  std::vector<double> delta_prev;  // dL/dh of the layer below
  double total = 0.0;

  for (const Example& ex : batch) {
    check_indices(net, ex.idx);
    double p = forward_cached(net, ex.idx, cache);
    total += bce_loss(p, ex.label);

    // Sigmoid output + BCE collapse to dL/dz = (p - y) / B.
    delta.assign(1, (p - ex.label) * inv_batch);

    for (size_t l = net.layers.size(); l-- > 0;) {
      const DenseLayer& layer = net.layers[l];
      const std::vector<double>& below =
          (l == 0) ? cache.input : cache.activations[l - 1];
      LayerGrad& lg = grads.layers[l];

      for (uint32_t j = 0; j < layer.out; j++) {
        double d = delta[j];
        lg.bias[j] += d;
        double* wg = lg.weights.data() + static_cast<size_t>(j) * layer.in;
        for (uint32_t i = 0; i < layer.in; i++) {
          wg[i] += d * below[i];
        }
      }

      // dL/d(input of this layer) = W^T delta, then the activation
      // derivative of the layer below (ReLU differentiates off its own
      // post-activation: h > 0 iff z > 0).
      delta_prev.assign(layer.in, 0.0);
      for (uint32_t j = 0; j < layer.out; j++) {
        double d = delta[j];
        const double* w = layer.weights.data() + static_cast<size_t>(j) * layer.in;
        for (uint32_t i = 0; i < layer.in; i++) {
          delta_prev[i] += w[i] * d;
        }
      }
      if (l > 0) {
        const DenseLayer& lower = net.layers[l - 1];
        const std::vector<double>& h = cache.activations[l - 1];
        switch (lower.activation) {
          case Activation::Identity:
            break;
          case Activation::Relu:
            for (uint32_t i = 0; i < lower.out; i++) {
              if (h[i] <= 0.0) delta_prev[i] = 0.0;
            }
            break;
          case Activation::Sigmoid:
            for (uint32_t i = 0; i < lower.out; i++) {
              delta_prev[i] *= h[i] * (1.0 - h[i]);
            }
            break;
        }
      }
      delta.swap(delta_prev);
    }

    // delta now holds dL/d(concatenated input); split across the tables.
    size_t offset = 0;
    for (size_t f = 0; f < net.embeddings.size(); f++) {
      uint32_t dim = net.embeddings[f].dim;
      double* row_grad =
          grads.embeddings[f].data() + static_cast<size_t>(ex.idx[f]) * dim;
      for (uint32_t i = 0; i < dim; i++) {
        row_grad[i] += delta[offset + i];
      }
      offset += dim;
    }
  }
  return total * inv_batch;
}

size_t param_count(const EmbeddingNet& net) {
  size_t n = 0;
  for (const auto& table : net.embeddings) n += table.data.size();
  for (const auto& layer : net.layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::vector<double> copy_params(const EmbeddingNet& net) {
  std::vector<double> out;
  out.reserve(param_count(net));
  for (const auto& table : net.embeddings) {
    out.insert(out.end(), table.data.begin(), table.data.end());
  }
  for (const auto& layer : net.layers) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void set_params(EmbeddingNet& net, std::span<const double> params) {
  if (params.size() != param_count(net)) {
    throw UsageError("parameter vector of size " + std::to_string(params.size()) +
                     " does not match network with " + std::to_string(param_count(net)) +
                     " parameters");
  }
  size_t pos = 0;
  for (auto& table : net.embeddings) {
    std::copy_n(params.begin() + pos, table.data.size(), table.data.begin());
    pos += table.data.size();
  }
  for (auto& layer : net.layers) {
    std::copy_n(params.begin() + pos, layer.weights.size(), layer.weights.begin());
    pos += layer.weights.size();
    std::copy_n(params.begin() + pos, layer.bias.size(), layer.bias.begin());
    pos += layer.bias.size();
  }
}

std::vector<double> flatten_gradients(const EmbeddingNet& net, const Gradients& grads) {
  std::vector<double> out;
  out.reserve(param_count(net));
  for (const auto& g : grads.embeddings) {
    out.insert(out.end(), g.begin(), g.end());
  }
  for (const auto& g : grads.layers) {
    out.insert(out.end(), g.weights.begin(), g.weights.end());
    out.insert(out.end(), g.bias.begin(), g.bias.end());
  }
  if (out.size() != param_count(net)) {
    throw UsageError("gradient shape does not match the network");
  }
  return out;
}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m.size() || grads.size() != m.size()) {
    throw UsageError("optimizer state sized for " + std::to_string(m.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  t += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); i++) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    double m_hat = m[i] / bc1;
    double v_hat = v[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
  }
}

namespace {

double relative_error(double a, double b) {
  double scale = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / scale;
}

double max_rel_error_at(const EmbeddingNet& net, std::span<const Example> batch,
                        const std::vector<double>& analytic_flat,
                        const GradCheckOptions& options) {
  // Central differences around the current parameters, on a random sample
  // of coordinates (all coordinates when the network is small enough).
  size_t total = param_count(net);
  std::vector<size_t> coords;
  if (total <= options.sample) {
    coords.resize(total);
    for (size_t i = 0; i < total; i++) coords[i] = i;
  } else {
    Rng rng(options.seed);
    auto picked = rng.sample_without_replacement(static_cast<uint32_t>(total),
                                                 static_cast<uint32_t>(options.sample));
    coords.assign(picked.begin(), picked.end());
  }

  EmbeddingNet probe = net;
  std::vector<double> params = copy_params(probe);
  double worst = 0.0;
  for (size_t c : coords) {
    double saved = params[c];
    params[c] = saved + options.h;
    set_params(probe, params);
    double up = mean_loss(probe, batch);
    params[c] = saved - options.h;
    set_params(probe, params);
    double down = mean_loss(probe, batch);
    params[c] = saved;
    double numeric = (up - down) / (2.0 * options.h);
    worst = std::max(worst, relative_error(analytic_flat[c], numeric));
  }
  set_params(probe, params);
  return worst;
}

}  // namespace

double gradient_check(const EmbeddingNet& net, std::span<const Example> batch,
                      const GradCheckOptions& options) {
  Gradients grads = zero_gradients(net);
  backward(net, batch, grads);
  return max_rel_error_at(net, batch, flatten_gradients(net, grads), options);
}

double gradient_rel_error(const EmbeddingNet& net, std::span<const Example> batch,
                          const Gradients& analytic, const GradCheckOptions& options) {
  return max_rel_error_at(net, batch, flatten_gradients(net, analytic), options);
}

}  // namespace comorec::nn
