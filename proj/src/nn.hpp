#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rng.hpp"

namespace comorec::nn {

enum class Activation { Identity, Relu, Sigmoid };

// Numerically stable logistic: no overflow for large |z|.
inline double sigmoid(double z) {
  if (z >= 0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy with the probability clamped to [1e-12, 1 - 1e-12]
// so a saturated prediction yields a finite loss.
inline constexpr double kProbClamp = 1e-12;

inline double bce_loss(double p, double y) {
  if (p < kProbClamp) p = kProbClamp;
  if (p > 1.0 - kProbClamp) p = 1.0 - kProbClamp;
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

struct EmbeddingTable {
  uint32_t rows = 0;
  uint32_t dim = 0;
  std::vector<double> data;  // rows x dim, row-major

  std::span<const double> row(uint32_t i) const;
  std::span<double> row(uint32_t i);
};

// Uniform init in [-0.05, 0.05].
EmbeddingTable make_embedding(uint32_t rows, uint32_t dim, Rng& rng);

struct DenseLayer {
  uint32_t in = 0;
  uint32_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  Activation activation = Activation::Identity;
};

// Glorot-uniform weights, zero bias.
DenseLayer make_dense(uint32_t in, uint32_t out, Activation activation, Rng& rng);

// y = activation(W x + b); throws UsageError on a shape mismatch.
std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x);

// Embedding lookups concatenated into an MLP whose final layer is one
// sigmoid unit. This one graph covers both the pair model (two tables) and
// the triple model (three tables).
struct EmbeddingNet {
  std::vector<EmbeddingTable> embeddings;
  std::vector<DenseLayer> layers;

  size_t arity() const { return embeddings.size(); }
  uint32_t concat_dim() const;

  // Shape and output-layer checks; throws UsageError when inconsistent.
  void validate() const;

  // Probability for one record; indices must be in range.
  double forward(std::span<const uint32_t> indices) const;
};

// One training record: arity() leading entries of `idx` are used.
struct Example {
  std::array<uint32_t, 3> idx = {0, 0, 0};
  double label = 0.0;
};

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct Gradients {
  std::vector<std::vector<double>> embeddings;  // dense, same shape as tables
  std::vector<LayerGrad> layers;
};

Gradients zero_gradients(const EmbeddingNet& net);

// Probabilities for a whole batch, reusing one forward scratch buffer.
std::vector<double> forward_batch(const EmbeddingNet& net, std::span<const Example> batch);

// Mean BCE over the batch.
double mean_loss(const EmbeddingNet& net, std::span<const Example> batch);

// Exact analytic gradients of the mean batch BCE with respect to every
// embedding row touched and every layer parameter. Returns the mean loss.
double backward(const EmbeddingNet& net, std::span<const Example> batch, Gradients& grads);

// Flat parameter order: embedding tables in order (row-major), then per
// layer weights then bias. Shared by the optimizer and finite differences.
size_t param_count(const EmbeddingNet& net);
std::vector<double> copy_params(const EmbeddingNet& net);
void set_params(EmbeddingNet& net, std::span<const double> params);
std::vector<double> flatten_gradients(const EmbeddingNet& net, const Gradients& grads);

// Adam with bias correction over the flat parameter layout.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(size_t n_params, double lr = 1e-3)
      : learning_rate(lr), m(n_params, 0.0), v(n_params, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads);
};

struct GradCheckOptions {
  double h = 1e-5;
  size_t sample = 50;  // coordinates checked (all of them when fewer exist)
  uint64_t seed = 0;
};

// Central finite differences on a random sample of coordinates; returns the
// max relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
double gradient_check(const EmbeddingNet& net, std::span<const Example> batch,
                      const GradCheckOptions& options = {});

// Same comparison against caller-supplied analytic gradients; lets tests
// verify that a corrupted gradient is detected.
double gradient_rel_error(const EmbeddingNet& net, std::span<const Example> batch,
                          const Gradients& analytic, const GradCheckOptions& options);

}  // namespace comorec::nn
