#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/core/tensor.hpp"

namespace rtb {

enum class Activation { Relu, Tanh, Identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct Layer {
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

// Parameters of a fully connected network. Also used as the container for
// gradients with respect to those parameters.
struct MlpParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  // Throws ShapeError when adjacent layers do not compose.
  void validate() const;

  // Flat view in (w0, b0, w1, b1, ...) order.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  MlpParams zeros_like() const;
  bool all_finite() const;

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

bool operator==(const Layer& a, const Layer& b);

// Builds a network with the given widths, Xavier-uniform weights and zero
// biases. dims = {in, h1, ..., out}.
MlpParams make_mlp(const std::vector<std::size_t>& dims, Activation hidden,
                   Activation output, Rng& rng);

// Entries uniform in +-sqrt(6 / (fan_in + fan_out)). shape = {fan_out, fan_in}.
Tensor xavier_init(const std::vector<std::size_t>& shape, Rng& rng);

// Per-layer record of a forward pass, sufficient for reverse mode. Holds a
// pointer to the parameters it was produced with; they must outlive it.
struct MlpTrace {
  const MlpParams* params = nullptr;
  std::vector<Tensor> inputs;       // layer inputs a_{l-1}, (batch, in)
  std::vector<Tensor> activations;  // layer outputs a_l, (batch, out)

  bool recorded() const { return params != nullptr; }
};

struct ForwardResult {
  Tensor output;  // (batch, out)
  MlpTrace trace;
};

// Evaluates the network on a batch (rank 2, one example per row) or on a single
// example (rank 1). Rank-1 input yields a (1, out) output.
ForwardResult mlp_forward(const MlpParams& params, const Tensor& input, bool record);

struct MlpGradients {
  MlpParams params;  // d(sum over rows of seed . output) / d(parameter)
  Tensor input;      // same shape as the batch input
};

// Reverse pass. seed has the shape of the forward output.
MlpGradients backward(const MlpTrace& trace, const Tensor& seed);

struct GradientPenalty {
  std::vector<double> input_grad_norms;  // |grad_x c(x_row)| per row
  std::vector<double> penalties;         // (norm - 1)^2 per row
  double weighted_penalty = 0.0;         // sum_r weight_r * penalty_r
  MlpParams grad;                        // d(weighted_penalty) / d(params)
};

// Gradient of sum_r weight_r * (|grad_x c(x_r)|_2 - 1)^2 with respect to the
// parameters of a scalar-output network c, by forward-over-reverse
// differentiation. Row weights default to 1/batch (the batch mean).
GradientPenalty input_gradient_norm_grad(const MlpParams& params, const Tensor& x_hat,
                                         std::optional<std::vector<double>> row_weights = {});

// a += scale * b, elementwise over every parameter tensor.
void axpy(MlpParams& a, double scale, const MlpParams& b);

// Promotes a rank-1 tensor to a (1, n) batch; returns rank-2 inputs unchanged.
Tensor as_batch(const Tensor& t);

}  // namespace rtb
