#include "rtb/core/mlp.hpp"

#include <cmath>

#include "rtb/core/error.hpp"
#include "rtb/kernels/kernels.hpp"

namespace rtb {

namespace k = kernels::parallel;

namespace {

kernels::ConstMat view(const Tensor& t) { return {t.data(), t.rows(), t.cols()}; }
kernels::Mat view(Tensor& t) { return {t.data(), t.rows(), t.cols()}; }

double apply(Activation act, double z) {
  switch (act) {
    case Activation::Relu:
      return z > 0.0 ? z : 0.0;
    case Activation::Tanh:
      return std::tanh(z);
    case Activation::Identity:
      return z;
  }
  return z;
}

// First and second derivatives expressed through the activation output.
double first_derivative(Activation act, double a) {
  switch (act) {
    case Activation::Relu:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh:
      return 1.0 - a * a;
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

double second_derivative(Activation act, double a) {
  if (act == Activation::Tanh) return -2.0 * a * (1.0 - a * a);
  return 0.0;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Relu:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "'");
}

bool operator==(const Layer& a, const Layer& b) {
  return a.activation == b.activation && a.weight == b.weight && a.bias == b.bias;
}

std::size_t MlpParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim();
}

std::size_t MlpParams::output_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim();
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.out_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " has weight " +
                       l.weight.shape_string() + " and bias " + l.bias.shape_string());
    }
    if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
      throw ShapeError("layer " + std::to_string(i) + " expects input width " +
                       std::to_string(l.in_dim()) + " but previous layer emits " +
                       std::to_string(layers[i - 1].out_dim()));
    }
  }
}

std::vector<Tensor*> MlpParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  for (const auto& l : layers) {
    z.layers.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape()), l.activation});
  }
  return z;
}

bool MlpParams::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.all_finite() || !l.bias.all_finite()) return false;
  }
  return true;
}

Tensor xavier_init(const std::vector<std::size_t>& shape, Rng& rng) {
  if (shape.size() != 2) throw ShapeError("xavier_init expects a 2-D shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

MlpParams make_mlp(const std::vector<std::size_t>& dims, Activation hidden,
                   Activation output, Rng& rng) {
  if (dims.size() < 2) throw ShapeError("make_mlp needs at least input and output widths");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    p.layers.push_back({xavier_init({dims[i + 1], dims[i]}, rng), Tensor({dims[i + 1]}),
                        last ? output : hidden});
  }
  return p;
}

Tensor as_batch(const Tensor& t) {
  if (t.rank() == 2) return t;
  if (t.rank() == 1) return Tensor({1, t.size()}, std::vector<double>(t.values().begin(), t.values().end()));
  throw ShapeError("expected rank 1 or 2 input, got " + t.shape_string());
}

ForwardResult mlp_forward(const MlpParams& params, const Tensor& input, bool record) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  Tensor x = as_batch(input);
  if (x.cols() != params.input_dim()) {
    throw ShapeError("input width " + std::to_string(x.cols()) +
                     " does not match network input " + std::to_string(params.input_dim()));
  }
  ForwardResult result;
  if (record) result.trace.params = &params;
  const std::size_t batch = x.rows();
  for (const auto& layer : params.layers) {
    Tensor z({batch, layer.out_dim()});
    k::matmul_nt(view(x), view(layer.weight), layer.bias.values(), view(z));
    for (auto& v : z.values()) v = apply(layer.activation, v);
    if (record) result.trace.inputs.push_back(std::move(x));
    x = std::move(z);
    if (record) result.trace.activations.push_back(x);
  }
  result.output = std::move(x);
  return result;
}

MlpGradients backward(const MlpTrace& trace, const Tensor& seed) {
  if (!trace.recorded()) throw Error("backward called without a recorded forward trace");
  const MlpParams& params = *trace.params;
  const Tensor& out = trace.activations.back();
  Tensor adj = as_batch(seed);
  if (adj.rows() != out.rows() || adj.cols() != out.cols()) {
    throw ShapeError("seed shape " + seed.shape_string() + " does not match output " +
                     out.shape_string());
  }
  MlpGradients g{params.zeros_like(), {}};
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const Layer& layer = params.layers[li];
    const Tensor& a = trace.activations[li];
    for (std::size_t i = 0; i < adj.size(); ++i) {
      adj[i] *= first_derivative(layer.activation, a[i]);
    }
    Layer& gl = g.params.layers[li];
    k::matmul_tn_acc(view(adj), view(trace.inputs[li]), view(gl.weight));
    for (std::size_t r = 0; r < adj.rows(); ++r) {
      auto row = adj.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) gl.bias[j] += row[j];
    }
    Tensor next({adj.rows(), layer.in_dim()});
    k::matmul_nn(view(adj), view(layer.weight), view(next));
    adj = std::move(next);
  }
  g.input = std::move(adj);
  return g;
}

GradientPenalty input_gradient_norm_grad(const MlpParams& params, const Tensor& x_hat,
                                         std::optional<std::vector<double>> row_weights) {
  if (params.output_dim() != 1) {
    throw ShapeError("gradient penalty needs a scalar-output critic, got output width " +
                     std::to_string(params.output_dim()));
  }
  auto fwd = mlp_forward(params, x_hat, true);
  const std::size_t batch = fwd.output.rows();
  std::vector<double> weights =
      row_weights ? std::move(*row_weights)
                  : std::vector<double>(batch, 1.0 / static_cast<double>(batch));
  if (weights.size() != batch) throw ShapeError("penalty row weights do not match batch");

  Tensor ones({batch, 1}, 1.0);
  Tensor grad_x = backward(fwd.trace, ones).input;

  GradientPenalty result;
  result.input_grad_norms.resize(batch);
  result.penalties.resize(batch);
  // Tangent direction u_r = d(weight_r * penalty_r) / d(grad_x c(x_r)).
  Tensor tangent(grad_x.shape());
  for (std::size_t r = 0; r < batch; ++r) {
    double sq = 0.0;
    for (double v : grad_x.row(r)) sq += v * v;
    const double norm = std::sqrt(sq);
    result.input_grad_norms[r] = norm;
    result.penalties[r] = (norm - 1.0) * (norm - 1.0);
    result.weighted_penalty += weights[r] * result.penalties[r];
    const double coef = norm > 0.0 ? weights[r] * 2.0 * (norm - 1.0) / norm : 0.0;
    auto dst = tangent.row(r);
    auto src = grad_x.row(r);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = coef * src[j];
  }

  // Forward-mode pass of the tangent through the recorded network.
  const auto& layers = params.layers;
  const std::size_t n_layers = layers.size();
  std::vector<Tensor> tangent_in(n_layers);   // a-dot_{l-1}
  std::vector<Tensor> tangent_pre(n_layers);  // z-dot_l
  Tensor cur = std::move(tangent);
  for (std::size_t li = 0; li < n_layers; ++li) {
    const Layer& layer = layers[li];
    Tensor zdot({batch, layer.out_dim()});
    k::matmul_nt(view(cur), view(layer.weight), {}, view(zdot));
    Tensor adot = zdot;
    const Tensor& a = fwd.trace.activations[li];
    for (std::size_t i = 0; i < adot.size(); ++i) {
      adot[i] *= first_derivative(layer.activation, a[i]);
    }
    tangent_in[li] = std::move(cur);
    tangent_pre[li] = std::move(zdot);
    cur = std::move(adot);
  }

  // Reverse pass over the joint (primal, tangent) computation, seeded on the
  // tangent output. The primal output does not enter the objective.
  result.grad = params.zeros_like();
  Tensor adj_tan({batch, 1}, 1.0);
  Tensor adj_pri({batch, 1}, 0.0);
  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& layer = layers[li];
    const Tensor& a = fwd.trace.activations[li];
    const Tensor& zdot = tangent_pre[li];
    Tensor adj_zdot(adj_tan.shape());
    Tensor adj_z(adj_tan.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double s1 = first_derivative(layer.activation, a[i]);
      const double s2 = second_derivative(layer.activation, a[i]);
      adj_zdot[i] = s1 * adj_tan[i];
      adj_z[i] = s2 * zdot[i] * adj_tan[i] + s1 * adj_pri[i];
    }
    Layer& gl = result.grad.layers[li];
    k::matmul_tn_acc(view(adj_zdot), view(tangent_in[li]), view(gl.weight));
    k::matmul_tn_acc(view(adj_z), view(fwd.trace.inputs[li]), view(gl.weight));
    for (std::size_t r = 0; r < batch; ++r) {
      auto row = adj_z.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) gl.bias[j] += row[j];
    }
    if (li == 0) break;
    Tensor next_tan({batch, layer.in_dim()});
    Tensor next_pri({batch, layer.in_dim()});
    k::matmul_nn(view(adj_zdot), view(layer.weight), view(next_tan));
    k::matmul_nn(view(adj_z), view(layer.weight), view(next_pri));
    adj_tan = std::move(next_tan);
    adj_pri = std::move(next_pri);
  }
  return result;
}

void axpy(MlpParams& a, double scale, const MlpParams& b) {
  auto dst = a.tensors();
  auto src = b.tensors();
  if (dst.size() != src.size()) throw ShapeError("axpy over mismatched networks");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (!dst[i]->same_shape(*src[i])) throw ShapeError("axpy over mismatched tensors");
    for (std::size_t j = 0; j < dst[i]->size(); ++j) (*dst[i])[j] += scale * (*src[i])[j];
  }
}

}  // namespace rtb
