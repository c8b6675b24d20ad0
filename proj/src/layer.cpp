#include "topotrack/layer.hpp"

#include <cmath>

#include "topotrack/errors.hpp"
#include "topotrack/ops.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

// Derivative expressed through the post-activation value where that is
// cheaper; `pre` is only consulted for relu.
double activation_grad(Activation act, double pre, double post) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

FeedForwardLayer FeedForwardLayer::random(std::size_t out, std::size_t in, Activation act,
                                          SeededRng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  FeedForwardLayer layer;
  layer.weight = Matrix::random_uniform(out, in, -s, s, rng);
  layer.bias.resize(out);
  for (double& b : layer.bias) b = rng.uniform(-s, s);
  layer.activation = act;
  return layer;
}

FeedForwardLayer FeedForwardLayer::zeros(std::size_t out, std::size_t in, Activation act) {
  FeedForwardLayer layer;
  layer.weight = Matrix(out, in);
  layer.bias.assign(out, 0.0);
  layer.activation = act;
  return layer;
}

std::vector<double> ff_forward(const FeedForwardLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in_dim()) throw DimensionError("ff_forward: input length mismatch");
  std::vector<double> out(layer.out_dim());
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    double z = layer.bias[i];
    auto w = layer.weight.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
    out[i] = apply_activation(layer.activation, z);
  }
  return out;
}

void ff_backward_accumulate(const FeedForwardLayer& layer, std::span<const double> x,
                            std::span<const double> upstream, FfGradients& acc,
                            std::vector<double>* input_grad) {
  if (x.size() != layer.in_dim()) throw DimensionError("ff_backward: input length mismatch");
  if (upstream.size() != layer.out_dim())
    throw DimensionError("ff_backward: upstream length mismatch");
  if (acc.weight.rows() != layer.out_dim() || acc.weight.cols() != layer.in_dim())
    acc.weight = Matrix(layer.out_dim(), layer.in_dim());
  if (acc.bias.size() != layer.out_dim()) acc.bias.assign(layer.out_dim(), 0.0);
  if (input_grad && input_grad->size() != x.size()) input_grad->assign(x.size(), 0.0);

  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    double z = layer.bias[i];
    auto w = layer.weight.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
    const double post = apply_activation(layer.activation, z);
    const double dz = upstream[i] * activation_grad(layer.activation, z, post);
    acc.bias[i] += dz;
    auto gw = acc.weight.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) gw[j] += dz * x[j];
    if (input_grad) {
      for (std::size_t j = 0; j < x.size(); ++j) (*input_grad)[j] += dz * w[j];
    }
  }
}

FfGradients ff_backward(const FeedForwardLayer& layer, std::span<const double> x,
                        std::span<const double> upstream, std::vector<double>* input_grad) {
  FfGradients grads;
  grads.weight = Matrix(layer.out_dim(), layer.in_dim());
  grads.bias.assign(layer.out_dim(), 0.0);
  if (input_grad) input_grad->assign(x.size(), 0.0);
  ff_backward_accumulate(layer, x, upstream, grads, input_grad);
  return grads;
}

}  // namespace topotrack
