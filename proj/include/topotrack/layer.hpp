#pragma once

#include <span>
#include <vector>

#include "topotrack/matrix.hpp"

namespace topotrack {

class SeededRng;

enum class Activation { identity, relu, sigmoid };

double apply_activation(Activation act, double x);
double activation_grad(Activation act, double pre, double post);

/// One dense layer: activation(W x + b), with hand-derived gradients.
struct FeedForwardLayer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  /// Uniform init in [-s, s] with s = 1/sqrt(in). Draw order is fixed
  /// (weights row-major, then bias) so seeded setups reproduce exactly.
  static FeedForwardLayer random(std::size_t out, std::size_t in, Activation act,
                                 SeededRng& rng);
  static FeedForwardLayer zeros(std::size_t out, std::size_t in, Activation act);
};

std::vector<double> ff_forward(const FeedForwardLayer& layer, std::span<const double> x);

struct FfGradients {
  Matrix weight;
  std::vector<double> bias;
};

/// Gradients of a scalar loss w.r.t. layer parameters and (optionally) the
/// input, given the upstream gradient w.r.t. the layer output.
FfGradients ff_backward(const FeedForwardLayer& layer, std::span<const double> x,
                        std::span<const double> upstream,
                        std::vector<double>* input_grad = nullptr);

/// In-place accumulating variant used by the training loops.
void ff_backward_accumulate(const FeedForwardLayer& layer, std::span<const double> x,
                            std::span<const double> upstream, FfGradients& acc,
                            std::vector<double>* input_grad = nullptr);

}  // namespace topotrack
