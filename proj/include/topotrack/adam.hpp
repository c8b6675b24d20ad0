#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace topotrack {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adaptive-moment SGD with bias correction. Moment buffers are allocated on
/// the first step and shape-checked on every later one.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {});

  /// One update over a parameter group. The group layout (count and lengths)
  /// must stay identical across calls.
  void step(std::span<std::span<double>> params, std::span<std::span<const double>> grads);

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace topotrack
