#include "topotrack/adam.hpp"

#include <cmath>

#include "topotrack/errors.hpp"

namespace topotrack {

AdamOptimizer::AdamOptimizer(AdamConfig cfg) : cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw DataError("adam: learning rate must be positive");
  if (cfg_.beta1 <= 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 <= 0.0 || cfg_.beta2 >= 1.0)
    throw DataError("adam: moment decays must lie in (0,1)");
  if (cfg_.epsilon <= 0.0) throw DataError("adam: epsilon must be positive");
}

void AdamOptimizer::step(std::span<std::span<double>> params,
                         std::span<std::span<const double>> grads) {
  if (params.size() != grads.size()) throw DimensionError("adam: group count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t g = 0; g < params.size(); ++g) {
      m_[g].assign(params[g].size(), 0.0);
      v_[g].assign(params[g].size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw DimensionError("adam: group count changed");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto p = params[g];
    auto gr = grads[g];
    if (p.size() != gr.size() || p.size() != m_[g].size())
      throw DimensionError("adam: parameter/gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[g][i] = cfg_.beta1 * m_[g][i] + (1.0 - cfg_.beta1) * gr[i];
      v_[g][i] = cfg_.beta2 * v_[g][i] + (1.0 - cfg_.beta2) * gr[i] * gr[i];
      const double mhat = m_[g][i] / bc1;
      const double vhat = v_[g][i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

}  // namespace topotrack
