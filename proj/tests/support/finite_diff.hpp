#pragma once

#include <cmath>
#include <span>
#include <string>

#include "doctest.h"

namespace topotrack::testing {

// Relative error with a small floor so near-zero gradients compare sanely.
inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2});
}

/// Central finite differences of `loss` w.r.t. every entry of `params`,
/// compared against the precomputed `analytic` gradient. `loss` must read the
/// parameters through the same storage that `params` views.
template <class LossFn>
void check_gradient_span(std::span<double> params, std::span<const double> analytic,
                         LossFn&& loss, double tol = 1e-4, double h = 1e-5) {
  REQUIRE(params.size() == analytic.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    INFO("parameter ", i, ": analytic=", analytic[i], " fd=", fd);
    CHECK(rel_error(analytic[i], fd) <= tol);
  }
}

}  // namespace topotrack::testing
