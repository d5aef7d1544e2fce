#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "textcnnlab/util.hpp"

namespace textcnn::nn {

struct GradCheckOptions {
  double h = 1e-5;
  size_t max_coords = 200;  // seeded random subset for large fragments
  uint64_t seed = 0x9d2c;
  // a coordinate for which this returns false is skipped (e.g. relu inputs
  // sitting exactly at the kink)
  std::function<bool(size_t)> include;
};

// Central-difference check of an analytic gradient. `loss` re-evaluates the
// scalar objective from the current parameter values; `params`/`grads` alias
// the fragment's flattened trainable coordinates. Returns the max relative
// error over the checked coordinates.
inline double grad_check(const std::function<double()>& loss, double* params,
                         const double* grads, size_t n, const GradCheckOptions& opt = {}) {
  std::vector<size_t> coords;
  if (n <= opt.max_coords) {
    coords.resize(n);
    for (size_t i = 0; i < n; ++i) coords[i] = i;
  } else {
    Rng rng(opt.seed);
    coords.reserve(opt.max_coords);
    for (size_t i = 0; i < opt.max_coords; ++i) coords.push_back(rng.index(n));
  }

  double max_rel = 0.0;
  for (size_t i : coords) {
    if (opt.include && !opt.include(i)) continue;
    const double saved = params[i];
    params[i] = saved + opt.h;
    const double up = loss();
    params[i] = saved - opt.h;
    const double down = loss();
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * opt.h);
    const double analytic = grads[i];
    const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-8);
    max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
  }
  return max_rel;
}

}  // namespace textcnn::nn
