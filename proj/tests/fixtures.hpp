#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "keat/attention.hpp"
#include "keat/graph.hpp"
#include "keat/kernels.hpp"
#include "keat/rng.hpp"
#include "keat/tensor.hpp"
#include "keat/time_encoding.hpp"

namespace keat::testing {

inline auto random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0)
    -> Tensor {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

inline auto random_dts(std::size_t k, Rng& rng, double hi = 3.0) -> std::vector<double> {
  std::uniform_real_distribution<double> u(0.0, hi);
  std::vector<double> out(k);
  for (auto& x : out) x = u(rng);
  return out;
}

/// A neighbor batch over `node_states` rows 1..k (row 0 is the center).
inline auto random_batch(std::size_t k, std::size_t d_e, Rng& rng) -> NeighborBatch {
  NeighborBatch b;
  b.center = 0;
  b.query_time = 10.0;
  b.delta_ts = random_dts(k, rng);
  for (std::size_t j = 0; j < k; ++j) {
    const Tensor e = random_tensor({d_e}, rng);
    b.neighbors.push_back({j + 1, e.values(), b.query_time - b.delta_ts[j]});
  }
  return b;
}

/// Relative error of two gradient tensors, ‖a − b‖ / max(‖a‖, ‖b‖); 0 when both vanish.
inline auto relative_error(const Tensor& a, const Tensor& b) -> double {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom < 1e-12) return std::sqrt(diff);
  return std::sqrt(diff) / denom;
}

inline auto harmonic(std::size_t n) -> double {
  double h = 0.0;
  for (std::size_t r = 1; r <= n; ++r) h += 1.0 / static_cast<double>(r);
  return h;
}

}  // namespace keat::testing
