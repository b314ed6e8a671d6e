#pragma once

#include <algorithm>
#include <map>
#include <string>

#include "fixtures.hpp"
#include "keat/autodiff.hpp"
#include "keat/params.hpp"

namespace keat::testing {

/// A random kernelized attention problem whose scalar loss depends on every
/// attention matrix, the learnable time frequencies and (for the MLP family)
/// the kernel weights.
struct GradientFixture {
  KernelSpec kernel;
  TimeEncoder encoder;
  ParamMap params;
  Tensor h_center, states, edges, readout;
  std::vector<double> dts;

  static auto make(std::uint64_t index) -> GradientFixture {
    Rng rng(substream_seed(20240611, "gradient-fixture", index));
    std::uniform_int_distribution<std::size_t> small(1, 4);
    AttentionDims dims;
    dims.d = small(rng);
    dims.d_prime = small(rng);
    dims.d_e = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    dims.d_t = 2 * std::uniform_int_distribution<std::size_t>(1, 2)(rng);
    const std::size_t k = small(rng);

    GradientFixture f;
    const double width = std::uniform_real_distribution<double>(0.5, 3.0)(rng);
    switch (index % 3) {
      case 0: f.kernel = KernelSpec::laplacian(width); break;
      case 1: f.kernel = KernelSpec::rbf(width); break;
      default: f.kernel = KernelSpec::mlp_kernel(width, rng); break;
    }
    f.params = AttentionParams::init(dims, rng).to_map();
    const Tensor omega = random_tensor({dims.d_t / 2}, rng, 0.1, 2.0);
    f.params["time.omega"] = omega;
    f.encoder = TimeEncoder(EncoderMode::learnable, omega.values());
    for (const auto& [name, value] : f.kernel.mlp) f.params[name] = value;
    f.h_center = random_tensor({dims.d}, rng);
    f.states = random_tensor({k, dims.d}, rng);
    f.edges = random_tensor({k, dims.d_e}, rng);
    f.readout = random_tensor({dims.d_prime}, rng);
    f.dts = random_dts(k, rng);
    return f;
  }

  [[nodiscard]] auto loss(ad::Tape& tape, const VarMap& vars) const -> ad::Var {
    const ad::Var phi = encoder.encode(tape, dts, vars.at("time.omega"));
    const ad::Var edge_time = ad::concat_cols(tape.constant(edges), phi);
    const bool mlp = kernel.family == KernelFamily::mlp;
    const ad::Var psi = kernel_weights(tape, kernel, dts, mlp ? &vars : nullptr);
    const AttentionResult r = attend(attention_vars(vars), tape.constant(h_center), tape.constant(states),
                                     edge_time, psi, Modulation::edge);
    return ad::dot(tape.constant(readout), ad::tanh(r.h_prime));
  }

  [[nodiscard]] auto loss_value(const ParamMap& p) const -> double {
    ad::Tape tape;
    return loss(tape, keat::bind(tape, p, false)).value().item();
  }

  /// Largest per-tensor relative error between reverse mode and central differences.
  [[nodiscard]] auto max_relative_error(double step = 1e-5) const -> std::pair<double, std::string> {
    ad::Tape tape;
    const VarMap vars = keat::bind(tape, params, true);
    tape.backward(loss(tape, vars));
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [name, value] : params) {
      const Tensor fd = finite_diff_grad(
          [&](const Tensor& x) {
            ParamMap p = params;
            p[name] = x;
            return loss_value(p);
          },
          value, step);
      const double err = relative_error(tape.grad(vars.at(name)), fd);
      if (err > worst) {
        worst = err;
        worst_name = name;
      }
    }
    return {worst, worst_name};
  }
};

}  // namespace keat::testing
