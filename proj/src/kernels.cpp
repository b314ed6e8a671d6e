#include "keat/kernels.hpp"

#include <cmath>

#include "keat/error.hpp"

namespace keat {

auto to_string(KernelFamily f) -> std::string {
  switch (f) {
    case KernelFamily::none: return "none";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::mlp: return "mlp";
  }
  return "none";
}

auto parse_kernel_family(const std::string& s) -> KernelFamily {
  if (s == "none") return KernelFamily::none;
  if (s == "laplacian") return KernelFamily::laplacian;
  if (s == "rbf") return KernelFamily::rbf;
  if (s == "mlp") return KernelFamily::mlp;
  throw DomainError("unknown kernel family '" + s + "' (none|laplacian|rbf|mlp)");
}

auto init_mlp_params(Rng& rng) -> ParamMap {
  ParamMap p;
  p["mlp.w1"] = uniform_init({kMlpHidden, 1}, 1, rng);
  p["mlp.b1"] = uniform_init({kMlpHidden}, 1, rng);
  p["mlp.w2"] = uniform_init({kMlpHidden, kMlpHidden}, kMlpHidden, rng);
  p["mlp.b2"] = uniform_init({kMlpHidden}, kMlpHidden, rng);
  p["mlp.w3"] = uniform_init({1, kMlpHidden}, kMlpHidden, rng);
  p["mlp.b3"] = uniform_init({1}, kMlpHidden, rng);
  return p;
}

auto KernelSpec::mlp_kernel(double width, Rng& rng) -> KernelSpec {
  return {KernelFamily::mlp, width, init_mlp_params(rng)};
}

namespace {

void check_width(const KernelSpec& k) {
  if (k.family != KernelFamily::none && !(k.width > 0.0 && std::isfinite(k.width))) {
    throw DomainError("kernel width must be positive and finite, got " + std::to_string(k.width));
  }
}

void check_delta(double dt) {
  if (!std::isfinite(dt) || dt < 0.0) {
    throw DomainError("kernel: Δt must be finite and >= 0, got " + std::to_string(dt));
  }
}

auto closed_form(KernelFamily f, double width, double dt) -> double {
  switch (f) {
    case KernelFamily::laplacian: return std::exp(-dt / width);
    case KernelFamily::rbf: {
      const double r = dt / width;
      return std::exp(-r * r);
    }
    default: return 1.0;
  }
}

auto mlp_forward(ad::Tape& tape, const VarMap& w, std::span<const double> delta_ts, double width)
    -> ad::Var {
  std::vector<double> scaled(delta_ts.begin(), delta_ts.end());
  for (auto& v : scaled) v /= width;
  const std::size_t n = scaled.size();
  ad::Var x = tape.constant(Tensor({n, 1}, std::move(scaled)));
  ad::Var h1 = ad::tanh(ad::add_row(ad::matmul(x, ad::transpose(lookup(w, "mlp.w1"))),
                                    lookup(w, "mlp.b1")));
  ad::Var h2 = ad::tanh(ad::add_row(ad::matmul(h1, ad::transpose(lookup(w, "mlp.w2"))),
                                    lookup(w, "mlp.b2")));
  ad::Var out = ad::sigmoid(ad::add_row(ad::matmul(h2, ad::transpose(lookup(w, "mlp.w3"))),
                                        lookup(w, "mlp.b3")));
  return ad::reshape(out, {n});
}

}  // namespace

auto kernel_weights(ad::Tape& tape, const KernelSpec& k, std::span<const double> delta_ts,
                    const VarMap* mlp_vars) -> ad::Var {
  check_width(k);
  for (double dt : delta_ts) check_delta(dt);
  if (k.family == KernelFamily::mlp) {
    if (mlp_vars != nullptr) return mlp_forward(tape, *mlp_vars, delta_ts, k.width);
    const VarMap consts = keat::bind(tape, k.mlp, false);
    return mlp_forward(tape, consts, delta_ts, k.width);
  }
  Tensor psi({delta_ts.size()});
  for (std::size_t i = 0; i < delta_ts.size(); ++i) psi[i] = closed_form(k.family, k.width, delta_ts[i]);
  return tape.constant(std::move(psi));
}

auto eval_kernel(const KernelSpec& k, double delta_t) -> double {
  check_width(k);
  check_delta(delta_t);
  if (k.family != KernelFamily::mlp) return closed_form(k.family, k.width, delta_t);
  ad::Tape tape;
  const double dts[] = {delta_t};
  return kernel_weights(tape, k, dts).value()[0];
}

auto check_design_criteria(const KernelSpec& k, std::span<const double> grid, std::size_t refine,
                           double continuity_tol) -> DesignReport {
  if (grid.size() < 2) throw DomainError("check_design_criteria: grid needs >= 2 points");
  DesignReport r;
  r.decays = true;
  r.non_increasing = true;
  r.bounded = true;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = eval_kernel(k, grid[i]);
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) r.bounded = false;
    if (i > 0) {
      if (!(values[i] < values[i - 1])) r.decays = false;
      if (values[i] > values[i - 1]) r.non_increasing = false;
    }
  }
  refine = std::max<std::size_t>(refine, 1);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double prev = values[i - 1];
    for (std::size_t s = 1; s <= refine; ++s) {
      const double t = grid[i - 1] + (grid[i] - grid[i - 1]) * static_cast<double>(s) /
                                         static_cast<double>(refine);
      const double v = eval_kernel(k, t);
      r.max_jump = std::max(r.max_jump, std::abs(v - prev));
      prev = v;
    }
  }
  r.continuous = r.max_jump <= continuity_tol;
  return r;
}

auto modulate(const KernelSpec& k, double delta_t, std::span<const double> edge_time_feat)
    -> std::vector<double> {
  const double psi = eval_kernel(k, delta_t);
  std::vector<double> out(edge_time_feat.begin(), edge_time_feat.end());
  for (auto& v : out) v *= psi;
  return out;
}

}  // namespace keat
