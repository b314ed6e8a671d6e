#include "keat/attention.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "keat/error.hpp"

namespace keat {

namespace {

struct NamedMatrix {
  const char* name;
  const Tensor* value;
  std::size_t rows;
  std::size_t cols;
};

void check_shape(const char* name, const Tensor& t, std::vector<std::size_t> expected) {
  if (t.shape() != expected) {
    throw DimensionError(fmt::format("{} has shape {}, expected {}", name, t.shape_string(),
                                     shape_string(expected)));
  }
}

}  // namespace

auto AttentionParams::init(const AttentionDims& dims, Rng& rng) -> AttentionParams {
  AttentionParams p;
  p.dims = dims;
  const std::size_t et = dims.edge_time();
  p.w_q = uniform_init({dims.d_prime, dims.d}, dims.d, rng);
  p.w_k = uniform_init({dims.d_prime, dims.d}, dims.d, rng);
  p.w_v = uniform_init({dims.d_prime, dims.d}, dims.d, rng);
  p.w_e = uniform_init({dims.d_prime, et}, et, rng);
  p.w_e2 = uniform_init({dims.d_prime, et}, et, rng);
  p.w_self = uniform_init({dims.d_prime, dims.d}, dims.d, rng);
  return p;
}

void AttentionParams::validate() const {
  const std::size_t dp = dims.d_prime;
  const NamedMatrix all[] = {
      {"W_q", &w_q, dp, dims.d},          {"W_k", &w_k, dp, dims.d},
      {"W_v", &w_v, dp, dims.d},          {"W_e", &w_e, dp, dims.edge_time()},
      {"W_e'", &w_e2, dp, dims.edge_time()}, {"W_self", &w_self, dp, dims.d},
  };
  for (const auto& m : all) {
    check_shape(m.name, *m.value, {m.rows, m.cols});
    if (!m.value->all_finite()) throw DomainError(std::string(m.name) + " has non-finite entries");
  }
}

auto AttentionParams::to_map() const -> ParamMap {
  return {{"attn.w_q", w_q}, {"attn.w_k", w_k},   {"attn.w_v", w_v},
          {"attn.w_e", w_e}, {"attn.w_e2", w_e2}, {"attn.w_self", w_self}};
}

auto AttentionParams::from_map(const ParamMap& m, const AttentionDims& dims) -> AttentionParams {
  AttentionParams p;
  p.dims = dims;
  p.w_q = lookup(m, "attn.w_q");
  p.w_k = lookup(m, "attn.w_k");
  p.w_v = lookup(m, "attn.w_v");
  p.w_e = lookup(m, "attn.w_e");
  p.w_e2 = lookup(m, "attn.w_e2");
  p.w_self = lookup(m, "attn.w_self");
  p.validate();
  return p;
}

auto to_string(Modulation m) -> std::string {
  switch (m) {
    case Modulation::neither: return "neither";
    case Modulation::node: return "node";
    case Modulation::edge: return "edge";
    case Modulation::both: return "both";
  }
  return "edge";
}

auto parse_modulation(const std::string& s) -> Modulation {
  if (s == "neither") return Modulation::neither;
  if (s == "node") return Modulation::node;
  if (s == "edge") return Modulation::edge;
  if (s == "both") return Modulation::both;
  throw DomainError("unknown modulation '" + s + "' (neither|node|edge|both)");
}

auto attention_vars(const VarMap& vars) -> AttentionVars {
  AttentionVars w;
  w.w_q = lookup(vars, "attn.w_q");
  w.w_k = lookup(vars, "attn.w_k");
  w.w_v = lookup(vars, "attn.w_v");
  w.w_e = lookup(vars, "attn.w_e");
  w.w_e2 = lookup(vars, "attn.w_e2");
  w.w_self = lookup(vars, "attn.w_self");
  w.d_prime = w.w_q.value().rows();
  return w;
}

auto attend(const AttentionVars& w, ad::Var h_center, ad::Var neighbor_states, ad::Var edge_time,
            ad::Var psi, Modulation mod) -> AttentionResult {
  ad::Var self_term = ad::matmul(w.w_self, h_center);
  if (neighbor_states.value().rows() == 0) return {self_term, {}, {}};

  const bool scale_edges = mod == Modulation::edge || mod == Modulation::both;
  const bool scale_nodes = mod == Modulation::node || mod == Modulation::both;

  ad::Var q = ad::matmul(w.w_q, h_center);
  ad::Var node_keys = ad::matmul(neighbor_states, ad::transpose(w.w_k));
  ad::Var node_values = ad::matmul(neighbor_states, ad::transpose(w.w_v));
  ad::Var edges = scale_edges ? ad::scale_rows(edge_time, psi) : edge_time;
  if (scale_nodes) {
    node_keys = ad::scale_rows(node_keys, psi);
    node_values = ad::scale_rows(node_values, psi);
  }
  ad::Var keys = node_keys + ad::matmul(edges, ad::transpose(w.w_e));
  ad::Var values = node_values + ad::matmul(edges, ad::transpose(w.w_e2));
  ad::Var logits = ad::scale(ad::matmul(keys, q), 1.0 / std::sqrt(static_cast<double>(w.d_prime)));
  ad::Var alphas = ad::softmax(logits);
  ad::Var h_prime = self_term + ad::matmul(ad::transpose(values), alphas);
  return {h_prime, alphas, logits};
}

auto attention_forward(const AttentionParams& params, const Tensor& h_center,
                       const Tensor& neighbor_states, const Tensor& edge_feats,
                       std::span<const double> delta_ts, const TimeEncoder& encoder,
                       const KernelSpec* kernel, Modulation mod) -> AttentionOutput {
  params.validate();
  const auto& dims = params.dims;
  if (h_center.size() != dims.d) {
    throw DimensionError(fmt::format("h_center has {} entries, W_q expects d = {}", h_center.size(),
                                     dims.d));
  }
  const std::size_t k = delta_ts.size();
  check_shape("neighbor states", neighbor_states, {k, dims.d});
  check_shape("edge features", edge_feats, {k, dims.d_e});
  if (encoder.d_t() != dims.d_t) {
    throw DimensionError(fmt::format("time encoder produces d_t = {}, W_e expects d_t = {}",
                                     encoder.d_t(), dims.d_t));
  }

  ad::Tape tape;
  const VarMap vars = keat::bind(tape, params.to_map(), false);
  const AttentionVars w = attention_vars(vars);
  ad::Var hc = tape.constant(Tensor({dims.d}, h_center.values()));
  ad::Var hn = tape.constant(neighbor_states);
  ad::Var et = ad::concat_cols(tape.constant(edge_feats), encoder.encode(tape, delta_ts));
  ad::Var psi;
  if (kernel == nullptr) {
    mod = Modulation::neither;
  } else {
    psi = kernel_weights(tape, *kernel, delta_ts);
  }
  const AttentionResult r = attend(w, hc, hn, et, psi, mod);
  AttentionOutput out;
  out.h_prime = r.h_prime.value();
  out.alphas = r.alphas.valid() ? r.alphas.value() : Tensor({0});
  out.logits = r.logits.valid() ? r.logits.value() : Tensor({0});
  return out;
}

namespace {

struct GatheredBatch {
  Tensor states;
  Tensor edges;
};

auto gather_batch(const NeighborBatch& batch, const Tensor& node_states, std::size_t d_e)
    -> GatheredBatch {
  if (node_states.rank() != 2) {
    throw DimensionError("node_states must be [num_nodes × d], got " + node_states.shape_string());
  }
  const std::size_t k = batch.size();
  const std::size_t d = node_states.cols();
  GatheredBatch g{Tensor({k, d}), Tensor({k, d_e})};
  for (std::size_t i = 0; i < k; ++i) {
    const auto& nb = batch.neighbors[i];
    if (nb.node >= node_states.rows()) {
      throw DimensionError(fmt::format("neighbor {} has no row in node_states {}", nb.node,
                                       node_states.shape_string()));
    }
    if (nb.edge_feat.size() != d_e) {
      throw DimensionError(fmt::format("edge feature length {} != d_e {}", nb.edge_feat.size(), d_e));
    }
    std::copy_n(node_states.row(nb.node).begin(), d, g.states.data().begin() + static_cast<std::ptrdiff_t>(i * d));
    std::copy_n(nb.edge_feat.begin(), d_e, g.edges.data().begin() + static_cast<std::ptrdiff_t>(i * d_e));
  }
  return g;
}

}  // namespace

auto standard_attention(const AttentionParams& params, const Tensor& h_center,
                        const NeighborBatch& batch, const Tensor& node_states,
                        const TimeEncoder& encoder) -> AttentionOutput {
  const auto g = gather_batch(batch, node_states, params.dims.d_e);
  return attention_forward(params, h_center, g.states, g.edges, batch.delta_ts, encoder, nullptr,
                           Modulation::neither);
}

auto keat_attention(const AttentionParams& params, const KernelSpec& kernel, const Tensor& h_center,
                    const NeighborBatch& batch, const Tensor& node_states,
                    const TimeEncoder& encoder) -> AttentionOutput {
  return modulate_node_features(params, kernel, Modulation::edge, h_center, batch, node_states,
                                encoder);
}

auto modulate_node_features(const AttentionParams& params, const KernelSpec& kernel,
                            Modulation flag, const Tensor& h_center, const NeighborBatch& batch,
                            const Tensor& node_states, const TimeEncoder& encoder)
    -> AttentionOutput {
  const auto g = gather_batch(batch, node_states, params.dims.d_e);
  return attention_forward(params, h_center, g.states, g.edges, batch.delta_ts, encoder, &kernel,
                           flag);
}

auto parse_patch_time(const std::string& s) -> PatchTime {
  if (s == "mean") return PatchTime::mean;
  if (s == "max") return PatchTime::max;
  if (s == "last") return PatchTime::last;
  throw DomainError("unknown patch time '" + s + "' (mean|max|last)");
}

auto patch_timestamp(std::span<const double> times, PatchTime mode) -> double {
  if (times.empty()) throw DomainError("patch_timestamp: empty patch");
  switch (mode) {
    case PatchTime::max: return *std::max_element(times.begin(), times.end());
    case PatchTime::last: return times.back();
    case PatchTime::mean: break;
  }
  double s = 0.0;
  for (double t : times) s += t;
  return s / static_cast<double>(times.size());
}

auto normalize_patch_times(std::span<const double> times, double upper) -> std::vector<double> {
  std::vector<double> out(times.begin(), times.end());
  if (out.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(out.begin(), out.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  for (auto& t : out) t = range > 0.0 ? upper * (t - lo) / range : 0.0;
  return out;
}

auto patch_scaled_scores(const Tensor& z, std::span<const double> t_patches, const Tensor& w_q,
                         const Tensor& w_k) -> Tensor {
  if (z.rank() != 2 || z.rows() != t_patches.size()) {
    throw DimensionError(fmt::format("patch matrix {} does not match {} timestamps",
                                     z.shape_string(), t_patches.size()));
  }
  if (w_q.rank() != 2 || w_q.cols() != z.cols()) {
    throw DimensionError(fmt::format("W_q {} cannot project patches {}", w_q.shape_string(),
                                     z.shape_string()));
  }
  if (w_k.shape() != w_q.shape()) {
    throw DimensionError(fmt::format("W_k {} must match W_q {}", w_k.shape_string(),
                                     w_q.shape_string()));
  }
  const double max_exponent = std::log(DBL_MAX);
  for (double t : t_patches) {
    if (!std::isfinite(t)) throw NumericError("patch timestamp is non-finite");
  }
  const auto [lo, hi] = std::minmax_element(t_patches.begin(), t_patches.end());
  if (!t_patches.empty() && *hi - *lo > max_exponent) {
    throw NumericError(fmt::format(
        "exp(t_p - t_q) overflows for a timestamp spread of {}; normalize patch times first",
        *hi - *lo));
  }
  const Tensor q = matmul(z, transpose(w_q));
  const Tensor k = matmul(z, transpose(w_k));
  const std::size_t p = z.rows();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(w_q.rows()));
  Tensor out({p, p});
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      out(a, b) = std::exp(t_patches[a] - t_patches[b]) * dot(q.row(a), k.row(b)) * inv_sqrt;
    }
  }
  if (!out.all_finite()) throw NumericError("patch scores overflowed; normalize patch times first");
  return out;
}

auto attention_heatmap(const AttentionParams& params, const KernelSpec& kernel,
                       const TimeEncoder& encoder, const HeatmapFixture& fixture,
                       std::span<const double> delta_t_grid) -> std::vector<HeatmapRow> {
  if (!std::is_sorted(delta_t_grid.begin(), delta_t_grid.end())) {
    throw DomainError("attention_heatmap: Δt grid must be ascending");
  }
  const std::size_t k = fixture.delta_ts.size();
  if (fixture.probe >= k) throw DomainError("attention_heatmap: probe index out of range");
  std::vector<HeatmapRow> rows;
  rows.reserve(k * delta_t_grid.size());
  std::vector<double> dts = fixture.delta_ts;
  for (double dt : delta_t_grid) {
    dts[fixture.probe] = dt;
    const auto std_out = attention_forward(params, fixture.h_center, fixture.neighbor_states,
                                           fixture.edge_feats, dts, encoder, nullptr,
                                           Modulation::neither);
    const auto keat_out = attention_forward(params, fixture.h_center, fixture.neighbor_states,
                                            fixture.edge_feats, dts, encoder, &kernel,
                                            Modulation::edge);
    for (std::size_t j = 0; j < k; ++j) {
      rows.push_back({j, dt, std_out.alphas[j], keat_out.alphas[j],
                      keat_out.alphas[j] - std_out.alphas[j]});
    }
  }
  return rows;
}

}  // namespace keat
