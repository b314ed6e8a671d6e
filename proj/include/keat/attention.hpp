#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "keat/autodiff.hpp"
#include "keat/graph.hpp"
#include "keat/kernels.hpp"
#include "keat/params.hpp"
#include "keat/time_encoding.hpp"

namespace keat {

struct AttentionDims {
  std::size_t d = 1;        // node state width
  std::size_t d_prime = 1;  // projected width, also d_k
  std::size_t d_e = 0;      // raw edge feature width
  std::size_t d_t = 0;      // time encoding width
  [[nodiscard]] auto edge_time() const -> std::size_t { return d_e + d_t; }
};

/// Projections of the single-head temporal attention layer.
///
///   logit_j = (W_q h_i)ᵀ (W_k h_j + W_e ē_j) / sqrt(d')
///   h'_i    = W_self h_i + Σ_j α_j (W_v h_j + W_e' ē_j)
///
/// with ē_j = [e_j ‖ φ(Δt_j)]. W_q, W_k, W_v, W_self are d'×d; W_e, W_e' are
/// d'×(d_e+d_t).
struct AttentionParams {
  AttentionDims dims;
  Tensor w_q, w_k, w_v, w_e, w_e2, w_self;

  [[nodiscard]] static auto init(const AttentionDims& dims, Rng& rng) -> AttentionParams;
  /// Throws DimensionError naming the first matrix with a wrong shape, or
  /// DomainError for non-finite entries.
  void validate() const;
  /// Names: attn.w_q, attn.w_k, attn.w_v, attn.w_e, attn.w_e2, attn.w_self.
  [[nodiscard]] auto to_map() const -> ParamMap;
  [[nodiscard]] static auto from_map(const ParamMap& m, const AttentionDims& dims) -> AttentionParams;
};

/// Where ψ(Δt) is applied. `edge` is KEAT; `neither` is standard attention.
enum class Modulation { neither, node, edge, both };

[[nodiscard]] auto to_string(Modulation m) -> std::string;
[[nodiscard]] auto parse_modulation(const std::string& s) -> Modulation;

struct AttentionOutput {
  Tensor h_prime;  // [d']
  Tensor alphas;   // [K], empty without neighbors
  Tensor logits;   // [K], pre-softmax
};

// --- taped building blocks ---------------------------------------------------

struct AttentionVars {
  ad::Var w_q, w_k, w_v, w_e, w_e2, w_self;
  std::size_t d_prime = 1;
};

[[nodiscard]] auto attention_vars(const VarMap& vars) -> AttentionVars;

struct AttentionResult {
  ad::Var h_prime;
  ad::Var alphas;  // invalid when there are no neighbors
  ad::Var logits;
};

/// One attention step on a tape.
///   h_center [d], neighbor_states [K×d], edge_time [K×(d_e+d_t)], psi [K].
/// `psi` is ignored for Modulation::neither and may then be invalid. K = 0
/// yields h' = W_self h_i.
[[nodiscard]] auto attend(const AttentionVars& w, ad::Var h_center, ad::Var neighbor_states,
                          ad::Var edge_time, ad::Var psi, Modulation mod) -> AttentionResult;

// --- untaped entry points -----------------------------------------------------

/// Attention over explicit neighbor rows. `kernel` == nullptr means standard
/// attention regardless of `mod`.
[[nodiscard]] auto attention_forward(const AttentionParams& params, const Tensor& h_center,
                                     const Tensor& neighbor_states, const Tensor& edge_feats,
                                     std::span<const double> delta_ts, const TimeEncoder& encoder,
                                     const KernelSpec* kernel, Modulation mod) -> AttentionOutput;

/// Standard attention over a neighbor batch; node_states is [num_nodes × d].
[[nodiscard]] auto standard_attention(const AttentionParams& params, const Tensor& h_center,
                                      const NeighborBatch& batch, const Tensor& node_states,
                                      const TimeEncoder& encoder) -> AttentionOutput;

/// KEAT: every ē_j is replaced by ψ(Δt_j)·ē_j; node terms are untouched.
[[nodiscard]] auto keat_attention(const AttentionParams& params, const KernelSpec& kernel,
                                  const Tensor& h_center, const NeighborBatch& batch,
                                  const Tensor& node_states, const TimeEncoder& encoder)
    -> AttentionOutput;

/// Ablation variant: ψ applied to node terms, edge terms, both, or neither.
[[nodiscard]] auto modulate_node_features(const AttentionParams& params, const KernelSpec& kernel,
                                          Modulation flag, const Tensor& h_center,
                                          const NeighborBatch& batch, const Tensor& node_states,
                                          const TimeEncoder& encoder) -> AttentionOutput;

// --- patch rule ------------------------------------------------------------------

enum class PatchTime { mean, max, last };

[[nodiscard]] auto parse_patch_time(const std::string& s) -> PatchTime;
/// Representative timestamp of one patch.
[[nodiscard]] auto patch_timestamp(std::span<const double> times, PatchTime mode) -> double;
/// Min-max rescale to [0, upper]; identical inputs map to 0.
[[nodiscard]] auto normalize_patch_times(std::span<const double> times, double upper = 4.0)
    -> std::vector<double>;

/// logit[p][q] = exp(t_p - t_q) · (W_q z_p)ᵀ(W_k z_q) / sqrt(d'), i.e. the query
/// scaled by exp(t_p) against the key scaled by exp(-t_q). z is [P×m].
/// Throws NumericError when a factor overflows; normalize the times first.
[[nodiscard]] auto patch_scaled_scores(const Tensor& z, std::span<const double> t_patches,
                                       const Tensor& w_q, const Tensor& w_k) -> Tensor;

// --- heatmap -----------------------------------------------------------------------

struct HeatmapFixture {
  Tensor h_center;                   // [d]
  Tensor neighbor_states;            // [K×d]
  Tensor edge_feats;                 // [K×d_e]
  std::vector<double> delta_ts;      // held fixed for non-probe neighbors
  std::size_t probe = 0;
};

struct HeatmapRow {
  std::size_t neighbor = 0;
  double delta_t = 0.0;  // probe Δt at this grid point
  double alpha_std = 0.0;
  double alpha_keat = 0.0;
  double alpha_diff = 0.0;
};

/// Sweeps the probe neighbor's Δt over an ascending grid and records every
/// neighbor's standard and KEAT attention weight.
[[nodiscard]] auto attention_heatmap(const AttentionParams& params, const KernelSpec& kernel,
                                     const TimeEncoder& encoder, const HeatmapFixture& fixture,
                                     std::span<const double> delta_t_grid) -> std::vector<HeatmapRow>;

}  // namespace keat
