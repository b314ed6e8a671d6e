#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "keat/attention.hpp"
#include "keat/config.hpp"
#include "keat/graph.hpp"
#include "keat/kernels.hpp"
#include "keat/params.hpp"
#include "keat/time_encoding.hpp"

namespace keat {

struct ModelConfig {
  AttentionDims dims{8, 8, 4, 8};
  KernelFamily kernel = KernelFamily::laplacian;
  double lambda = std::numeric_limits<double>::quiet_NaN();  // absolute width; NaN -> mult x sigma
  double lambda_sigma_mult = 1.0;
  EncoderMode encoder_mode = EncoderMode::fixed;
  double encoder_base = 0.0;  // 0 -> fit the training span
  Modulation modulation = Modulation::edge;
  std::size_t neighbors = 10;
  std::size_t predictor_hidden = 16;
  double lr = 1e-2;
  std::size_t batch_size = 32;
  std::size_t epochs = 8;
  std::size_t patience = 3;
  std::size_t num_negatives = 50;
  std::uint64_t seed = 0;

  /// Throws ConfigError for values outside their domain.
  [[nodiscard]] static auto from_config(const Config& cfg) -> ModelConfig;
  /// Writes the model keys back (for checkpoints).
  void store(Config& cfg) const;
  void validate() const;
};

/// Stateless link predictor: a node's state at time t is one attention layer
/// over its K most recent neighbors (events strictly before t) using learned
/// node embeddings; a pair is scored by a 2-layer MLP on the elementwise
/// product of the two states.
///
/// Parameter names: node.emb [N×d], attn.*, pred.w1 [H×d'], pred.b1 [H],
/// pred.w2 [H], pred.b2 [1], plus time.omega (learnable encoder) and mlp.*
/// (MLP kernel).
class LinkModel {
 public:
  LinkModel() = default;
  /// Fresh parameters. σ and the encoder span come from `train`.
  LinkModel(const ModelConfig& config, std::size_t num_nodes, const TemporalGraph& train);

  [[nodiscard]] auto config() const -> const ModelConfig& { return config_; }
  [[nodiscard]] auto params() const -> const ParamMap& { return params_; }
  [[nodiscard]] auto params_mut() -> ParamMap& { return params_; }
  [[nodiscard]] auto num_nodes() const -> std::size_t { return num_nodes_; }
  [[nodiscard]] auto train_sigma() const -> double { return train_sigma_; }
  [[nodiscard]] auto encoder_base() const -> double { return encoder_base_; }

  [[nodiscard]] auto kernel() const -> KernelSpec;
  [[nodiscard]] auto encoder() const -> TimeEncoder;
  [[nodiscard]] auto attention_params() const -> AttentionParams;

  /// Node state at `time` from `history` (events strictly before `time`).
  [[nodiscard]] auto embed(ad::Tape& tape, const VarMap& vars, const TemporalGraph& history,
                           NodeId node, double time) const -> ad::Var;
  /// Scalar link logit for two node states.
  [[nodiscard]] auto score(const VarMap& vars, ad::Var src_state, ad::Var dst_state) const -> ad::Var;

  void save(const std::filesystem::path& path) const;
  [[nodiscard]] static auto load(const std::filesystem::path& path) -> LinkModel;

 private:
  ModelConfig config_;
  ParamMap params_;
  std::size_t num_nodes_ = 0;
  double train_sigma_ = 1.0;
  double encoder_base_ = 10000.0;
};

}  // namespace keat
