#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "keat/graph.hpp"
#include "keat/model.hpp"

namespace keat {

struct SyntheticSpec {
  std::size_t num_src = 20;
  std::size_t num_dst = 100;
  std::size_t num_events = 10000;
  double recency = 0.8;
  double gap_mu = 0.0;
  double gap_sigma = 3.0;
  std::uint64_t seed = 0;

  [[nodiscard]] static auto from_config(const Config& cfg) -> SyntheticSpec;
};

inline constexpr std::size_t kSyntheticEdgeDim = 4;

/// Recency-driven stream. Sources are ids [0, num_src), destinations
/// [num_src, num_src + num_dst). Each event picks a source uniformly; with
/// probability `recency` it repeats that source's last destination, otherwise
/// the destination is uniform. Gaps are log-normal. Edge features:
/// f_0 = repeat flag, f_1..f_3 = one-hot of dst mod 3, all plus N(0, 0.1) noise.
[[nodiscard]] auto gen_synthetic(const SyntheticSpec& spec) -> TemporalGraph;

/// `count` distinct draws from `candidates` without replacement, never
/// `positive`. Throws DomainError when fewer than `count` candidates remain.
[[nodiscard]] auto sample_negatives(std::span<const NodeId> candidates, NodeId positive,
                                    std::size_t count, Rng& rng) -> std::vector<NodeId>;

/// Per-query negatives for query `index` of `split_name`, seeded from the run seed.
[[nodiscard]] auto query_negatives(const TemporalGraph& g, const TemporalEvent& query,
                                   std::size_t count, std::uint64_t seed,
                                   const std::string& split_name, std::size_t index)
    -> std::vector<NodeId>;

struct RankingResult {
  std::vector<std::size_t> ranks;
  std::vector<std::size_t> ks;
  double mrr = 0.0;
  double mrr_std_error = 0.0;
  std::vector<double> hits;  // aligned with ks
  double ap = 0.0;           // positive vs first negative
  double auc = 0.0;
};

/// Aggregates ranks (1-based). Binary AP/AUC need one positive and one
/// negative score per query; pass empty spans to skip them.
[[nodiscard]] auto summarize_ranks(std::vector<std::size_t> ranks, std::vector<std::size_t> ks,
                                   std::span<const double> pos_scores = {},
                                   std::span<const double> neg_scores = {}) -> RankingResult;

/// Average precision and ROC AUC (ties count 1/2) of positives vs negatives.
[[nodiscard]] auto binary_ap(std::span<const double> pos, std::span<const double> neg) -> double;
[[nodiscard]] auto binary_auc(std::span<const double> pos, std::span<const double> neg) -> double;

/// Scores candidates for one query; candidates[0] is the true destination.
using ScoreFn = std::function<std::vector<double>(std::size_t query_index, const TemporalEvent& query,
                                                  std::span<const NodeId> candidates)>;

/// Ranks every event of `split` against `num_neg` negatives drawn from the
/// destinations of `candidates_from`. Ties rank the positive last.
[[nodiscard]] auto evaluate_with(const TemporalGraph& candidates_from, const TemporalGraph& split,
                                 const std::string& split_name, std::size_t num_neg,
                                 std::vector<std::size_t> ks, std::uint64_t seed,
                                 const ScoreFn& score, std::size_t threads = 1) -> RankingResult;

/// Model evaluation: node states come from `history` (events strictly before
/// each query), negatives from history's destinations.
[[nodiscard]] auto evaluate(const LinkModel& model, const TemporalGraph& history,
                            const TemporalGraph& split, const std::string& split_name,
                            std::size_t num_neg, std::vector<std::size_t> ks,
                            std::size_t threads = 1) -> RankingResult;

/// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ParamMap& params, const std::map<std::string, Tensor>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

struct TrainHistory {
  std::vector<double> train_loss;  // [0] is the loss at initialization
  std::vector<double> val_mrr;     // [0] at initialization
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

struct TrainResult {
  LinkModel model;
  TrainHistory history;
};

struct TrainOptions {
  std::size_t val_queries = 300;  // val MRR uses the first this-many val events
  std::size_t threads = 1;
};

/// Mini-batch BCE on each train event vs one uniform negative, in time order.
/// `history` supplies neighbors (normally the whole stream; queries only see
/// the past). Throws TrainingError on a non-finite loss.
[[nodiscard]] auto train(const ModelConfig& config, const TemporalGraph& history,
                         const TemporalGraph& train_split, const TemporalGraph& val_split,
                         const TrainOptions& options = {}) -> TrainResult;

/// Mean BCE over `split` with one seeded negative per event.
[[nodiscard]] auto mean_loss(const LinkModel& model, const TemporalGraph& history,
                             const TemporalGraph& split, std::uint64_t seed) -> double;

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct RunMetrics {
  std::string variant;
  std::uint64_t seed = 0;
  double val_mrr = 0.0;
  double test_mrr = 0.0;
  std::vector<double> test_hits;
  std::size_t epochs_run = 0;
};

struct Experiment {
  SyntheticSpec data;
  ModelConfig model;
  double train_frac = 0.7;
  double val_frac = 0.15;
  std::vector<std::size_t> ks{1, 3, 10};
  TrainOptions options;

  [[nodiscard]] static auto from_config(const Config& cfg) -> Experiment;
};

/// Generates data for `seed`, trains, and evaluates on val and test.
[[nodiscard]] auto run_experiment(const Experiment& ex, const std::string& variant, std::uint64_t seed)
    -> RunMetrics;

struct SweepCell {
  std::string label;
  std::vector<RunMetrics> runs;
  [[nodiscard]] auto mean_test_mrr() const -> double;
  [[nodiscard]] auto std_test_mrr() const -> double;
  [[nodiscard]] auto mean_val_mrr() const -> double;
  [[nodiscard]] auto std_val_mrr() const -> double;
};

/// One cell per multiplier; infinity runs the `none` kernel.
[[nodiscard]] auto sweep_sigma(const Experiment& base, std::span<const double> multipliers,
                               std::span<const std::uint64_t> seeds, std::size_t threads = 1)
    -> std::vector<SweepCell>;

[[nodiscard]] auto ablate_modulation(const Experiment& base, std::span<const Modulation> flags,
                                     std::span<const std::uint64_t> seeds, std::size_t threads = 1)
    -> std::vector<SweepCell>;

}  // namespace keat
