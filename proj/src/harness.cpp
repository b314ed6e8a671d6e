#include "keat/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "keat/error.hpp"

namespace keat {

auto SyntheticSpec::from_config(const Config& cfg) -> SyntheticSpec {
  SyntheticSpec s;
  s.num_src = cfg.get_size("gen.num_src");
  s.num_dst = cfg.get_size("gen.num_dst");
  s.num_events = cfg.get_size("gen.events");
  s.recency = cfg.get_double("gen.recency");
  s.gap_mu = cfg.get_double("gen.gap_mu");
  s.gap_sigma = cfg.get_double("gen.gap_sigma");
  s.seed = cfg.get_u64("seed");
  if (s.num_src < 1) throw ConfigError("gen.num_src must be >= 1", "gen.num_src");
  if (s.num_dst < 1) throw ConfigError("gen.num_dst must be >= 1", "gen.num_dst");
  if (!(s.recency >= 0.0 && s.recency <= 1.0)) {
    throw ConfigError("gen.recency must lie in [0, 1]", "gen.recency");
  }
  if (!(s.gap_sigma > 0.0)) throw ConfigError("gen.gap_sigma must be positive", "gen.gap_sigma");
  return s;
}

auto gen_synthetic(const SyntheticSpec& spec) -> TemporalGraph {
  if (spec.num_src < 1 || spec.num_dst < 1 || spec.num_events < 1) {
    throw DomainError("gen_synthetic needs at least one source, destination and event");
  }
  if (!(spec.recency >= 0.0 && spec.recency <= 1.0)) {
    throw DomainError("recency probability must lie in [0, 1]");
  }
  Rng rng = make_rng(spec.seed, "data");
  std::uniform_int_distribution<std::size_t> pick_src(0, spec.num_src - 1);
  std::uniform_int_distribution<std::size_t> pick_dst(0, spec.num_dst - 1);
  std::lognormal_distribution<double> gap(spec.gap_mu, spec.gap_sigma);
  std::normal_distribution<double> noise(0.0, 0.1);

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> last(spec.num_src, kNone);
  std::vector<TemporalEvent> events;
  events.reserve(spec.num_events);
  double t = 0.0;
  for (std::size_t i = 0; i < spec.num_events; ++i) {
    if (i > 0) t += gap(rng);
    const std::size_t s = pick_src(rng);
    const bool repeat = last[s] != kNone && uniform01(rng) < spec.recency;
    const std::size_t d = repeat ? last[s] : pick_dst(rng);
    last[s] = d;
    std::vector<double> f(kSyntheticEdgeDim, 0.0);
    f[0] = repeat ? 1.0 : 0.0;
    f[1 + d % 3] = 1.0;
    for (auto& x : f) x += noise(rng);
    events.push_back({s, spec.num_src + d, t, std::move(f)});
  }
  return TemporalGraph(std::move(events), kSyntheticEdgeDim, spec.num_src + spec.num_dst);
}

auto sample_negatives(std::span<const NodeId> candidates, NodeId positive, std::size_t count, Rng& rng)
    -> std::vector<NodeId> {
  std::vector<NodeId> pool;
  pool.reserve(candidates.size());
  for (NodeId c : candidates) {
    if (c != positive) pool.push_back(c);
  }
  if (pool.size() < count) {
    throw DomainError("need " + std::to_string(count) + " negatives but only " +
                      std::to_string(pool.size()) + " candidate destinations remain");
  }
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

auto query_negatives(const TemporalGraph& g, const TemporalEvent& query, std::size_t count,
                     std::uint64_t seed, const std::string& split_name, std::size_t index)
    -> std::vector<NodeId> {
  Rng rng(substream_seed(seed, "negatives:" + split_name, index));
  return sample_negatives(g.destinations(), query.dst, count, rng);
}

auto binary_auc(std::span<const double> pos, std::span<const double> neg) -> double {
  if (pos.empty() || neg.empty()) throw DomainError("AUC needs positive and negative scores");
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted_neg.begin(), sorted_neg.end(), p);
    const auto hi = std::upper_bound(lo, sorted_neg.end(), p);
    wins += static_cast<double>(lo - sorted_neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

auto binary_ap(std::span<const double> pos, std::span<const double> neg) -> double {
  if (pos.empty()) throw DomainError("AP needs positive scores");
  std::vector<std::pair<double, int>> all;
  all.reserve(pos.size() + neg.size());
  for (double p : pos) all.emplace_back(p, 1);
  for (double n : neg) all.emplace_back(n, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  // Step-wise precision/recall curve; tied scores form one threshold.
  double ap = 0.0;
  double tp = 0.0;
  double seen = 0.0;
  double prev_recall = 0.0;
  const double total_pos = static_cast<double>(pos.size());
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      tp += all[j].second;
      seen += 1.0;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

auto summarize_ranks(std::vector<std::size_t> ranks, std::vector<std::size_t> ks,
                     std::span<const double> pos_scores, std::span<const double> neg_scores)
    -> RankingResult {
  if (ranks.empty()) throw DomainError("cannot summarize an empty ranking");
  RankingResult r;
  const double n = static_cast<double>(ranks.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t rank : ranks) {
    if (rank < 1) throw DomainError("ranks are 1-based");
    const double rr = 1.0 / static_cast<double>(rank);
    sum += rr;
    sum_sq += rr * rr;
  }
  r.mrr = sum / n;
  if (ranks.size() > 1) {
    const double var = std::max(0.0, (sum_sq - n * r.mrr * r.mrr) / (n - 1.0));
    r.mrr_std_error = std::sqrt(var / n);
  }
  for (std::size_t k : ks) {
    const auto hit = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t x) { return x <= k; });
    r.hits.push_back(static_cast<double>(hit) / n);
  }
  if (!pos_scores.empty() && !neg_scores.empty()) {
    r.ap = binary_ap(pos_scores, neg_scores);
    r.auc = binary_auc(pos_scores, neg_scores);
  }
  r.ranks = std::move(ranks);
  r.ks = std::move(ks);
  return r;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

auto evaluate_with(const TemporalGraph& candidates_from, const TemporalGraph& split,
                   const std::string& split_name, std::size_t num_neg, std::vector<std::size_t> ks,
                   std::uint64_t seed, const ScoreFn& score, std::size_t threads) -> RankingResult {
  if (split.empty()) throw DomainError("cannot evaluate an empty split");
  if (num_neg < 1) throw DomainError("num_neg must be >= 1");
  const std::size_t n = split.size();
  std::vector<std::size_t> ranks(n);
  std::vector<double> pos(n);
  std::vector<double> neg(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const TemporalEvent& q = split.event(i);
    std::vector<NodeId> cand{q.dst};
    const auto negs = query_negatives(candidates_from, q, num_neg, seed, split_name, i);
    cand.insert(cand.end(), negs.begin(), negs.end());
    const std::vector<double> s = score(i, q, cand);
    if (s.size() != cand.size()) throw DimensionError("scorer returned the wrong number of scores");
    for (double x : s) {
      if (!std::isfinite(x)) throw NumericError("non-finite link score");
    }
    std::size_t rank = 1;
    for (std::size_t c = 1; c < s.size(); ++c) {
      if (s[c] >= s[0]) ++rank;
    }
    ranks[i] = rank;
    pos[i] = s[0];
    neg[i] = s[1];
  });
  return summarize_ranks(std::move(ranks), std::move(ks), pos, neg);
}

namespace {

auto model_scorer(const LinkModel& model, const TemporalGraph& history) -> ScoreFn {
  return [&model, &history](std::size_t, const TemporalEvent& q, std::span<const NodeId> cand) {
    ad::Tape tape;
    const VarMap vars = keat::bind(tape, model.params(), false);
    const ad::Var hs = model.embed(tape, vars, history, q.src, q.time);
    std::vector<double> out;
    out.reserve(cand.size());
    for (NodeId c : cand) {
      const ad::Var hd = model.embed(tape, vars, history, c, q.time);
      out.push_back(model.score(vars, hs, hd).value().item());
    }
    return out;
  };
}

auto batch_loss(const LinkModel& model, ad::Tape& tape, const VarMap& vars,
                const TemporalGraph& history, std::span<const TemporalEvent> events,
                std::span<const NodeId> negatives) -> ad::Var {
  std::vector<ad::Var> logits;
  std::vector<double> labels;
  logits.reserve(2 * events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const TemporalEvent& e = events[i];
    const ad::Var hs = model.embed(tape, vars, history, e.src, e.time);
    const ad::Var hd = model.embed(tape, vars, history, e.dst, e.time);
    const ad::Var hn = model.embed(tape, vars, history, negatives[i], e.time);
    logits.push_back(model.score(vars, hs, hd));
    labels.push_back(1.0);
    logits.push_back(model.score(vars, hs, hn));
    labels.push_back(0.0);
  }
  return ad::bce_with_logits(ad::stack(logits), labels);
}

auto draw_train_negatives(const TemporalGraph& split, std::uint64_t seed, std::string_view stream,
                          std::size_t epoch) -> std::vector<NodeId> {
  Rng rng(substream_seed(seed, stream, epoch));
  std::vector<NodeId> out;
  out.reserve(split.size());
  for (const auto& e : split.events()) {
    out.push_back(sample_negatives(split.destinations(), e.dst, 1, rng)[0]);
  }
  return out;
}

}  // namespace

auto evaluate(const LinkModel& model, const TemporalGraph& history, const TemporalGraph& split,
              const std::string& split_name, std::size_t num_neg, std::vector<std::size_t> ks,
              std::size_t threads) -> RankingResult {
  return evaluate_with(history, split, split_name, num_neg, std::move(ks), model.config().seed,
                       model_scorer(model, history), threads);
}

auto mean_loss(const LinkModel& model, const TemporalGraph& history, const TemporalGraph& split,
               std::uint64_t seed) -> double {
  if (split.empty()) throw DomainError("cannot compute a loss on an empty split");
  const auto negatives = draw_train_negatives(split, seed, "loss-negatives", 0);
  const std::size_t bs = model.config().batch_size;
  double total = 0.0;
  for (std::size_t b = 0; b < split.size(); b += bs) {
    const std::size_t len = std::min(bs, split.size() - b);
    ad::Tape tape;
    const VarMap vars = keat::bind(tape, model.params(), false);
    const ad::Var loss =
        batch_loss(model, tape, vars, history, std::span(split.events()).subspan(b, len),
                   std::span(negatives).subspan(b, len));
    total += loss.value().item() * static_cast<double>(len);
  }
  return total / static_cast<double>(split.size());
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ParamMap& params, const std::map<std::string, Tensor>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto [mit, m_new] = m_.try_emplace(name, Tensor(p.shape()));
    auto [vit, v_new] = v_.try_emplace(name, Tensor(p.shape()));
    auto m = mit->second.data();
    auto v = vit->second.data();
    auto pd = p.data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gd[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gd[i] * gd[i];
      pd[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

auto train(const ModelConfig& config, const TemporalGraph& history, const TemporalGraph& train_split,
           const TemporalGraph& val_split, const TrainOptions& options) -> TrainResult {
  if (train_split.empty() || val_split.empty()) throw DomainError("train and val splits must be non-empty");
  TrainResult result{LinkModel(config, history.num_nodes(), train_split), {}};
  LinkModel& model = result.model;
  TrainHistory& hist = result.history;
  const TemporalGraph val_head = val_split.slice(0, std::min(options.val_queries, val_split.size()));
  const std::size_t num_neg =
      std::min(config.num_negatives, history.destinations().size() > 0 ? history.destinations().size() - 1 : 0);
  auto val_mrr = [&] {
    return evaluate(model, history, val_head, "val", num_neg, {}, options.threads).mrr;
  };

  auto epoch_negatives = [&](std::size_t epoch) {
    return draw_train_negatives(train_split, config.seed, "train-negatives", epoch);
  };
  // Epoch 0: the initialization, scored on epoch 1's batches without updating.
  {
    const auto negs = epoch_negatives(1);
    double total = 0.0;
    for (std::size_t b = 0; b < train_split.size(); b += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, train_split.size() - b);
      ad::Tape tape;
      const VarMap vars = keat::bind(tape, model.params(), false);
      total += batch_loss(model, tape, vars, history, std::span(train_split.events()).subspan(b, len),
                          std::span(negs).subspan(b, len))
                   .value()
                   .item() *
               static_cast<double>(len);
    }
    const double loss0 = total / static_cast<double>(train_split.size());
    if (!std::isfinite(loss0)) throw TrainingError("non-finite loss at initialization", 0);
    hist.train_loss.push_back(loss0);
    hist.val_mrr.push_back(val_mrr());
  }

  ParamMap best = model.params();
  double best_mrr = hist.val_mrr[0];
  std::size_t since_best = 0;
  Adam adam(config.lr);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    // Diverging parameters surface as NumericError inside the forward pass.
    try {
      const auto negs = epoch_negatives(epoch);
      double total = 0.0;
      for (std::size_t b = 0; b < train_split.size(); b += config.batch_size) {
        const std::size_t len = std::min(config.batch_size, train_split.size() - b);
        ad::Tape tape;
        const VarMap vars = keat::bind(tape, model.params(), true);
        const ad::Var loss = batch_loss(model, tape, vars, history,
                                        std::span(train_split.events()).subspan(b, len),
                                        std::span(negs).subspan(b, len));
        const double value = loss.value().item();
        if (!std::isfinite(value)) {
          throw TrainingError("non-finite training loss in epoch " + std::to_string(epoch), static_cast<int>(epoch));
        }
        total += value * static_cast<double>(len);
        tape.backward(loss);
        std::map<std::string, Tensor> grads;
        for (const auto& [name, var] : vars) grads.emplace(name, tape.grad(var));
        adam.step(model.params_mut(), grads);
      }
      hist.train_loss.push_back(total / static_cast<double>(train_split.size()));
      const double mrr = val_mrr();
      hist.val_mrr.push_back(mrr);
      if (mrr > best_mrr) {
        best_mrr = mrr;
        best = model.params();
        hist.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience && config.patience > 0) {
        hist.stopped_early = epoch < config.epochs;
        break;
      }
    } catch (const NumericError& e) {
      throw TrainingError(std::string("training diverged: ") + e.what(), static_cast<int>(epoch));
    }
  }
  model.params_mut() = std::move(best);
  return result;
}

auto Experiment::from_config(const Config& cfg) -> Experiment {
  Experiment ex;
  ex.data = SyntheticSpec::from_config(cfg);
  ex.model = ModelConfig::from_config(cfg);
  ex.train_frac = cfg.get_double("split.train_frac");
  ex.val_frac = cfg.get_double("split.val_frac");
  ex.ks.clear();
  for (const auto& k : cfg.get_list("eval.ks")) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), value);
    if (ec != std::errc() || ptr != k.data() + k.size() || value < 1) {
      throw ConfigError("eval.ks expects positive integers, got '" + k + "'", "eval.ks");
    }
    ex.ks.push_back(value);
  }
  ex.options.val_queries = cfg.get_size("train.val_queries");
  return ex;
}

auto run_experiment(const Experiment& ex, const std::string& variant, std::uint64_t seed) -> RunMetrics {
  SyntheticSpec data = ex.data;
  data.seed = seed;
  const TemporalGraph g = gen_synthetic(data);
  const ChronoSplit split = chrono_split(g, ex.train_frac, ex.val_frac);
  ModelConfig mc = ex.model;
  mc.seed = seed;
  TrainOptions opts = ex.options;
  opts.threads = 1;
  const TrainResult tr = train(mc, g, split.train, split.val, opts);
  RunMetrics m;
  m.variant = variant;
  m.seed = seed;
  m.epochs_run = tr.history.train_loss.size() - 1;
  m.val_mrr = evaluate(tr.model, g, split.val, "val", mc.num_negatives, ex.ks).mrr;
  const RankingResult test = evaluate(tr.model, g, split.test, "test", mc.num_negatives, ex.ks);
  m.test_mrr = test.mrr;
  m.test_hits = test.hits;
  return m;
}

namespace {

auto mean_of(const std::vector<RunMetrics>& runs, double RunMetrics::*field) -> double {
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

auto std_of(const std::vector<RunMetrics>& runs, double RunMetrics::*field) -> double {
  if (runs.size() < 2) return 0.0;
  const double m = mean_of(runs, field);
  double s = 0.0;
  for (const auto& r : runs) s += (r.*field - m) * (r.*field - m);
  return std::sqrt(s / static_cast<double>(runs.size() - 1));
}

auto run_grid(const std::vector<std::pair<std::string, Experiment>>& variants,
              std::span<const std::uint64_t> seeds, std::size_t threads) -> std::vector<SweepCell> {
  std::vector<SweepCell> cells(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    cells[v].label = variants[v].first;
    cells[v].runs.resize(seeds.size());
  }
  parallel_for(variants.size() * seeds.size(), threads, [&](std::size_t i) {
    const std::size_t v = i / seeds.size();
    const std::size_t s = i % seeds.size();
    cells[v].runs[s] = run_experiment(variants[v].second, variants[v].first, seeds[s]);
  });
  return cells;
}

}  // namespace

auto SweepCell::mean_test_mrr() const -> double { return mean_of(runs, &RunMetrics::test_mrr); }
auto SweepCell::std_test_mrr() const -> double { return std_of(runs, &RunMetrics::test_mrr); }
auto SweepCell::mean_val_mrr() const -> double { return mean_of(runs, &RunMetrics::val_mrr); }
auto SweepCell::std_val_mrr() const -> double { return std_of(runs, &RunMetrics::val_mrr); }

auto sweep_sigma(const Experiment& base, std::span<const double> multipliers,
                 std::span<const std::uint64_t> seeds, std::size_t threads) -> std::vector<SweepCell> {
  std::vector<std::pair<std::string, Experiment>> variants;
  for (double m : multipliers) {
    Experiment ex = base;
    ex.model.lambda = std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(m)) {
      ex.model.kernel = KernelFamily::none;
      variants.emplace_back("inf", ex);
    } else {
      if (!(m > 0.0)) throw DomainError("sigma multipliers must be positive");
      ex.model.lambda_sigma_mult = m;
      if (ex.model.kernel == KernelFamily::none) ex.model.kernel = KernelFamily::laplacian;
      variants.emplace_back(fmt::format("{}", m), ex);
    }
  }
  return run_grid(variants, seeds, threads);
}

auto ablate_modulation(const Experiment& base, std::span<const Modulation> flags,
                       std::span<const std::uint64_t> seeds, std::size_t threads)
    -> std::vector<SweepCell> {
  std::vector<std::pair<std::string, Experiment>> variants;
  for (Modulation f : flags) {
    Experiment ex = base;
    ex.model.modulation = f;
    variants.emplace_back(to_string(f), ex);
  }
  return run_grid(variants, seeds, threads);
}

}  // namespace keat
