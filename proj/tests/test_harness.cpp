#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "keat/error.hpp"
#include "keat/harness.hpp"

using namespace keat;
using keat::testing::harmonic;

namespace {

auto small_data(std::uint64_t seed) -> SyntheticSpec {
  SyntheticSpec s;
  s.num_src = 8;
  s.num_dst = 20;
  s.num_events = 600;
  s.seed = seed;
  return s;
}

auto small_model() -> ModelConfig {
  ModelConfig m;
  m.dims = {4, 4, kSyntheticEdgeDim, 4};
  m.neighbors = 4;
  m.predictor_hidden = 4;
  m.num_negatives = 10;
  m.batch_size = 64;
  m.epochs = 2;
  return m;
}

auto small_experiment() -> Experiment {
  Experiment ex;
  ex.data = small_data(0);
  ex.model = small_model();
  ex.model.epochs = 1;
  ex.options.val_queries = 20;
  return ex;
}

// Fraction of events (after a source's first) that hit that source's previous destination.
auto repeat_rate(const TemporalGraph& g) -> double {
  std::map<NodeId, NodeId> last;
  double hits = 0.0;
  double total = 0.0;
  for (const auto& e : g.events()) {
    const auto it = last.find(e.src);
    if (it != last.end()) {
      total += 1.0;
      hits += it->second == e.dst ? 1.0 : 0.0;
    }
    last[e.src] = e.dst;
  }
  return hits / total;
}

}  // namespace

TEST_CASE("synthetic generator") {
  SUBCASE("p = 0 gives uniform destinations") {
    SyntheticSpec s;
    s.recency = 0.0;
    s.seed = 3;
    const auto g = gen_synthetic(s);
    std::vector<double> counts(s.num_dst, 0.0);
    for (const auto& e : g.events()) counts[e.dst - s.num_src] += 1.0;
    const double expected = static_cast<double>(s.num_events) / static_cast<double>(s.num_dst);
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 134.64);  // 99th percentile of chi-square with 99 degrees of freedom
  }
  SUBCASE("p = 1 with one source sticks to its first destination") {
    SyntheticSpec s;
    s.num_src = 1;
    s.num_events = 500;
    s.recency = 1.0;
    const auto g = gen_synthetic(s);
    for (const auto& e : g.events()) CHECK(e.dst == g.event(0).dst);
  }
  SUBCASE("repeat rate tracks p") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SyntheticSpec s;
      s.seed = seed;
      const double r = repeat_rate(gen_synthetic(s));
      CHECK(r >= 0.78);
      CHECK(r <= 0.82);
    }
  }
  SUBCASE("shape and determinism") {
    const auto a = gen_synthetic(small_data(5));
    const auto b = gen_synthetic(small_data(5));
    REQUIRE(a.size() == 600);
    CHECK(a.d_e() == kSyntheticEdgeDim);
    CHECK(a.num_nodes() == 28);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.event(i).time == b.event(i).time);
      CHECK(a.event(i).dst == b.event(i).dst);
      CHECK(a.event(i).src < 8);
      CHECK(a.event(i).dst >= 8);
    }
  }
  SUBCASE("errors") {
    SyntheticSpec s;
    s.num_events = 0;
    CHECK_THROWS_AS((void)gen_synthetic(s), DomainError);
    s.num_events = 10;
    s.recency = 1.5;
    CHECK_THROWS_AS((void)gen_synthetic(s), DomainError);
  }
}

TEST_CASE("negative sampling") {
  const std::vector<NodeId> cands{10, 11, 12, 13, 14};
  Rng rng(1);
  SUBCASE("all other destinations") {
    auto n = sample_negatives(cands, 12, 4, rng);
    std::sort(n.begin(), n.end());
    CHECK(n == std::vector<NodeId>{10, 11, 13, 14});
  }
  SUBCASE("distinct and never the positive") {
    for (int i = 0; i < 50; ++i) {
      const auto n = sample_negatives(cands, 10, 3, rng);
      CHECK(std::set<NodeId>(n.begin(), n.end()).size() == 3);
      CHECK(std::find(n.begin(), n.end(), 10) == n.end());
    }
  }
  SUBCASE("too few candidates") { CHECK_THROWS_AS((void)sample_negatives(cands, 10, 5, rng), DomainError); }
  SUBCASE("fixed seed, fixed set") {
    const auto g = gen_synthetic(small_data(1));
    const auto a = query_negatives(g, g.event(7), 5, 99, "test", 7);
    const auto b = query_negatives(g, g.event(7), 5, 99, "test", 7);
    CHECK(a == b);
    CHECK(a != query_negatives(g, g.event(7), 5, 99, "test", 8));
  }
}

TEST_CASE("ranking metrics") {
  SUBCASE("perfect ranks") {
    const auto r = summarize_ranks({1, 1, 1}, {1, 3});
    CHECK(r.mrr == 1.0);
    CHECK(r.hits[0] == 1.0);
  }
  SUBCASE("mixed ranks") {
    const auto r = summarize_ranks({1, 2, 4}, {1, 3});
    CHECK(std::abs(r.mrr - 1.75 / 3.0) < 1e-15);
    CHECK(std::abs(r.hits[0] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(r.hits[1] - 2.0 / 3.0) < 1e-15);
  }
  SUBCASE("binary metrics") {
    const std::vector<double> pos{0.9, 0.8, 0.3};
    const std::vector<double> neg{0.7, 0.2, 0.1};
    CHECK(std::abs(binary_auc(pos, neg) - 8.0 / 9.0) < 1e-15);
    // Ranking: + + - + : precision at each positive 1, 1, 3/4.
    CHECK(std::abs(binary_ap(pos, neg) - (1.0 + 1.0 + 0.75) / 3.0) < 1e-15);
    CHECK(binary_auc(std::vector<double>{1.0}, std::vector<double>{1.0}) == 0.5);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS((void)summarize_ranks({}, {1}), DomainError);
    CHECK_THROWS_AS((void)summarize_ranks({0}, {1}), DomainError);
  }
}

TEST_CASE("evaluate_with") {
  const auto g = gen_synthetic(small_data(2));
  const auto split = chrono_split(g, 0.7, 0.15);
  const std::size_t num_neg = 10;
  SUBCASE("oracle") {
    const auto r = evaluate_with(g, split.test, "test", num_neg, {1}, 0,
                                 [](std::size_t, const TemporalEvent& q, std::span<const NodeId> c) {
                                   std::vector<double> s;
                                   for (NodeId id : c) s.push_back(id == q.dst ? 1.0 : 0.0);
                                   return s;
                                 });
    CHECK(r.mrr == 1.0);
    CHECK(r.hits[0] == 1.0);
  }
  SUBCASE("constant scores rank the positive last") {
    const auto r = evaluate_with(g, split.test, "test", num_neg, {1}, 0,
                                 [](std::size_t, const TemporalEvent&, std::span<const NodeId> c) {
                                   return std::vector<double>(c.size(), 0.5);
                                 });
    CHECK(std::abs(r.mrr - 1.0 / 11.0) < 1e-15);
  }
  SUBCASE("anti-oracle") {
    const auto r = evaluate_with(g, split.test, "test", num_neg, {1}, 0,
                                 [](std::size_t, const TemporalEvent& q, std::span<const NodeId> c) {
                                   std::vector<double> s;
                                   for (NodeId id : c) s.push_back(id == q.dst ? -1.0 : 0.0);
                                   return s;
                                 });
    CHECK(std::abs(r.mrr - 1.0 / 11.0) < 1e-15);
    CHECK(r.hits[0] == 0.0);
  }
  SUBCASE("random scores approach the uniform-rank mean") {
    const auto r = evaluate_with(g, g, "all", num_neg, {1}, 0,
                                 [](std::size_t i, const TemporalEvent&, std::span<const NodeId> c) {
                                   Rng rng(substream_seed(77, "scores", i));
                                   std::vector<double> s(c.size());
                                   for (auto& x : s) x = uniform01(rng);
                                   return s;
                                 });
    CHECK(std::abs(r.mrr - harmonic(11) / 11.0) < 3 * r.mrr_std_error);
  }
  SUBCASE("threads do not change the result") {
    auto fn = [](std::size_t i, const TemporalEvent&, std::span<const NodeId> c) {
      Rng rng(i);
      std::vector<double> s(c.size());
      for (auto& x : s) x = uniform01(rng);
      return s;
    };
    const auto a = evaluate_with(g, split.test, "test", num_neg, {1}, 0, fn, 1);
    const auto b = evaluate_with(g, split.test, "test", num_neg, {1}, 0, fn, 4);
    CHECK(a.ranks == b.ranks);
  }
  SUBCASE("non-finite scores") {
    CHECK_THROWS_AS((void)evaluate_with(g, split.test, "test", num_neg, {1}, 0,
                                        [](std::size_t, const TemporalEvent&, std::span<const NodeId> c) {
                                          return std::vector<double>(c.size(), std::nan(""));
                                        }),
                    NumericError);
  }
}

TEST_CASE("parallel_for") {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 5) throw DomainError("x"); }), DomainError);
}

TEST_CASE("adam") {
  // Minimizes (x - 3)^2.
  ParamMap p{{"x", Tensor::scalar(0.0)}};
  Adam opt(0.1);
  for (int i = 0; i < 500; ++i) {
    opt.step(p, {{"x", Tensor::scalar(2 * (p["x"].item() - 3.0))}});
  }
  CHECK(std::abs(p["x"].item() - 3.0) < 1e-2);
}

TEST_CASE("training") {
  const auto g = gen_synthetic(small_data(4));
  const auto split = chrono_split(g, 0.7, 0.15);
  TrainOptions opts;
  opts.val_queries = 20;
  SUBCASE("zero epochs return the initialization") {
    ModelConfig m = small_model();
    m.epochs = 0;
    const auto r = train(m, g, split.train, split.val, opts);
    const LinkModel fresh(m, g.num_nodes(), split.train);
    CHECK(r.model.params() == fresh.params());
    CHECK(r.history.train_loss.size() == 1);
  }
  SUBCASE("one epoch lowers the loss and reruns are identical") {
    const auto a = train(small_model(), g, split.train, split.val, opts);
    const auto b = train(small_model(), g, split.train, split.val, opts);
    REQUIRE(a.history.train_loss.size() >= 2);
    CHECK(a.history.train_loss[1] < a.history.train_loss[0]);
    CHECK(a.history.train_loss == b.history.train_loss);
    CHECK(a.history.val_mrr == b.history.val_mrr);
    CHECK(a.model.params() == b.model.params());
  }
  SUBCASE("a diverging learning rate is reported") {
    ModelConfig m = small_model();
    m.lr = 1e300;
    CHECK_THROWS_AS((void)train(m, g, split.train, split.val, opts), TrainingError);
  }
  SUBCASE("an untrained model scores near the random baseline") {
    ModelConfig m = small_model();
    const LinkModel fresh(m, g.num_nodes(), split.train);
    const auto r = evaluate(fresh, g, g.slice(0, 400), "probe", 10, {1});
    CHECK(std::abs(r.mrr - harmonic(11) / 11.0) < 0.1);
  }
}

TEST_CASE("sweep and ablation tables") {
  const Experiment ex = small_experiment();
  const std::vector<std::uint64_t> seeds{0, 1};
  SUBCASE("one multiplier, one cell") {
    const std::vector<double> mult{1.0};
    const auto cells = sweep_sigma(ex, mult, seeds);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].runs.size() == 2);
    CHECK(cells[0].mean_test_mrr() > 0.0);
  }
  SUBCASE("infinity is the no-kernel cell") {
    const std::vector<double> mult{0.5, std::numeric_limits<double>::infinity()};
    const auto cells = sweep_sigma(ex, mult, std::span(seeds).first(1));
    REQUIRE(cells.size() == 2);
    CHECK(cells[1].label == "inf");
  }
  SUBCASE("four ablation variants") {
    const std::vector<Modulation> flags{Modulation::neither, Modulation::node, Modulation::edge, Modulation::both};
    const auto cells = ablate_modulation(ex, flags, std::span(seeds).first(1), 2);
    REQUIRE(cells.size() == 4);
    CHECK(cells[2].label == "edge");
  }
}
