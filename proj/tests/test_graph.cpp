#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fixtures.hpp"
#include "keat/error.hpp"
#include "keat/graph.hpp"

using namespace keat;

namespace {

auto events_at(std::vector<double> times) -> TemporalGraph {
  std::vector<TemporalEvent> ev;
  for (double t : times) ev.push_back({0, 1, t, {}});
  return TemporalGraph(std::move(ev), 0);
}

auto temp_file(const std::string& name, const std::string& body) -> std::filesystem::path {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("load_csv") {
  SUBCASE("with header") {
    const auto g = load_csv(temp_file("keat_h.csv", "src,dst,time,f_0\n0,1,2.5,0.5\n1,2,1.0,-1\n"), 1);
    REQUIRE(g.size() == 2);
    CHECK(g.event(0).time == 1.0);  // sorted
    CHECK(g.event(1).edge_feat == std::vector<double>{0.5});
    CHECK(g.num_nodes() == 3);
  }
  SUBCASE("without header") {
    const auto g = load_csv(temp_file("keat_nh.csv", "0,1,0\n"), 0);
    CHECK(g.size() == 1);
  }
  SUBCASE("malformed row reports its line") {
    try {
      (void)load_csv(temp_file("keat_bad.csv", "src,dst,time\n0,1,2\n0,x,3\n"), 0);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("wrong field count") {
    CHECK_THROWS_AS((void)load_csv(temp_file("keat_cnt.csv", "0,1,2,3\n"), 0), ParseError);
  }
  SUBCASE("negative time") {
    CHECK_THROWS_AS((void)load_csv(temp_file("keat_neg.csv", "0,1,-1\n"), 0), DomainError);
  }
  SUBCASE("round trip") {
    const auto g = load_csv(temp_file("keat_rt.csv", "0,3,0.1,0.25,1e-3\n2,1,7.75,-2,3\n"), 2);
    const auto out = std::filesystem::temp_directory_path() / "keat_rt_out.csv";
    write_csv(g, out);
    const auto g2 = load_csv(out, 2);
    REQUIRE(g2.size() == g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g2.event(i).time == g.event(i).time);
      CHECK(g2.event(i).edge_feat == g.event(i).edge_feat);
    }
  }
}

TEST_CASE("temporal graph") {
  SUBCASE("stable sort keeps input order of ties") {
    const TemporalGraph g({{0, 1, 2.0, {}}, {0, 2, 1.0, {}}, {0, 3, 1.0, {}}}, 0);
    CHECK(g.event(0).dst == 2);
    CHECK(g.event(1).dst == 3);
  }
  SUBCASE("self loops are incident once") {
    const TemporalGraph g({{1, 1, 0.0, {}}, {1, 2, 1.0, {}}}, 0);
    CHECK(g.incident(1).size() == 2);
  }
  SUBCASE("rejects bad events") {
    CHECK_THROWS_AS(TemporalGraph({{0, 1, std::nan(""), {}}}, 0), DomainError);
    CHECK_THROWS_AS(TemporalGraph({{0, 1, 0.0, {1.0}}}, 2), DomainError);
    CHECK_THROWS_AS(TemporalGraph({{0, 5, 0.0, {}}}, 0, 3), DomainError);
  }
}

TEST_CASE("chrono_split") {
  std::vector<double> times;
  for (int i = 0; i < 10; ++i) times.push_back(i);
  const auto s = chrono_split(events_at(times), 0.7, 0.15);
  CHECK(s.train.size() == 7);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 2);
  CHECK(s.train.events().back().time <= s.val.events().front().time);
  CHECK(s.val.events().back().time <= s.test.events().front().time);
}

TEST_CASE("recent_neighbors") {
  const TemporalGraph g({{0, 1, 1.0, {}}, {0, 2, 2.0, {}}, {3, 0, 3.0, {}}, {0, 4, 5.0, {}}}, 0);
  SUBCASE("most recent first, strictly before the query") {
    const auto b = recent_neighbors(g, 0, 5.0, 10);
    REQUIRE(b.size() == 3);
    CHECK(b.neighbors[0].node == 3);
    CHECK(b.neighbors[1].node == 2);
    CHECK(b.delta_ts == std::vector<double>{2.0, 3.0, 4.0});
  }
  SUBCASE("at most k") { CHECK(recent_neighbors(g, 0, 10.0, 2).size() == 2); }
  SUBCASE("no history") { CHECK(recent_neighbors(g, 4, 5.0, 3).empty()); }
  SUBCASE("no leakage on random streams") {
    Rng rng(3);
    std::vector<TemporalEvent> ev;
    std::uniform_int_distribution<std::size_t> node(0, 9);
    for (int i = 0; i < 300; ++i) ev.push_back({node(rng), node(rng), std::floor(uniform01(rng) * 50), {}});
    const TemporalGraph r(std::move(ev), 0);
    for (int q = 0; q < 200; ++q) {
      const double t = uniform01(rng) * 55;
      for (const auto& nb : recent_neighbors(r, node(rng), t, 5).neighbors) CHECK(nb.time < t);
    }
  }
}

TEST_CASE("train_sigma") {
  CHECK_THROWS_AS((void)train_sigma(events_at({0, 1, 2, 3})), DegenerateDataError);
  CHECK(std::abs(train_sigma(events_at({0, 1, 3, 6})) - std::sqrt(2.0 / 3.0)) < 1e-15);
  CHECK_THROWS_AS((void)train_sigma(events_at({0, 2})), DomainError);
  const double s = train_sigma(events_at({0, 0.5, 3, 3.25, 9}));
  CHECK(std::abs(train_sigma(events_at({10, 10.5, 13, 13.25, 19})) - s) < 1e-12);
  CHECK(std::abs(train_sigma(events_at({0, 1.5, 9, 9.75, 27})) - 3 * s) < 1e-12);
}

TEST_CASE("interarrival_histogram") {
  SUBCASE("single node, unit gaps") {
    const auto h = interarrival_histogram(events_at({0, 1, 2}), 1);
    // Nodes 0 and 1 both see gaps [1, 1].
    REQUIRE(h.counts.size() == 1);
    CHECK(h.counts[0] == 4);
  }
  SUBCASE("no gaps") {
    const TemporalGraph g({{0, 1, 0.0, {}}, {2, 3, 1.0, {}}}, 0);
    CHECK(interarrival_histogram(g, 3).empty());
  }
  SUBCASE("manual binning") {
    // One node with gaps [1, 1, 2, 4]; the other endpoint is distinct each time.
    const TemporalGraph g({{0, 1, 0, {}}, {0, 2, 1, {}}, {0, 3, 2, {}}, {0, 4, 4, {}}, {0, 5, 8, {}}}, 0);
    const auto h = interarrival_histogram(g, 2);
    CHECK(h.edges == std::vector<double>{0, 2, 4});
    CHECK(h.counts == std::vector<std::size_t>{3, 1});
  }
}

TEST_CASE("spectral entropy") {
  SUBCASE("constant gaps") {
    const std::vector<double> s(16, 2.5);
    CHECK(spectral_entropy_of_series(s) == 0.0);
  }
  SUBCASE("two equal components") {
    std::vector<double> s;
    for (int i = 0; i < 32; ++i) {
      s.push_back(std::cos(2 * std::numbers::pi * 3 * i / 32) + std::cos(2 * std::numbers::pi * 7 * i / 32));
    }
    CHECK(std::abs(spectral_entropy_of_series(s) - std::log(2.0)) < 1e-9);
  }
  SUBCASE("white noise approaches the uniform spectrum") {
    // 64 gaps -> frequencies 1..31.
    double mean = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      std::normal_distribution<double> n(5.0, 1.0);
      std::vector<double> s(64);
      for (auto& x : s) x = n(rng);
      mean += spectral_entropy_of_series(s) / 100.0;
    }
    CHECK(std::abs(mean - std::log(31.0)) / std::log(31.0) < 0.15);
  }
  SUBCASE("needs four events") {
    CHECK_THROWS_AS((void)spectral_entropy(events_at({0, 1, 2}), 0), DomainError);
    CHECK(spectral_entropy(events_at({0, 1, 2, 3, 4}), 0) >= 0.0);
  }
}
