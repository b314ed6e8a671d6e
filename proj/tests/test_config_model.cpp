#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "keat/error.hpp"
#include "keat/harness.hpp"

using namespace keat;

TEST_CASE("config") {
  Config cfg;
  SUBCASE("defaults cover the schema") {
    for (const auto& k : Config::schema()) CHECK(cfg.get(k.name) == k.default_value);
  }
  SUBCASE("unknown keys are rejected by name") {
    try {
      cfg.set("model.widht", "3");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "model.widht");
    }
    CHECK_THROWS_AS(cfg.apply("no-equals-sign"), ConfigError);
  }
  SUBCASE("typed access") {
    cfg.apply("train.lr = 0.5");
    CHECK(cfg.get_double("train.lr") == 0.5);
    cfg.set("train.epochs", "-1");
    CHECK_THROWS_AS((void)cfg.get_size("train.epochs"), ConfigError);
    cfg.set("train.lr", "fast");
    CHECK_THROWS_AS((void)cfg.get_double("train.lr"), ConfigError);
    CHECK(cfg.get_list("eval.ks") == std::vector<std::string>{"1", "3", "10"});
  }
  SUBCASE("file with comments") {
    const auto path = std::filesystem::temp_directory_path() / "keat_cfg.txt";
    std::ofstream(path) << "# comment\n\nseed=7\nkernel.family=rbf\n";
    cfg.load_file(path);
    CHECK(cfg.get_u64("seed") == 7);
    CHECK(cfg.get("kernel.family") == "rbf");
    CHECK_THROWS_AS(cfg.load_file(path.string() + ".missing"), ConfigError);
  }
}

TEST_CASE("model config validation") {
  Config cfg;
  const auto m = ModelConfig::from_config(cfg);
  CHECK(m.kernel == KernelFamily::laplacian);
  CHECK(std::isnan(m.lambda));
  CHECK(m.encoder_base == 0.0);
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"time_encoding.d_t", "3"}, {"model.heads", "2"}, {"train.lr", "0"}, {"kernel.lambda", "-1"},
           {"kernel.family", "cauchy"}, {"model.d", "0"}, {"model.modulation", "all"}}) {
    CAPTURE(key);
    Config bad;
    bad.set(key, value);
    try {
      (void)ModelConfig::from_config(bad);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key() == key);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  SyntheticSpec s;
  s.num_events = 300;
  s.num_dst = 10;
  const auto g = gen_synthetic(s);
  const auto split = chrono_split(g, 0.7, 0.15);
  Config cfg;
  cfg.set("kernel.family", "mlp");
  cfg.set("time_encoding.mode", "learnable");
  const auto mc = ModelConfig::from_config(cfg);
  const LinkModel model(mc, g.num_nodes(), split.train);
  const auto path = std::filesystem::temp_directory_path() / "keat_model.json";
  model.save(path);
  const LinkModel back = LinkModel::load(path);
  CHECK(back.params() == model.params());
  CHECK(back.num_nodes() == model.num_nodes());
  CHECK(back.train_sigma() == model.train_sigma());
  CHECK(back.encoder_base() == model.encoder_base());
  CHECK(back.config().kernel == KernelFamily::mlp);
  CHECK(back.params().count("time.omega") == 1);
  CHECK(back.params().count("mlp.w2") == 1);
  const auto r1 = evaluate(model, g, split.test, "test", 5, {1});
  const auto r2 = evaluate(back, g, split.test, "test", 5, {1});
  CHECK(r1.ranks == r2.ranks);

  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS((void)LinkModel::load(path), ParseError);
  CHECK_THROWS_AS((void)LinkModel::load(path.string() + ".missing"), ParseError);
}
