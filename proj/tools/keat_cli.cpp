// keat: command-line driver for data generation, training, evaluation,
// theory checks, heatmaps and sweeps.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "keat/analysis.hpp"
#include "keat/attention.hpp"
#include "keat/config.hpp"
#include "keat/error.hpp"
#include "keat/graph.hpp"
#include "keat/harness.hpp"
#include "keat/model.hpp"

namespace fs = std::filesystem;
using namespace keat;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

/// A required input (dataset, checkpoint) does not exist.
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t threads = 1;
};

auto config_key_help() -> std::string {
  std::string s = "\nConfig keys (set with --set key=value or a --config file):\n";
  for (const auto& k : Config::schema()) {
    s += fmt::format("  {:<26} {} [default: {}]\n", k.name, k.doc,
                     k.default_value.empty() ? "unset" : k.default_value);
  }
  s += "\nSeed precedence: --seed, then --set seed=..., the config file, KEAT_SEED, default 0.\n";
  return s;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key=value config file");
  app->add_option("--set", c.overrides, "override a config key (key=value); repeatable");
  app->add_option("--seed", c.seed, "run seed");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--threads", c.threads, "worker cap")->capture_default_str()->check(CLI::PositiveNumber);
  app->footer(config_key_help());
}

auto resolve(const Common& c) -> Config {
  Config cfg;
  if (const char* env = std::getenv("KEAT_SEED"); env != nullptr && *env != '\0') {
    cfg.set("seed", env);
    (void)cfg.get_u64("seed");
  }
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  for (const auto& o : c.overrides) cfg.apply(o);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  return cfg;
}

auto out_path(const Common& c, const std::string& name) -> fs::path {
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir / name;
}

auto open_out(const fs::path& path) -> std::ofstream {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

auto num(double x) -> std::string {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

auto load_or_generate(const Config& cfg, const std::string& data_path) -> TemporalGraph {
  if (!data_path.empty()) {
    if (!fs::exists(data_path)) throw MissingInput("dataset not found: " + data_path);
    return load_csv(data_path, cfg.get_size("data.d_e"));
  }
  const SyntheticSpec spec = SyntheticSpec::from_config(cfg);
  if (cfg.get_size("data.d_e") != kSyntheticEdgeDim) {
    throw ConfigError(fmt::format("data.d_e must be {} for synthetic data", kSyntheticEdgeDim), "data.d_e");
  }
  return gen_synthetic(spec);
}

auto parse_list(const std::string& s, const std::string& what) -> std::vector<std::string> {
  std::vector<std::string> out;
  std::string item;
  for (char ch : s + ",") {
    if (ch == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item += ch;
    }
  }
  if (out.empty()) throw ConfigError("empty list for " + what, what);
  return out;
}

auto parse_double(const std::string& s, const std::string& what) -> double {
  if (s == "inf" || s == "∞") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(what + " expects numbers, got '" + s + "'", what);
}

auto parse_seeds(const std::string& s) -> std::vector<std::uint64_t> {
  std::vector<std::uint64_t> out;
  for (const auto& item : parse_list(s, "--seeds")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used == item.size()) {
        out.push_back(v);
        continue;
      }
    } catch (const std::exception&) {
    }
    throw ConfigError("--seeds expects non-negative integers, got '" + item + "'", "--seeds");
  }
  return out;
}

void write_ranking(std::ostream& os, const std::string& variant, std::uint64_t seed,
                   const std::string& split, const RankingResult& r) {
  os << fmt::format("{},{},{},mrr,{}\n", variant, seed, split, num(r.mrr));
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    os << fmt::format("{},{},{},hits@{},{}\n", variant, seed, split, r.ks[i], num(r.hits[i]));
  }
  os << fmt::format("{},{},{},ap,{}\n", variant, seed, split, num(r.ap));
  os << fmt::format("{},{},{},auc,{}\n", variant, seed, split, num(r.auc));
}

constexpr const char* kResultsHeader = "variant,seed,split,metric,value\n";

// --- gen-data ----------------------------------------------------------------

auto cmd_gen_data(const Common& c, std::optional<std::size_t> events, std::optional<double> recency)
    -> int {
  Config cfg = resolve(c);
  if (events) cfg.set("gen.events", std::to_string(*events));
  if (recency) cfg.set("gen.recency", num(*recency));
  const SyntheticSpec spec = SyntheticSpec::from_config(cfg);
  const TemporalGraph g = spec.num_events == 0
                              ? TemporalGraph({}, kSyntheticEdgeDim, spec.num_src + spec.num_dst)
                              : gen_synthetic(spec);
  const fs::path path = out_path(c, "events.csv");
  write_csv(g, path);
  std::string sigma = "n/a";
  try {
    sigma = num(train_sigma(g));
  } catch (const DomainError&) {
  }
  fmt::print("events={} nodes={} sigma={} path={}\n", g.size(), g.num_nodes(), sigma, path.string());
  return 0;
}

// --- train / eval ------------------------------------------------------------

auto cmd_train(const Common& c, const std::string& data_path) -> int {
  const Config cfg = resolve(c);
  const Experiment ex = Experiment::from_config(cfg);
  const TemporalGraph g = load_or_generate(cfg, data_path);
  const ChronoSplit split = chrono_split(g, ex.train_frac, ex.val_frac);
  TrainOptions opts = ex.options;
  opts.threads = c.threads;
  const TrainResult tr = train(ex.model, g, split.train, split.val, opts);
  tr.model.save(out_path(c, "model.json"));

  auto hist = open_out(out_path(c, "history.csv"));
  hist << "epoch,train_loss,val_mrr\n";
  for (std::size_t e = 0; e < tr.history.train_loss.size(); ++e) {
    hist << fmt::format("{},{},{}\n", e, num(tr.history.train_loss[e]), num(tr.history.val_mrr[e]));
  }

  const auto val = evaluate(tr.model, g, split.val, "val", ex.model.num_negatives, ex.ks, c.threads);
  const auto test = evaluate(tr.model, g, split.test, "test", ex.model.num_negatives, ex.ks, c.threads);
  auto metrics = open_out(out_path(c, "metrics.csv"));
  metrics << kResultsHeader;
  write_ranking(metrics, "train", ex.model.seed, "val", val);
  write_ranking(metrics, "train", ex.model.seed, "test", test);
  fmt::print("val_mrr={} test_mrr={} best_epoch={}\n", num(val.mrr), num(test.mrr), tr.history.best_epoch);
  return 0;
}

auto cmd_eval(const Common& c, const std::string& model_path, const std::string& data_path) -> int {
  const Config cfg = resolve(c);
  if (model_path.empty() || !fs::exists(model_path)) throw MissingInput("checkpoint not found: " + model_path);
  const LinkModel model = LinkModel::load(model_path);
  const Experiment ex = Experiment::from_config(cfg);
  const TemporalGraph g = load_or_generate(cfg, data_path);
  if (g.num_nodes() > model.num_nodes()) {
    throw DomainError(fmt::format("dataset has {} nodes but the checkpoint only embeds {}", g.num_nodes(),
                                  model.num_nodes()));
  }
  const ChronoSplit split = chrono_split(g, ex.train_frac, ex.val_frac);
  const std::size_t neg = model.config().num_negatives;
  const auto val = evaluate(model, g, split.val, "val", neg, ex.ks, c.threads);
  const auto test = evaluate(model, g, split.test, "test", neg, ex.ks, c.threads);
  auto metrics = open_out(out_path(c, "eval_metrics.csv"));
  metrics << kResultsHeader;
  write_ranking(metrics, "eval", model.config().seed, "val", val);
  write_ranking(metrics, "eval", model.config().seed, "test", test);
  fmt::print("val_mrr={} test_mrr={}\n", num(val.mrr), num(test.mrr));
  return 0;
}

// --- analyze -----------------------------------------------------------------

struct MomentArgs {
  std::string dist = "exp1";
  std::string kernel = "laplacian";
  double lambda = 1.0;
  std::size_t order = 12;
  std::size_t samples = 1000000;
};

auto cmd_moments(const Common& c, const MomentArgs& a) -> int {
  const Config cfg = resolve(c);
  const Distribution dist = Distribution::parse(a.dist);
  KernelSpec k;
  k.family = parse_kernel_family(a.kernel);
  k.width = a.lambda;
  if (k.family == KernelFamily::mlp) {
    Rng rng = make_rng(cfg.get_u64("seed"), "mlp-kernel");
    k = KernelSpec::mlp_kernel(a.lambda, rng);
  }
  const MomentReport r = moment_ratios(dist, k, a.order, a.samples, cfg.get_u64("seed"));

  // Closed form for an exponential law under the Laplacian kernel.
  std::optional<double> rate;
  if (k.family == KernelFamily::laplacian) {
    if (a.dist == "exp1") rate = 1.0;
    if (a.dist.rfind("exp:", 0) == 0) rate = parse_double(a.dist.substr(4), "--dist");
  }
  auto f = open_out(out_path(c, "moments.csv"));
  f << "n,base_moment,weighted_moment,ratio,std_err,expected,within_3se,decreasing\n";
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < r.orders.size(); ++i) {
    const std::size_t n = r.orders[i];
    std::string expected = "";
    std::string within = "";
    if (rate) {
      const double e = std::pow(*rate / (*rate + 1.0 / a.lambda), static_cast<double>(n + 1));
      const bool ok = std::abs(r.ratios[i] - e) <= 3.0 * r.ratio_std_errors[i];
      expected = num(e);
      within = ok ? "true" : "false";
      if (!ok) failures.push_back(fmt::format("n={} ratio {} vs expected {}", n, num(r.ratios[i]), num(e)));
    }
    const bool dec = std::find(r.decrease_violations.begin(), r.decrease_violations.end(), n) ==
                     r.decrease_violations.end();
    if (!dec) failures.push_back(fmt::format("n={} ratio rises into n={}", n, n + 1));
    f << fmt::format("{},{},{},{},{},{},{},{}\n", n, num(r.base_moments[i]), num(r.weighted_moments[i]),
                     num(r.ratios[i]), num(r.ratio_std_errors[i]), expected, within, dec ? "true" : "false");
  }
  for (const auto& s : failures) fmt::print(stderr, "violation: {}\n", s);
  fmt::print("moments: orders=0..{} R_1={} violations={}\n", a.order, num(r.ratios.at(1)), failures.size());
  return failures.empty() ? 0 : kExitViolation;
}

struct VarianceArgs {
  std::size_t fixtures = 100;
  std::size_t samples = 1000000;
  std::optional<double> psi;
};

auto cmd_variance(const Common& c, const VarianceArgs& a) -> int {
  const Config cfg = resolve(c);
  const std::uint64_t seed = cfg.get_u64("seed");
  Rng rng = make_rng(seed, "variance-fixtures");
  std::uniform_real_distribution<double> sig(0.1, 2.0);
  std::uniform_real_distribution<double> rho(-0.9, 0.9);
  std::uniform_real_distribution<double> psi(0.05, 1.0);
  auto f = open_out(out_path(c, "variance.csv"));
  f << "fixture,sigma_x,sigma_y,rho,psi,condition,analytic,monte_carlo,std_error,agrees\n";
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < a.fixtures; ++i) {
    VarianceFixture fx{sig(rng), sig(rng), rho(rng), psi(rng)};
    if (a.psi) fx.psi = *a.psi;
    const VarianceDelta d = variance_delta(fx, a.samples, substream_seed(seed, "variance", i));
    const bool cond = fx.condition();
    if (cond && d.analytic < 0.0) failures.push_back(fmt::format("fixture {} has negative analytic delta", i));
    if (!d.agrees()) failures.push_back(fmt::format("fixture {} Monte-Carlo disagrees beyond 3 SE", i));
    f << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", i, num(fx.sigma_x), num(fx.sigma_y), num(fx.rho),
                     num(fx.psi), cond ? "true" : "false", num(d.analytic), num(d.monte_carlo),
                     num(d.std_error), d.agrees() ? "true" : "false");
  }
  for (const auto& s : failures) fmt::print(stderr, "violation: {}\n", s);
  fmt::print("variance: fixtures={} violations={}\n", a.fixtures, failures.size());
  return failures.empty() ? 0 : kExitViolation;
}

struct SeriesArgs {
  double lambda = 1.0;
  double omega = 1.0;
  double t = 0.5;
  std::size_t max_power = 20;
};

auto cmd_series(const Common& c, const SeriesArgs& a) -> int {
  (void)resolve(c);
  const SeriesCoefficients s = product_series(a.lambda, a.omega, a.max_power);
  const SeriesComparison cmp = series_vs_direct(a.lambda, a.omega, a.t, a.max_power);
  auto f = open_out(out_path(c, "series.csv"));
  f << "k,c_k\n";
  for (std::size_t k = 0; k < s.c.size(); ++k) f << fmt::format("{},{}\n", k, num(s.c[k]));
  auto g = open_out(out_path(c, "series_check.csv"));
  g << "lambda,omega,t,max_power,series,direct,abs_diff,truncation_bound\n";
  g << fmt::format("{},{},{},{},{},{},{},{}\n", num(a.lambda), num(a.omega), num(a.t), a.max_power,
                   num(cmp.series), num(cmp.direct), num(cmp.abs_diff), num(cmp.truncation_bound));
  std::vector<std::string> failures;
  // Round-off allowance on top of the analytic tail bound.
  if (cmp.abs_diff > cmp.truncation_bound + 1e-12) {
    failures.push_back(fmt::format("series differs from direct by {} beyond the tail bound {}",
                                   num(cmp.abs_diff), num(cmp.truncation_bound)));
  }
  if (a.lambda == 0.0) {
    for (std::size_t k = 1; k < s.c.size(); k += 2) {
      if (s.c[k] != 0.0) failures.push_back(fmt::format("k={} odd coefficient is nonzero at lambda=0", k));
    }
  }
  if (!cmp.converged) {
    fmt::print(stderr, "warning: truncation bound {} exceeds 1e-8; t is outside the checked convergence range\n",
               num(cmp.truncation_bound));
  }
  for (const auto& v : failures) fmt::print(stderr, "violation: {}\n", v);
  fmt::print("series: abs_diff={} bound={} violations={}\n", num(cmp.abs_diff), num(cmp.truncation_bound),
             failures.size());
  return failures.empty() ? 0 : kExitViolation;
}

auto cmd_spectral(const Common& c, const std::string& data_path, std::size_t bins) -> int {
  const Config cfg = resolve(c);
  const TemporalGraph g = load_or_generate(cfg, data_path);
  const Histogram h = interarrival_histogram(g, bins);
  auto f = open_out(out_path(c, "spectral_histogram.csv"));
  f << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    f << fmt::format("{},{},{}\n", num(h.edges[i]), num(h.edges[i + 1]), h.counts[i]);
  }
  auto e = open_out(out_path(c, "spectral_entropy.csv"));
  e << "node,entropy\n";
  std::vector<std::string> failures;
  std::size_t rows = 0;
  for (NodeId n = 0; n < g.num_nodes(); ++n) {
    const std::size_t events = g.incident(n).size();
    if (events < 4) continue;
    const double ent = spectral_entropy(g, n);
    const std::size_t gaps = events - 1;
    const std::size_t freqs = (gaps - 1) / 2;
    const double max_ent = freqs > 0 ? std::log(static_cast<double>(freqs)) : 0.0;
    if (!(ent >= -1e-12 && ent <= max_ent + 1e-9)) {
      failures.push_back(fmt::format("node {} entropy {} outside [0, {}]", n, num(ent), num(max_ent)));
    }
    e << fmt::format("{},{}\n", n, num(ent));
    ++rows;
  }
  for (const auto& v : failures) fmt::print(stderr, "violation: {}\n", v);
  fmt::print("spectral: bins={} nodes={} violations={}\n", h.counts.size(), rows, failures.size());
  return failures.empty() ? 0 : kExitViolation;
}

// --- heatmap -----------------------------------------------------------------

struct HeatmapArgs {
  std::string model_path;
  std::optional<std::size_t> d_t;
  std::size_t neighbors = 5;
  std::size_t probe = 0;
  double grid_max = 5.0;
  std::size_t grid_points = 21;
};

auto cmd_heatmap(const Common& c, const HeatmapArgs& a) -> int {
  Config cfg = resolve(c);
  if (a.d_t) cfg.set("time_encoding.d_t", std::to_string(*a.d_t));
  if (a.neighbors < 1) throw ConfigError("--neighbors must be >= 1", "--neighbors");
  if (a.grid_points < 2) throw ConfigError("--grid-points must be >= 2", "--grid-points");
  const std::uint64_t seed = cfg.get_u64("seed");
  AttentionParams params;
  KernelSpec kernel;
  TimeEncoder encoder;
  if (!a.model_path.empty()) {
    if (!fs::exists(a.model_path)) throw MissingInput("checkpoint not found: " + a.model_path);
    const LinkModel m = LinkModel::load(a.model_path);
    params = m.attention_params();
    kernel = m.kernel();
    encoder = m.encoder();
  } else {
    const ModelConfig mc = ModelConfig::from_config(cfg);
    Rng rng = make_rng(seed, "heatmap-params");
    params = AttentionParams::init(mc.dims, rng);
    const double width = std::isnan(mc.lambda) ? mc.lambda_sigma_mult : mc.lambda;
    kernel.family = mc.kernel;
    kernel.width = width;
    if (kernel.family == KernelFamily::mlp) kernel = KernelSpec::mlp_kernel(width, rng);
    const double base = mc.encoder_base > 0.0 ? mc.encoder_base
                                              : TimeEncoder::base_for_span(mc.dims.d_t, a.grid_max);
    encoder = TimeEncoder(mc.dims.d_t, mc.encoder_mode, base);
  }
  const auto& dims = params.dims;
  Rng rng = make_rng(seed, "heatmap-fixture");
  HeatmapFixture fx;
  fx.h_center = uniform_init({dims.d}, 1, rng);
  fx.neighbor_states = uniform_init({a.neighbors, dims.d}, 1, rng);
  fx.edge_feats = uniform_init({a.neighbors, dims.d_e}, 1, rng);
  for (std::size_t j = 0; j < a.neighbors; ++j) {
    fx.delta_ts.push_back(a.grid_max * static_cast<double>(j + 1) / static_cast<double>(a.neighbors + 1));
  }
  if (a.probe >= a.neighbors) throw ConfigError("--probe must be below --neighbors", "--probe");
  fx.probe = a.probe;
  std::vector<double> grid;
  for (std::size_t i = 0; i < a.grid_points; ++i) {
    grid.push_back(a.grid_max * static_cast<double>(i) / static_cast<double>(a.grid_points - 1));
  }
  const auto rows = attention_heatmap(params, kernel, encoder, fx, grid);
  auto f = open_out(out_path(c, "heatmap.csv"));
  f << "neighbor,delta_t,alpha_std,alpha_keat,alpha_diff\n";
  for (const auto& r : rows) {
    f << fmt::format("{},{},{},{},{}\n", r.neighbor, num(r.delta_t), num(r.alpha_std), num(r.alpha_keat),
                     num(r.alpha_diff));
  }
  fmt::print("heatmap: neighbors={} grid_points={} rows={}\n", a.neighbors, a.grid_points, rows.size());
  return 0;
}

// --- sweeps ------------------------------------------------------------------

void write_cells(const Common& c, const std::string& stem, const std::string& label_column,
                 const std::vector<SweepCell>& cells) {
  auto f = open_out(out_path(c, stem + ".csv"));
  f << kResultsHeader;
  for (const auto& cell : cells) {
    for (const auto& r : cell.runs) {
      f << fmt::format("{},{},val,mrr,{}\n", cell.label, r.seed, num(r.val_mrr));
      f << fmt::format("{},{},test,mrr,{}\n", cell.label, r.seed, num(r.test_mrr));
    }
  }
  auto s = open_out(out_path(c, stem + "_summary.csv"));
  s << label_column << ",val_mrr,val_mrr_std,test_mrr,test_mrr_std\n";
  for (const auto& cell : cells) {
    s << fmt::format("{},{},{},{},{}\n", cell.label, num(cell.mean_val_mrr()), num(cell.std_val_mrr()),
                     num(cell.mean_test_mrr()), num(cell.std_test_mrr()));
    fmt::print("{}={} val_mrr={:.4f}±{:.4f} test_mrr={:.4f}±{:.4f}\n", label_column, cell.label,
               cell.mean_val_mrr(), cell.std_val_mrr(), cell.mean_test_mrr(), cell.std_test_mrr());
  }
}

auto cmd_sweep(const Common& c, const std::string& multipliers, const std::string& seeds) -> int {
  const Config cfg = resolve(c);
  const Experiment ex = Experiment::from_config(cfg);
  std::vector<double> mults;
  for (const auto& m : parse_list(multipliers, "--multipliers")) mults.push_back(parse_double(m, "--multipliers"));
  const auto s = parse_seeds(seeds);
  write_cells(c, "sweep_sigma", "multiplier", sweep_sigma(ex, mults, s, c.threads));
  return 0;
}

auto cmd_ablate(const Common& c, const std::string& flags, const std::string& seeds) -> int {
  const Config cfg = resolve(c);
  const Experiment ex = Experiment::from_config(cfg);
  std::vector<Modulation> mods;
  for (const auto& f : parse_list(flags, "--flags")) {
    try {
      mods.push_back(parse_modulation(f));
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), "--flags");
    }
  }
  write_cells(c, "ablate", "modulation", ablate_modulation(ex, mods, parse_seeds(seeds), c.threads));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keat: kernelized temporal attention for dynamic link prediction"};
  app.require_subcommand(1);
  app.footer(config_key_help());

  Common common;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic recency-driven event CSV (events.csv)");
  add_common(gen, common);
  std::optional<std::size_t> gen_events;
  std::optional<double> gen_recency;
  gen->add_option("--events", gen_events, "shorthand for gen.events");
  gen->add_option("--recency", gen_recency, "shorthand for gen.recency");

  auto* tr = app.add_subcommand("train", "train a link predictor; writes model.json, history.csv, metrics.csv");
  add_common(tr, common);
  std::string train_data;
  tr->add_option("--data", train_data, "event CSV (default: synthetic data from gen.*)");

  auto* ev = app.add_subcommand("eval", "rank val and test events with a checkpoint; writes eval_metrics.csv");
  add_common(ev, common);
  std::string eval_model;
  std::string eval_data;
  ev->add_option("--model", eval_model, "checkpoint written by train")->required();
  ev->add_option("--data", eval_data, "event CSV (default: synthetic data from gen.*)");

  auto* an = app.add_subcommand("analyze", "theory checks; exit 1 when an asserted property fails");
  an->require_subcommand(1);
  an->footer(config_key_help());

  MomentArgs margs;
  auto* mo = an->add_subcommand("moments", "moment ratios R_n = E[psi t^n]/E[t^n]; writes moments.csv");
  add_common(mo, common);
  mo->add_option("--dist", margs.dist, "exp1|exp:<rate>|lognormal:<mu>:<sigma>|uniform:<lo>:<hi>|point:<x>")
      ->capture_default_str();
  mo->add_option("--kernel", margs.kernel, "laplacian|rbf|mlp")->capture_default_str();
  mo->add_option("--lambda", margs.lambda, "kernel width")->capture_default_str();
  mo->add_option("--order", margs.order, "largest moment order N")->capture_default_str();
  mo->add_option("--samples", margs.samples, "Monte-Carlo samples")->capture_default_str();

  VarianceArgs vargs;
  auto* va = an->add_subcommand("variance", "logit variance reduction on random fixtures; writes variance.csv");
  add_common(va, common);
  va->add_option("--fixtures", vargs.fixtures, "number of random fixtures")->capture_default_str();
  va->add_option("--samples", vargs.samples, "Monte-Carlo samples per fixture")->capture_default_str();
  va->add_option("--psi", vargs.psi, "fix psi for every fixture");

  SeriesArgs sargs;
  auto* se = an->add_subcommand("series", "Taylor product series of exp(-lambda t)cos(omega t); writes series.csv");
  add_common(se, common);
  se->add_option("--lambda", sargs.lambda, "kernel rate")->capture_default_str();
  se->add_option("--omega", sargs.omega, "frequency")->capture_default_str();
  se->add_option("--t", sargs.t, "evaluation point")->capture_default_str();
  se->add_option("--max-power", sargs.max_power, "truncation order K")->capture_default_str();

  std::string spectral_data;
  std::size_t spectral_bins = 20;
  auto* sp = an->add_subcommand("spectral", "inter-arrival histogram and per-node spectral entropy");
  add_common(sp, common);
  sp->add_option("--data", spectral_data, "event CSV (default: synthetic data from gen.*)");
  sp->add_option("--bins", spectral_bins, "histogram bins")->capture_default_str()->check(CLI::PositiveNumber);

  HeatmapArgs hargs;
  auto* hm = app.add_subcommand("heatmap", "standard vs kernelized attention over a probe's dt; writes heatmap.csv");
  add_common(hm, common);
  hm->add_option("--model", hargs.model_path, "checkpoint (default: seeded random parameters)");
  hm->add_option("--d_t", hargs.d_t, "shorthand for time_encoding.d_t");
  hm->add_option("--neighbors", hargs.neighbors, "neighbors in the fixture")->capture_default_str();
  hm->add_option("--probe", hargs.probe, "index of the swept neighbor")->capture_default_str();
  hm->add_option("--grid-max", hargs.grid_max, "largest dt on the grid")->capture_default_str();
  hm->add_option("--grid-points", hargs.grid_points, "grid size")->capture_default_str();

  std::string sweep_mults = "0.25,0.5,1,2,4,inf";
  std::string sweep_seeds = "0,1,2,3,4";
  auto* sw = app.add_subcommand("sweep-sigma", "kernel width sweep; writes sweep_sigma.csv and a summary");
  add_common(sw, common);
  sw->add_option("--multipliers", sweep_mults, "lambda / sigma values; inf disables the kernel")
      ->capture_default_str();
  sw->add_option("--seeds", sweep_seeds, "comma-separated seeds")->capture_default_str();

  std::string ablate_flags = "neither,node,edge,both";
  std::string ablate_seeds = "0,1,2,3,4";
  auto* ab = app.add_subcommand("ablate", "kernel placement ablation; writes ablate.csv and a summary");
  add_common(ab, common);
  ab->add_option("--flags", ablate_flags, "modulation flags")->capture_default_str();
  ab->add_option("--seeds", ablate_seeds, "comma-separated seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(common, gen_events, gen_recency);
    if (*tr) return cmd_train(common, train_data);
    if (*ev) return cmd_eval(common, eval_model, eval_data);
    if (*mo) return cmd_moments(common, margs);
    if (*va) return cmd_variance(common, vargs);
    if (*se) return cmd_series(common, sargs);
    if (*sp) return cmd_spectral(common, spectral_data, spectral_bins);
    if (*hm) return cmd_heatmap(common, hargs);
    if (*sw) return cmd_sweep(common, sweep_mults, sweep_seeds);
    if (*ab) return cmd_ablate(common, ablate_flags, ablate_seeds);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error ({}): {}\n", e.key(), e.what());
    return kExitConfig;
  } catch (const MissingInput& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const TrainingError& e) {
    fmt::print(stderr, "training diverged (epoch {}): {}\n", e.epoch(), e.what());
    return kExitDiverged;
  } catch (const ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
