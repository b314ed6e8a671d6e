#include "keat/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "keat/error.hpp"

namespace keat {

auto Config::schema() -> const std::vector<ConfigKey>& {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "run seed; all randomness derives from named substreams of it"},
      {"data.d_e", "4", "edge feature width of the event CSV"},
      {"split.train_frac", "0.7", "fraction of events (time-ordered) used for training"},
      {"split.val_frac", "0.15", "fraction used for validation; the rest is test"},
      {"gen.num_src", "20", "synthetic generator: number of source nodes"},
      {"gen.num_dst", "100", "synthetic generator: number of destination nodes"},
      {"gen.events", "10000", "synthetic generator: number of events"},
      {"gen.recency", "0.8", "synthetic generator: probability a source repeats its last destination"},
      {"gen.gap_mu", "0", "synthetic generator: log-normal mu of inter-event gaps"},
      {"gen.gap_sigma", "3.0", "synthetic generator: log-normal sigma of inter-event gaps"},
      {"model.d", "8", "node state width d"},
      {"model.d_prime", "8", "attention width d' (= d_k)"},
      {"model.heads", "1", "attention heads (only 1 is supported)"},
      {"model.neighbors", "10", "K most recent neighbors attended per node"},
      {"model.modulation", "edge", "where the kernel applies: neither|node|edge|both"},
      {"model.predictor_hidden", "16", "hidden width of the link predictor"},
      {"time_encoding.mode", "fixed", "fixed|learnable sinusoidal frequencies"},
      {"time_encoding.d_t", "8", "time encoding width (even, 0 disables)"},
      {"time_encoding.base", "auto", "frequency ladder base, or auto to span the training period"},
      {"kernel.family", "laplacian", "temporal kernel: none|laplacian|rbf|mlp"},
      {"kernel.lambda", "", "absolute kernel width; empty uses lambda_sigma_mult x train sigma"},
      {"kernel.lambda_sigma_mult", "1", "kernel width as a multiple of the training gap sigma"},
      {"train.lr", "1e-2", "Adam learning rate"},
      {"train.batch_size", "32", "events per optimizer step"},
      {"train.epochs", "8", "maximum training epochs"},
      {"train.patience", "3", "epochs without validation MRR improvement before stopping"},
      {"train.val_queries", "300", "validation events ranked after each epoch for early stopping"},
      {"eval.num_negatives", "50", "sampled negatives per positive when ranking"},
      {"eval.ks", "1,3,10", "cutoffs reported as Hits@K"},
      {"attention.patch_time", "mean", "patch timestamp for the patch rule: mean|max|last"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : schema()) values_[k.name] = k.default_value;
}

namespace {

auto trim(std::string s) -> std::string {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'", key);
  it->second = value;
}

void Config::apply(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("expected key=value, got '" + assignment + "'", trim(assignment));
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), "--config");
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    apply(t);
  }
}

auto Config::has(const std::string& key) const -> bool {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

auto Config::get(const std::string& key) const -> const std::string& {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'", key);
  return it->second;
}

auto Config::get_double(const std::string& key) const -> double {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'", key);
  }
}

auto Config::get_u64(const std::string& key) const -> std::uint64_t {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'", key);
  }
  return out;
}

auto Config::get_size(const std::string& key) const -> std::size_t {
  return static_cast<std::size_t>(get_u64(key));
}

auto Config::get_list(const std::string& key) const -> std::vector<std::string> {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace keat
