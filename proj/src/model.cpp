#include "keat/model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "keat/error.hpp"

namespace keat {

namespace {

constexpr int kCheckpointVersion = 1;

auto require(bool ok, const std::string& key, const std::string& what) -> void {
  if (!ok) throw ConfigError("config key '" + key + "': " + what, key);
}

}  // namespace

auto ModelConfig::from_config(const Config& cfg) -> ModelConfig {
  ModelConfig m;
  auto wrap = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError("config key '" + key + "': " + e.what(), key);
    }
  };
  m.dims.d = cfg.get_size("model.d");
  m.dims.d_prime = cfg.get_size("model.d_prime");
  m.dims.d_e = cfg.get_size("data.d_e");
  m.dims.d_t = cfg.get_size("time_encoding.d_t");
  wrap("kernel.family", [&] { m.kernel = parse_kernel_family(cfg.get("kernel.family")); });
  m.lambda = cfg.has("kernel.lambda") ? cfg.get_double("kernel.lambda")
                                      : std::numeric_limits<double>::quiet_NaN();
  m.lambda_sigma_mult = cfg.get_double("kernel.lambda_sigma_mult");
  wrap("time_encoding.mode", [&] { m.encoder_mode = parse_encoder_mode(cfg.get("time_encoding.mode")); });
  m.encoder_base = cfg.get("time_encoding.base") == "auto" ? 0.0 : cfg.get_double("time_encoding.base");
  wrap("model.modulation", [&] { m.modulation = parse_modulation(cfg.get("model.modulation")); });
  m.neighbors = cfg.get_size("model.neighbors");
  m.predictor_hidden = cfg.get_size("model.predictor_hidden");
  m.lr = cfg.get_double("train.lr");
  m.batch_size = cfg.get_size("train.batch_size");
  m.epochs = cfg.get_size("train.epochs");
  m.patience = cfg.get_size("train.patience");
  m.num_negatives = cfg.get_size("eval.num_negatives");
  m.seed = cfg.get_u64("seed");
  require(cfg.get_size("model.heads") == 1, "model.heads", "only a single head is supported");
  m.validate();
  return m;
}

void ModelConfig::validate() const {
  require(dims.d >= 1, "model.d", "must be >= 1");
  require(dims.d_prime >= 1, "model.d_prime", "must be >= 1");
  require(dims.d_t % 2 == 0, "time_encoding.d_t", "must be even");
  require(neighbors >= 1, "model.neighbors", "must be >= 1");
  require(predictor_hidden >= 1, "model.predictor_hidden", "must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), "train.lr", "must be positive");
  require(batch_size >= 1, "train.batch_size", "must be >= 1");
  require(num_negatives >= 1, "eval.num_negatives", "must be >= 1");
  require(std::isnan(lambda) || lambda > 0.0, "kernel.lambda", "must be positive");
  require(lambda_sigma_mult > 0.0, "kernel.lambda_sigma_mult", "must be positive");
  require(encoder_base >= 0.0, "time_encoding.base", "must be positive or auto");
}

void ModelConfig::store(Config& cfg) const {
  cfg.set("model.d", std::to_string(dims.d));
  cfg.set("model.d_prime", std::to_string(dims.d_prime));
  cfg.set("data.d_e", std::to_string(dims.d_e));
  cfg.set("time_encoding.d_t", std::to_string(dims.d_t));
  cfg.set("kernel.family", to_string(kernel));
  cfg.set("kernel.lambda", std::isnan(lambda) ? "" : fmt::format("{}", lambda));
  cfg.set("kernel.lambda_sigma_mult", fmt::format("{}", lambda_sigma_mult));
  cfg.set("time_encoding.mode", to_string(encoder_mode));
  cfg.set("time_encoding.base", encoder_base == 0.0 ? "auto" : fmt::format("{}", encoder_base));
  cfg.set("model.modulation", to_string(modulation));
  cfg.set("model.neighbors", std::to_string(neighbors));
  cfg.set("model.predictor_hidden", std::to_string(predictor_hidden));
  cfg.set("train.lr", fmt::format("{}", lr));
  cfg.set("train.batch_size", std::to_string(batch_size));
  cfg.set("train.epochs", std::to_string(epochs));
  cfg.set("train.patience", std::to_string(patience));
  cfg.set("eval.num_negatives", std::to_string(num_negatives));
  cfg.set("seed", std::to_string(seed));
}

LinkModel::LinkModel(const ModelConfig& config, std::size_t num_nodes, const TemporalGraph& train)
    : config_(config), num_nodes_(num_nodes) {
  config_.validate();
  const bool needs_sigma = config_.kernel != KernelFamily::none && std::isnan(config_.lambda);
  if (needs_sigma) {
    train_sigma_ = keat::train_sigma(train);
  } else {
    try {
      train_sigma_ = keat::train_sigma(train);
    } catch (const DomainError&) {
      train_sigma_ = 1.0;
    }
  }
  if (config_.encoder_base > 0.0) {
    encoder_base_ = config_.encoder_base;
  } else {
    const double span = train.empty() ? 0.0 : train.events().back().time - train.events().front().time;
    encoder_base_ = TimeEncoder::base_for_span(config_.dims.d_t, span);
  }

  Rng rng = make_rng(config_.seed, "init");
  const auto& dims = config_.dims;
  params_["node.emb"] = uniform_init({num_nodes, dims.d}, 1, rng);
  for (auto& [name, value] : AttentionParams::init(dims, rng).to_map()) params_[name] = value;
  const std::size_t h = config_.predictor_hidden;
  params_["pred.w1"] = uniform_init({h, dims.d_prime}, dims.d_prime, rng);
  params_["pred.b1"] = uniform_init({h}, dims.d_prime, rng);
  params_["pred.w2"] = uniform_init({h}, h, rng);
  params_["pred.b2"] = uniform_init({1}, h, rng);
  if (config_.encoder_mode == EncoderMode::learnable && dims.d_t > 0) {
    params_["time.omega"] =
        Tensor::vector(TimeEncoder(dims.d_t, EncoderMode::learnable, encoder_base_).omega());
  }
  if (config_.kernel == KernelFamily::mlp) {
    for (auto& [name, value] : init_mlp_params(rng)) params_[name] = value;
  }
}

auto LinkModel::kernel() const -> KernelSpec {
  KernelSpec k;
  k.family = config_.kernel;
  k.width = std::isnan(config_.lambda) ? config_.lambda_sigma_mult * train_sigma_ : config_.lambda;
  if (k.family == KernelFamily::mlp) {
    for (const char* name : kMlpParamNames) k.mlp[name] = lookup(params_, name);
  }
  return k;
}

auto LinkModel::encoder() const -> TimeEncoder {
  if (config_.encoder_mode == EncoderMode::learnable && config_.dims.d_t > 0) {
    return TimeEncoder(EncoderMode::learnable, lookup(params_, "time.omega").values());
  }
  return TimeEncoder(config_.dims.d_t, config_.encoder_mode, encoder_base_);
}

auto LinkModel::attention_params() const -> AttentionParams {
  return AttentionParams::from_map(params_, config_.dims);
}

auto LinkModel::embed(ad::Tape& tape, const VarMap& vars, const TemporalGraph& history,
                      NodeId node, double time) const -> ad::Var {
  const NeighborBatch batch = recent_neighbors(history, node, time, config_.neighbors);
  const ad::Var table = lookup(vars, "node.emb");
  const ad::Var h_center = ad::row(table, node);
  const AttentionVars w = attention_vars(vars);
  const std::size_t k = batch.size();
  std::vector<std::size_t> ids(k);
  Tensor edges({k, config_.dims.d_e});
  for (std::size_t i = 0; i < k; ++i) {
    ids[i] = batch.neighbors[i].node;
    std::copy(batch.neighbors[i].edge_feat.begin(), batch.neighbors[i].edge_feat.end(),
              edges.data().begin() + static_cast<std::ptrdiff_t>(i * config_.dims.d_e));
  }
  const ad::Var states = ad::gather_rows(table, ids);
  const TimeEncoder enc = encoder();
  const auto omega_it = vars.find("time.omega");
  const ad::Var phi =
      enc.encode(tape, batch.delta_ts, omega_it == vars.end() ? ad::Var{} : omega_it->second);
  const ad::Var edge_time = ad::concat_cols(tape.constant(std::move(edges)), phi);
  ad::Var psi;
  if (config_.modulation != Modulation::neither && k > 0) {
    psi = kernel_weights(tape, kernel(), batch.delta_ts,
                         config_.kernel == KernelFamily::mlp ? &vars : nullptr);
  }
  return attend(w, h_center, states, edge_time, psi, config_.modulation).h_prime;
}

auto LinkModel::score(const VarMap& vars, ad::Var src_state, ad::Var dst_state) const -> ad::Var {
  const ad::Var x = src_state * dst_state;
  const ad::Var hidden =
      ad::tanh(ad::add(ad::matmul(lookup(vars, "pred.w1"), x), lookup(vars, "pred.b1")));
  return ad::add(ad::dot(lookup(vars, "pred.w2"), hidden), lookup(vars, "pred.b2"));
}

void LinkModel::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  Config cfg;
  config_.store(cfg);
  j["config"] = cfg.values();
  j["derived"] = {{"num_nodes", num_nodes_},
                  {"train_sigma", train_sigma_},
                  {"encoder_base", encoder_base_}};
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [name, value] : params_) {
    params[name] = {{"shape", value.shape()}, {"data", value.values()}};
  }
  j["params"] = std::move(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed for checkpoint " + path.string());
}

auto LinkModel::load(const std::filesystem::path& path) -> LinkModel {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format_version", 0) != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint format_version");
  }
  Config cfg;
  for (const auto& [key, value] : j.at("config").items()) cfg.set(key, value.get<std::string>());
  LinkModel m;
  m.config_ = ModelConfig::from_config(cfg);
  const auto& derived = j.at("derived");
  m.num_nodes_ = derived.at("num_nodes").get<std::size_t>();
  m.train_sigma_ = derived.at("train_sigma").get<double>();
  m.encoder_base_ = derived.at("encoder_base").get<double>();
  for (const auto& [name, entry] : j.at("params").items()) {
    m.params_[name] = Tensor(entry.at("shape").get<std::vector<std::size_t>>(),
                             entry.at("data").get<std::vector<double>>());
  }
  (void)m.attention_params();
  return m;
}

}  // namespace keat
