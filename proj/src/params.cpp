#include "keat/params.hpp"

#include <cmath>

#include "keat/error.hpp"

namespace keat {

auto uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) -> Tensor {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (auto& v : t.data()) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return t;
}

auto bind(ad::Tape& tape, const ParamMap& params, bool trainable) -> VarMap {
  VarMap vars;
  for (const auto& [name, value] : params) {
    vars.emplace(name, trainable ? tape.parameter(value) : tape.constant(value));
  }
  return vars;
}

auto lookup(const VarMap& vars, const std::string& name) -> ad::Var {
  const auto it = vars.find(name);
  if (it == vars.end()) throw DomainError("missing parameter '" + name + "'");
  return it->second;
}

auto lookup(const ParamMap& params, const std::string& name) -> const Tensor& {
  const auto it = params.find(name);
  if (it == params.end()) throw DomainError("missing parameter '" + name + "'");
  return it->second;
}

}  // namespace keat
