#pragma once

#include <map>
#include <string>

#include "keat/autodiff.hpp"
#include "keat/rng.hpp"
#include "keat/tensor.hpp"

namespace keat {

/// Named parameter arrays. std::map keeps iteration (and thus optimizer and
/// checkpoint) order deterministic.
using ParamMap = std::map<std::string, Tensor>;
using VarMap = std::map<std::string, ad::Var>;

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
[[nodiscard]] auto uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng)
    -> Tensor;

/// Records every entry of `params` on `tape` (as parameters when `trainable`).
[[nodiscard]] auto bind(ad::Tape& tape, const ParamMap& params, bool trainable) -> VarMap;

[[nodiscard]] auto lookup(const VarMap& vars, const std::string& name) -> ad::Var;
[[nodiscard]] auto lookup(const ParamMap& params, const std::string& name) -> const Tensor&;

}  // namespace keat
