#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "keat/tensor.hpp"

namespace keat::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  [[nodiscard]] auto value() const -> const Tensor&;
  [[nodiscard]] auto id() const -> std::size_t { return id_; }
  [[nodiscard]] auto tape() const -> Tape* { return tape_; }
  [[nodiscard]] auto valid() const -> bool { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of primitive ops for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every operand of node k has an
/// index below k. backward() walks the record once from the loss down to
/// index 0; gradients accumulate in that fixed order, which keeps results
/// bit-reproducible. A tape is single-threaded and pinned in memory (Vars
/// hold a pointer to it).
class Tape {
 public:
  /// Receives the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  auto operator=(const Tape&) -> Tape& = delete;

  auto constant(Tensor value) -> Var;
  auto parameter(Tensor value) -> Var;

  /// Appends an op result. `fn` runs during backward() only when at least one
  /// input needs a gradient.
  auto record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) -> Var;
  auto record(Tensor value, std::span<const Var> inputs, BackwardFn fn) -> Var;

  /// Reverse sweep from a scalar loss. Throws DomainError for a non-scalar loss
  /// or a loss recorded on another tape.
  void backward(Var loss);

  /// Gradient accumulated for `v`; zeros if nothing flowed into it.
  [[nodiscard]] auto grad(Var v) const -> Tensor;
  [[nodiscard]] auto value(std::size_t id) const -> const Tensor& { return nodes_[id].value; }
  [[nodiscard]] auto needs_grad(Var v) const -> bool { return nodes_[v.id()].needs_grad; }
  [[nodiscard]] auto size() const -> std::size_t { return nodes_.size(); }

  /// Adds `g` into the gradient slot of `v` if it participates in differentiation.
  void accumulate(Var v, const Tensor& g);
  /// Like accumulate, but hands the caller the slot to write into.
  [[nodiscard]] auto grad_slot(Var v) -> Tensor*;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool needs_grad = false;
    bool has_grad = false;
  };

  std::vector<Node> nodes_;
};

inline auto Var::value() const -> const Tensor& { return tape_->value(id_); }

// Differentiable primitives. Shapes follow the plain Tensor functions.

auto matmul(Var a, Var b) -> Var;
auto transpose(Var a) -> Var;
auto add(Var a, Var b) -> Var;
auto sub(Var a, Var b) -> Var;
auto mul(Var a, Var b) -> Var;
auto scale(Var a, double s) -> Var;
/// a * s for a single-element s.
auto mul_scalar(Var a, Var s) -> Var;
/// m[K×n] + b[n] on every row.
auto add_row(Var m, Var b) -> Var;
/// m[K×n] with row i multiplied by s[i].
auto scale_rows(Var m, Var s) -> Var;
auto softmax(Var logits) -> Var;
auto tanh(Var a) -> Var;
auto sigmoid(Var a) -> Var;
auto sum(Var a) -> Var;
auto dot(Var a, Var b) -> Var;
auto reshape(Var a, std::vector<std::size_t> shape) -> Var;
/// [K×m] ‖ [K×n] -> [K×(m+n)].
auto concat_cols(Var a, Var b) -> Var;
/// Rows of table[N×d] at `ids` -> [ids.size()×d]; gradients scatter-add back.
auto gather_rows(Var table, std::span<const std::size_t> ids) -> Var;
auto row(Var table, std::size_t id) -> Var;
/// Scalars -> rank-1 tensor.
auto stack(std::span<const Var> scalars) -> Var;
/// Interleaved [cos(ω_k t_i), sin(ω_k t_i)] -> [times.size() × 2·ω.size()].
auto sinusoid(Var omega, std::span<const double> times) -> Var;
/// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels.
auto bce_with_logits(Var logits, std::span<const double> labels) -> Var;

inline auto operator+(Var a, Var b) -> Var { return add(a, b); }
inline auto operator-(Var a, Var b) -> Var { return sub(a, b); }
inline auto operator*(Var a, Var b) -> Var { return mul(a, b); }

}  // namespace keat::ad
