#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace keat {

/// Dense row-major tensor of doubles. Rank 1 (vector) or rank 2 (matrix) is
/// all the attention block needs; higher ranks are representable but only
/// elementwise operations accept them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static auto vector(std::vector<double> values) -> Tensor;
  static auto matrix(std::initializer_list<std::initializer_list<double>> rows) -> Tensor;
  static auto scalar(double value) -> Tensor;

  [[nodiscard]] auto shape() const -> const std::vector<std::size_t>& { return shape_; }
  [[nodiscard]] auto rank() const -> std::size_t { return shape_.size(); }
  [[nodiscard]] auto size() const -> std::size_t { return data_.size(); }
  [[nodiscard]] auto rows() const -> std::size_t;
  [[nodiscard]] auto cols() const -> std::size_t;
  [[nodiscard]] auto is_scalar() const -> bool { return data_.size() == 1; }

  [[nodiscard]] auto data() const -> std::span<const double> { return data_; }
  [[nodiscard]] auto data() -> std::span<double> { return data_; }
  [[nodiscard]] auto values() const -> const std::vector<double>& { return data_; }

  auto operator[](std::size_t i) -> double& { return data_[i]; }
  auto operator[](std::size_t i) const -> double { return data_[i]; }
  auto operator()(std::size_t r, std::size_t c) -> double& { return data_[r * shape_[1] + c]; }
  auto operator()(std::size_t r, std::size_t c) const -> double { return data_[r * shape_[1] + c]; }

  [[nodiscard]] auto item() const -> double;
  [[nodiscard]] auto row(std::size_t r) const -> std::span<const double>;
  [[nodiscard]] auto all_finite() const -> bool;
  [[nodiscard]] auto shape_string() const -> std::string;

  auto operator==(const Tensor&) const -> bool = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

[[nodiscard]] auto shape_string(const std::vector<std::size_t>& shape) -> std::string;

// Plain (untaped) arithmetic. The autodiff layer reuses these for forward
// values, so a taped and an untaped evaluation produce identical bits.

/// a[m×k]·b[k×n]; a rank-1 b is treated as a column and yields a rank-1 result.
[[nodiscard]] auto matmul(const Tensor& a, const Tensor& b) -> Tensor;
[[nodiscard]] auto transpose(const Tensor& a) -> Tensor;
/// Max-subtracted softmax over a non-empty rank-1 tensor.
[[nodiscard]] auto softmax(const Tensor& logits) -> Tensor;
[[nodiscard]] auto add(const Tensor& a, const Tensor& b) -> Tensor;
[[nodiscard]] auto sub(const Tensor& a, const Tensor& b) -> Tensor;
[[nodiscard]] auto hadamard(const Tensor& a, const Tensor& b) -> Tensor;
[[nodiscard]] auto scale(const Tensor& a, double s) -> Tensor;
[[nodiscard]] auto dot(std::span<const double> a, std::span<const double> b) -> double;

/// Central-difference gradient of a scalar function: (f(x+εe_i) − f(x−εe_i)) / 2ε.
/// Throws NumericError when f returns a non-finite value.
[[nodiscard]] auto finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                                    double step) -> Tensor;

}  // namespace keat
