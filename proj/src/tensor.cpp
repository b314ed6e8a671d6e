#include "keat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "keat/error.hpp"

namespace keat {

namespace {

auto element_count(const std::vector<std::size_t>& shape) -> std::size_t {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

}  // namespace

auto shape_string(const std::vector<std::size_t>& shape) -> std::string {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + keat::shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

auto Tensor::vector(std::vector<double> values) -> Tensor {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

auto Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) -> Tensor {
  const std::size_t r = rows.size();
  const std::size_t c = r > 0 ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

auto Tensor::scalar(double value) -> Tensor { return Tensor({1}, {value}); }

auto Tensor::rows() const -> std::size_t { return shape_.empty() ? 0 : shape_[0]; }

auto Tensor::cols() const -> std::size_t { return shape_.size() < 2 ? 1 : shape_[1]; }

auto Tensor::item() const -> double {
  if (data_.size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string());
  return data_[0];
}

auto Tensor::row(std::size_t r) const -> std::span<const double> {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

auto Tensor::all_finite() const -> bool {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

auto Tensor::shape_string() const -> std::string { return keat::shape_string(shape_); }

auto matmul(const Tensor& a, const Tensor& b) -> Tensor {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.rank() == 1 ? 1 : b.cols();
  Tensor out(b.rank() == 1 ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

auto transpose(const Tensor& a) -> Tensor {
  if (a.rank() == 1) return Tensor({1, a.size()}, a.values());
  if (a.rank() != 2) throw DimensionError("transpose: expected rank 2, got " + a.shape_string());
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
  }
  return out;
}

auto softmax(const Tensor& logits) -> Tensor {
  if (logits.size() == 0) throw DomainError("softmax: empty input");
  const auto x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) throw NumericError("softmax: non-finite logits");
  Tensor out({logits.size()});
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] /= total;
  return out;
}

auto add(const Tensor& a, const Tensor& b) -> Tensor {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

auto sub(const Tensor& a, const Tensor& b) -> Tensor {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

auto hadamard(const Tensor& a, const Tensor& b) -> Tensor {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

auto scale(const Tensor& a, double s) -> Tensor {
  Tensor out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

auto dot(std::span<const double> a, std::span<const double> b) -> double {
  if (a.size() != b.size()) {
    throw DimensionError("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

auto finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                      double step) -> Tensor {
  if (!(step > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = f(probe);
    probe[i] = orig - step;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace keat
