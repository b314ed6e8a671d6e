#include "keat/time_encoding.hpp"

#include <cmath>
#include <numbers>

#include "keat/error.hpp"

namespace keat {

auto to_string(EncoderMode m) -> std::string {
  return m == EncoderMode::fixed ? "fixed" : "learnable";
}

auto parse_encoder_mode(const std::string& s) -> EncoderMode {
  if (s == "fixed") return EncoderMode::fixed;
  if (s == "learnable") return EncoderMode::learnable;
  throw DomainError("unknown time encoding mode '" + s + "' (fixed|learnable)");
}

TimeEncoder::TimeEncoder(std::size_t d_t, EncoderMode mode, double base) : mode_(mode) {
  if (d_t % 2 != 0) throw DomainError("time encoding d_t must be even, got " + std::to_string(d_t));
  if (!(base > 0.0) || !std::isfinite(base)) throw DomainError("time encoding base must be positive");
  const std::size_t half = d_t / 2;
  omega_.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    omega_[k] = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(d_t));
  }
}

TimeEncoder::TimeEncoder(EncoderMode mode, std::vector<double> omega) : mode_(mode) {
  set_omega(std::move(omega));
}

void TimeEncoder::set_omega(std::vector<double> omega) {
  for (double w : omega) {
    if (!std::isfinite(w)) throw DomainError("time encoding frequency is non-finite");
  }
  omega_ = std::move(omega);
}

auto TimeEncoder::base_for_span(std::size_t d_t, double span) -> double {
  // Slowest ω = base^{-(d_t-2)/d_t}; solve 2π/ω = span.
  if (d_t <= 2 || !(span > 2.0 * std::numbers::pi)) return 10000.0;
  const double exponent = static_cast<double>(d_t) / static_cast<double>(d_t - 2);
  return std::pow(span / (2.0 * std::numbers::pi), exponent);
}

auto TimeEncoder::encode(double delta_t) const -> std::vector<double> {
  if (!std::isfinite(delta_t) || delta_t < 0.0) {
    throw DomainError("time encoding: Δt must be finite and >= 0, got " + std::to_string(delta_t));
  }
  std::vector<double> out(d_t());
  for (std::size_t k = 0; k < omega_.size(); ++k) {
    out[2 * k] = std::cos(omega_[k] * delta_t);
    out[2 * k + 1] = std::sin(omega_[k] * delta_t);
  }
  return out;
}

auto TimeEncoder::encode(ad::Tape& tape, std::span<const double> delta_ts, ad::Var omega_var) const
    -> ad::Var {
  for (double dt : delta_ts) {
    if (!std::isfinite(dt) || dt < 0.0) {
      throw DomainError("time encoding: Δt must be finite and >= 0, got " + std::to_string(dt));
    }
  }
  if (!omega_var.valid()) omega_var = tape.constant(Tensor::vector(omega_));
  return ad::sinusoid(omega_var, delta_ts);
}

auto moment_series_cos(double omega, std::span<const double> even_moments) -> double {
  double total = 0.0;
  double coef = 1.0;  // (-1)^n ω^{2n} / (2n)!
  for (std::size_t n = 0; n < even_moments.size(); ++n) {
    if (n > 0) {
      const auto two_n = static_cast<double>(2 * n);
      coef *= -omega * omega / ((two_n - 1.0) * two_n);
    }
    total += coef * even_moments[n];
  }
  return total;
}

}  // namespace keat
