#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "keat/autodiff.hpp"
#include "keat/tensor.hpp"

namespace keat {

enum class EncoderMode { fixed, learnable };

[[nodiscard]] auto to_string(EncoderMode m) -> std::string;
[[nodiscard]] auto parse_encoder_mode(const std::string& s) -> EncoderMode;

/// Sinusoidal map Δt -> [cos ω_0Δt, sin ω_0Δt, cos ω_1Δt, ...] of length d_t.
///
/// Frequencies follow the ladder ω_k = base^(-2k/d_t). In learnable mode the
/// frequencies are a trainable parameter (initialized from the same ladder);
/// in fixed mode they never change. d_t = 0 is allowed and encodes nothing.
class TimeEncoder {
 public:
  TimeEncoder() = default;
  TimeEncoder(std::size_t d_t, EncoderMode mode, double base);
  TimeEncoder(EncoderMode mode, std::vector<double> omega);

  /// Base for which the slowest ladder period 2π/ω equals `span`.
  [[nodiscard]] static auto base_for_span(std::size_t d_t, double span) -> double;

  [[nodiscard]] auto d_t() const -> std::size_t { return 2 * omega_.size(); }
  [[nodiscard]] auto mode() const -> EncoderMode { return mode_; }
  [[nodiscard]] auto omega() const -> const std::vector<double>& { return omega_; }
  void set_omega(std::vector<double> omega);

  /// Throws DomainError for negative or non-finite Δt.
  [[nodiscard]] auto encode(double delta_t) const -> std::vector<double>;
  /// [Δt.size() × d_t] on `tape`; learnable mode differentiates through ω,
  /// which must then be supplied as `omega_var`.
  [[nodiscard]] auto encode(ad::Tape& tape, std::span<const double> delta_ts,
                            ad::Var omega_var = {}) const -> ad::Var;

 private:
  EncoderMode mode_ = EncoderMode::fixed;
  std::vector<double> omega_;
};

/// Truncated series Σ_{n=0}^{N} (-1)^n ω^{2n}/(2n)! · E[Δt^{2n}] given
/// even_moments[n] = E[Δt^{2n}]. Converges to E[cos ωΔt] only when the
/// moment growth allows it (for Exp(1), |ω| < 1).
[[nodiscard]] auto moment_series_cos(double omega, std::span<const double> even_moments) -> double;

}  // namespace keat
