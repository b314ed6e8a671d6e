#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "keat/kernels.hpp"
#include "keat/rng.hpp"
#include "keat/tensor.hpp"

namespace keat {

/// A sampler for a distribution on [0, ∞).
struct Distribution {
  std::string name;
  std::function<double(Rng&)> sample;

  [[nodiscard]] static auto exponential(double rate) -> Distribution;
  [[nodiscard]] static auto lognormal(double mu, double sigma) -> Distribution;
  [[nodiscard]] static auto uniform(double lo, double hi) -> Distribution;
  [[nodiscard]] static auto point_mass(double at) -> Distribution;
  /// exp1 | exp:<rate> | lognormal:<mu>:<sigma> | uniform:<lo>:<hi> | point:<x>
  [[nodiscard]] static auto parse(const std::string& spec) -> Distribution;
};

/// Monte-Carlo moments E[tⁿ], E[ψ(t)tⁿ] and their ratio R_n for n = 0..N.
struct MomentReport {
  std::vector<std::size_t> orders;
  std::vector<double> base_moments;
  std::vector<double> weighted_moments;
  std::vector<double> ratios;
  std::vector<double> base_std_errors;
  std::vector<double> weighted_std_errors;
  std::vector<double> ratio_std_errors;
  /// Orders n where R_{n+1} exceeds R_n by more than 3 combined standard errors.
  std::vector<std::size_t> decrease_violations;
  bool strictly_decreasing = false;  // point estimates only
};

/// Throws DomainError for the `none` kernel (R_n ≡ 1), N < 1 or fewer than
/// 1e5 samples; DegenerateDataError when E[tⁿ] vanishes for some n >= 1.
/// Means are accumulated in the log domain so factorial-size moments stay finite.
[[nodiscard]] auto moment_ratios(const Distribution& dist, const KernelSpec& kernel, std::size_t max_order,
                                 std::size_t samples, std::uint64_t seed) -> MomentReport;

/// Taylor coefficients of ψ(t)·cos(ωt) for ψ(t) = e^{-λt}:
/// a_m = (-λ)^m/m!, b_n = (-1)^n ω^{2n}/(2n)!, c_k = Σ_{m+2n=k} a_m b_n.
struct SeriesCoefficients {
  std::vector<double> a;  // m = 0..K
  std::vector<double> b;  // n = 0..K/2
  std::vector<double> c;  // k = 0..K
};

[[nodiscard]] auto product_series(double lambda, double omega, std::size_t max_power)
    -> SeriesCoefficients;

struct SeriesComparison {
  double series = 0.0;
  double direct = 0.0;
  double abs_diff = 0.0;
  /// Bound on the dropped tail: x^{K+1}/(K+1)!·e^x with x = (λ+|ω|)|t|.
  double truncation_bound = 0.0;
  bool converged = false;  // truncation_bound <= 1e-8
};

/// Σ_{k<=K} c_k t^k against e^{-λt}cos(ωt).
[[nodiscard]] auto series_vs_direct(double lambda, double omega, double t, std::size_t max_power)
    -> SeriesComparison;

/// One neighbor's logit pair (X, Y) with the modulated logit X + ψY.
struct VarianceFixture {
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;
  double psi = 1.0;

  /// σ_Y(1 + ψ) >= 2σ_X, the sufficient condition for Δ >= 0.
  [[nodiscard]] auto condition() const -> bool;
};

struct VarianceDelta {
  double analytic = 0.0;
  double monte_carlo = 0.0;
  double std_error = 0.0;
  [[nodiscard]] auto agrees(double num_se = 3.0) const -> bool;
};

/// Δ = Var[X + Y] - Var[X + ψY] = (1 - ψ)[σ_Y²(1 + ψ) + 2ρσ_Xσ_Y].
/// Throws DomainError for |ρ| > 1, ψ outside (0, 1] or non-positive σ.
[[nodiscard]] auto variance_delta_analytic(const VarianceFixture& f) -> double;
[[nodiscard]] auto variance_delta(const VarianceFixture& f, std::size_t samples, std::uint64_t seed)
    -> VarianceDelta;

/// n neighbors with joint covariance over (X_1..X_n, Y_1..Y_n).
struct NeighborhoodFixture {
  std::vector<double> psi;
  Tensor cov;  // [2n × 2n]

  [[nodiscard]] auto size() const -> std::size_t { return psi.size(); }
  [[nodiscard]] auto cov_xy(std::size_t j, std::size_t l) const -> double;  // Cov[X_j, Y_l]
  [[nodiscard]] auto cov_yy(std::size_t j, std::size_t l) const -> double;
  [[nodiscard]] auto cov_xx(std::size_t j, std::size_t l) const -> double;
  /// Per-neighbor Δ_j >= 0 for every j (then Δ̄ >= 0 is guaranteed).
  [[nodiscard]] auto per_edge_nonnegative() const -> bool;
};

/// Δ̄ = Var[s̄⁰] - Var[s̄ᴷ] for the neighborhood-averaged logit:
/// (1/n²) Σ_{j,l} [(1 - ψ_jψ_l)Cov[Y_j,Y_l] + (1 - ψ_l)Cov[X_j,Y_l] + (1 - ψ_j)Cov[Y_j,X_l]].
/// Throws DomainError when a cross-neighbor covariance (j != l) involving Y is
/// negative, or when the covariance is not positive semidefinite.
[[nodiscard]] auto neighborhood_variance_delta_analytic(const NeighborhoodFixture& f) -> double;
[[nodiscard]] auto neighborhood_variance_delta(const NeighborhoodFixture& f, std::size_t samples,
                                               std::uint64_t seed) -> VarianceDelta;

/// Lower-triangular L with L·Lᵀ = a for a symmetric PSD matrix; zero pivots
/// are allowed. Throws DomainError if a is not PSD (beyond round-off).
[[nodiscard]] auto cholesky_psd(const Tensor& a) -> Tensor;

}  // namespace keat
