#include "keat/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "keat/error.hpp"
#include "keat/graph.hpp"

namespace keat {

auto Distribution::exponential(double rate) -> Distribution {
  if (!(rate > 0.0)) throw DomainError("exponential rate must be positive");
  return {fmt::format("exp:{}", rate), [rate](Rng& rng) {
            return std::exponential_distribution<double>(rate)(rng);
          }};
}

auto Distribution::lognormal(double mu, double sigma) -> Distribution {
  if (!(sigma > 0.0)) throw DomainError("lognormal sigma must be positive");
  return {fmt::format("lognormal:{}:{}", mu, sigma), [mu, sigma](Rng& rng) {
            return std::lognormal_distribution<double>(mu, sigma)(rng);
          }};
}

auto Distribution::uniform(double lo, double hi) -> Distribution {
  if (!(lo >= 0.0 && hi > lo)) throw DomainError("uniform support must satisfy 0 <= lo < hi");
  return {fmt::format("uniform:{}:{}", lo, hi),
          [lo, hi](Rng& rng) { return lo + (hi - lo) * uniform01(rng); }};
}

auto Distribution::point_mass(double at) -> Distribution {
  if (!(at >= 0.0)) throw DomainError("point mass must sit on [0, inf)");
  return {fmt::format("point:{}", at), [at](Rng&) { return at; }};
}

auto Distribution::parse(const std::string& spec) -> Distribution {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  auto num = [&](std::size_t i) {
    if (i >= parts.size()) throw DomainError("distribution '" + spec + "' is missing a parameter");
    try {
      return std::stod(parts[i]);
    } catch (const std::exception&) {
      throw DomainError("distribution '" + spec + "' has a malformed parameter");
    }
  };
  if (parts.empty()) throw DomainError("empty distribution spec");
  if (parts[0] == "exp1") return exponential(1.0);
  if (parts[0] == "exp") return exponential(num(1));
  if (parts[0] == "lognormal") return lognormal(num(1), num(2));
  if (parts[0] == "uniform") return uniform(num(1), num(2));
  if (parts[0] == "point") return point_mass(num(1));
  throw DomainError("unknown distribution '" + spec + "'");
}

auto moment_ratios(const Distribution& dist, const KernelSpec& kernel, std::size_t max_order,
                   std::size_t samples, std::uint64_t seed) -> MomentReport {
  if (kernel.family == KernelFamily::none) {
    throw DomainError("moment_ratios: the identity kernel gives R_n = 1 for all n");
  }
  if (max_order < 1) throw DomainError("moment_ratios: N must be >= 1");
  if (samples < 100000) throw DomainError("moment_ratios: needs at least 1e5 samples");

  Rng rng = make_rng(seed, "moments");
  std::vector<double> log_t(samples);
  std::vector<double> psi(samples);
  {
    std::vector<double> chunk;
    constexpr std::size_t kChunk = 4096;
    for (std::size_t start = 0; start < samples; start += kChunk) {
      const std::size_t end = std::min(samples, start + kChunk);
      chunk.clear();
      for (std::size_t i = start; i < end; ++i) {
        const double t = dist.sample(rng);
        if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("sampler produced a value outside [0, inf)");
        chunk.push_back(t);
        log_t[i] = std::log(t);
      }
      ad::Tape tape;
      const Tensor w = kernel_weights(tape, kernel, chunk).value();
      std::copy(w.data().begin(), w.data().end(), psi.begin() + static_cast<std::ptrdiff_t>(start));
    }
  }

  MomentReport rep;
  const auto s = static_cast<double>(samples);
  std::vector<double> b(samples);
  for (std::size_t n = 0; n <= max_order; ++n) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
      b[i] = n == 0 ? 0.0 : static_cast<double>(n) * log_t[i];
      peak = std::max(peak, b[i]);
    }
    if (!std::isfinite(peak)) {
      throw DegenerateDataError(fmt::format("E[t^{}] = 0; R_n is undefined for this distribution", n));
    }
    double sum_b = 0.0;
    double sum_a = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      b[i] = std::exp(b[i] - peak);
      sum_b += b[i];
      sum_a += psi[i] * b[i];
    }
    const double mean_b = sum_b / s;
    const double mean_a = sum_a / s;
    const double ratio = sum_a / sum_b;
    double ss_b = 0.0;
    double ss_a = 0.0;
    double ss_r = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double a = psi[i] * b[i];
      ss_b += (b[i] - mean_b) * (b[i] - mean_b);
      ss_a += (a - mean_a) * (a - mean_a);
      const double resid = a - ratio * b[i];
      ss_r += resid * resid;
    }
    const double scale = std::exp(peak);
    rep.orders.push_back(n);
    rep.base_moments.push_back(mean_b * scale);
    rep.weighted_moments.push_back(mean_a * scale);
    rep.ratios.push_back(ratio);
    rep.base_std_errors.push_back(std::sqrt(ss_b / (s - 1.0) / s) * scale);
    rep.weighted_std_errors.push_back(std::sqrt(ss_a / (s - 1.0) / s) * scale);
    rep.ratio_std_errors.push_back(std::sqrt(ss_r / (s - 1.0) / s) / mean_b);
  }
  rep.strictly_decreasing = true;
  for (std::size_t n = 0; n + 1 < rep.ratios.size(); ++n) {
    const double rise = rep.ratios[n + 1] - rep.ratios[n];
    if (!(rise < 0.0)) rep.strictly_decreasing = false;
    const double band = 3.0 * std::hypot(rep.ratio_std_errors[n], rep.ratio_std_errors[n + 1]);
    if (rise > band) rep.decrease_violations.push_back(n);
  }
  return rep;
}

auto product_series(double lambda, double omega, std::size_t max_power) -> SeriesCoefficients {
  SeriesCoefficients sc;
  sc.a.resize(max_power + 1);
  sc.b.resize(max_power / 2 + 1);
  sc.c.assign(max_power + 1, 0.0);
  sc.a[0] = 1.0;
  for (std::size_t m = 1; m <= max_power; ++m) {
    sc.a[m] = sc.a[m - 1] * (-lambda) / static_cast<double>(m);
  }
  sc.b[0] = 1.0;
  for (std::size_t n = 1; n < sc.b.size(); ++n) {
    const auto two_n = static_cast<double>(2 * n);
    sc.b[n] = sc.b[n - 1] * (-omega * omega) / ((two_n - 1.0) * two_n);
  }
  for (std::size_t n = 0; n < sc.b.size(); ++n) {
    for (std::size_t m = 0; m + 2 * n <= max_power; ++m) sc.c[m + 2 * n] += sc.a[m] * sc.b[n];
  }
  return sc;
}

auto series_vs_direct(double lambda, double omega, double t, std::size_t max_power)
    -> SeriesComparison {
  const auto sc = product_series(lambda, omega, max_power);
  SeriesComparison out;
  double power = 1.0;
  for (std::size_t k = 0; k <= max_power; ++k) {
    out.series += sc.c[k] * power;
    power *= t;
  }
  out.direct = std::exp(-lambda * t) * std::cos(omega * t);
  out.abs_diff = std::abs(out.series - out.direct);
  const double x = (std::abs(lambda) + std::abs(omega)) * std::abs(t);
  const double k1 = static_cast<double>(max_power + 1);
  out.truncation_bound =
      x == 0.0 ? 0.0 : std::exp(k1 * std::log(x) - std::lgamma(k1 + 1.0) + x);
  out.converged = std::isfinite(out.series) && out.truncation_bound <= 1e-8;
  return out;
}

auto VarianceFixture::condition() const -> bool { return sigma_y * (1.0 + psi) >= 2.0 * sigma_x; }

auto VarianceDelta::agrees(double num_se) const -> bool {
  return std::abs(monte_carlo - analytic) <= num_se * std_error;
}

namespace {

void validate(const VarianceFixture& f) {
  if (!(std::abs(f.rho) <= 1.0)) throw DomainError(fmt::format("|rho| = {} exceeds 1", std::abs(f.rho)));
  if (!(f.psi > 0.0 && f.psi <= 1.0)) throw DomainError(fmt::format("psi = {} outside (0, 1]", f.psi));
  if (!(f.sigma_x > 0.0) || !(f.sigma_y > 0.0)) throw DomainError("sigma_X and sigma_Y must be positive");
}

}  // namespace

auto variance_delta_analytic(const VarianceFixture& f) -> double {
  validate(f);
  return (1.0 - f.psi) *
         (f.sigma_y * f.sigma_y * (1.0 + f.psi) + 2.0 * f.rho * f.sigma_x * f.sigma_y);
}

auto variance_delta(const VarianceFixture& f, std::size_t samples, std::uint64_t seed)
    -> VarianceDelta {
  VarianceDelta out;
  out.analytic = variance_delta_analytic(f);
  if (samples < 2) throw DomainError("variance_delta: needs at least 2 samples");
  Rng rng = make_rng(seed, "variance");
  std::normal_distribution<double> normal;
  const double tail = std::sqrt(std::max(0.0, 1.0 - f.rho * f.rho));
  std::vector<double> s0(samples);
  std::vector<double> sk(samples);
  double m0 = 0.0;
  double mk = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double x = f.sigma_x * z1;
    const double y = f.sigma_y * (f.rho * z1 + tail * z2);
    s0[i] = x + y;
    sk[i] = x + f.psi * y;
    m0 += s0[i];
    mk += sk[i];
  }
  const auto n = static_cast<double>(samples);
  m0 /= n;
  mk /= n;
  double mean_d = 0.0;
  std::vector<double> d(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    d[i] = (s0[i] - m0) * (s0[i] - m0) - (sk[i] - mk) * (sk[i] - mk);
    mean_d += d[i];
  }
  mean_d /= n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean_d) * (v - mean_d);
  out.monte_carlo = mean_d;
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

auto NeighborhoodFixture::cov_xx(std::size_t j, std::size_t l) const -> double { return cov(j, l); }
auto NeighborhoodFixture::cov_xy(std::size_t j, std::size_t l) const -> double {
  return cov(j, size() + l);
}
auto NeighborhoodFixture::cov_yy(std::size_t j, std::size_t l) const -> double {
  return cov(size() + j, size() + l);
}

auto NeighborhoodFixture::per_edge_nonnegative() const -> bool {
  for (std::size_t j = 0; j < size(); ++j) {
    const double d = (1.0 - psi[j] * psi[j]) * cov_yy(j, j) + 2.0 * (1.0 - psi[j]) * cov_xy(j, j);
    if (d < 0.0) return false;
  }
  return true;
}

namespace {

void validate(const NeighborhoodFixture& f) {
  const std::size_t n = f.size();
  if (n == 0) throw DomainError("neighborhood fixture has no neighbors");
  if (f.cov.shape() != std::vector<std::size_t>{2 * n, 2 * n}) {
    throw DimensionError(fmt::format("covariance {} does not match {} neighbors",
                                     f.cov.shape_string(), n));
  }
  for (double p : f.psi) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError(fmt::format("psi = {} outside (0, 1]", p));
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      if (j == l) continue;
      if (f.cov_yy(j, l) < 0.0 || f.cov_xy(j, l) < 0.0) {
        throw DomainError(fmt::format(
            "negative cross-neighbor covariance between neighbors {} and {}; the variance "
            "reduction result only covers non-negative correlations",
            j, l));
      }
    }
  }
  (void)cholesky_psd(f.cov);
}

}  // namespace

auto cholesky_psd(const Tensor& a) -> Tensor {
  if (a.rank() != 2 || a.rows() != a.cols()) throw DimensionError("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(a(i, i)));
  const double tol = 1e-10 * std::max(diag_scale, 1.0);
  Tensor l({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < -tol) throw DomainError("covariance matrix is not positive semidefinite");
    const double root = pivot > tol ? std::sqrt(pivot) : 0.0;
    l(j, j) = root;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      if (root > 0.0) {
        l(i, j) = v / root;
      } else if (std::abs(v) > tol) {
        throw DomainError("covariance matrix is not positive semidefinite");
      }
    }
  }
  return l;
}

auto neighborhood_variance_delta_analytic(const NeighborhoodFixture& f) -> double {
  validate(f);
  const std::size_t n = f.size();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      total += (1.0 - f.psi[j] * f.psi[l]) * f.cov_yy(j, l) + (1.0 - f.psi[l]) * f.cov_xy(j, l) +
               (1.0 - f.psi[j]) * f.cov_xy(l, j);
    }
  }
  return total / static_cast<double>(n * n);
}

auto neighborhood_variance_delta(const NeighborhoodFixture& f, std::size_t samples,
                                 std::uint64_t seed) -> VarianceDelta {
  VarianceDelta out;
  out.analytic = neighborhood_variance_delta_analytic(f);
  if (samples < 2) throw DomainError("neighborhood_variance_delta: needs at least 2 samples");
  const std::size_t n = f.size();
  const Tensor chol = cholesky_psd(f.cov);
  Rng rng = make_rng(seed, "neighborhood-variance");
  std::normal_distribution<double> normal;
  std::vector<double> z(2 * n);
  std::vector<double> v(2 * n);
  std::vector<double> s0(samples);
  std::vector<double> sk(samples);
  double m0 = 0.0;
  double mk = 0.0;
  const auto nn = static_cast<double>(n);
  for (std::size_t i = 0; i < samples; ++i) {
    for (auto& zi : z) zi = normal(rng);
    for (std::size_t r = 0; r < 2 * n; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c <= r; ++c) acc += chol(r, c) * z[c];
      v[r] = acc;
    }
    double a0 = 0.0;
    double ak = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a0 += v[j] + v[n + j];
      ak += v[j] + f.psi[j] * v[n + j];
    }
    s0[i] = a0 / nn;
    sk[i] = ak / nn;
    m0 += s0[i];
    mk += sk[i];
  }
  const auto s = static_cast<double>(samples);
  m0 /= s;
  mk /= s;
  double mean_d = 0.0;
  std::vector<double> d(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    d[i] = (s0[i] - m0) * (s0[i] - m0) - (sk[i] - mk) * (sk[i] - mk);
    mean_d += d[i];
  }
  mean_d /= s;
  double ss = 0.0;
  for (double x : d) ss += (x - mean_d) * (x - mean_d);
  out.monte_carlo = mean_d;
  out.std_error = std::sqrt(ss / (s - 1.0) / s);
  return out;
}

}  // namespace keat
