#pragma once

#include <span>
#include <string>
#include <vector>

#include "keat/autodiff.hpp"
#include "keat/params.hpp"

namespace keat {

enum class KernelFamily { none, laplacian, rbf, mlp };

[[nodiscard]] auto to_string(KernelFamily f) -> std::string;
[[nodiscard]] auto parse_kernel_family(const std::string& s) -> KernelFamily;

/// Temporal kernel ψ(Δt).
///
///   laplacian  exp(-Δt/λ)
///   rbf        exp(-Δt²/λ²)
///   mlp        sigmoid(MLP(Δt/λ)), 1 -> 16 -> 16 -> 1 with tanh hidden layers
///   none       1 (identity modulation)
///
/// λ is normally the training-set σ of inter-event gaps. The MLP weights live
/// in `mlp` under the names in kMlpParamNames.
struct KernelSpec {
  KernelFamily family = KernelFamily::none;
  double width = 1.0;
  ParamMap mlp;

  static auto none() -> KernelSpec { return {}; }
  static auto laplacian(double width) -> KernelSpec { return {KernelFamily::laplacian, width, {}}; }
  static auto rbf(double width) -> KernelSpec { return {KernelFamily::rbf, width, {}}; }
  static auto mlp_kernel(double width, Rng& rng) -> KernelSpec;
};

inline constexpr std::size_t kMlpHidden = 16;
inline constexpr const char* kMlpParamNames[] = {"mlp.b1", "mlp.b2", "mlp.b3",
                                                 "mlp.w1", "mlp.w2", "mlp.w3"};

[[nodiscard]] auto init_mlp_params(Rng& rng) -> ParamMap;

/// ψ(Δt) for one Δt >= 0. Throws DomainError for λ <= 0 or bad Δt.
[[nodiscard]] auto eval_kernel(const KernelSpec& k, double delta_t) -> double;

/// ψ over a batch as a rank-1 Var. Closed forms are recorded as constants;
/// the MLP family reads its weights from `mlp_vars` (taped) when given, else
/// from k.mlp as constants.
[[nodiscard]] auto kernel_weights(ad::Tape& tape, const KernelSpec& k,
                                  std::span<const double> delta_ts, const VarMap* mlp_vars = nullptr)
    -> ad::Var;

struct DesignReport {
  bool decays = false;          // strictly decreasing on the grid
  bool non_increasing = false;  // never rises on the grid
  bool bounded = false;         // every value in [0, 1]
  bool continuous = false;      // max jump on the refined grid within tolerance
  double max_jump = 0.0;
};

/// Checks the decay, boundedness and continuity criteria on an ascending grid
/// (>= 2 points). Continuity refines each grid interval `refine` times and
/// requires the largest adjacent jump to stay within `continuity_tol`.
[[nodiscard]] auto check_design_criteria(const KernelSpec& k, std::span<const double> grid,
                                         std::size_t refine = 64, double continuity_tol = 0.05)
    -> DesignReport;

/// ψ(Δt)·ē elementwise.
[[nodiscard]] auto modulate(const KernelSpec& k, double delta_t, std::span<const double> edge_time_feat)
    -> std::vector<double>;

}  // namespace keat
