#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "keat/error.hpp"
#include "keat/kernels.hpp"

using namespace keat;

namespace {

auto integer_grid(int hi) -> std::vector<double> {
  std::vector<double> g;
  for (int i = 0; i <= hi; ++i) g.push_back(i);
  return g;
}

}  // namespace

TEST_CASE("eval_kernel") {
  const double e1 = std::exp(-1.0);
  CHECK(eval_kernel(KernelSpec::laplacian(2.0), 0.0) == 1.0);
  CHECK(std::abs(eval_kernel(KernelSpec::laplacian(2.0), 2.0) - e1) < 1e-15);
  CHECK(std::abs(eval_kernel(KernelSpec::rbf(3.0), 3.0) - e1) < 1e-15);
  CHECK(eval_kernel(KernelSpec::none(), 123.0) == 1.0);
  CHECK_THROWS_AS((void)eval_kernel(KernelSpec::laplacian(0.0), 1.0), DomainError);
  CHECK_THROWS_AS((void)eval_kernel(KernelSpec::laplacian(1.0), -1.0), DomainError);
  CHECK_THROWS_AS((void)parse_kernel_family("cauchy"), DomainError);
}

TEST_CASE("design criteria") {
  const auto grid = integer_grid(10);
  SUBCASE("laplacian") {
    const auto r = check_design_criteria(KernelSpec::laplacian(1.0), grid);
    CHECK(r.decays);
    CHECK(r.bounded);
    CHECK(r.continuous);
  }
  SUBCASE("rbf") {
    const auto r = check_design_criteria(KernelSpec::rbf(1.0), grid);
    CHECK(r.decays);
    CHECK(r.bounded);
    CHECK(r.continuous);
  }
  SUBCASE("identity kernel does not decay") {
    const auto r = check_design_criteria(KernelSpec::none(), grid);
    CHECK_FALSE(r.decays);
    CHECK(r.non_increasing);
    CHECK(r.bounded);
    CHECK(r.continuous);
  }
  SUBCASE("mlp is bounded and continuous") {
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const auto r = check_design_criteria(KernelSpec::mlp_kernel(1.0, rng), grid);
      CHECK(r.bounded);
      CHECK(r.continuous);
    }
  }
  SUBCASE("grid too small") {
    CHECK_THROWS_AS((void)check_design_criteria(KernelSpec::none(), std::vector<double>{1.0}), DomainError);
  }
}

TEST_CASE("modulate") {
  CHECK(modulate(KernelSpec::none(), 5.0, std::vector<double>{3, -1}) == std::vector<double>{3, -1});
  // ψ = 0.5 at Δt = λ ln 2.
  const auto half = modulate(KernelSpec::laplacian(1.0), std::log(2.0), std::vector<double>{2, 4});
  CHECK(std::abs(half[0] - 1.0) < 1e-15);
  CHECK(std::abs(half[1] - 2.0) < 1e-15);
  const auto ones = modulate(KernelSpec::laplacian(1.0), std::log(2.0), std::vector<double>{1, 1});
  CHECK(std::abs(ones[0] - 0.5) < 1e-15);
  CHECK(std::abs(ones[1] - 0.5) < 1e-15);
}

TEST_CASE("kernel_weights agrees with eval_kernel") {
  Rng rng(5);
  const auto dts = keat::testing::random_dts(6, rng, 10.0);
  std::vector<KernelSpec> kernels{KernelSpec::none(), KernelSpec::laplacian(1.5), KernelSpec::rbf(2.5),
                                  KernelSpec::mlp_kernel(2.0, rng)};
  for (const auto& k : kernels) {
    CAPTURE(to_string(k.family));
    ad::Tape tape;
    const Tensor w = kernel_weights(tape, k, dts).value();
    for (std::size_t i = 0; i < dts.size(); ++i) CHECK(std::abs(w[i] - eval_kernel(k, dts[i])) < 1e-15);
    if (k.family == KernelFamily::mlp) {
      ad::Tape t2;
      const VarMap vars = keat::bind(t2, k.mlp, true);
      const Tensor w2 = kernel_weights(t2, k, dts, &vars).value();
      for (std::size_t i = 0; i < dts.size(); ++i) CHECK(std::abs(w2[i] - w[i]) < 1e-15);
    }
  }
}
