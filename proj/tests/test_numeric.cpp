#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "gradient_fixture.hpp"
#include "keat/autodiff.hpp"
#include "keat/error.hpp"
#include "keat/tensor.hpp"

using namespace keat;
using keat::testing::random_tensor;
using keat::testing::relative_error;

TEST_CASE("matmul") {
  SUBCASE("identity") {
    const Tensor r = matmul(Tensor::matrix({{1, 0}, {0, 1}}), Tensor::matrix({{3}, {4}}));
    CHECK(r == Tensor::matrix({{3}, {4}}));
  }
  SUBCASE("zero") { CHECK(matmul(Tensor::matrix({{2}}), Tensor::matrix({{0}})) == Tensor::matrix({{0}})); }
  SUBCASE("by hand") {
    CHECK(matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5}, {6}})) ==
          Tensor::matrix({{17}, {39}}));
  }
  SUBCASE("matrix times vector gives a vector") {
    const Tensor r = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector({5, 6}));
    CHECK(r.rank() == 1);
    CHECK(r == Tensor::vector({17, 39}));
  }
  SUBCASE("mismatch names both shapes") {
    try {
      (void)matmul(Tensor({2, 3}), Tensor({2, 2}));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[2x2]") != std::string::npos);
    }
  }
}

TEST_CASE("softmax") {
  const Tensor third = softmax(Tensor::vector({0, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(third[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Tensor big = softmax(Tensor::vector({1000, 1000}));
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
  const Tensor q = softmax(Tensor::vector({0, std::log(3.0)}));
  CHECK(std::abs(q[0] - 0.25) < 1e-15);
  CHECK(std::abs(q[1] - 0.75) < 1e-15);
  CHECK_THROWS_AS((void)softmax(Tensor(std::vector<std::size_t>{0})), DomainError);

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_tensor({5}, rng, -30, 30);
    const Tensor p = softmax(x);
    double sum = 0.0;
    for (double v : p.values()) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    Tensor shifted = x;
    for (auto& v : shifted.data()) v += 123.25;
    const Tensor ps = softmax(shifted);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(ps[i] - p[i]) < 1e-12);
  }
}

TEST_CASE("backward") {
  SUBCASE("square") {
    ad::Tape tape;
    const ad::Var x = tape.parameter(Tensor::scalar(3.0));
    tape.backward(ad::mul(x, x));
    CHECK(tape.grad(x).item() == 6.0);
  }
  SUBCASE("sum of softmax has zero gradient") {
    ad::Tape tape;
    const ad::Var x = tape.parameter(Tensor::vector({0.3, -1.2, 2.0}));
    tape.backward(ad::sum(ad::softmax(x)));
    const Tensor gx = tape.grad(x);
    for (double g : gx.values()) CHECK(std::abs(g) < 1e-15);
  }
  SUBCASE("non-scalar loss is rejected") {
    ad::Tape tape;
    const ad::Var x = tape.parameter(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(x), DomainError);
  }
  SUBCASE("repeated runs are bitwise identical") {
    const auto f = keat::testing::GradientFixture::make(5);
    ad::Tape t1;
    ad::Tape t2;
    const VarMap v1 = keat::bind(t1, f.params, true);
    const VarMap v2 = keat::bind(t2, f.params, true);
    t1.backward(f.loss(t1, v1));
    t2.backward(f.loss(t2, v2));
    for (const auto& [name, var] : v1) CHECK(t1.grad(var) == t2.grad(v2.at(name)));
  }
}

TEST_CASE("finite differences") {
  const Tensor g = finite_diff_grad([](const Tensor& x) { return x[0] * x[0]; }, Tensor::scalar(3.0), 1e-4);
  CHECK(std::abs(g[0] - 6.0) < 1e-7);
  const Tensor z = finite_diff_grad([](const Tensor&) { return 2.5; }, Tensor::vector({1, 2, 3}), 1e-4);
  for (double v : z.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS((void)finite_diff_grad([](const Tensor&) { return std::nan(""); }, Tensor::scalar(1), 1e-4),
                  NumericError);
}

// Each primitive against central differences at random points.
TEST_CASE("primitive gradients match finite differences") {
  using UnaryLoss = std::function<ad::Var(ad::Tape&, ad::Var)>;
  struct Case {
    const char* name;
    std::vector<std::size_t> shape;
    UnaryLoss loss;
  };
  Rng rng(11);
  const Tensor m23 = random_tensor({2, 3}, rng);
  const Tensor v3 = random_tensor({3}, rng);
  const Tensor v2 = random_tensor({2}, rng);
  const Tensor w = random_tensor({2, 3}, rng);
  const Tensor s34 = random_tensor({3, 4}, rng);
  const std::vector<std::size_t> ids{2, 0, 2};
  const std::vector<double> times{0.0, 0.7, 2.5};
  const std::vector<double> labels{1, 0, 1};
  const std::vector<Case> cases = {
      {"matmul", {3, 2}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::matmul(t.constant(m23), x))); }},
      {"matmul-left", {2, 3}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::matmul(x, t.constant(v3)))); }},
      {"transpose", {2, 3}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::mul(ad::transpose(x), ad::transpose(t.constant(w)))); }},
      {"add-sub", {2, 3}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::sub(ad::add(x, x), t.constant(w)))); }},
      {"mul", {2, 3}, [&](ad::Tape&, ad::Var x) { return ad::sum(ad::mul(x, ad::tanh(x))); }},
      {"scale", {3}, [&](ad::Tape&, ad::Var x) { return ad::sum(ad::tanh(ad::scale(x, -1.7))); }},
      {"mul_scalar", {1}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::mul_scalar(t.constant(v3), x))); }},
      {"add_row", {3}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::add_row(t.constant(w), x))); }},
      {"scale_rows", {2}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::scale_rows(t.constant(w), x))); }},
      {"softmax", {3}, [&](ad::Tape& t, ad::Var x) { return ad::dot(t.constant(v3), ad::softmax(x)); }},
      {"sigmoid", {3}, [&](ad::Tape& t, ad::Var x) { return ad::dot(t.constant(v3), ad::sigmoid(x)); }},
      {"dot", {3}, [&](ad::Tape&, ad::Var x) { return ad::dot(x, ad::tanh(x)); }},
      {"reshape", {2, 3}, [&](ad::Tape& t, ad::Var x) { return ad::dot(t.constant(Tensor::vector({1, 2, 3, 4, 5, 6})), ad::tanh(ad::reshape(x, {6}))); }},
      {"concat_cols", {2, 2}, [&](ad::Tape& t, ad::Var x) { return ad::sum(ad::tanh(ad::concat_cols(t.constant(w), x))); }},
      {"gather_rows", {3, 2}, [&](ad::Tape&, ad::Var x) { return ad::sum(ad::tanh(ad::gather_rows(x, ids))); }},
      {"row", {3, 2}, [&](ad::Tape& t, ad::Var x) { return ad::dot(t.constant(v2), ad::tanh(ad::row(x, 1))); }},
      {"stack", {3}, [&](ad::Tape& t, ad::Var x) {
         const std::vector<ad::Var> parts{ad::dot(x, x), ad::sum(x), ad::dot(x, t.constant(v3))};
         return ad::sum(ad::tanh(ad::stack(parts)));
       }},
      {"sinusoid", {2}, [&](ad::Tape& t, ad::Var x) {
         return ad::sum(ad::mul(ad::sinusoid(x, times), t.constant(s34)));
       }},
      {"bce_with_logits", {3}, [&](ad::Tape&, ad::Var x) { return ad::bce_with_logits(x, labels); }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor x0 = random_tensor(c.shape, rng);
      ad::Tape tape;
      const ad::Var x = tape.parameter(x0);
      tape.backward(c.loss(tape, x));
      const Tensor fd = finite_diff_grad(
          [&](const Tensor& xv) {
            ad::Tape t;
            return c.loss(t, t.constant(xv)).value().item();
          },
          x0, 1e-5);
      CHECK(relative_error(tape.grad(x), fd) < 1e-6);
    }
  }
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK(Tensor::matrix({{1, 2}, {3, 4}}).shape_string() == "[2x2]");
  Tensor t = Tensor::vector({1, 2});
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}
