#include <doctest.h>

#include <cmath>

#include "lcnmt/error.hpp"
#include "lcnmt/rng.hpp"
#include "lcnmt/tensor.hpp"

using namespace lcnmt;

TEST_CASE("factories and accessors") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rank() == 2);
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(z.at(i) == 0.0);

  Tensor f = Tensor::full({3}, 2.5);
  CHECK(f.at(2) == 2.5);

  Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(0, 1) == 2.0);
  CHECK(m.at(1, 0) == 3.0);
  CHECK(m.at(1, 1) == 4.0);

  Tensor s = Tensor::scalar(7.0);
  CHECK(s.rank() == 1);
  CHECK(s.numel() == 1);

  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ContractError);
}

TEST_CASE("grad slot management") {
  Tensor t = Tensor::vec({1, 2, 3});
  CHECK_FALSE(t.has_grad());
  t.ensure_grad();
  CHECK(t.has_grad());
  CHECK(t.grad.size() == 3);
  t.grad[1] = 5.0;
  t.zero_grad();
  CHECK(t.grad[1] == 0.0);
  CHECK(t.has_grad());
}

TEST_CASE("all_finite flags nan and inf") {
  Tensor t = Tensor::vec({1, 2, 3});
  CHECK(t.all_finite());
  t.at(1) = std::nan("");
  CHECK_FALSE(t.all_finite());
  t.at(1) = 1.0 / 0.0;
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("elementwise activations") {
  Tensor x = Tensor::vec({0.0, 1.0, -1.0});
  Tensor th = elementwise(x, Act::Tanh);
  CHECK(th.at(0) == 0.0);
  CHECK(th.at(1) == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));

  Tensor sg = elementwise(x, Act::Sigmoid);
  CHECK(sg.at(0) == 0.5);
  CHECK(sg.at(1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
  CHECK(sg.at(1) + sg.at(2) == doctest::Approx(1.0).epsilon(1e-15));

  Tensor ex = elementwise(x, Act::Exp);
  CHECK(ex.at(0) == 1.0);

  Tensor pos = Tensor::vec({1.0, std::exp(1.0)});
  Tensor lg = elementwise(pos, Act::Log);
  CHECK(lg.at(0) == 0.0);
  CHECK(lg.at(1) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(elementwise(Tensor::vec({0.0}), Act::Log), NumericError);
  CHECK_THROWS_AS(elementwise(Tensor::vec({-2.0}), Act::Log), NumericError);
}

TEST_CASE("softmax_masked basics") {
  // mask true = real position, false = padded out
  Tensor s = Tensor::vec({1.0, 2.0, 3.0});
  std::vector<char> all = {1, 1, 1};
  Tensor p = softmax_masked(s, all);
  real z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p.at(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-14));
  CHECK(p.at(2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
  CHECK(p.at(0) + p.at(1) + p.at(2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("softmax_masked masked positions are exactly zero") {
  Tensor s = Tensor::vec({5.0, 1.0, -3.0, 2.0});
  std::vector<char> mask = {1, 0, 1, 0};
  Tensor p = softmax_masked(s, mask);
  CHECK(p.at(1) == 0.0);
  CHECK(p.at(3) == 0.0);
  real z = std::exp(5.0) + std::exp(-3.0);
  CHECK(p.at(0) == doctest::Approx(std::exp(5.0) / z).epsilon(1e-14));
  CHECK(p.at(0) + p.at(2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("softmax_masked survives large scores") {
  Tensor s = Tensor::vec({1000.0, 1001.0});
  std::vector<char> all = {1, 1};
  Tensor p = softmax_masked(s, all);
  CHECK(p.all_finite());
  CHECK(p.at(1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
}

TEST_CASE("softmax_masked contract errors") {
  Tensor s = Tensor::vec({1.0, 2.0});
  CHECK_THROWS_AS(softmax_masked(s, std::vector<char>{1}), ContractError);   // length mismatch
  CHECK_THROWS_AS(softmax_masked(s, std::vector<char>{0, 0}), ContractError);  // empty support
}

TEST_CASE("softmax_masked symmetric pair and single support") {
  Tensor s0 = Tensor::vec({0.0, 0.0});
  Tensor p0 = softmax_masked(s0, {1, 1});
  CHECK(p0.at(0) == 0.5);
  CHECK(p0.at(1) == 0.5);

  Tensor s1 = Tensor::vec({5.0, 99.0});
  Tensor p1 = softmax_masked(s1, {1, 0});
  CHECK(p1.at(0) == 1.0);
  CHECK(p1.at(1) == 0.0);
}

TEST_CASE("orthogonal factory gives orthonormal columns") {
  Rng rng(42);
  const std::size_t n = 16;
  Tensor q = Tensor::orthogonal(n, rng);
  REQUIRE(q.rows() == n);
  REQUIRE(q.cols() == n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      real dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += q.at(k, i) * q.at(k, j);
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("gaussian factory respects stddev roughly") {
  Rng rng(7);
  Tensor g = Tensor::gaussian({10000}, 0.01, rng);
  real mean = 0.0;
  for (auto v : g.values) mean += v;
  mean /= static_cast<real>(g.numel());
  real var = 0.0;
  for (auto v : g.values) var += (v - mean) * (v - mean);
  var /= static_cast<real>(g.numel());
  CHECK(std::abs(mean) < 5e-4);
  CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("rng determinism") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(123);
  std::vector<int> v1 = {1, 2, 3, 4, 5, 6, 7};
  std::vector<int> v2 = v1;
  Rng d(123);
  c.shuffle(v1);
  d.shuffle(v2);
  CHECK(v1 == v2);
}

TEST_CASE("uniform_int stays in range and hits endpoints") {
  Rng rng(9);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    auto x = rng.uniform_int(3, 7);
    CHECK(x >= 3);
    CHECK(x <= 7);
    lo = lo || x == 3;
    hi = hi || x == 7;
  }
  CHECK(lo);
  CHECK(hi);
}
