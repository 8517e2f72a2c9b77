#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "stadyn/numerics/rng.hpp"
#include "stadyn/numerics/stats.hpp"
#include "stadyn/numerics/tensor.hpp"
#include "test_helpers.hpp"

using namespace stadyn;

TEST_CASE("pearson hand examples") {
  const std::vector<double> a{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1};
  CHECK(pearson(a, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(a, down) == doctest::Approx(-1.0).epsilon(1e-12));
  // co-moment 1.0 over n=4, both variances 1.25 -> 1.0 / 1.25
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  CHECK(pearson(x, y) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson degenerate and error cases") {
  const std::vector<double> c{2, 2, 2}, a{1, 2, 3};
  CHECK(pearson(c, a) == 0.0);
  CHECK(pearson(a, c) == 0.0);
  const std::vector<double> one{1}, two{1, 2};
  CHECK_THROWS_AS(pearson(one, one), std::invalid_argument);
  CHECK_THROWS_AS(pearson(a, two), std::invalid_argument);
  // 0.1 * 3 accumulates rounding; an exactly constant column is still degenerate
  const std::vector<float> f{0.1f, 0.1f, 0.1f, 0.1f}, g{1.f, 2.f, 3.f, 5.f};
  CHECK(pearson(f, g) == 0.0);
}

TEST_CASE("pearson symmetry and affine invariance") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(37), b(37), s(37);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal();
      b[i] = 0.3 * a[i] + rng.normal();
    }
    const double alpha = rng.uniform(0.01, 50.0), beta = rng.uniform(-10.0, 10.0);
    for (std::size_t i = 0; i < a.size(); ++i) s[i] = alpha * a[i] + beta;
    CHECK(pearson(a, b) == pearson(b, a));
    CHECK(std::abs(pearson(s, b) - pearson(a, b)) < 1e-6);
    const double r = pearson(a, b);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("streaming correlation matches batch pearson") {
  Rng rng(5);
  for (std::size_t n : {2u, 3u, 100u, 20000u}) {
    CorrAccumulator acc(3);
    std::vector<std::vector<double>> cols_a(3), cols_b(3);
    for (std::size_t i = 0; i < n; ++i) {
      const double base = rng.normal();
      std::vector<double> ra{base + 100.0, rng.normal(), 7.0};
      std::vector<double> rb{0.5 * base + 0.1 * rng.normal(), rng.normal(), rng.normal()};
      acc.update(ra, rb);
      for (int c = 0; c < 3; ++c) {
        cols_a[c].push_back(ra[c]);
        cols_b[c].push_back(rb[c]);
      }
    }
    CHECK(acc.count() == n);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(std::abs(acc.correlation(c) - pearson(cols_a[c], cols_b[c])) < 1e-6);
    }
    CHECK(acc.correlation(2) == 0.0);
  }
}

TEST_CASE("softmax") {
  const std::vector<double> zeros{0, 0, 0};
  for (double p : softmax(zeros)) CHECK(p == doctest::Approx(1.0 / 3));
  // e^0.8, e^0.3, e^1.0 normalized by their sum (2.2255 + 1.3499 + 2.7183)
  const std::vector<double> s{0.8, 0.3, 1.0};
  const auto p = softmax(s);
  CHECK(p[0] == doctest::Approx(0.3536).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.2145).epsilon(1e-3));
  CHECK(p[2] == doctest::Approx(0.4319).epsilon(1e-3));
  for (double x : {-50.0, 0.0, 3.7, 99.0}) {
    const std::vector<double> v{x, x + std::log(2.0)};
    const auto q = softmax(v);
    CHECK(q[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }
  CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("softmax sums to one for bounded inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.uniform_int(20));
    for (auto& x : v) x = rng.uniform(-100.0, 100.0);
    double total = 0.0;
    for (double p : softmax(v)) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("gap_pool") {
  Tensor<float> c({2, 3, 3, 4}, 2.5f);
  for (double v : gap_pool(c)) CHECK(v == 2.5);

  Tensor<float> t({2, 1, 1, 2}, std::vector<float>{0, 5, 2, 7});
  const auto g = gap_pool(t);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 6.0);

  Rng rng(9);
  const auto r = testing::random_tensor<double>({4, 4, 4, 3}, rng);
  const auto pooled = gap_pool(r);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double sum = 0.0;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t d = 0; d < 4; ++d) sum += r.at(a, b, d, ch);
    CHECK(pooled[ch] == doctest::Approx(sum / 64.0).epsilon(1e-12));
  }
  // channel axis in the middle
  Tensor<double> m({2, 3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const auto mid = gap_pool(m, 1);
  CHECK(mid[0] == doctest::Approx((1 + 2 + 7 + 8) / 4.0));
  CHECK(mid[2] == doctest::Approx((5 + 6 + 11 + 12) / 4.0));
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>{1, 2, 3}), std::invalid_argument);
  Tensor<float> t({2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(t.all_finite());
  t[1] = std::nanf("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("rng reproducibility and substreams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng x = Rng(42).derive("train"), y = Rng(42).derive("train"), z = Rng(42).derive("eval");
  CHECK(x.next_u64() == y.next_u64());
  CHECK(x.next_u64() != z.next_u64());
  Rng s(7);
  s.next_u64();
  Rng resumed = Rng::from_state(s.state());
  CHECK(resumed.next_u64() == s.next_u64());
}

TEST_CASE("rng distributions") {
  Rng rng(1);
  std::vector<int> counts(5, 0);
  double mean = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    ++counts[rng.uniform_int(5)];
    const double g = rng.normal();
    mean += g;
    sq += g * g;
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int c : counts) CHECK(std::abs(c - n / 5) < 600);
  CHECK(std::abs(mean / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("non-identity permutations") {
  Rng rng(8);
  std::set<std::vector<std::size_t>> seen;
  for (int i = 0; i < 200; ++i) {
    auto p = rng.non_identity_permutation(3);
    CHECK(p != std::vector<std::size_t>{0, 1, 2});
    seen.insert(p);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS_AS(rng.non_identity_permutation(1), std::invalid_argument);
}
