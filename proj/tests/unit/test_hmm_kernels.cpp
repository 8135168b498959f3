#include <doctest.h>

#include <cmath>
#include <cstring>

#include "gaat/hmm.hpp"
#include "gaat/simd/hmm_kernels.hpp"
#include "generators.hpp"

using namespace gaat;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::vector<std::string> names(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("scalar kernels are always available and listed first") {
  const auto all = simd::available_kernels();
  REQUIRE_FALSE(all.empty());
  CHECK(std::strcmp(all.front()->name, "scalar") == 0);
  CHECK(std::strcmp(simd::scalar_kernels().name, "scalar") == 0);
  MESSAGE("active kernels: " << std::string(simd::active_kernels().name));
}

TEST_CASE("property: every variant agrees with scalar on every kernel") {
  const auto& ref = simd::scalar_kernels();
  for (const auto* k : simd::available_kernels()) {
    CAPTURE(k->name);
    testgen::for_each_case(300, [&](Rng& rng) {
      const std::size_t rows = 1 + rng.index(19);
      const std::size_t cols = 1 + rng.index(19);
      const auto m = random_vec(rng, rows * cols);
      const auto v = random_vec(rng, rows);
      const auto w = random_vec(rng, cols);
      std::vector<double> a(cols), b(cols);
      ref.vec_mat(v.data(), m.data(), rows, cols, a.data());
      k->vec_mat(v.data(), m.data(), rows, cols, b.data());
      for (std::size_t j = 0; j < cols; ++j) REQUIRE(close(a[j], b[j]));

      std::vector<double> c(rows), d(rows);
      ref.mat_vec(m.data(), w.data(), rows, cols, c.data());
      k->mat_vec(m.data(), w.data(), rows, cols, d.data());
      for (std::size_t i = 0; i < rows; ++i) REQUIRE(close(c[i], d[i]));

      const auto x = random_vec(rng, cols);
      ref.mul(x.data(), w.data(), cols, a.data());
      k->mul(x.data(), w.data(), cols, b.data());
      for (std::size_t j = 0; j < cols; ++j) REQUIRE(a[j] == b[j]);

      REQUIRE(close(ref.sum(x.data(), cols), k->sum(x.data(), cols)));

      auto s1 = x;
      auto s2 = x;
      ref.scale(s1.data(), cols, 0.37);
      k->scale(s2.data(), cols, 0.37);
      REQUIRE(s1 == s2);

      std::vector<double> acc1(cols, 0.5), acc2(cols, 0.5);
      ref.axpy_mul(acc1.data(), x.data(), w.data(), cols, 1.7);
      k->axpy_mul(acc2.data(), x.data(), w.data(), cols, 1.7);
      for (std::size_t j = 0; j < cols; ++j) REQUIRE(close(acc1[j], acc2[j]));
    });
  }
}

TEST_CASE("property: forward and training agree across variants") {
  const auto& ref = simd::scalar_kernels();
  for (const auto* k : simd::available_kernels()) {
    CAPTURE(k->name);
    testgen::for_each_case(40, [&](Rng& rng) {
      const std::size_t n = 1 + rng.index(9);
      const std::size_t mm = 1 + rng.index(12);
      const auto model = random_hmm(names("s", n), names("x", mm), rng.next_u64());
      std::vector<std::vector<std::size_t>> corpus(5);
      for (auto& s : corpus) {
        s.resize(1 + rng.index(40));
        for (auto& x : s) x = rng.index(mm);
      }
      for (const auto& s : corpus) {
        const double a = forward_loglik(model, s, ref);
        const double b = forward_loglik(model, s, *k);
        REQUIRE(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
      }
      const auto ta = baum_welch_train(corpus, model, 5, 0.0, ref);
      const auto tb = baum_welch_train(corpus, model, 5, 0.0, *k);
      REQUIRE(ta.loglik_trace.size() == tb.loglik_trace.size());
      for (std::size_t i = 0; i < ta.loglik_trace.size(); ++i) {
        REQUIRE(std::abs(ta.loglik_trace[i] - tb.loglik_trace[i]) <= 1e-8 * std::max(1.0, std::abs(ta.loglik_trace[i])));
      }
    });
  }
}
