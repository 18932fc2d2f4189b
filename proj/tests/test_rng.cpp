#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "mps/normal.hpp"
#include "mps/rng.hpp"

using mps::rng::philox4x64_10;
using mps::rng::Stream;
using mps::rng::SubStream;
using mps::rng::u64;

TEST_CASE("philox4x64-10 known-answer vectors") {
  // Frozen against numpy.random.Philox (key little-endian, 4x64 counter).
  u64 out[4];
  {
    const u64 ctr[4] = {1, 0, 0, 0}, key[2] = {0, 0};
    philox4x64_10(ctr, key, out);
    CHECK(out[0] == 0x02f4ba6408e4d89bULL);
    CHECK(out[1] == 0x3dd62b0b9ca8c5b2ULL);
    CHECK(out[2] == 0x1c8667a55d902e79ULL);
    CHECK(out[3] == 0x907d7a052fd5b4dcULL);
  }
  {
    const u64 ctr[4] = {2, 0, 0, 0}, key[2] = {0, 0};
    philox4x64_10(ctr, key, out);
    CHECK(out[0] == 0x809bf322883987c3ULL);
    CHECK(out[3] == 0xfc6ed66767a457bcULL);
  }
  {
    const u64 ctr[4] = {1, 0, 0, 0}, key[2] = {0x0123456789abcdefULL, 0};
    philox4x64_10(ctr, key, out);
    CHECK(out[0] == 0xdaf0bdc754a0b959ULL);
    CHECK(out[1] == 0x38123d82f9ce12cfULL);
    CHECK(out[2] == 0x26cf92e903faab88ULL);
    CHECK(out[3] == 0x1c243f1f4212c6adULL);
  }
  {
    const u64 ctr[4] = {2, 2, 3, 4}, key[2] = {0xdeadbeefcafebabeULL, 0};
    philox4x64_10(ctr, key, out);
    CHECK(out[0] == 0x8235370770e70ac0ULL);
    CHECK(out[1] == 0x01b50a3a67f81486ULL);
    CHECK(out[2] == 0x6384a0ae3282987bULL);
    CHECK(out[3] == 0xe8a5199d560545b5ULL);
  }
}

TEST_CASE("substreams are deterministic and keyed") {
  SubStream a(42, Stream::kLatents, 7, 1001);
  SubStream b(42, Stream::kLatents, 7, 1001);
  std::vector<u64> seq_a, seq_b;
  for (int i = 0; i < 16; ++i) {
    seq_a.push_back(a.next_u64());
    seq_b.push_back(b.next_u64());
  }
  CHECK(seq_a == seq_b);

  SubStream c(42, Stream::kLatents, 7, 1002);
  SubStream d(42, Stream::kLatents, 8, 1001);
  SubStream e(42, Stream::kIdealPoints, 7, 1001);
  SubStream f(43, Stream::kLatents, 7, 1001);
  CHECK(c.next_u64() != seq_a[0]);
  CHECK(d.next_u64() != seq_a[0]);
  CHECK(e.next_u64() != seq_a[0]);
  CHECK(f.next_u64() != seq_a[0]);
}

TEST_CASE("uniform stays inside the open unit interval") {
  SubStream st(1, Stream::kGeneric, 0, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = st.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal quantile round-trips the cdf") {
  CHECK(mps::norm_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mps::norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(mps::norm_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-12));
  for (const double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-10}) {
    CHECK(mps::norm_cdf(mps::norm_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  // Deep tail stays finite and monotone.
  CHECK(std::isfinite(mps::norm_quantile(1e-300)));
  CHECK(mps::norm_quantile(1e-300) < mps::norm_quantile(1e-200));
}

TEST_CASE("normal hazard matches erfc form and far-tail series") {
  for (const double a : {-3.0, -1.0, 0.0, 1.0, 2.0, 5.0}) {
    CHECK(mps::norm_hazard(a) ==
          doctest::Approx(testutil::trunc_lower_mean(a)).epsilon(1e-12));
  }
  // Continued-fraction branch, against high-precision reference values.
  CHECK(mps::norm_hazard(8.0) == doctest::Approx(8.1213681122361127).epsilon(1e-12));
  CHECK(mps::norm_hazard(12.0) == doctest::Approx(12.082214175254284).epsilon(1e-12));
  CHECK(mps::norm_hazard(30.0) == doctest::Approx(30.033259667433677).epsilon(1e-12));
}

TEST_CASE("normal draws have standard moments") {
  SubStream st(7, Stream::kGeneric, 1, 0);
  std::vector<double> draws(200000);
  for (auto& d : draws) d = st.normal();
  CHECK(std::abs(testutil::mean(draws)) < 3.0 * testutil::se_of_mean(draws));
  CHECK(testutil::variance(draws) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gamma moments match shape/rate") {
  SubStream st(11, Stream::kGeneric, 2, 0);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = st.gamma(2.5);
  CHECK(testutil::mean(draws) ==
        doctest::Approx(2.5).epsilon(3.0 * testutil::se_of_mean(draws) / 2.5));
  CHECK(testutil::variance(draws) == doctest::Approx(2.5).epsilon(0.05));

  // Boosted branch for shape < 1.
  for (auto& d : draws) d = st.gamma(0.5);
  const double se = testutil::se_of_mean(draws);
  CHECK(std::abs(testutil::mean(draws) - 0.5) < 3.0 * se);
}

TEST_CASE("beta moments match Beta(11,11) and Beta(6,6)") {
  SubStream st(13, Stream::kGeneric, 3, 0);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = st.beta(11, 11);
  CHECK(std::abs(testutil::mean(draws) - 0.5) < 3.0 * testutil::se_of_mean(draws));
  CHECK(testutil::variance(draws) == doctest::Approx(121.0 / (484.0 * 23.0)).epsilon(0.05));
  for (auto& d : draws) d = st.beta(6, 6);
  CHECK(std::abs(testutil::mean(draws) - 0.5) < 3.0 * testutil::se_of_mean(draws));
}

TEST_CASE("truncated normal matches analytic moments at bounds 0, 2, 8") {
  for (const double bound : {0.0, 2.0, 8.0}) {
    SubStream st(17, Stream::kGeneric, static_cast<u64>(bound), 0);
    const int n = 1000000;
    std::vector<double> draws(static_cast<std::size_t>(n));
    for (auto& d : draws) {
      d = st.trunc_std_normal_lower(bound);
      REQUIRE(d >= bound);
      REQUIRE(std::isfinite(d));
    }
    const double want_mean = testutil::trunc_lower_mean(bound);
    const double want_sd = std::sqrt(testutil::trunc_lower_var(bound));
    const double se = want_sd / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(testutil::mean(draws) - want_mean) < 3.0 * se);
    CHECK(testutil::sd(draws) == doctest::Approx(want_sd).epsilon(0.02));
  }
}

TEST_CASE("truncated normal far below the bound stays unconstrained") {
  SubStream st(19, Stream::kGeneric, 0, 0);
  std::vector<double> draws(100000);
  for (auto& d : draws) d = st.trunc_std_normal_lower(-30.0);
  CHECK(std::abs(testutil::mean(draws)) < 3.0 * testutil::se_of_mean(draws));
  CHECK(testutil::variance(draws) == doctest::Approx(1.0).epsilon(0.03));
}
