#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "mps/model.hpp"
#include "mps/rng.hpp"

using mps::MpsConfig;
using mps::MpsState;
using mps::ResponseMatrix;

namespace {

// Small fully-specified instance used by several oracles.
struct Toy {
  ResponseMatrix y;
  MpsState s;
  MpsConfig cfg;
};

Toy make_toy() {
  Toy t;
  t.y = mps::make_response_matrix(2, 2, {1, 0, 0, 1});
  t.cfg = MpsConfig::defaults(1, 2);
  t.s = MpsState::zeros(2, 2, 1, 2);
  t.s.theta = {0.7, -1.1};
  t.s.beta = {0.9, -0.4, 1.3, 0.2};  // cluster-major, J=2, D=1
  t.s.gamma = {0.1, -0.3, 0.5, 0.0};
  t.s.assign = {0, 1};
  t.s.pi = {0.6};
  t.s.alpha = 1.4;
  t.s.ystar = {0.5, -0.2, -0.9, 0.1};
  return t;
}

}  // namespace

TEST_CASE("irf_prob basics") {
  CHECK(mps::irf_prob(1.0, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mps::irf_prob(0.0, 123.4, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mps::irf_prob(1.0, 1.6449, 0.0) == doctest::Approx(0.95).epsilon(1e-4));
  const std::vector<double> b{0.5, -0.5}, th{1.0, 1.0};
  CHECK(mps::irf_prob(b, th, 0.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mps::irf_prob(std::nan(""), 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mps::irf_prob(1.0, INFINITY, 0.0), std::invalid_argument);
}

TEST_CASE("stick_to_probs hand values") {
  {
    const std::vector<double> pi{0.5, 0.5};
    const auto p = mps::stick_to_probs(pi);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(0.25).epsilon(1e-15));
  }
  {
    const std::vector<double> pi{0.2, 0.4, 0.5};
    const auto p = mps::stick_to_probs(pi);
    REQUIRE(p.size() == 4);
    CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.32).epsilon(1e-15));
    CHECK(p[2] == doctest::Approx(0.24).epsilon(1e-15));
    CHECK(p[3] == doctest::Approx(0.24).epsilon(1e-15));
  }
  {
    const std::vector<double> pi{1.0 - 1e-12, 0.5};
    const auto p = mps::stick_to_probs(pi);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(p[1] + p[2] < 1e-11);
  }
  const std::vector<double> bad{0.0, 0.5};
  CHECK_THROWS_AS(mps::stick_to_probs(bad), std::invalid_argument);
  const std::vector<double> bad2{0.5, 1.0};
  CHECK_THROWS_AS(mps::stick_to_probs(bad2), std::invalid_argument);
}

TEST_CASE("stick_to_probs sums to one for random sticks") {
  mps::rng::SubStream st(3, mps::rng::Stream::kGeneric, 0, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const int k = 1 + static_cast<int>(st.uniform_int(12));
    std::vector<double> pi(static_cast<std::size_t>(k));
    for (auto& p : pi) p = st.uniform();
    const auto probs = mps::stick_to_probs(pi);
    double sum = 0.0;
    for (const double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("log_likelihood single cell and empty item") {
  // One observed cell with zero predictor: log 0.5.
  auto y = mps::make_response_matrix(1, 2, {1, ResponseMatrix::kMissing});
  auto s = MpsState::zeros(1, 2, 1, 1);
  s.beta = {1.0, 1.0};
  s.pi = {};
  CHECK(mps::log_likelihood(y, s) == doctest::Approx(std::log(0.5)).epsilon(1e-14));

  // An all-missing item contributes nothing.
  auto y2 = mps::make_response_matrix(2, 2,
                                      {1, ResponseMatrix::kMissing, 0,
                                       ResponseMatrix::kMissing});
  auto s2 = MpsState::zeros(2, 2, 1, 1);
  s2.pi = {};
  CHECK(mps::log_likelihood(y2, s2) ==
        doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log_likelihood matches a per-cell oracle") {
  const Toy t = make_toy();
  double want = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const int k = t.s.assign[static_cast<std::size_t>(i)];
      const double m = t.s.beta_at(k, j, 0) * t.s.theta_at(i, 0) - t.s.gamma_at(k, j);
      const double p = std::clamp(testutil::phi_cdf(m), 1e-300, 1.0 - 1e-16);
      want += t.y.cell(i, j) == 1 ? std::log(p) : std::log1p(-p);
    }
  }
  CHECK(mps::log_likelihood(t.y, t.s) == doctest::Approx(want).epsilon(1e-12));
  CHECK(mps::log_likelihood(t.y, t.s, 4) == mps::log_likelihood(t.y, t.s, 1));
}

TEST_CASE("log_likelihood invariant to joint permutation of units and items") {
  const Toy t = make_toy();
  // Swap both units and both items along with their parameters.
  ResponseMatrix y2 = mps::make_response_matrix(
      2, 2, {t.y.cell(1, 1), t.y.cell(1, 0), t.y.cell(0, 1), t.y.cell(0, 0)});
  MpsState s2 = t.s;
  s2.theta = {t.s.theta[1], t.s.theta[0]};
  s2.assign = {t.s.assign[1], t.s.assign[0]};
  for (int k = 0; k < 2; ++k) {
    s2.beta_at(k, 0, 0) = t.s.beta_at(k, 1, 0);
    s2.beta_at(k, 1, 0) = t.s.beta_at(k, 0, 0);
    s2.gamma_at(k, 0) = t.s.gamma_at(k, 1);
    s2.gamma_at(k, 1) = t.s.gamma_at(k, 0);
  }
  CHECK(mps::log_likelihood(t.y, t.s) ==
        doctest::Approx(mps::log_likelihood(y2, s2)).epsilon(1e-14));
}

TEST_CASE("reflection invariance for D=1") {
  Toy t = make_toy();
  MpsState flipped = t.s;
  const int k = 0;
  for (int j = 0; j < 2; ++j) flipped.beta_at(k, j, 0) = -flipped.beta_at(k, j, 0);
  for (int i = 0; i < 2; ++i) {
    if (flipped.assign[static_cast<std::size_t>(i)] == k) {
      flipped.theta_at(i, 0) = -flipped.theta_at(i, 0);
    }
  }
  CHECK(mps::log_likelihood(t.y, t.s) ==
        doctest::Approx(mps::log_likelihood(t.y, flipped)).epsilon(1e-14));
}

TEST_CASE("log_joint_posterior prior terms at the origin") {
  // No observed likelihood contribution is impossible (validation rejects
  // all-missing units), so use a single observed cell with beta = 0 and
  // subtract its known log 0.5.
  auto y = mps::make_response_matrix(1, 1, {1});
  auto cfg = MpsConfig::defaults(1, 2);
  auto s = MpsState::zeros(1, 1, 1, 2);
  s.pi = {0.5};
  s.alpha = 1.0;
  s.assign = {0};
  const double lp = mps::log_joint_posterior(y, s, cfg);
  // theta: 1 unit at 0 under N(0,1); items: 2 clusters x 1 item of (0,0)
  // under N_2(0, I); assignment: log 0.5; stick: log Beta(0.5; 1, 1) = 0;
  // alpha: log Gamma(1; 1, 1) = -1.
  const double log_norm0 = -0.5 * std::log(2.0 * M_PI);
  const double want = std::log(0.5)              // likelihood
                      + log_norm0                 // theta
                      + 2.0 * 2.0 * log_norm0     // two (beta, gamma) pairs
                      + std::log(0.5)             // assignment mass
                      + 0.0                       // stick density
                      - 1.0;                      // alpha prior
  CHECK(lp == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("log_joint_posterior matches a term-by-term oracle") {
  const Toy t = make_toy();
  double want = mps::log_likelihood(t.y, t.s);
  const double l2pi = std::log(2.0 * M_PI);
  for (int i = 0; i < 2; ++i) {
    want += -0.5 * l2pi - 0.5 * t.s.theta_at(i, 0) * t.s.theta_at(i, 0);
  }
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      const double b = t.s.beta_at(k, j, 0);
      const double g = t.s.gamma_at(k, j);
      want += -l2pi - 0.5 * (b * b + g * g);
    }
  }
  const double p0 = t.s.pi[0];
  want += std::log(p0);          // unit 0 in cluster 1
  want += std::log(1.0 - p0);    // unit 1 in cluster 2 (leftover stick)
  want += std::log(t.s.alpha) + (t.s.alpha - 1.0) * std::log(1.0 - p0);
  want += -t.s.alpha;            // Gamma(1,1) prior: log density = -alpha
  CHECK(mps::log_joint_posterior(t.y, t.s, t.cfg) ==
        doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("moving a prior-governed parameter off its mode lowers the joint") {
  Toy t = make_toy();
  for (int j = 0; j < 2; ++j) {
    t.s.beta_at(0, j, 0) = 0.0;
    t.s.beta_at(1, j, 0) = 0.0;
  }
  const double base = mps::log_joint_posterior(t.y, t.s, t.cfg);
  MpsState moved = t.s;
  moved.theta_at(0, 0) = 5.0;  // beta = 0 keeps the likelihood flat
  CHECK(mps::log_joint_posterior(t.y, moved, t.cfg) < base);

  // Empty cluster 2: only the prior sees its item parameters.
  MpsState both_first = t.s;
  both_first.assign = {0, 0};
  const double base2 = mps::log_joint_posterior(t.y, both_first, t.cfg);
  MpsState pushed = both_first;
  pushed.gamma_at(1, 0) += 6.0;
  CHECK(mps::log_joint_posterior(t.y, pushed, t.cfg) < base2);
}

TEST_CASE("bic and aic arithmetic") {
  CHECK(mps::bic_value(-117477.2, 1400, 200000) == doctest::Approx(252043.0).epsilon(1e-5));
  CHECK(mps::bic_value(0.0, 0, 0) == 0.0);
  CHECK(mps::aic_value(0.0, 0) == 0.0);
  const double b1 = mps::bic_value(-500.0, 10, 1000);
  const double b2 = mps::bic_value(-500.0, 20, 1000);
  CHECK(b2 - b1 == doctest::Approx(10.0 * std::log(1000.0)).epsilon(1e-12));
  CHECK(mps::aic_value(-500.0, 20) - mps::aic_value(-500.0, 10) == 20.0);
  CHECK(mps::parameter_count(1000, 200, 1, 10) == 5000);
  CHECK(mps::parameter_count(1000, 200, 1, 1) == 1400);
}

TEST_CASE("make_map_estimate fills the fit invariants") {
  const Toy t = make_toy();
  const auto est = mps::make_map_estimate(t.y, t.s, t.cfg);
  CHECK(est.n_obs == 4);
  CHECK(est.n_params == mps::parameter_count(2, 2, 1, 2));
  CHECK(est.bic ==
        doctest::Approx(mps::bic_value(est.log_lik, est.n_params, est.n_obs)));
  CHECK(est.aic == doctest::Approx(mps::aic_value(est.log_lik, est.n_params)));
  long long total = 0;
  for (const int c : est.occupancy) total += c;
  CHECK(total == 2);
  const auto occ = mps::make_map_estimate(t.y, t.s, t.cfg, true);
  CHECK(occ.n_params == mps::parameter_count(2, 2, 1, 2));  // both occupied
}

TEST_CASE("dimension mismatches are rejected") {
  const Toy t = make_toy();
  auto y_bad = mps::make_response_matrix(3, 2, {1, 0, 1, 0, 1, 0});
  CHECK_THROWS_AS(mps::log_likelihood(y_bad, t.s), std::invalid_argument);
}
