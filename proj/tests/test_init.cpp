#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "helpers.hpp"
#include "mps/init.hpp"
#include "mps/rng.hpp"
#include "mps/simulate.hpp"

using mps::InitSpec;
using mps::MpsConfig;
using mps::ResponseMatrix;

namespace {

ResponseMatrix two_block_matrix(int per_block, int items) {
  std::vector<std::int8_t> cells;
  for (int i = 0; i < per_block; ++i) {
    for (int j = 0; j < items; ++j) cells.push_back(0);
  }
  for (int i = 0; i < per_block; ++i) {
    for (int j = 0; j < items; ++j) cells.push_back(1);
  }
  return mps::make_response_matrix(2 * per_block, items, std::move(cells));
}

}  // namespace

TEST_CASE("kmeans separates identical-row blocks and handles k=1") {
  const auto y = two_block_matrix(20, 8);
  const auto labels = mps::init_kmeans(y, 2, 11);
  for (int i = 1; i < 20; ++i) CHECK(labels[i] == labels[0]);
  for (int i = 21; i < 40; ++i) CHECK(labels[i] == labels[20]);
  CHECK(labels[0] != labels[20]);

  const auto ones = mps::init_kmeans(y, 1, 11);
  for (const int l : ones) CHECK(l == 0);

  CHECK_THROWS_AS(mps::init_kmeans(y, 41, 11), std::invalid_argument);
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
  const std::vector<double> probs{0.4, 0.3, 0.3};
  const auto [y, truth] = mps::simulate_dataset(120, 25, 1, probs, 31);
  const auto a = mps::init_kmeans(y, 3, 77);
  const auto b = mps::init_kmeans(y, 3, 77);
  CHECK(a == b);
}

TEST_CASE("pca scores recover a rank-1 pattern") {
  // Half the units give the pattern row, half the zero row.
  const int n = 40, j = 12;
  std::vector<std::int8_t> cells;
  std::vector<double> scalar(n);
  for (int i = 0; i < n; ++i) {
    const int on = i < n / 2 ? 1 : 0;
    scalar[static_cast<std::size_t>(i)] = on;
    for (int c = 0; c < j; ++c) cells.push_back(static_cast<std::int8_t>(on));
  }
  const auto y = mps::make_response_matrix(n, j, std::move(cells));
  const std::vector<int> partition(n, 0);
  const auto theta = mps::init_theta_pca(y, partition, 1, 5);
  CHECK(std::abs(testutil::pearson(theta, scalar)) > 0.99);
  const double m = testutil::mean(theta);
  CHECK(std::abs(m) < 1e-9);
  CHECK(testutil::sd(theta) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca falls back to prior draws on degenerate clusters") {
  // Constant matrix: zero variance after centering.
  std::vector<std::int8_t> cells(30 * 6, 1);
  const auto y = mps::make_response_matrix(30, 6, std::move(cells));
  const std::vector<int> partition(30, 0);
  const auto theta = mps::init_theta_pca(y, partition, 1, 5);
  double spread = 0.0;
  for (const double t : theta) {
    CHECK(std::isfinite(t));
    spread += std::abs(t);
  }
  CHECK(spread > 0.0);  // prior draws, not zeros

  // Single-member cluster.
  std::vector<int> part2(30, 0);
  part2[7] = 1;
  const auto theta2 = mps::init_theta_pca(y, part2, 1, 5);
  CHECK(std::isfinite(theta2[7]));
}

TEST_CASE("probit starts recover generating parameters") {
  const int n = 2000;
  std::vector<double> theta(n);
  std::vector<std::int8_t> cells(n);
  mps::rng::SubStream st(21, mps::rng::Stream::kGeneric, 0, 0);
  for (int i = 0; i < n; ++i) {
    theta[static_cast<std::size_t>(i)] = st.normal();
    const double p = testutil::phi_cdf(theta[static_cast<std::size_t>(i)]);
    cells[static_cast<std::size_t>(i)] = st.uniform() < p ? 1 : 0;
  }
  const auto y = mps::make_response_matrix(n, 1, std::move(cells));
  const std::vector<int> partition(n, 0);
  std::vector<double> beta, gamma;
  mps::init_items_probit(y, theta, partition, 1, 1, 1e-4, 100, beta, gamma);
  CHECK(beta[0] == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::abs(gamma[0]) < 0.1);
}

TEST_CASE("probit separation falls back to (0, -c)") {
  std::vector<std::int8_t> cells(50, 1);
  const auto y = mps::make_response_matrix(50, 1, std::move(cells));
  std::vector<double> theta(50);
  for (int i = 0; i < 50; ++i) theta[static_cast<std::size_t>(i)] = 0.1 * i - 2.5;
  const std::vector<int> partition(50, 0);
  std::vector<double> beta, gamma;
  mps::init_items_probit(y, theta, partition, 1, 1, 1e-4, 100, beta, gamma);
  CHECK(beta[0] == 0.0);
  CHECK(gamma[0] < 0.0);
}

TEST_CASE("huge ridge shrinks probit starts to zero") {
  const auto [y, truth] =
      mps::simulate_dataset(200, 4, 1, std::vector<double>{1.0}, 3);
  const std::vector<int> partition(200, 0);
  std::vector<double> beta, gamma;
  mps::init_items_probit(y, truth.theta_true, partition, 1, 1, 1e12, 200, beta,
                         gamma);
  for (const double b : beta) CHECK(std::abs(b) < 1e-3);
  for (const double g : gamma) CHECK(std::abs(g) < 1e-3);
}

TEST_CASE("build_initial_state is finite, deterministic, honors modes") {
  const std::vector<double> probs{0.5, 0.5};
  const auto [y, truth] = mps::simulate_dataset(80, 15, 1, probs, 17, 0.05);
  auto cfg = MpsConfig::defaults(1, 4);
  cfg.seed = 17;

  InitSpec spec;
  const auto s1 = mps::build_initial_state(y, cfg, spec);
  const auto s2 = mps::build_initial_state(y, cfg, spec);
  CHECK(s1.theta == s2.theta);
  CHECK(s1.beta == s2.beta);
  CHECK(s1.assign == s2.assign);
  CHECK(s1.pi == s2.pi);
  for (const double v : s1.theta) CHECK(std::isfinite(v));
  for (const double v : s1.beta) CHECK(std::isfinite(v));
  for (const double v : s1.gamma) CHECK(std::isfinite(v));
  CHECK_NOTHROW(s1.validate(y, cfg));

  InitSpec fixed;
  fixed.mode = InitSpec::Mode::kFixedPartition;
  fixed.fixed_partition.assign(80, 1);
  for (int i = 0; i < 40; ++i) fixed.fixed_partition[static_cast<std::size_t>(i)] = 0;
  const auto s3 = mps::build_initial_state(y, cfg, fixed);
  CHECK(s3.assign == fixed.fixed_partition);
}
