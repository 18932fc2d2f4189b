#include "mps/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "mps/model.hpp"
#include "mps/rng.hpp"

namespace mps {

using rng::Stream;
using rng::SubStream;

std::pair<ResponseMatrix, SimTruth> simulate_dataset(
    int n_units, int n_items, int dim, std::span<const double> cluster_probs,
    std::uint64_t seed, double missing_rate) {
  if (n_units < 1 || n_items < 1 || dim < 1) {
    throw std::invalid_argument("simulate_dataset: dimensions must be positive");
  }
  if (cluster_probs.empty()) {
    throw std::invalid_argument("simulate_dataset: empty cluster probabilities");
  }
  double total = 0.0;
  for (const double p : cluster_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("simulate_dataset: invalid cluster probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("simulate_dataset: cluster probabilities must sum to 1");
  }
  if (missing_rate < 0.0 || missing_rate >= 1.0) {
    throw std::invalid_argument("simulate_dataset: missing_rate must be in [0, 1)");
  }

  const int n_clusters = static_cast<int>(cluster_probs.size());
  SimTruth truth;
  truth.n_units = n_units;
  truth.n_items = n_items;
  truth.dim = dim;
  truth.n_clusters = n_clusters;
  truth.seed = seed;
  truth.cluster_probs.assign(cluster_probs.begin(), cluster_probs.end());
  truth.assign_true.resize(static_cast<std::size_t>(n_units));
  truth.theta_true.resize(static_cast<std::size_t>(n_units) * dim);
  truth.beta_true.resize(static_cast<std::size_t>(n_clusters) * n_items * dim);
  truth.gamma_true.resize(static_cast<std::size_t>(n_clusters) * n_items);

  for (int i = 0; i < n_units; ++i) {
    SubStream st(seed, Stream::kSimAssign, 0, static_cast<rng::u64>(i));
    const double u = st.uniform();
    double cum = 0.0;
    int k = n_clusters - 1;
    for (int c = 0; c < n_clusters; ++c) {
      cum += cluster_probs[static_cast<std::size_t>(c)];
      if (u < cum) {
        k = c;
        break;
      }
    }
    truth.assign_true[static_cast<std::size_t>(i)] = k;
    SubStream th(seed, Stream::kSimTheta, 0, static_cast<rng::u64>(i));
    for (int d = 0; d < dim; ++d) {
      truth.theta_true[static_cast<std::size_t>(i) * dim + d] = th.normal();
    }
  }
  for (int k = 0; k < n_clusters; ++k) {
    for (int j = 0; j < n_items; ++j) {
      SubStream st(seed, Stream::kSimItems, 0,
                   static_cast<rng::u64>(k) * n_items + j);
      for (int d = 0; d < dim; ++d) {
        truth.beta_true[(static_cast<std::size_t>(k) * n_items + j) * dim + d] =
            st.normal();
      }
      truth.gamma_true[static_cast<std::size_t>(k) * n_items + j] = st.normal();
    }
  }

  std::vector<std::int8_t> cells(
      static_cast<std::size_t>(n_units) * static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_units; ++i) {
    const int k = truth.assign_true[static_cast<std::size_t>(i)];
    int n_obs_row = 0;
    for (int j = 0; j < n_items; ++j) {
      const std::size_t cell = static_cast<std::size_t>(i) * n_items + j;
      double m = 0.0;
      for (int d = 0; d < dim; ++d) {
        m += truth.beta_true[(static_cast<std::size_t>(k) * n_items + j) * dim + d] *
             truth.theta_true[static_cast<std::size_t>(i) * dim + d];
      }
      m -= truth.gamma_true[static_cast<std::size_t>(k) * n_items + j];
      SubStream st(seed, Stream::kSimResponse, 0, static_cast<rng::u64>(cell));
      cells[cell] = st.uniform() < norm_cdf(m) ? 1 : 0;
      if (missing_rate > 0.0) {
        SubStream ms(seed, Stream::kSimMissing, 0, static_cast<rng::u64>(cell));
        if (ms.uniform() < missing_rate) cells[cell] = ResponseMatrix::kMissing;
      }
      if (cells[cell] != ResponseMatrix::kMissing) ++n_obs_row;
    }
    if (n_obs_row == 0) {
      // Keep the unit loadable: restore one cell chosen by a keyed stream.
      SubStream fix(seed, Stream::kSimMissing, 1, static_cast<rng::u64>(i));
      const int j = static_cast<int>(fix.uniform_int(static_cast<rng::u64>(n_items)));
      const std::size_t cell = static_cast<std::size_t>(i) * n_items + j;
      double m = 0.0;
      for (int d = 0; d < dim; ++d) {
        m += truth.beta_true[(static_cast<std::size_t>(k) * n_items + j) * dim + d] *
             truth.theta_true[static_cast<std::size_t>(i) * dim + d];
      }
      m -= truth.gamma_true[static_cast<std::size_t>(k) * n_items + j];
      SubStream st(seed, Stream::kSimResponse, 0, static_cast<rng::u64>(cell));
      cells[cell] = st.uniform() < norm_cdf(m) ? 1 : 0;
    }
  }

  ResponseMatrix y = make_response_matrix(n_units, n_items, std::move(cells));
  y.validate();
  return {std::move(y), std::move(truth)};
}

}  // namespace mps
