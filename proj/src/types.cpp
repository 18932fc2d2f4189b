#include "mps/types.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mps {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument(std::string(what) + " id duplicated: " + id);
    }
  }
}

}  // namespace

long long ResponseMatrix::observed_count() const {
  long long n = 0;
  for (const auto c : cells) {
    if (c != kMissing) ++n;
  }
  return n;
}

void ResponseMatrix::validate() const {
  require(n_units >= 1 && n_items >= 1, "response matrix must be non-empty");
  require(static_cast<std::size_t>(n_units) == unit_ids.size(),
          "unit_ids size mismatch");
  require(static_cast<std::size_t>(n_items) == item_ids.size(),
          "item_ids size mismatch");
  require(cells.size() ==
              static_cast<std::size_t>(n_units) * static_cast<std::size_t>(n_items),
          "cell storage size mismatch");
  check_unique(unit_ids, "unit");
  check_unique(item_ids, "item");
  std::string empties;
  for (int i = 0; i < n_units; ++i) {
    bool any = false;
    for (int j = 0; j < n_items; ++j) {
      const auto c = cell(i, j);
      require(c == 0 || c == 1 || c == kMissing,
              "cell (" + unit_ids[i] + ", " + item_ids[j] + ") not in {0, 1, missing}");
      any = any || c != kMissing;
    }
    if (!any) empties += (empties.empty() ? "" : ", ") + unit_ids[i];
  }
  require(empties.empty(), "units with no observed responses: " + empties);
}

ResponseMatrix make_response_matrix(int n_units, int n_items,
                                    std::vector<std::int8_t> cells) {
  ResponseMatrix y;
  y.n_units = n_units;
  y.n_items = n_items;
  y.cells = std::move(cells);
  y.unit_ids.reserve(static_cast<std::size_t>(n_units));
  y.item_ids.reserve(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_units; ++i) y.unit_ids.push_back("u" + std::to_string(i + 1));
  for (int j = 0; j < n_items; ++j) y.item_ids.push_back("i" + std::to_string(j + 1));
  return y;
}

MpsConfig MpsConfig::defaults(int dim, int truncation) {
  MpsConfig cfg;
  cfg.dim = dim;
  cfg.truncation = truncation;
  cfg.lambda = Eigen::MatrixXd::Identity(dim, dim);
  cfg.omega = Eigen::MatrixXd::Identity(dim + 1, dim + 1);
  return cfg;
}

void MpsConfig::validate(int n_units) const {
  require(dim >= 1, "dim must be >= 1");
  require(truncation >= 1, "truncation must be >= 1");
  require(lambda.rows() == dim && lambda.cols() == dim, "lambda must be D x D");
  require(lambda.isIdentity(1e-12), "lambda must be the identity (identification)");
  require(omega.rows() == dim + 1 && omega.cols() == dim + 1,
          "omega must be (D+1) x (D+1)");
  require(omega.isApprox(omega.transpose(), 1e-10), "omega must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  require(llt.info() == Eigen::Success, "omega must be positive definite");
  if (alpha_fixed) {
    require(*alpha_fixed > 0.0, "fixed alpha must be positive");
  } else {
    require(alpha_a0 > 0.0 && alpha_b0 > 0.0, "alpha hyper-prior must be positive");
  }
  require(n_iter >= 1, "n_iter must be >= 1");
  require(burn_in >= 0 && burn_in < n_iter, "burn_in must be in [0, n_iter)");
  if (!constraints.empty()) {
    require(constraints.size() == static_cast<std::size_t>(n_units),
            "constraints must cover all units (use -1 for free units)");
    for (const int k : constraints) {
      require(k >= -1 && k < truncation,
              "constrained cluster index out of range 1..K");
    }
  }
}

std::vector<int> MpsState::occupancy() const {
  std::vector<int> counts(static_cast<std::size_t>(truncation), 0);
  for (const int k : assign) ++counts[static_cast<std::size_t>(k)];
  return counts;
}

int MpsState::occupied_count() const {
  const auto counts = occupancy();
  int n = 0;
  for (const int c : counts) {
    if (c > 0) ++n;
  }
  return n;
}

MpsState MpsState::zeros(int n_units, int n_items, int dim, int truncation) {
  MpsState s;
  s.n_units = n_units;
  s.n_items = n_items;
  s.dim = dim;
  s.truncation = truncation;
  s.theta.assign(static_cast<std::size_t>(n_units) * dim, 0.0);
  s.beta.assign(static_cast<std::size_t>(truncation) * n_items * dim, 0.0);
  s.gamma.assign(static_cast<std::size_t>(truncation) * n_items, 0.0);
  s.assign.assign(static_cast<std::size_t>(n_units), 0);
  s.pi.assign(static_cast<std::size_t>(truncation > 0 ? truncation - 1 : 0), 0.5);
  s.ystar.assign(static_cast<std::size_t>(n_units) * n_items, 0.0);
  return s;
}

void MpsState::validate(const ResponseMatrix& y, const MpsConfig& cfg) const {
  require(n_units == y.n_units && n_items == y.n_items,
          "state dimensions do not match data");
  require(dim == cfg.dim && truncation == cfg.truncation,
          "state dimensions do not match config");
  require(theta.size() == static_cast<std::size_t>(n_units) * dim, "theta size");
  require(beta.size() == static_cast<std::size_t>(truncation) * n_items * dim,
          "beta size");
  require(gamma.size() == static_cast<std::size_t>(truncation) * n_items,
          "gamma size");
  require(assign.size() == static_cast<std::size_t>(n_units), "assign size");
  require(pi.size() == static_cast<std::size_t>(truncation - 1), "pi size");
  require(ystar.size() == static_cast<std::size_t>(n_units) * n_items, "ystar size");
  require(alpha > 0.0, "alpha must be positive");
  for (const double p : pi) {
    require(p > 0.0 && p < 1.0, "stick fractions must lie in (0,1)");
  }
  for (int i = 0; i < n_units; ++i) {
    require(assign[i] >= 0 && assign[i] < truncation, "cluster index out of range");
    if (cfg.constrained(i)) {
      require(assign[i] == cfg.constraints[static_cast<std::size_t>(i)],
              "constrained unit " + y.unit_ids[i] + " is off its pinned cluster");
    }
    for (int j = 0; j < n_items; ++j) {
      if (!y.observed(i, j)) continue;
      const double v = ystar_at(i, j);
      require(std::isfinite(v), "latent response not finite");
      require(y.cell(i, j) == 0 ? v < 0.0 : v >= 0.0,
              "latent response sign inconsistent at (" + y.unit_ids[i] + ", " +
                  y.item_ids[j] + ")");
    }
  }
}

}  // namespace mps
