#include "mps/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mps/rng.hpp"
#include "mps/util.hpp"

namespace mps {

using rng::Stream;
using rng::SubStream;

void CovariateMatrix::validate() const {
  if (x.rows() < 1 || x.cols() < 1) {
    throw std::invalid_argument("covariates: empty design matrix");
  }
  if (static_cast<std::size_t>(x.cols()) != col_names.size()) {
    throw std::invalid_argument("covariates: column name count mismatch");
  }
  if (outcome.size() != x.rows()) {
    throw std::invalid_argument("covariates: outcome length mismatch");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("covariates: non-finite design entries");
  }
  for (Eigen::Index i = 0; i < outcome.size(); ++i) {
    if (outcome(i) != 0 && outcome(i) != 1) {
      throw std::invalid_argument("covariates: outcome must be 0/1");
    }
  }
}

ProbitSummary fit_bayes_probit(const CovariateMatrix& data, int n_iter,
                               int burn_in, std::uint64_t seed, int workers) {
  data.validate();
  if (n_iter < 1 || burn_in < 0 || burn_in >= n_iter) {
    throw std::invalid_argument("fit_bayes_probit: need 0 <= burn_in < n_iter");
  }
  const int n = static_cast<int>(data.x.rows());
  const int p = static_cast<int>(data.x.cols());

  const Eigen::MatrixXd xtx = data.x.transpose() * data.x;
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      std::string cols;
      const auto perm = qr.colsPermutation().indices();
      for (int c = qr.rank(); c < p; ++c) {
        if (!cols.empty()) cols += ", ";
        cols += data.col_names[static_cast<std::size_t>(perm(c))];
      }
      throw std::invalid_argument("singular design; collinear columns: " + cols);
    }
  }
  const Eigen::MatrixXd prec =
      xtx + 1e-8 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("fit_bayes_probit: X'X not positive definite");
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z(n);
  const int kept = n_iter - burn_in;
  Eigen::MatrixXd draws(kept, p);

  for (int iter = 1; iter <= n_iter; ++iter) {
    const Eigen::VectorXd eta = data.x * b;
    parallel_for(n, workers, [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        SubStream st(seed, Stream::kRegLatent, static_cast<rng::u64>(iter),
                     static_cast<rng::u64>(i));
        const double m = eta(i);
        if (data.outcome(i) == 1) {
          double v = m + st.trunc_std_normal_lower(-m);
          z(i) = v < 0.0 ? 0.0 : v;
        } else {
          double v = m - st.trunc_std_normal_lower(m);
          z(i) = v >= 0.0 ? -std::numeric_limits<double>::min() : v;
        }
      }
    });
    const Eigen::VectorXd mean = llt.solve(data.x.transpose() * z);
    SubStream st(seed, Stream::kRegCoef, static_cast<rng::u64>(iter), 0);
    Eigen::VectorXd eps(p);
    for (int c = 0; c < p; ++c) eps(c) = st.normal();
    b = mean + llt.matrixU().solve(eps);
    if (iter > burn_in) draws.row(iter - burn_in - 1) = b.transpose();
  }

  ProbitSummary out;
  out.names = data.col_names;
  out.n_draws = kept;
  out.mean.resize(p);
  out.sd.resize(p);
  out.lo90.resize(p);
  out.hi90.resize(p);
  std::vector<double> col(static_cast<std::size_t>(kept));
  for (int c = 0; c < p; ++c) {
    out.mean(c) = draws.col(c).mean();
    out.sd(c) = std::sqrt((draws.col(c).array() - out.mean(c)).square().sum() /
                          std::max(1, kept - 1));
    for (int r = 0; r < kept; ++r) col[static_cast<std::size_t>(r)] = draws(r, c);
    std::sort(col.begin(), col.end());
    auto quantile = [&](double q) {
      const double pos = q * (kept - 1);
      const int lo = static_cast<int>(std::floor(pos));
      const int hi = std::min(lo + 1, kept - 1);
      const double w = pos - lo;
      return (1.0 - w) * col[static_cast<std::size_t>(lo)] +
             w * col[static_cast<std::size_t>(hi)];
    };
    out.lo90(c) = quantile(0.05);
    out.hi90(c) = quantile(0.95);
  }
  return out;
}

}  // namespace mps
