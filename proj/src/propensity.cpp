#include "tripmatch/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tripmatch {

namespace {

constexpr double kScoreFloor = 1e-15;
// Coefficients this large after the iteration cap mean the likelihood is
// still climbing towards a boundary.
constexpr double kDivergentCoefficient = 20.0;

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta), overflow-safe
    const double softplus = std::max(eta(i), 0.0) + std::log1p(std::exp(-std::abs(eta(i))));
    ll += y(i) * eta(i) - softplus;
  }
  return ll;
}

std::string column_label(const DesignSpec& spec, Eigen::Index j) {
  return j == 0 ? std::string("(intercept)")
                : spec.columns()[static_cast<std::size_t>(j - 1)].label();
}

void check_rank(const Eigen::MatrixXd& x, const DesignSpec& spec) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> full(x);
  if (full.rank() == x.cols()) return;
  for (Eigen::Index j = 1; j < x.cols(); ++j) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> head(x.leftCols(j + 1));
    if (head.rank() <= j) {
      throw RankDeficiencyError("design column '" + column_label(spec, j) +
                                    "' is a linear combination of earlier columns",
                                column_label(spec, j));
    }
  }
}

// A single column whose treated and control ranges do not overlap (or only
// touch) admits no finite maximum likelihood estimate.
void check_single_column_separation(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const DesignSpec& spec) {
  for (Eigen::Index j = 1; j < x.cols(); ++j) {
    double lo[2] = {INFINITY, INFINITY};
    double hi[2] = {-INFINITY, -INFINITY};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int g = y(i) > 0.5 ? 1 : 0;
      lo[g] = std::min(lo[g], x(i, j));
      hi[g] = std::max(hi[g], x(i, j));
    }
    if (hi[1] <= lo[0] || hi[0] <= lo[1]) {
      throw SeparationError("design column '" + column_label(spec, j) +
                                "' separates the two groups",
                            column_label(spec, j));
    }
  }
}

}  // namespace

std::vector<double> PropensityModel::scores(const SampleTable& table,
                                            std::span<const std::size_t> rows) const {
  const Eigen::MatrixXd x = design_.expand(table, rows);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double eta = coefficients_(0);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      eta += coefficients_(j + 1) * x(static_cast<Eigen::Index>(i), j);
    }
    out[i] = std::clamp(logistic(eta), kScoreFloor, 1.0 - kScoreFloor);
  }
  return out;
}

std::vector<double> PropensityModel::scores(const SampleTable& table) const {
  std::vector<std::size_t> rows(table.row_count());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return scores(table, rows);
}

PropensityModel estimate_propensity(const SampleTable& table,
                                    std::span<const std::size_t> rows,
                                    std::span<const int> z,
                                    std::span<const std::string> covariates) {
  if (rows.size() != z.size()) {
    throw std::invalid_argument("one group label is needed per row");
  }
  const auto treated = std::count(z.begin(), z.end(), 1);
  const auto control = std::count(z.begin(), z.end(), 0);
  if (treated + control != static_cast<std::ptrdiff_t>(z.size())) {
    throw std::invalid_argument("group labels must be 0 or 1");
  }
  if (treated < 2 || control < 2) {
    throw std::invalid_argument("propensity model needs at least two rows per group");
  }

  DesignSpec spec = DesignSpec::fit(table, rows, covariates);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(spec.width()) + 1;
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = spec.expand(table, rows);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = z[static_cast<std::size_t>(i)];

  check_rank(x, spec);
  check_single_column_separation(x, y, spec);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = log_likelihood(eta, y);
  int iter = 0;
  double grad_norm = 0.0;
  for (;; ++iter) {
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = logistic(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = x.transpose() * (y - mu);
    grad_norm = grad.cwiseAbs().maxCoeff();
    if (grad_norm <= kPropensityGradientTolerance || iter >= kPropensityMaxIterations) break;

    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    double scale = 1.0;
    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
      const Eigen::VectorXd trial = beta + scale * step;
      const Eigen::VectorXd trial_eta = x * trial;
      const double trial_ll = log_likelihood(trial_eta, y);
      if (trial_ll >= ll - 1e-12 * std::abs(ll)) {
        beta = trial;
        eta = trial_eta;
        ll = trial_ll;
        break;
      }
    }
  }

  if (grad_norm > kPropensityGradientTolerance) {
    Eigen::Index worst = 1;
    if (p > 1) {
      beta.tail(p - 1).cwiseAbs().maxCoeff(&worst);
      ++worst;
      if (std::abs(beta(worst)) > kDivergentCoefficient) {
        throw SeparationError("logistic fit diverges along design column '" +
                                  column_label(spec, worst) + "' (separated groups)",
                              column_label(spec, worst));
      }
    }
  }

  PropensityModel model(std::move(spec), std::move(beta));
  model.iterations = iter;
  model.gradient_norm = grad_norm;
  return model;
}

PropensityModel estimate_propensity(const SampleTable& table,
                                    std::span<const std::string> covariates) {
  std::vector<std::size_t> rows(table.row_count());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return estimate_propensity(table, rows, table.group(), covariates);
}

}  // namespace tripmatch
