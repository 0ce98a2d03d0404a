#include "tripmatch/distances.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "tripmatch/design_matrix.hpp"
#include "tripmatch/max_matching.hpp"
#include "tripmatch/parallel.hpp"

namespace tripmatch {

void DistanceList::add(std::size_t left, std::size_t right, double distance) {
  start_n.push_back(static_cast<int>(left + 1));
  end_n.push_back(static_cast<int>(n_left + right + 1));
  d.push_back(distance);
}

void DistanceList::finalize() {
  std::vector<char> seen(n_left, 0);
  for (int s : start_n) seen[static_cast<std::size_t>(s - 1)] = 1;
  isolated_left.clear();
  for (std::size_t i = 0; i < n_left; ++i) {
    if (!seen[i]) isolated_left.push_back(static_cast<int>(i + 1));
  }
}

DistanceList dense_list(const Eigen::MatrixXd& distances) {
  DistanceList list;
  list.n_left = static_cast<std::size_t>(distances.rows());
  list.n_right = static_cast<std::size_t>(distances.cols());
  const std::size_t total = list.n_left * list.n_right;
  list.start_n.reserve(total);
  list.end_n.reserve(total);
  list.d.reserve(total);
  for (Eigen::Index i = 0; i < distances.rows(); ++i) {
    for (Eigen::Index j = 0; j < distances.cols(); ++j) {
      list.add(static_cast<std::size_t>(i), static_cast<std::size_t>(j), distances(i, j));
    }
  }
  list.finalize();
  return list;
}

DistanceList transpose(const DistanceList& list) {
  std::vector<std::size_t> order(list.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return list.right_of(a) < list.right_of(b);
  });
  DistanceList out;
  out.n_left = list.n_right;
  out.n_right = list.n_left;
  for (std::size_t e : order) out.add(list.right_of(e), list.left_of(e), list.d[e]);
  out.finalize();
  return out;
}

std::vector<std::size_t> isolated_right(const DistanceList& list) {
  std::vector<char> seen(list.n_right, 0);
  for (std::size_t e = 0; e < list.size(); ++e) seen[list.right_of(e)] = 1;
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < list.n_right; ++j) {
    if (!seen[j]) out.push_back(j);
  }
  return out;
}

namespace {

// Average ranks (1-based) of one column, ties sharing the mean rank.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& column) {
  const auto n = static_cast<std::size_t>(column.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return column(static_cast<Eigen::Index>(a)) < column(static_cast<Eigen::Index>(b));
  });
  Eigen::VectorXd ranks(column.size());
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && column(static_cast<Eigen::Index>(order[hi])) ==
                         column(static_cast<Eigen::Index>(order[lo]))) {
      ++hi;
    }
    const double shared = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t k = lo; k < hi; ++k) ranks(static_cast<Eigen::Index>(order[k])) = shared;
    lo = hi;
  }
  return ranks;
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const double denom = std::max<double>(1.0, static_cast<double>(x.rows() - 1));
  return centered.transpose() * centered / denom;
}

std::vector<std::string> collinear_columns(const Eigen::MatrixXd& s,
                                           const DesignSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const Eigen::VectorXd weakest = eig.eigenvectors().col(0);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < weakest.size(); ++j) {
    if (std::abs(weakest(j)) > 0.1) names.push_back(spec.columns()[static_cast<std::size_t>(j)].label());
  }
  return names;
}

}  // namespace

Eigen::MatrixXd mahalanobis(const SampleTable& table, std::span<const std::size_t> left_rows,
                            std::span<const std::size_t> right_rows,
                            std::span<const std::string> covariates, bool robust) {
  std::vector<std::size_t> pooled(left_rows.begin(), left_rows.end());
  pooled.insert(pooled.end(), right_rows.begin(), right_rows.end());
  const DesignSpec spec = DesignSpec::fit(table, pooled, covariates);
  if (spec.width() == 0) {
    throw std::invalid_argument("Mahalanobis distance needs at least one covariate column");
  }
  Eigen::MatrixXd x = spec.expand(table, pooled);
  if (robust) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::VectorXd r = average_ranks(x.col(j));
      const double mean = r.mean();
      const double sd = std::sqrt((r.array() - mean).square().sum() /
                                  std::max<double>(1.0, static_cast<double>(r.size() - 1)));
      x.col(j) = sd > 0 ? Eigen::VectorXd(r / sd) : r;
    }
  }
  Eigen::MatrixXd s = covariance(x);
  const auto dim = static_cast<double>(s.rows());
  const double trace = s.trace();
  if (!(trace > 0.0)) {
    throw SingularCovarianceError("every covariate column is constant over the pooled rows",
                                  collinear_columns(s, spec));
  }
  s.diagonal().array() += 1e-8 * trace / dim;
  Eigen::LLT<Eigen::MatrixXd> chol(s);
  if (chol.info() != Eigen::Success) {
    throw SingularCovarianceError("pooled covariance is singular after regularization",
                                  collinear_columns(s, spec));
  }
  // Whitened coordinates: z = L^{-1} x, so the distance is Euclidean in z.
  const Eigen::MatrixXd z =
      chol.matrixL().solve(x.transpose()).transpose();
  const auto n_left = static_cast<Eigen::Index>(left_rows.size());
  const auto n_right = static_cast<Eigen::Index>(right_rows.size());
  Eigen::MatrixXd out(n_left, n_right);
  parallel_for(left_rows.size(), [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < n_right; ++j) {
      out(row, j) = (z.row(row) - z.row(n_left + j)).norm();
    }
  });
  return out;
}

Eigen::MatrixXd mahalanobis(const SampleTable& table, std::span<const std::string> covariates,
                            bool robust) {
  return mahalanobis(table, table.treated_rows(), table.control_rows(), covariates, robust);
}

bool needs_scores(const ListOptions& options) {
  return options.method == DistanceMethod::propensity_l1 || options.caliper_low ||
         options.caliper_high || options.k;
}

DistanceList create_list_from_scratch(const SampleTable& table,
                                      std::span<const std::size_t> left_rows,
                                      std::span<const std::size_t> right_rows,
                                      std::span<const std::string> covariates,
                                      std::span<const double> left_scores,
                                      std::span<const double> right_scores,
                                      const ListOptions& options) {
  if (options.caliper_low && !(*options.caliper_low > 0.0)) {
    throw std::invalid_argument("caliper_low must be positive");
  }
  if (options.caliper_high && !(*options.caliper_high >= 0.0)) {
    throw std::invalid_argument("caliper_high must be nonnegative");
  }
  if (options.caliper_high && !options.caliper_low) {
    throw std::invalid_argument("caliper_high requires caliper_low");
  }
  if (options.k && *options.k == 0) {
    throw std::invalid_argument("k must be at least 1");
  }
  if (needs_scores(options) &&
      (left_scores.size() != left_rows.size() || right_scores.size() != right_rows.size())) {
    throw std::invalid_argument("one propensity score is needed per left and right row");
  }

  Eigen::MatrixXd maha;
  if (options.method != DistanceMethod::propensity_l1) {
    maha = mahalanobis(table, left_rows, right_rows, covariates,
                       options.method == DistanceMethod::robust_mahalanobis);
  }
  const double below = options.caliper_low.value_or(0.0);
  const double above = options.caliper_high.value_or(below);

  struct Candidate {
    std::size_t right;
    double gap;
  };
  std::vector<std::vector<Candidate>> kept(left_rows.size());
  parallel_for(left_rows.size(), [&](std::size_t i) {
    std::vector<Candidate>& row = kept[i];
    for (std::size_t j = 0; j < right_rows.size(); ++j) {
      double gap = 0.0;
      if (!left_scores.empty() && !right_scores.empty()) {
        const double diff = left_scores[i] - right_scores[j];
        if (options.caliper_low && (diff < -below || diff > above)) continue;
        gap = std::abs(diff);
      }
      row.push_back({j, gap});
    }
    if (options.k && row.size() > *options.k) {
      std::stable_sort(row.begin(), row.end(),
                       [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });
      row.resize(*options.k);
      std::sort(row.begin(), row.end(),
                [](const Candidate& a, const Candidate& b) { return a.right < b.right; });
    }
  });

  DistanceList list;
  list.n_left = left_rows.size();
  list.n_right = right_rows.size();
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (const Candidate& c : kept[i]) {
      const double dist = options.method == DistanceMethod::propensity_l1
                              ? c.gap
                              : maha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c.right));
      list.add(i, c.right, dist);
    }
  }
  list.finalize();
  return list;
}

DistanceList create_list_from_scratch(const SampleTable& table,
                                      std::span<const std::string> covariates,
                                      std::span<const double> scores,
                                      const ListOptions& options) {
  const auto treated = table.treated_rows();
  const auto control = table.control_rows();
  std::vector<double> left_scores, right_scores;
  if (!scores.empty()) {
    if (scores.size() != table.row_count()) {
      throw std::invalid_argument("one propensity score is needed per table row");
    }
    for (std::size_t r : treated) left_scores.push_back(scores[r]);
    for (std::size_t r : control) right_scores.push_back(scores[r]);
  }
  return create_list_from_scratch(table, treated, control, covariates, left_scores,
                                  right_scores, options);
}

namespace {

// Treated i may use control j iff |p_i - p_j| <= c. For fixed p_i the
// computed gap is monotone in p_j, so admissible controls form a contiguous
// run of the score-sorted controls.
CardinalityMatching probe(std::span<const double> p_treated, std::span<const double> sorted,
                          std::span<const std::size_t> sorted_ids, double c) {
  std::vector<std::vector<int>> adjacency(p_treated.size());
  for (std::size_t i = 0; i < p_treated.size(); ++i) {
    const double p = p_treated[i];
    const auto lo = std::partition_point(sorted.begin(), sorted.end(),
                                         [&](double q) { return q < p && p - q > c; });
    const auto hi = std::partition_point(lo, sorted.end(),
                                         [&](double q) { return q <= p || q - p <= c; });
    for (auto it = lo; it != hi; ++it) {
      adjacency[i].push_back(static_cast<int>(sorted_ids[static_cast<std::size_t>(it - sorted.begin())]));
    }
  }
  return maximum_bipartite_matching(adjacency, static_cast<int>(sorted.size()));
}

}  // namespace

CaliperSearch min_feasible_caliper(std::span<const double> p_treated,
                                   std::span<const double> p_control) {
  if (p_treated.empty() || p_control.size() < p_treated.size()) {
    throw std::invalid_argument("min_feasible_caliper needs n_control >= n_treated >= 1");
  }
  std::vector<std::size_t> ids(p_control.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::size_t a, std::size_t b) { return p_control[a] < p_control[b]; });
  std::vector<double> sorted(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) sorted[k] = p_control[ids[k]];

  double widest = 0.0;
  for (double p : p_treated) {
    widest = std::max({widest, std::abs(p - sorted.front()), std::abs(p - sorted.back())});
  }
  const auto n_t = static_cast<int>(p_treated.size());

  // Feasibility only changes at gap values, so the smallest feasible double
  // is itself a gap. Nonnegative doubles order like their bit patterns,
  // which makes the search a plain integer bisection.
  auto lo = std::bit_cast<std::uint64_t>(0.0);
  auto hi = std::bit_cast<std::uint64_t>(widest);
  CardinalityMatching best = probe(p_treated, sorted, ids, widest);
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    CardinalityMatching m = probe(p_treated, sorted, ids, std::bit_cast<double>(mid));
    if (m.size == n_t) {
      hi = mid;
      best = std::move(m);
    } else {
      lo = mid + 1;
    }
  }
  CaliperSearch out;
  out.caliper = std::bit_cast<double>(hi);
  out.certificate_size = best.size;
  out.certificate = std::move(best.left_mate);
  return out;
}

}  // namespace tripmatch
