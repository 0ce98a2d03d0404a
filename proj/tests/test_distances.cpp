#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tripmatch/distances.hpp"
#include "tripmatch/propensity.hpp"

using namespace tripmatch;

namespace {

SampleTable numeric_table(const std::vector<int>& group,
                          const std::vector<std::vector<double>>& columns) {
  SampleTable t;
  for (std::size_t r = 0; r < group.size(); ++r) t.add_row("u" + std::to_string(r), group[r]);
  for (std::size_t c = 0; c < columns.size(); ++c) t.add_numeric("x" + std::to_string(c), columns[c]);
  return t;
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < n; ++c) out.push_back("x" + std::to_string(c));
  return out;
}

}  // namespace

TEST_CASE("sample table invariants") {
  SampleTable t;
  t.add_row("a", 1);
  t.add_row("b", 0, 1);
  CHECK_THROWS_AS(t.add_row("a", 0), std::invalid_argument);
  CHECK_THROWS_AS(t.add_row("c", 2), std::invalid_argument);
  CHECK_THROWS_AS(t.add_numeric("x", {1.0}), std::invalid_argument);
  t.add_categorical("c", std::vector<std::string>{"", "lo"});
  CHECK(t.covariate("c").level_of(0) == "Missing");
  CHECK(t.covariate("c").levels == std::vector<std::string>{"Missing", "lo"});
  CHECK_THROWS_AS(t.covariate("nope"), std::out_of_range);
}

TEST_CASE("distance list numbering, transpose and isolation") {
  Eigen::MatrixXd d(2, 3);
  d << 1, 2, 3, 4, 5, 6;
  const DistanceList list = dense_list(d);
  CHECK(list.size() == 6);
  CHECK(list.start_n == std::vector<int>{1, 1, 1, 2, 2, 2});
  CHECK(list.end_n == std::vector<int>{3, 4, 5, 3, 4, 5});
  const DistanceList t = transpose(list);
  CHECK(t.n_left == 3);
  CHECK(t.start_n == std::vector<int>{1, 1, 2, 2, 3, 3});
  CHECK(t.end_n == std::vector<int>{4, 5, 4, 5, 4, 5});
  CHECK(t.d == std::vector<double>{1, 4, 2, 5, 3, 6});

  DistanceList sparse;
  sparse.n_left = 2;
  sparse.n_right = 2;
  sparse.add(0, 1, 0.5);
  sparse.finalize();
  CHECK(sparse.isolated_left == std::vector<int>{2});
  CHECK_FALSE(sparse.feasible_by_construction());
  CHECK(isolated_right(sparse) == std::vector<std::size_t>{0});
}

TEST_CASE("Mahalanobis with identity covariance is Euclidean") {
  // Columns with unit sample variance and zero correlation.
  const std::vector<double> a{1, -1, 1, -1}, b{1, 1, -1, -1};
  const double scale = std::sqrt(3.0 / 4.0);
  std::vector<double> x0, x1;
  for (double v : a) x0.push_back(v * scale);
  for (double v : b) x1.push_back(v * scale);
  const SampleTable t = numeric_table({1, 1, 0, 0}, {x0, x1});
  const Eigen::MatrixXd m = mahalanobis(t, names(2), false);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double dx = x0[static_cast<std::size_t>(i)] - x0[static_cast<std::size_t>(2 + j)];
      const double dy = x1[static_cast<std::size_t>(i)] - x1[static_cast<std::size_t>(2 + j)];
      CHECK(m(i, j) == doctest::Approx(std::hypot(dx, dy)).epsilon(1e-7));
    }
  }
}

TEST_CASE("Mahalanobis and robust Mahalanobis match a Gauss-Jordan re-implementation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> cols(3, std::vector<double>(10));
    for (auto& c : cols) {
      for (double& v : c) v = n01(rng);
    }
    for (double& v : cols[2]) v = std::round(v);  // ties for the rank path
    const std::vector<int> group{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const SampleTable t = numeric_table(group, cols);
    for (bool robust : {false, true}) {
      std::vector<std::vector<double>> used = cols;
      if (robust) {
        for (auto& c : used) {
          c = oracle::average_ranks(c);
          double mean = 0.0, ss = 0.0;
          for (double v : c) mean += v / static_cast<double>(c.size());
          for (double v : c) ss += (v - mean) * (v - mean);
          const double sd = std::sqrt(ss / static_cast<double>(c.size() - 1));
          for (double& v : c) v /= sd;
        }
      }
      oracle::Matrix left, right;
      for (std::size_t r = 0; r < 10; ++r) {
        std::vector<double> row{used[0][r], used[1][r], used[2][r]};
        (r < 5 ? left : right).push_back(row);
      }
      const oracle::Matrix want = oracle::mahalanobis(left, right);
      const Eigen::MatrixXd got = mahalanobis(t, names(3), robust);
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
          CHECK(std::abs(got(i, j) - want[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("Mahalanobis basic properties") {
  const SampleTable t = numeric_table({1, 0, 0}, {{1.0, 1.0, 3.0}, {2.0, 2.0, 0.5}});
  const Eigen::MatrixXd m = mahalanobis(t, names(2), false);
  CHECK(m(0, 0) == doctest::Approx(0.0));
  CHECK(m(0, 1) > 0.0);

  // Robust distances ignore strictly monotone transforms of a column.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<double> c0(12), c1(12);
  for (double& v : c0) v = u(rng);
  for (double& v : c1) v = u(rng);
  std::vector<double> c0_exp;
  for (double v : c0) c0_exp.push_back(std::exp(v));
  const std::vector<int> g{1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const Eigen::MatrixXd a = mahalanobis(numeric_table(g, {c0, c1}), names(2), true);
  const Eigen::MatrixXd b = mahalanobis(numeric_table(g, {c0_exp, c1}), names(2), true);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);

  const SampleTable constant = numeric_table({1, 0}, {{2.0, 2.0}});
  CHECK_THROWS_AS(mahalanobis(constant, names(1), false), SingularCovarianceError);
}

TEST_CASE("logistic slope on a saturated binary covariate is log 6") {
  SampleTable t;
  std::vector<double> x;
  std::vector<int> zs;
  const auto add = [&](int z, double xv, int count) {
    for (int k = 0; k < count; ++k) {
      t.add_row("r" + std::to_string(x.size()), z);
      x.push_back(xv);
      zs.push_back(z);
    }
  };
  add(1, 1, 30);
  add(1, 0, 20);
  add(0, 1, 10);
  add(0, 0, 40);
  t.add_numeric("x", x);
  const PropensityModel m = estimate_propensity(t, std::vector<std::string>{"x"});
  CHECK(m.coefficients()[1] == doctest::Approx(std::log(6.0)).epsilon(1e-9));
  CHECK(std::log(6.0) == doctest::Approx(1.7918).epsilon(1e-4));

  // Independent check: coarse-to-fine grid search on the log-likelihood.
  double best_a = 0.0, best_b = 0.0;
  double step = 1.0;
  for (int round = 0; round < 12; ++round) {
    double ba = best_a, bb = best_b, bl = oracle::logit_loglik(best_a, best_b, x, zs);
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const double a = best_a + i * step, b = best_b + j * step;
        const double ll = oracle::logit_loglik(a, b, x, zs);
        if (ll > bl) {
          bl = ll;
          ba = a;
          bb = b;
        }
      }
    }
    best_a = ba;
    best_b = bb;
    step /= 4.0;
  }
  CHECK(m.coefficients()[1] == doctest::Approx(best_b).epsilon(1e-5));
  CHECK(m.coefficients()[0] == doctest::Approx(best_a).epsilon(1e-5));
}

TEST_CASE("propensity score equations and degenerate fits") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  std::vector<int> g;
  std::vector<double> x0, x1;
  std::vector<std::string> cat;
  const std::vector<std::string> levels{"a", "b", "c", ""};
  for (int r = 0; r < 60; ++r) {
    g.push_back(r % 3 == 0 ? 1 : 0);
    x0.push_back(n01(rng) + (g.back() ? 0.5 : 0.0));
    x1.push_back(n01(rng));
    cat.push_back(levels[rng() % 4]);
  }
  SampleTable t = numeric_table(g, {x0, x1});
  t.add_categorical("cat", cat);
  const std::vector<std::string> covs{"x0", "x1", "cat"};
  const PropensityModel m = estimate_propensity(t, covs);
  const auto p = m.scores(t);
  // Score equations: sum (z - p) * column = 0 for every design column.
  double resid = 0.0, resid_x0 = 0.0;
  for (std::size_t r = 0; r < p.size(); ++r) {
    CHECK(p[r] > 0.0);
    CHECK(p[r] < 1.0);
    resid += g[r] - p[r];
    resid_x0 += (g[r] - p[r]) * x0[r];
  }
  CHECK(std::abs(resid) < 1e-6);
  CHECK(std::abs(resid_x0) < 1e-6);

  SUBCASE("identical covariates give the treated fraction") {
    const SampleTable flat = numeric_table({1, 0, 0, 1, 0}, {{1, 1, 1, 1, 1}});
    SampleTable with_cat = flat;
    with_cat.add_categorical("k", std::vector<std::string>{"x", "x", "x", "x", "x"});
    const auto s = estimate_propensity(with_cat, std::vector<std::string>{"k"}).scores(with_cat);
    for (double v : s) CHECK(v == doctest::Approx(0.4).epsilon(1e-9));
  }
  SUBCASE("perfect separation names the column") {
    const SampleTable sep = numeric_table({1, 1, 0, 0}, {{5, 6, 1, 2}});
    try {
      estimate_propensity(sep, names(1));
      FAIL("expected separation");
    } catch (const SeparationError& e) {
      CHECK(e.column() == "x0");
    }
  }
  SUBCASE("a duplicated column is rank deficient") {
    const SampleTable dup = numeric_table({1, 0, 1, 0, 0}, {{1, 2, 3, 4, 6}, {1, 2, 3, 4, 6}});
    CHECK_THROWS_AS(estimate_propensity(dup, names(2)), RankDeficiencyError);
  }
}

TEST_CASE("create_list_from_scratch calipers and k") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> g;
    std::vector<double> x, p;
    for (int r = 0; r < 14; ++r) {
      g.push_back(r < 5 ? 1 : 0);
      x.push_back(u(rng));
      p.push_back(u(rng));
    }
    const SampleTable t = numeric_table(g, {x});
    const auto covs = names(1);

    ListOptions wide{DistanceMethod::propensity_l1, 1.0, std::nullopt, std::nullopt};
    CHECK(create_list_from_scratch(t, covs, p, wide).size() == 5 * 9);

    ListOptions cal{DistanceMethod::mahalanobis, 0.1, 0.05, std::nullopt};
    const DistanceList list = create_list_from_scratch(t, covs, p, cal);
    std::set<std::pair<std::size_t, std::size_t>> got, want;
    for (std::size_t e = 0; e < list.size(); ++e) got.emplace(list.left_of(e), list.right_of(e));
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 9; ++j) {
        const double diff = p[i] - p[5 + j];
        if (diff >= -0.1 && diff <= 0.05) want.emplace(i, j);
      }
    }
    CHECK(got == want);

    ListOptions k1{DistanceMethod::propensity_l1, std::nullopt, std::nullopt, 1};
    const DistanceList nearest = create_list_from_scratch(t, covs, p, k1);
    REQUIRE(nearest.size() == 5);
    for (std::size_t e = 0; e < 5; ++e) {
      const std::size_t i = nearest.left_of(e);
      double best = 2.0;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < 9; ++j) {
        if (std::abs(p[i] - p[5 + j]) < best) {
          best = std::abs(p[i] - p[5 + j]);
          arg = j;
        }
      }
      CHECK(nearest.right_of(e) == arg);
      CHECK(nearest.d[e] == doctest::Approx(best));
    }

    // Enlarging the caliper or k never removes edges.
    ListOptions narrow{DistanceMethod::propensity_l1, 0.05, std::nullopt, std::nullopt};
    ListOptions broad{DistanceMethod::propensity_l1, 0.2, std::nullopt, std::nullopt};
    const DistanceList a = create_list_from_scratch(t, covs, p, narrow);
    const DistanceList b = create_list_from_scratch(t, covs, p, broad);
    std::set<std::pair<int, int>> sa, sb;
    for (std::size_t e = 0; e < a.size(); ++e) sa.emplace(a.start_n[e], a.end_n[e]);
    for (std::size_t e = 0; e < b.size(); ++e) sb.emplace(b.start_n[e], b.end_n[e]);
    CHECK(std::includes(sb.begin(), sb.end(), sa.begin(), sa.end()));
    ListOptions k2{DistanceMethod::propensity_l1, std::nullopt, std::nullopt, 2};
    ListOptions k4{DistanceMethod::propensity_l1, std::nullopt, std::nullopt, 4};
    std::set<std::pair<int, int>> s2, s4;
    const DistanceList l2 = create_list_from_scratch(t, covs, p, k2);
    const DistanceList l4 = create_list_from_scratch(t, covs, p, k4);
    for (std::size_t e = 0; e < l2.size(); ++e) s2.emplace(l2.start_n[e], l2.end_n[e]);
    for (std::size_t e = 0; e < l4.size(); ++e) s4.emplace(l4.start_n[e], l4.end_n[e]);
    CHECK(std::includes(s4.begin(), s4.end(), s2.begin(), s2.end()));
  }
}

TEST_CASE("k ties are broken by control index") {
  const SampleTable t = numeric_table({1, 0, 0, 0}, {{0.0, 1.0, 2.0, 3.0}});
  const std::vector<double> p{0.5, 0.6, 0.4, 0.6};
  ListOptions k2{DistanceMethod::propensity_l1, std::nullopt, std::nullopt, 2};
  const DistanceList list = create_list_from_scratch(t, names(1), p, k2);
  REQUIRE(list.size() == 2);
  CHECK(list.right_of(0) == 0);
  CHECK(list.right_of(1) == 1);
}

TEST_CASE("permuting controls permutes edges only") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  std::vector<double> x(9), y(9);
  for (double& v : x) v = n01(rng);
  for (double& v : y) v = n01(rng);
  const std::vector<int> g{1, 1, 1, 0, 0, 0, 0, 0, 0};
  std::vector<double> xp = x, yp = y;
  std::reverse(xp.begin() + 3, xp.end());
  std::reverse(yp.begin() + 3, yp.end());
  ListOptions maha{DistanceMethod::robust_mahalanobis, std::nullopt, std::nullopt, std::nullopt};
  auto a = create_list_from_scratch(numeric_table(g, {x, y}), names(2), {}, maha).d;
  auto b = create_list_from_scratch(numeric_table(g, {xp, yp}), names(2), {}, maha).d;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t e = 0; e < a.size(); ++e) CHECK(a[e] == doctest::Approx(b[e]).epsilon(1e-12));
}

TEST_CASE("minimum feasible caliper") {
  SUBCASE("equal multisets give zero") {
    const std::vector<double> p{0.2, 0.5, 0.7};
    CHECK(min_feasible_caliper(p, p).caliper == 0.0);
  }
  SUBCASE("single treated unit") {
    const auto s = min_feasible_caliper(std::vector<double>{0.5}, std::vector<double>{0.1, 0.4});
    CHECK(s.caliper == doctest::Approx(0.1));
    CHECK(s.certificate_size == 1);
  }
  SUBCASE("random instances equal the linear scan") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t nt = 1 + rng() % 7;
      const std::size_t nc = nt + rng() % (10 - nt);
      std::vector<double> pt(nt), pc(nc);
      for (double& v : pt) v = u(rng);
      for (double& v : pc) v = u(rng);
      const CaliperSearch s = min_feasible_caliper(pt, pc);
      CHECK(s.caliper == oracle::min_caliper(pt, pc));
      CHECK(s.certificate_size == static_cast<int>(nt));
      for (std::size_t i = 0; i < nt; ++i) {
        CHECK(std::abs(pt[i] - pc[static_cast<std::size_t>(s.certificate[i])]) <= s.caliper);
      }
    }
  }
  CHECK_THROWS_AS(min_feasible_caliper(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3}),
                  std::invalid_argument);
}
