#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "tripmatch/designs.hpp"
#include "tripmatch/diagnostics.hpp"

using namespace tripmatch;

namespace {

SampleTable small_table(std::size_t n_t, std::size_t n_c, std::uint64_t seed) {
  synth::Rng rng(seed);
  SampleTable t;
  std::vector<double> a, b, c;
  for (std::size_t r = 0; r < n_t + n_c; ++r) {
    t.add_row("u" + std::to_string(r), r < n_t ? 1 : 0);
    a.push_back(rng.normal());
    b.push_back(rng.normal());
    c.push_back(rng.normal());
  }
  t.add_numeric("a", a);
  t.add_numeric("b", b);
  t.add_numeric("c", c);
  return t;
}

oracle::Matrix to_matrix(const Eigen::MatrixXd& m) {
  oracle::Matrix out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return out;
}

oracle::Matrix transpose(const oracle::Matrix& m) {
  oracle::Matrix out(m[0].size(), std::vector<double>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) out[j][i] = m[i][j];
  }
  return out;
}

const std::vector<std::string> kA{"a"}, kB{"b"}, kAB{"a", "b"}, kC{"c"};

}  // namespace

TEST_CASE("disparity with empty X_tilde is the optimal pair match on X") {
  const SampleTable t = small_table(5, 12, 1);
  DisparityOptions o;
  o.lambda = 0.0;
  o.seed = 3;
  const DesignResult d = disparity_match(t, kAB, {}, o);
  REQUIRE(d.match.feasible);
  const DistanceList list =
      create_list_from_scratch(t, kAB, {}, ListOptions{DistanceMethod::robust_mahalanobis, {}, {}, {}});
  const MatchResult direct = to_rows(match_optimal(list), t.treated_rows(), t.control_rows());
  REQUIRE(direct.pairs.size() == d.match.pairs.size());
  for (std::size_t k = 0; k < direct.pairs.size(); ++k) {
    CHECK(direct.pairs[k].treated == d.match.pairs[k].treated);
    CHECK(direct.pairs[k].control == d.match.pairs[k].control);
  }
  CHECK(d.reference_sample.size() == 5);
}

TEST_CASE("disparity network yields |B| pairs on each side and consistent distances") {
  const SampleTable t = small_table(4, 11, 2);
  DisparityOptions o;
  o.seed = 9;
  const DesignResult d = disparity_match(t, kAB, kC, o);
  REQUIRE(d.match.feasible);
  REQUIRE(d.network);
  CHECK(d.network->left_pairs.size() == 4);
  CHECK(d.network->right_pairs.size() == 4);
  CHECK(d.match.pairs.size() == 4);
  const Eigen::MatrixXd delta = mahalanobis(t, kAB, true);
  const auto controls = t.control_rows();
  for (const MatchedPair& p : d.match.pairs) {
    const auto j = std::find(controls.begin(), controls.end(), p.control) - controls.begin();
    CHECK(p.distance == delta(static_cast<Eigen::Index>(p.treated), j));
  }
  std::set<std::size_t> ref(d.reference_sample.begin(), d.reference_sample.end());
  CHECK(ref.size() == 4);
  for (std::size_t r : ref) CHECK(t.group()[r] == 0);

  // Same seed, same reference sample; the objective matches enumeration.
  const DesignResult again = disparity_match(t, kAB, kC, o);
  CHECK(again.reference_sample == d.reference_sample);
  const oracle::Matrix left = to_matrix(delta);
  const oracle::Matrix right = transpose(to_matrix(mahalanobis(t, d.reference_sample, controls, kC, true)));
  CHECK(d.network->objective(o.lambda) ==
        doctest::Approx(oracle::tripartite_optimum(left, right, 1, 1, o.lambda)).epsilon(1e-6));
}

TEST_CASE("treated units that copy controls get zero left cost at lambda = 0") {
  SampleTable t;
  const std::vector<double> base{0.3, 1.7, -0.4, 2.2, 0.9, -1.5, 1.1, 0.0};
  std::vector<double> a, c;
  for (std::size_t r = 0; r < 3; ++r) {
    t.add_row("b" + std::to_string(r), 1);
    a.push_back(base[r * 2]);
    c.push_back(static_cast<double>(r));
  }
  for (std::size_t r = 0; r < base.size(); ++r) {
    t.add_row("w" + std::to_string(r), 0);
    a.push_back(base[r]);
    c.push_back(static_cast<double>(r % 3));
  }
  t.add_numeric("a", a);
  t.add_numeric("c", c);
  DisparityOptions o;
  o.seed = 1;
  o.lambda = 0.0;
  const DesignResult d = disparity_match(t, kA, kC, o);
  REQUIRE(d.match.feasible);
  CHECK(d.network->total_left_cost == 0.0);
}

TEST_CASE("disparity preconditions and infeasibility") {
  const SampleTable t = small_table(4, 10, 3);
  DisparityOptions o;
  CHECK_THROWS_AS(disparity_match(t, kAB, kA, o), std::invalid_argument);
  CHECK_THROWS_AS(disparity_match(small_table(5, 5, 1), kA, kB, o), std::invalid_argument);

  o.left = ListOptions{DistanceMethod::propensity_l1, 1e-9, std::nullopt, std::nullopt};
  const DesignResult d = disparity_match(t, kAB, kC, o);
  CHECK_FALSE(d.match.feasible);
  CHECK(d.failing_side == "left");
  CHECK(d.match.pairs.empty());
}

TEST_CASE("disparity tracks the reference sample on X_tilde") {
  const synth::Population pop = synth::disparity_population(60, 600, 5);
  const SampleTable t = pop.table();
  DisparityOptions o;
  o.seed = 4;
  const DesignResult d = disparity_match(t, synth::x_covariates(), synth::x_tilde_covariates(), o);
  REQUIRE(d.match.feasible);
  std::vector<std::size_t> selected;
  for (const MatchedPair& p : d.match.pairs) selected.push_back(p.control);
  const BalanceTable bt = balance_of_groups(t, {d.reference_sample, selected}, {"W'", "M1"},
                                            synth::x_tilde_covariates());
  CHECK(bt.max_smd(1) < 0.1);
}

TEST_CASE("nested designs") {
  const SampleTable t = small_table(5, 20, 4);
  DisparityOptions o;
  o.seed = 11;
  const auto one = nested_designs(t, {{"a", "b", "c"}}, o);
  REQUIRE(one.size() == 1);
  CHECK(one[0].network.has_value());
  CHECK(one[0].match.feasible);

  const auto three = nested_designs(t, {{"a"}, {"b"}, {"c"}}, o);
  REQUIRE(three.size() == 3);
  for (const auto& d : three) {
    CHECK(d.match.feasible);
    CHECK(d.reference_sample == three[0].reference_sample);
  }
  CHECK(three[0].network.has_value());
  CHECK(three[2].network.has_value());
  // The last design balances the propensity score on everything against B.
  const std::vector<std::string> abc{"a", "b", "c"};
  BalancedPairOptions bp;
  bp.lambda = o.lambda;
  const DesignResult balanced = balanced_pair_match(t, abc, abc, bp);
  CHECK(balanced.network->objective(o.lambda) == three[2].network->objective(o.lambda));
  // Design 1 equals a direct disparity match with X = {a}, X_tilde = {b, c}.
  const DesignResult direct = disparity_match(t, kA, std::vector<std::string>{"b", "c"}, o);
  CHECK(direct.network->objective(o.lambda) == three[0].network->objective(o.lambda));

  CHECK_THROWS_AS(nested_designs(t, {{"a"}, {"a", "b"}}, o), std::invalid_argument);

  DisparityOptions tight = o;
  tight.left = ListOptions{DistanceMethod::propensity_l1, 1e-9, std::nullopt, std::nullopt};
  const auto failed = nested_designs(t, {{"a"}, {"b"}}, tight);
  CHECK_FALSE(failed[1].match.feasible);
  CHECK(failed[1].match.failure.rfind("design M2: ", 0) == 0);
}

TEST_CASE("balanced pairs") {
  const SampleTable three_five = small_table(3, 5, 6);
  const BalancedPairOptions base;
  const DesignResult d = balanced_pair_match(three_five, kAB, kC, base);
  REQUIRE(d.match.feasible);
  CHECK(d.match.pairs.size() == 3);

  SUBCASE("lambda = 0 equals the plain optimal pair match") {
    BalancedPairOptions o;
    o.lambda = 0.0;
    const DesignResult z = balanced_pair_match(three_five, kAB, kC, o);
    const DistanceList list =
        create_list_from_scratch(three_five, kAB, {}, ListOptions{DistanceMethod::robust_mahalanobis, {}, {}, {}});
    CHECK(z.match.total_distance() == doctest::Approx(match_optimal(list).total_distance()).epsilon(1e-9));
  }
  SUBCASE("objective equals enumeration") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const SampleTable t = small_table(2 + seed % 3, 6, seed);
      BalancedPairOptions o;
      o.right = ListOptions{DistanceMethod::robust_mahalanobis, {}, {}, {}};
      o.lambda = 2.0;
      const DesignResult r = balanced_pair_match(t, kAB, kC, o);
      REQUIRE(r.match.feasible);
      const oracle::Matrix left = to_matrix(mahalanobis(t, kAB, true));
      const oracle::Matrix right = transpose(to_matrix(mahalanobis(t, kC, true)));
      CHECK(r.network->objective(2.0) ==
            doctest::Approx(oracle::tripartite_optimum(left, right, 1, 1, 2.0)).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(balanced_pair_match(small_table(4, 3, 1), kAB, kC, base), std::invalid_argument);
}

TEST_CASE("template matching") {
  const SampleTable data = small_table(3, 5, 7);
  SampleTable tmpl;
  synth::Rng rng(8);
  std::vector<double> a, b;
  for (int r = 0; r < 2; ++r) {
    tmpl.add_row("r" + std::to_string(r), 1);
    a.push_back(rng.normal());
    b.push_back(rng.normal());
  }
  tmpl.add_numeric("a", a);
  tmpl.add_numeric("b", b);
  TemplateOptions o;
  const DesignResult d = template_match(data, tmpl, kAB, kC, o);
  REQUIRE(d.match.feasible);
  CHECK(d.match.pairs.size() == 2);
  for (const MatchedPair& p : d.match.pairs) {
    CHECK(data.group()[p.treated] == 1);
    CHECK(data.group()[p.control] == 0);
  }

  SUBCASE("objective equals enumeration") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SampleTable dd = small_table(4, 6, seed + 20);
      SampleTable tt;
      std::vector<double> ta, tb;
      synth::Rng g(seed);
      const std::size_t nr = 1 + seed % 3;
      for (std::size_t r = 0; r < nr; ++r) {
        tt.add_row("t" + std::to_string(r), 1);
        ta.push_back(g.normal());
        tb.push_back(g.normal());
      }
      tt.add_numeric("a", ta);
      tt.add_numeric("b", tb);
      TemplateOptions to;
      to.lambda = 3.0;
      const DesignResult r = template_match(dd, tt, kAB, kC, to);
      REQUIRE(r.match.feasible);

      // Left costs on the stacked rows, right costs on the data alone.
      SampleTable stacked;
      std::vector<double> sa, sb;
      for (std::size_t k = 0; k < dd.row_count(); ++k) {
        stacked.add_row(dd.ids()[k], dd.group()[k]);
        sa.push_back(dd.covariate("a").numeric[k]);
        sb.push_back(dd.covariate("b").numeric[k]);
      }
      std::vector<std::size_t> rrows;
      for (std::size_t k = 0; k < nr; ++k) {
        rrows.push_back(stacked.row_count());
        stacked.add_row("x" + std::to_string(k), 1);
        sa.push_back(ta[k]);
        sb.push_back(tb[k]);
      }
      stacked.add_numeric("a", sa);
      stacked.add_numeric("b", sb);
      const oracle::Matrix left = to_matrix(mahalanobis(stacked, rrows, dd.treated_rows(), kAB, true));
      const oracle::Matrix right = to_matrix(mahalanobis(dd, kC, true));
      CHECK(r.network->objective(3.0) ==
            doctest::Approx(oracle::template_optimum(left, right, 3.0)).epsilon(1e-6));
    }
  }
  SUBCASE("template equal to the treated set reduces to the pair match") {
    SampleTable copy;
    std::vector<double> ca, cb;
    for (std::size_t r : data.treated_rows()) {
      copy.add_row(data.ids()[r], 1);
      ca.push_back(data.covariate("a").numeric[r]);
      cb.push_back(data.covariate("b").numeric[r]);
    }
    copy.add_numeric("a", ca);
    copy.add_numeric("b", cb);
    const DesignResult r = template_match(data, copy, kAB, kC, o);
    REQUIRE(r.match.feasible);
    const DistanceList list =
        create_list_from_scratch(data, kC, {}, ListOptions{DistanceMethod::robust_mahalanobis, {}, {}, {}});
    CHECK(r.match.total_distance() == doctest::Approx(match_optimal(list).total_distance()).epsilon(1e-9));
  }
}

TEST_CASE("final design falls back to the pair match when the propensity fit separates") {
  SampleTable t = small_table(4, 12, 9);
  std::vector<std::string> k;
  for (std::size_t r = 0; r < t.row_count(); ++r) k.push_back(r >= 13 ? "rare" : (r % 2 ? "x" : "y"));
  t.add_categorical("k", k);
  DisparityOptions o;
  o.seed = 2;
  const std::vector<std::string> x{"a", "k"};
  const DesignResult d = disparity_match(t, x, {}, o);
  REQUIRE(d.match.feasible);
  CHECK(d.note.find("propensity balance skipped") == 0);
  CHECK_FALSE(d.network.has_value());

  o.lambda = 0.0;
  const DesignResult plain = disparity_match(t, x, {}, o);
  CHECK(plain.note.empty());
  CHECK(plain.match.total_distance() == d.match.total_distance());
}
