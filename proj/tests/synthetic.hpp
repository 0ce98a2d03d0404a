#ifndef TRIPMATCH_TESTS_SYNTHETIC_HPP_
#define TRIPMATCH_TESTS_SYNTHETIC_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tripmatch/sample_table.hpp"

namespace synth {

// Portable draws: the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  std::size_t pick(const std::vector<double>& probs) {
    double u = uniform();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      if (u < probs[i]) return i;
      u -= probs[i];
    }
    return probs.size() - 1;
  }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 gen_;
};

struct Column {
  std::string name;
  bool numeric;
  std::vector<double> values;
  std::vector<std::string> labels;
};

struct Population {
  std::vector<int> group;
  std::vector<int> outcome;
  std::vector<Column> columns;

  tripmatch::SampleTable table() const {
    tripmatch::SampleTable t;
    for (std::size_t r = 0; r < group.size(); ++r) {
      t.add_row("u" + std::to_string(r + 1), group[r], outcome[r]);
    }
    for (const Column& c : columns) {
      if (c.numeric) {
        t.add_numeric(c.name, c.values);
      } else {
        t.add_categorical(c.name, c.labels);
      }
    }
    return t;
  }
};

// Two groups that differ on the matching covariates X = {age, income,
// education, insurance} and on the preserved covariates X~ = {bmi, smoking,
// region}. Within each group all covariates are drawn independently.
inline Population disparity_population(std::size_t n_treated, std::size_t n_control,
                                       std::uint64_t seed) {
  Rng rng(seed);
  Population p;
  const std::size_t n = n_treated + n_control;
  Column age{"age", true, {}, {}}, bmi{"bmi", true, {}, {}};
  Column income{"income", false, {}, {}}, education{"education", false, {}, {}};
  Column insurance{"insurance", false, {}, {}}, smoking{"smoking", false, {}, {}};
  Column region{"region", false, {}, {}};
  const std::vector<std::string> income_levels{"<15k", "15-35k", "35-75k", ">75k", ""};
  const std::vector<std::string> edu_levels{"high school", "college", "graduate"};
  const std::vector<std::string> ins_levels{"yes", "no"};
  const std::vector<std::string> smoke_levels{"never", "former", "current"};
  const std::vector<std::string> region_levels{"north", "south", "west"};
  for (std::size_t r = 0; r < n; ++r) {
    const bool t = r < n_treated;
    p.group.push_back(t ? 1 : 0);
    age.values.push_back(t ? 60.0 + 8.0 * rng.normal() : 63.0 + 8.0 * rng.normal());
    income.labels.push_back(income_levels[rng.pick(
        t ? std::vector<double>{0.20, 0.30, 0.25, 0.15, 0.10}
          : std::vector<double>{0.10, 0.25, 0.30, 0.27, 0.08})]);
    education.labels.push_back(
        edu_levels[rng.pick(t ? std::vector<double>{0.45, 0.40, 0.15}
                              : std::vector<double>{0.35, 0.42, 0.23})]);
    insurance.labels.push_back(
        ins_levels[rng.pick(t ? std::vector<double>{0.85, 0.15} : std::vector<double>{0.92, 0.08})]);
    bmi.values.push_back(t ? 29.5 + 4.5 * rng.normal() : 27.5 + 4.5 * rng.normal());
    smoking.labels.push_back(
        smoke_levels[rng.pick(t ? std::vector<double>{0.45, 0.25, 0.30}
                                : std::vector<double>{0.50, 0.32, 0.18})]);
    region.labels.push_back(
        region_levels[rng.pick(t ? std::vector<double>{0.20, 0.60, 0.20}
                                 : std::vector<double>{0.35, 0.35, 0.30})]);
    p.outcome.push_back(rng.uniform() < (t ? 0.12 : 0.16) ? 1 : 0);
  }
  p.columns = {age, income, education, insurance, bmi, smoking, region};
  return p;
}

inline const std::vector<std::string>& x_covariates() {
  static const std::vector<std::string> v{"age", "income", "education", "insurance"};
  return v;
}

inline const std::vector<std::string>& x_tilde_covariates() {
  static const std::vector<std::string> v{"bmi", "smoking", "region"};
  return v;
}

}  // namespace synth

#endif  // TRIPMATCH_TESTS_SYNTHETIC_HPP_
