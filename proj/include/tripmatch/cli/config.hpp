#ifndef TRIPMATCH_CLI_CONFIG_HPP_
#define TRIPMATCH_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tripmatch/distances.hpp"
#include "tripmatch/netflow.hpp"

namespace tripmatch::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value in a TOML-style document: strings, numbers, booleans and
// (possibly nested) arrays. Numbers keep their source text so that 64-bit
// seeds survive intact.
struct ConfigValue {
  enum class Kind { string, number, boolean, array };
  Kind kind = Kind::string;
  std::string text;
  bool flag = false;
  std::vector<ConfigValue> items;
  int line = 0;
};

using ConfigSection = std::map<std::string, ConfigValue>;

struct ConfigDocument {
  // Keys before the first [section] live under "".
  std::map<std::string, ConfigSection> sections;
};

// Supports [section] headers, key = value pairs, "basic" and 'literal'
// strings, integers, floats, true/false, arrays spanning lines, and #
// comments. Duplicate keys are rejected.
ConfigDocument parse_config(std::string_view text);

enum class DesignMode { pair, disparity, balanced_pairs, template_match, nested };

std::string_view mode_name(DesignMode mode);

struct RunConfig {
  // [data]
  std::filesystem::path input;
  std::optional<std::string> id_column;
  std::string group_column;
  std::string treated_value = "1";
  std::string control_value = "0";
  std::optional<std::string> outcome_column;
  std::string outcome_positive = "1";
  std::string outcome_negative = "0";

  // [covariates]
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;

  // [design]
  DesignMode mode = DesignMode::pair;
  std::vector<std::string> match_on;
  std::vector<std::string> preserve;
  std::vector<std::string> balance_on;
  std::vector<std::vector<std::string>> partitions;
  std::optional<std::filesystem::path> template_input;
  std::vector<std::string> generalize;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  int precision = kDefaultPrecisionDigits;
  std::size_t controls = 1;
  ListOptions left{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  ListOptions right{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  bool right_method_set = false;
  std::optional<std::string> fine_balance;
  std::optional<double> fine_balance_penalty;

  // [output]
  std::filesystem::path out_dir = "matched_output";

  // Declared covariates, numeric first.
  std::vector<std::string> all_covariates() const;
  bool is_declared(std::string_view name) const;
  double effective_lambda() const;
};

// Relative paths are resolved against `base_dir`. Throws ConfigError on
// unknown sections or keys, wrong value types and out-of-range values.
RunConfig load_run_config(const ConfigDocument& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config_file(const std::filesystem::path& path);

// Checks cross-field rules (declared covariates, disjoint partitions, mode
// requirements). Called by the loaders and again after flag overrides.
void validate(const RunConfig& config);

}  // namespace tripmatch::cli

#endif  // TRIPMATCH_CLI_CONFIG_HPP_
