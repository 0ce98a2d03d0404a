#include "tripmatch/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace tripmatch::cli {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ConfigDocument parse() {
    ConfigDocument doc;
    std::string section;
    doc.sections[section];
    while (true) {
      skip_blank_lines();
      if (done()) break;
      if (peek() == '[') {
        ++pos_;
        skip_spaces();
        section = bare_key();
        skip_spaces();
        expect(']');
        if (doc.sections.count(section) != 0 && !section.empty()) {
          fail("section [" + section + "] declared twice");
        }
        doc.sections[section];
      } else {
        const int line = line_;
        const std::string key = bare_key();
        skip_spaces();
        expect('=');
        skip_spaces();
        ConfigValue value = parse_value();
        value.line = line;
        if (!doc.sections[section].emplace(key, std::move(value)).second) {
          fail("duplicate key '" + key + "'");
        }
      }
      end_of_line();
    }
    return doc;
  }

 private:
  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + message);
  }

  void expect(char ch) {
    if (done() || peek() != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  void skip_spaces() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!done() && peek() == '#') {
      while (!done() && peek() != '\n') ++pos_;
    }
  }

  // Spaces, comments and newlines.
  void skip_blank_lines() {
    while (true) {
      skip_spaces();
      skip_comment();
      if (done() || peek() != '\n') return;
      ++pos_;
      ++line_;
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (done()) return;
    if (peek() != '\n') fail("unexpected text after value");
    ++pos_;
    ++line_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                       peek() == '-' || peek() == '.')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  ConfigValue parse_value() {
    if (done()) fail("missing value");
    ConfigValue value;
    value.line = line_;
    const char ch = peek();
    if (ch == '"' || ch == '\'') {
      value.kind = ConfigValue::Kind::string;
      value.text = string_literal();
    } else if (ch == '[') {
      value.kind = ConfigValue::Kind::array;
      ++pos_;
      while (true) {
        skip_blank_lines();
        if (done()) fail("unterminated array");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        value.items.push_back(parse_value());
        skip_blank_lines();
        if (done()) fail("unterminated array");
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    } else {
      const std::size_t start = pos_;
      while (!done() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' &&
             peek() != ' ' && peek() != '\t' && peek() != '\r') {
        ++pos_;
      }
      const std::string word(text_.substr(start, pos_ - start));
      if (word == "true" || word == "false") {
        value.kind = ConfigValue::Kind::boolean;
        value.flag = word == "true";
      } else {
        double parsed = 0.0;
        const auto res = std::from_chars(word.data(), word.data() + word.size(), parsed);
        const bool plus = !word.empty() && word[0] == '+';
        if (!plus && (res.ec != std::errc() || res.ptr != word.data() + word.size())) {
          fail("cannot read value '" + word + "'");
        }
        value.kind = ConfigValue::Kind::number;
        value.text = plus ? word.substr(1) : word;
      }
    }
    return value;
  }

  std::string string_literal() {
    const char quote = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (done() || peek() == '\n') fail("unterminated string");
      const char ch = peek();
      ++pos_;
      if (ch == quote) break;
      if (ch == '\\' && quote == '"') {
        if (done()) fail("unterminated string");
        const char esc = peek();
        ++pos_;
        switch (esc) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(std::string("unsupported escape '\\") + esc + "'");
        }
        continue;
      }
      out += ch;
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

[[noreturn]] void bad(const std::string& key, const ConfigValue& v, const std::string& what) {
  throw ConfigError("config line " + std::to_string(v.line) + ": '" + key + "' " + what);
}

std::string as_string(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::string) bad(key, v, "must be a string");
  return v.text;
}

double as_double(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::number) bad(key, v, "must be a number");
  double out = 0.0;
  std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (!std::isfinite(out)) bad(key, v, "must be finite");
  return out;
}

std::int64_t as_int(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::number) bad(key, v, "must be an integer");
  std::int64_t out = 0;
  const auto res = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size()) {
    bad(key, v, "must be an integer");
  }
  return out;
}

std::uint64_t as_seed(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::number) bad(key, v, "must be a nonnegative integer");
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size()) {
    bad(key, v, "must be a nonnegative 64-bit integer");
  }
  return out;
}

std::vector<std::string> as_strings(const std::string& key, const ConfigValue& v) {
  if (v.kind != ConfigValue::Kind::array) bad(key, v, "must be an array of strings");
  std::vector<std::string> out;
  for (const ConfigValue& item : v.items) out.push_back(as_string(key, item));
  return out;
}

DistanceMethod as_method(const std::string& key, const ConfigValue& v) {
  const std::string name = as_string(key, v);
  if (name == "mahalanobis") return DistanceMethod::mahalanobis;
  if (name == "robust_mahalanobis") return DistanceMethod::robust_mahalanobis;
  if (name == "propensity") return DistanceMethod::propensity_l1;
  bad(key, v, "must be one of mahalanobis, robust_mahalanobis, propensity");
}

DesignMode as_mode(const std::string& key, const ConfigValue& v) {
  const std::string name = as_string(key, v);
  if (name == "pair") return DesignMode::pair;
  if (name == "tripartite-disparity" || name == "disparity") return DesignMode::disparity;
  if (name == "balanced-pairs") return DesignMode::balanced_pairs;
  if (name == "template") return DesignMode::template_match;
  if (name == "nested") return DesignMode::nested;
  bad(key, v, "must be one of pair, tripartite-disparity, balanced-pairs, template, nested");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void require_declared(const RunConfig& c, const std::vector<std::string>& names,
                      const std::string& key) {
  std::set<std::string> seen;
  for (const std::string& name : names) {
    if (!c.is_declared(name)) {
      throw ConfigError("'" + key + "' names undeclared covariate '" + name + "'");
    }
    if (!seen.insert(name).second) {
      throw ConfigError("'" + key + "' lists covariate '" + name + "' twice");
    }
  }
}

}  // namespace

ConfigDocument parse_config(std::string_view text) { return Parser(text).parse(); }

std::string_view mode_name(DesignMode mode) {
  switch (mode) {
    case DesignMode::pair: return "pair";
    case DesignMode::disparity: return "tripartite-disparity";
    case DesignMode::balanced_pairs: return "balanced-pairs";
    case DesignMode::template_match: return "template";
    case DesignMode::nested: return "nested";
  }
  return "pair";
}

std::vector<std::string> RunConfig::all_covariates() const {
  std::vector<std::string> out = numeric;
  out.insert(out.end(), categorical.begin(), categorical.end());
  return out;
}

bool RunConfig::is_declared(std::string_view name) const {
  return std::find(numeric.begin(), numeric.end(), name) != numeric.end() ||
         std::find(categorical.begin(), categorical.end(), name) != categorical.end();
}

double RunConfig::effective_lambda() const {
  if (lambda) return *lambda;
  return mode == DesignMode::template_match ? 100.0 : 10.0;
}

RunConfig load_run_config(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  for (const auto& [name, section] : doc.sections) {
    if (name.empty()) {
      if (!section.empty()) {
        throw ConfigError("key '" + section.begin()->first + "' must sit inside a section");
      }
    } else if (name != "data" && name != "covariates" && name != "design" && name != "output") {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  const auto section = [&](const std::string& name) -> const ConfigSection& {
    static const ConfigSection empty;
    const auto it = doc.sections.find(name);
    return it == doc.sections.end() ? empty : it->second;
  };

  bool has_input = false, has_group = false;
  for (const auto& [key, v] : section("data")) {
    if (key == "input") {
      c.input = resolve(base_dir, as_string(key, v));
      has_input = true;
    } else if (key == "id") {
      c.id_column = as_string(key, v);
    } else if (key == "group") {
      c.group_column = as_string(key, v);
      has_group = true;
    } else if (key == "treated") {
      c.treated_value = as_string(key, v);
    } else if (key == "control") {
      c.control_value = as_string(key, v);
    } else if (key == "outcome") {
      c.outcome_column = as_string(key, v);
    } else if (key == "outcome_positive") {
      c.outcome_positive = as_string(key, v);
    } else if (key == "outcome_negative") {
      c.outcome_negative = as_string(key, v);
    } else {
      bad(key, v, "is not a [data] key");
    }
  }
  if (!has_input) throw ConfigError("[data] input is required");
  if (!has_group) throw ConfigError("[data] group is required");

  for (const auto& [key, v] : section("covariates")) {
    if (key == "numeric") {
      c.numeric = as_strings(key, v);
    } else if (key == "categorical") {
      c.categorical = as_strings(key, v);
    } else {
      bad(key, v, "is not a [covariates] key");
    }
  }

  for (const auto& [key, v] : section("design")) {
    if (key == "mode") {
      c.mode = as_mode(key, v);
    } else if (key == "match_on") {
      c.match_on = as_strings(key, v);
    } else if (key == "preserve") {
      c.preserve = as_strings(key, v);
    } else if (key == "balance_on") {
      c.balance_on = as_strings(key, v);
    } else if (key == "partitions") {
      if (v.kind != ConfigValue::Kind::array) bad(key, v, "must be an array of arrays");
      for (const ConfigValue& part : v.items) c.partitions.push_back(as_strings(key, part));
    } else if (key == "template") {
      c.template_input = resolve(base_dir, as_string(key, v));
    } else if (key == "generalize") {
      c.generalize = as_strings(key, v);
    } else if (key == "lambda") {
      c.lambda = as_double(key, v);
      if (*c.lambda < 0.0) bad(key, v, "must be nonnegative");
    } else if (key == "seed") {
      c.seed = as_seed(key, v);
    } else if (key == "precision") {
      const auto p = as_int(key, v);
      if (p < 0 || p > 9) bad(key, v, "must lie in 0..9");
      c.precision = static_cast<int>(p);
    } else if (key == "controls") {
      const auto k = as_int(key, v);
      if (k < 1 || k > 100) bad(key, v, "must lie in 1..100");
      c.controls = static_cast<std::size_t>(k);
    } else if (key == "caliper_left" || key == "caliper_right") {
      const double cal = as_double(key, v);
      if (!(cal > 0.0)) bad(key, v, "must be positive");
      (key == "caliper_left" ? c.left : c.right).caliper_low = cal;
    } else if (key == "k_left" || key == "k_right") {
      const auto k = as_int(key, v);
      if (k < 1) bad(key, v, "must be at least 1");
      (key == "k_left" ? c.left : c.right).k = static_cast<std::size_t>(k);
    } else if (key == "method_left") {
      c.left.method = as_method(key, v);
    } else if (key == "method_right") {
      c.right.method = as_method(key, v);
      c.right_method_set = true;
    } else if (key == "fine_balance") {
      c.fine_balance = as_string(key, v);
    } else if (key == "fine_balance_penalty") {
      c.fine_balance_penalty = as_double(key, v);
      if (*c.fine_balance_penalty < 0.0) bad(key, v, "must be nonnegative");
    } else {
      bad(key, v, "is not a [design] key");
    }
  }

  for (const auto& [key, v] : section("output")) {
    if (key == "dir") {
      c.out_dir = resolve(base_dir, as_string(key, v));
    } else {
      bad(key, v, "is not an [output] key");
    }
  }

  if (c.match_on.empty() && c.mode != DesignMode::nested) {
    for (const std::string& name : c.all_covariates()) {
      if (std::find(c.preserve.begin(), c.preserve.end(), name) == c.preserve.end() &&
          std::find(c.generalize.begin(), c.generalize.end(), name) == c.generalize.end()) {
        c.match_on.push_back(name);
      }
    }
  }
  if (c.balance_on.empty()) c.balance_on = c.match_on;
  if (c.mode == DesignMode::balanced_pairs && !c.right_method_set) {
    c.right.method = DistanceMethod::propensity_l1;
  }
  validate(c);
  return c;
}

void validate(const RunConfig& c) {
  std::set<std::string> declared;
  for (const std::string& name : c.all_covariates()) {
    if (!declared.insert(name).second) {
      throw ConfigError("covariate '" + name + "' is declared twice");
    }
    if (name == c.group_column || (c.id_column && name == *c.id_column) ||
        (c.outcome_column && name == *c.outcome_column)) {
      throw ConfigError("covariate '" + name + "' reuses the id, group or outcome column");
    }
  }
  if (c.treated_value == c.control_value) {
    throw ConfigError("treated and control values must differ");
  }
  if (c.outcome_positive == c.outcome_negative) {
    throw ConfigError("outcome_positive and outcome_negative must differ");
  }
  require_declared(c, c.match_on, "match_on");
  require_declared(c, c.preserve, "preserve");
  require_declared(c, c.balance_on, "balance_on");
  require_declared(c, c.generalize, "generalize");
  std::vector<std::string> flat;
  for (const auto& part : c.partitions) {
    if (part.empty()) throw ConfigError("'partitions' contains an empty group");
    flat.insert(flat.end(), part.begin(), part.end());
  }
  require_declared(c, flat, "partitions");

  switch (c.mode) {
    case DesignMode::pair:
      if (c.match_on.empty()) throw ConfigError("pair mode needs at least one covariate");
      break;
    case DesignMode::disparity:
      if (c.match_on.empty()) throw ConfigError("tripartite-disparity needs 'match_on'");
      for (const std::string& name : c.preserve) {
        if (std::find(c.match_on.begin(), c.match_on.end(), name) != c.match_on.end()) {
          throw ConfigError("covariate '" + name + "' is in both match_on and preserve");
        }
      }
      if (!c.seed) throw ConfigError("tripartite-disparity requires a 'seed'");
      break;
    case DesignMode::nested:
      if (c.partitions.empty()) throw ConfigError("nested mode needs 'partitions'");
      if (!c.seed) throw ConfigError("nested mode requires a 'seed'");
      break;
    case DesignMode::balanced_pairs:
      if (c.match_on.empty()) throw ConfigError("balanced-pairs needs 'match_on'");
      break;
    case DesignMode::template_match:
      if (!c.template_input) throw ConfigError("template mode needs a 'template' file");
      if (c.generalize.empty()) throw ConfigError("template mode needs 'generalize'");
      if (c.match_on.empty()) throw ConfigError("template mode needs 'match_on'");
      break;
  }
  if (c.mode != DesignMode::pair && (c.controls != 1 || c.fine_balance)) {
    throw ConfigError("'controls' and 'fine_balance' apply to pair mode only");
  }
  if (c.fine_balance) {
    if (std::find(c.categorical.begin(), c.categorical.end(), *c.fine_balance) ==
        c.categorical.end()) {
      throw ConfigError("fine_balance covariate '" + *c.fine_balance +
                        "' must be a declared categorical covariate");
    }
  } else if (c.fine_balance_penalty) {
    throw ConfigError("'fine_balance_penalty' needs 'fine_balance'");
  }
}

RunConfig load_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_run_config(parse_config(buffer.str()), path.parent_path());
}

}  // namespace tripmatch::cli
