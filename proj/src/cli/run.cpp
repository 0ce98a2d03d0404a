#include "tripmatch/cli/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "tripmatch/designs.hpp"
#include "tripmatch/diagnostics.hpp"
#include "tripmatch/propensity.hpp"

namespace tripmatch::cli {

namespace {

using nlohmann::json;

std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row + 1) + ", column '" + column + "'";
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string cell = trim(raw);
  if (cell.empty()) throw DataError(where(row, column) + ": empty cell in numeric column");
  double value = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw DataError(where(row, column) + ": '" + raw + "' is not a number (mixed types)");
  }
  return value;
}

// Adds the declared covariates found in `csv` to `table`.
void add_covariates(const CsvTable& csv, const RunConfig& config, SampleTable& table,
                    bool require_all) {
  for (const std::string& name : config.numeric) {
    if (!require_all && !csv.has_column(name)) continue;
    const std::size_t col = csv.column(name);
    std::vector<double> values;
    values.reserve(csv.rows.size());
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      values.push_back(parse_number(csv.rows[r][col], r, name));
    }
    table.add_numeric(name, std::move(values));
  }
  for (const std::string& name : config.categorical) {
    if (!require_all && !csv.has_column(name)) continue;
    const std::size_t col = csv.column(name);
    std::vector<std::string> values;
    values.reserve(csv.rows.size());
    for (const auto& row : csv.rows) values.push_back(row[col]);
    table.add_categorical(name, values);
  }
}

std::vector<std::string> ids_of(const SampleTable& data, std::span<const std::size_t> rows) {
  std::vector<std::string> out;
  for (std::size_t r : rows) out.push_back(data.ids()[r]);
  return out;
}

const char* method_name(DistanceMethod m) {
  switch (m) {
    case DistanceMethod::mahalanobis: return "mahalanobis";
    case DistanceMethod::robust_mahalanobis: return "robust_mahalanobis";
    case DistanceMethod::propensity_l1: return "propensity";
  }
  return "";
}

json list_json(const ListOptions& o) {
  json j;
  j["method"] = method_name(o.method);
  j["caliper"] = o.caliper_low ? json(*o.caliper_low) : json(nullptr);
  j["k"] = o.k ? json(*o.k) : json(nullptr);
  return j;
}

json config_json(const RunConfig& c) {
  json j;
  j["input"] = c.input.generic_string();
  j["id"] = c.id_column ? json(*c.id_column) : json(nullptr);
  j["group"] = c.group_column;
  j["treated"] = c.treated_value;
  j["control"] = c.control_value;
  j["outcome"] = c.outcome_column ? json(*c.outcome_column) : json(nullptr);
  j["numeric"] = c.numeric;
  j["categorical"] = c.categorical;
  j["mode"] = std::string(mode_name(c.mode));
  j["match_on"] = c.match_on;
  j["preserve"] = c.preserve;
  j["balance_on"] = c.balance_on;
  j["partitions"] = c.partitions;
  j["template"] = c.template_input ? json(c.template_input->generic_string()) : json(nullptr);
  j["generalize"] = c.generalize;
  j["lambda"] = c.effective_lambda();
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["precision"] = c.precision;
  j["controls"] = c.controls;
  j["left"] = list_json(c.left);
  j["right"] = list_json(c.right);
  j["fine_balance"] = c.fine_balance ? json(*c.fine_balance) : json(nullptr);
  j["fine_balance_penalty"] =
      c.fine_balance_penalty ? json(*c.fine_balance_penalty) : json(nullptr);
  return j;
}

struct Design {
  std::string name;
  DesignResult result;
};

std::vector<Design> run_designs(const RunConfig& c, const SampleTable& data) {
  std::vector<Design> out;
  switch (c.mode) {
    case DesignMode::pair: {
      std::vector<double> scores;
      if (needs_scores(c.left)) scores = estimate_propensity(data, c.match_on).scores(data);
      const DistanceList list = create_list_from_scratch(data, c.match_on, scores, c.left);
      BipartiteOptions options;
      options.controls = c.controls;
      options.precision_digits = c.precision;
      const auto t = data.treated_rows();
      const auto w = data.control_rows();
      if (c.fine_balance) {
        const Covariate& cov = data.covariate(*c.fine_balance);
        NearFineBalance nfb;
        for (std::size_t r : t) nfb.left_category.push_back(cov.codes[r]);
        for (std::size_t r : w) nfb.right_category.push_back(cov.codes[r]);
        nfb.penalty = c.fine_balance_penalty;
        options.near_fine_balance = std::move(nfb);
      }
      DesignResult r;
      r.match = to_rows(match_optimal(list, options), t, w);
      if (!r.match.feasible) r.failing_side = "left";
      out.push_back({"M1", std::move(r)});
      break;
    }
    case DesignMode::disparity: {
      const DisparityOptions o{c.effective_lambda(), *c.seed, c.left, c.right, c.precision};
      out.push_back({"M1", disparity_match(data, c.match_on, c.preserve, o)});
      break;
    }
    case DesignMode::nested: {
      const DisparityOptions o{c.effective_lambda(), *c.seed, c.left, c.right, c.precision};
      auto results = nested_designs(data, c.partitions, o);
      for (std::size_t i = 0; i < results.size(); ++i) {
        out.push_back({"M" + std::to_string(i + 1), std::move(results[i])});
      }
      break;
    }
    case DesignMode::balanced_pairs: {
      const BalancedPairOptions o{c.effective_lambda(), c.left, c.right, c.precision};
      out.push_back({"M1", balanced_pair_match(data, c.match_on, c.balance_on, o)});
      break;
    }
    case DesignMode::template_match: {
      const SampleTable tmpl = ingest_template(*c.template_input, c);
      const TemplateOptions o{c.effective_lambda(), c.left, c.right, c.precision};
      out.push_back({"M1", template_match(data, tmpl, c.generalize, c.match_on, o)});
      break;
    }
  }
  return out;
}

std::vector<std::string> with_match_columns(std::vector<std::string> fields,
                                            const std::optional<int>& set,
                                            const std::optional<double>& distance) {
  fields.push_back(set ? std::to_string(*set) : "");
  fields.push_back(distance ? format_double(*distance) : "");
  return fields;
}

void open_for_write(std::ofstream& out, const std::filesystem::path& path) {
  out.open(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

void write_matched(const std::filesystem::path& dir, const std::string& suffix,
                   const Dataset& data, const MatchResult& match) {
  std::vector<std::string> header = data.csv.header;
  header.push_back("matched_set");
  header.push_back("distance");

  const auto labels = matched_set_labels(match, data.table.row_count());
  const auto distances = matched_distances(match, data.table.row_count());
  std::ofstream all;
  open_for_write(all, dir / ("matched" + suffix + ".csv"));
  write_record(all, header);
  for (std::size_t r = 0; r < data.csv.rows.size(); ++r) {
    write_record(all, with_match_columns(data.csv.rows[r], labels[r], distances[r]));
  }

  std::ofstream ordered;
  open_for_write(ordered, dir / ("matched_in_order" + suffix + ".csv"));
  write_record(ordered, header);
  for (const ReportRow& row : summarize_match(match, data.table)) {
    write_record(ordered, with_match_columns(data.csv.rows[row.row], row.matched_set, row.distance));
  }
}

void write_balance(const std::filesystem::path& path, const BalanceTable& table) {
  std::vector<std::string> header{"covariate", "level"};
  for (std::size_t b = 0; b < table.blocks.size(); ++b) {
    header.push_back(table.blocks[b] + "_count");
    header.push_back(table.blocks[b] + "_value");
    if (b > 0) header.push_back(table.blocks[b] + "_smd");
  }
  std::ofstream out;
  open_for_write(out, path);
  write_record(out, header);
  std::vector<std::string> sizes{"n", ""};
  for (std::size_t b = 0; b < table.blocks.size(); ++b) {
    sizes.push_back(std::to_string(table.block_sizes[b]));
    sizes.push_back("");
    if (b > 0) sizes.push_back("");
  }
  write_record(out, sizes);
  for (const BalanceRow& row : table.rows) {
    std::vector<std::string> fields{row.covariate, row.level};
    for (std::size_t b = 0; b < row.cells.size(); ++b) {
      fields.push_back(std::to_string(row.cells[b].count));
      fields.push_back(format_double(row.cells[b].value));
      if (b > 0) fields.push_back(format_double(row.cells[b].smd));
    }
    write_record(out, fields);
  }
}

struct OutcomeLine {
  std::string comparison;
  OutcomeSummary summary;
};

void write_outcomes(const std::filesystem::path& path, const std::vector<OutcomeLine>& lines) {
  std::ofstream out;
  open_for_write(out, path);
  write_record(out, {"comparison", "a", "b", "c", "d", "rate_1", "rate_2", "odds_ratio",
                     "ci_low", "ci_high", "continuity_corrected", "excluded", "note"});
  for (const OutcomeLine& line : lines) {
    const OutcomeSummary& s = line.summary;
    write_record(out, {line.comparison, std::to_string(s.a), std::to_string(s.b),
                       std::to_string(s.c), std::to_string(s.d), format_double(s.rate_1),
                       format_double(s.rate_2), format_double(s.odds_ratio),
                       format_double(s.ci_low), format_double(s.ci_high),
                       s.continuity_corrected ? "1" : "0", std::to_string(s.excluded),
                       kOutcomeIntervalNote});
  }
}

OutcomeSummary before_match_outcome(const SampleTable& data) {
  std::vector<int> y1, y2;
  std::size_t excluded = 0;
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    const auto& y = data.outcome()[r];
    if (!y) {
      ++excluded;
      continue;
    }
    (data.group()[r] == 1 ? y1 : y2).push_back(*y);
  }
  OutcomeSummary s = outcome_2x2(y1, y2);
  s.excluded = excluded;
  return s;
}

std::vector<OutcomeLine> outcome_lines(const SampleTable& data,
                                       const std::vector<std::pair<std::string, MatchResult>>& m) {
  std::vector<OutcomeLine> lines{{"treated vs controls", before_match_outcome(data)}};
  for (const auto& [name, match] : m) {
    lines.push_back({"treated vs " + name, outcome_for_match(data, match)});
  }
  return lines;
}

// Drops artifacts of an earlier run so that an infeasible run leaves no
// matched dataset behind.
void clear_artifacts(const std::filesystem::path& dir) {
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    const bool ours = (name.starts_with("matched") && name.ends_with(".csv")) ||
                      name == "balance.csv" || name == "outcome.csv" || name == "manifest.json";
    if (ours && entry.is_regular_file()) std::filesystem::remove(entry.path());
  }
}

}  // namespace

Dataset ingest_csv(const std::filesystem::path& path, const RunConfig& config) {
  return ingest_csv(read_csv(path), config);
}

Dataset ingest_csv(const CsvTable& csv, const RunConfig& config) {
  for (const char* reserved : {"matched_set", "distance"}) {
    if (csv.has_column(reserved)) {
      throw DataError("input already has a '" + std::string(reserved) + "' column");
    }
  }
  const std::size_t group_col = csv.column(config.group_column);
  const std::optional<std::size_t> id_col =
      config.id_column ? std::optional(csv.column(*config.id_column)) : std::nullopt;
  const std::optional<std::size_t> outcome_col =
      config.outcome_column ? std::optional(csv.column(*config.outcome_column)) : std::nullopt;

  Dataset out{csv, {}};
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string g = trim(row[group_col]);
    int group = 0;
    if (g == config.treated_value) {
      group = 1;
    } else if (g != config.control_value) {
      throw DataError(where(r, config.group_column) + ": group value '" + g +
                      "' is neither treated ('" + config.treated_value + "') nor control ('" +
                      config.control_value + "'); exactly two group values are allowed");
    }
    std::optional<int> outcome;
    if (outcome_col) {
      const std::string y = trim(row[*outcome_col]);
      if (y == config.outcome_positive) {
        outcome = 1;
      } else if (y == config.outcome_negative) {
        outcome = 0;
      } else if (!y.empty()) {
        throw DataError(where(r, *config.outcome_column) + ": outcome '" + y +
                        "' is neither '" + config.outcome_positive + "' nor '" +
                        config.outcome_negative + "'");
      }
    }
    std::string id = id_col ? row[*id_col] : std::to_string(r + 1);
    try {
      out.table.add_row(std::move(id), group, outcome);
    } catch (const std::invalid_argument& e) {
      throw DataError(where(r, config.id_column.value_or("id")) + ": " + e.what());
    }
  }
  add_covariates(csv, config, out.table, true);
  return out;
}

SampleTable ingest_template(const std::filesystem::path& path, const RunConfig& config) {
  const CsvTable csv = read_csv(path);
  for (const std::string& name : config.generalize) csv.column(name);
  const std::optional<std::size_t> id_col =
      config.id_column && csv.has_column(*config.id_column)
          ? std::optional(csv.column(*config.id_column))
          : std::nullopt;
  SampleTable table;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    std::string id = id_col ? csv.rows[r][*id_col] : std::to_string(r + 1);
    try {
      table.add_row(std::move(id), 1);
    } catch (const std::invalid_argument& e) {
      throw DataError("template " + where(r, config.id_column.value_or("id")) + ": " + e.what());
    }
  }
  add_covariates(csv, config, table, false);
  return table;
}

MatchResult read_matched_sets(const CsvTable& matched, const SampleTable& data) {
  if (matched.rows.size() != data.row_count()) {
    throw DataError("matched dataset has " + std::to_string(matched.rows.size()) +
                    " rows, input has " + std::to_string(data.row_count()));
  }
  const std::size_t set_col = matched.column("matched_set");
  const std::optional<std::size_t> dist_col =
      matched.has_column("distance") ? std::optional(matched.column("distance")) : std::nullopt;
  std::map<long, std::optional<std::size_t>> treated_of;
  std::map<long, std::vector<std::pair<std::size_t, double>>> controls_of;
  for (std::size_t r = 0; r < matched.rows.size(); ++r) {
    const std::string cell = trim(matched.rows[r][set_col]);
    if (cell.empty()) continue;
    long set = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), set);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
      throw DataError(where(r, "matched_set") + ": '" + cell + "' is not an integer");
    }
    if (data.group()[r] == 1) {
      if (treated_of[set]) {
        throw DataError(where(r, "matched_set") + ": set " + cell + " has two treated units");
      }
      treated_of[set] = r;
    } else {
      double d = 0.0;
      if (dist_col && !trim(matched.rows[r][*dist_col]).empty()) {
        d = parse_number(matched.rows[r][*dist_col], r, "distance");
      }
      controls_of[set].emplace_back(r, d);
    }
  }
  MatchResult out;
  out.feasible = true;
  for (const auto& [set, controls] : controls_of) {
    const auto it = treated_of.find(set);
    if (it == treated_of.end() || !it->second) {
      throw DataError("matched set " + std::to_string(set) + " has no treated unit");
    }
    for (const auto& [row, d] : controls) out.pairs.push_back({*it->second, row, d});
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.treated != b.treated ? a.treated < b.treated : a.control < b.control;
  });
  return out;
}

int run(const RunConfig& config, std::ostream& log) {
  validate(config);
  const Dataset data = ingest_csv(config.input, config);
  std::filesystem::create_directories(config.out_dir);
  clear_artifacts(config.out_dir);

  const std::vector<Design> designs = run_designs(config, data.table);
  const bool nested = config.mode == DesignMode::nested;
  bool all_feasible = true;

  json manifest;
  manifest["config"] = config_json(config);
  manifest["rows"] = data.table.row_count();
  manifest["treated"] = data.table.treated_rows().size();
  manifest["controls"] = data.table.control_rows().size();
  json entries = json::array();
  for (const Design& d : designs) {
    const DesignResult& r = d.result;
    json e;
    e["name"] = d.name;
    e["feasible"] = r.match.feasible ? 1 : 0;
    e["failing_side"] = r.failing_side.empty() ? json(nullptr) : json(r.failing_side);
    e["failure"] = r.match.failure.empty() ? json(nullptr) : json(r.match.failure);
    if (!r.note.empty()) {
      e["note"] = r.note;
      log << d.name << ": " << r.note << '\n';
    }
    if (r.match.feasible) {
      e["pairs"] = r.match.pairs.size();
      e["total_distance"] = r.match.total_distance();
    }
    if (r.network && r.network->feasible) {
      e["total_left_cost"] = r.network->total_left_cost;
      e["total_right_cost"] = r.network->total_right_cost;
      e["objective"] = r.network->objective(config.effective_lambda());
    } else if (r.match.feasible) {
      e["objective"] = r.match.total_distance();
    }
    if (!r.reference_sample.empty()) {
      e["reference_sample"] = ids_of(data.table, r.reference_sample);
    }
    entries.push_back(std::move(e));
    if (!r.match.feasible) {
      all_feasible = false;
      log << d.name << ": infeasible";
      if (!r.failing_side.empty()) log << " (" << r.failing_side << " side)";
      log << ": " << r.match.failure << '\n';
    }
  }
  manifest["designs"] = std::move(entries);
  manifest["feasible"] = all_feasible ? 1 : 0;

  std::vector<std::string> outputs;
  if (all_feasible) {
    std::vector<MatchResult> matches;
    std::vector<std::pair<std::string, MatchResult>> named;
    for (const Design& d : designs) {
      const std::string suffix = nested ? "_" + d.name : "";
      write_matched(config.out_dir, suffix, data, d.result.match);
      outputs.push_back("matched" + suffix + ".csv");
      outputs.push_back("matched_in_order" + suffix + ".csv");
      matches.push_back(d.result.match);
      named.emplace_back(d.name, d.result.match);
    }
    write_balance(config.out_dir / "balance.csv",
                  check_balance(data.table, matches, config.all_covariates()));
    outputs.push_back("balance.csv");
    if (config.outcome_column) {
      write_outcomes(config.out_dir / "outcome.csv", outcome_lines(data.table, named));
      outputs.push_back("outcome.csv");
    }
    for (const Design& d : designs) {
      log << d.name << ": " << d.result.match.pairs.size() << " pairs, total distance "
          << format_double(d.result.match.total_distance()) << '\n';
    }
  }
  outputs.push_back("manifest.json");
  manifest["outputs"] = outputs;

  std::ofstream out;
  open_for_write(out, config.out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return all_feasible ? kExitOk : kExitInfeasible;
}

int run_balance(const RunConfig& config, const std::optional<std::filesystem::path>& matched,
                std::ostream& log) {
  const Dataset data = ingest_csv(config.input, config);
  std::vector<MatchResult> results;
  if (matched) results.push_back(read_matched_sets(read_csv(*matched), data.table));
  const BalanceTable table = check_balance(data.table, results, config.all_covariates());
  std::filesystem::create_directories(config.out_dir);
  write_balance(config.out_dir / "balance.csv", table);
  for (std::size_t b = 1; b < table.blocks.size(); ++b) {
    log << table.blocks[b] << ": max SMD " << format_double(table.max_smd(b)) << '\n';
  }
  return kExitOk;
}

int run_outcome(const RunConfig& config, const std::optional<std::filesystem::path>& matched,
                std::ostream& log) {
  if (!config.outcome_column) throw ConfigError("[data] outcome is required for outcome summaries");
  const Dataset data = ingest_csv(config.input, config);
  std::vector<std::pair<std::string, MatchResult>> named;
  if (matched) named.emplace_back("M1", read_matched_sets(read_csv(*matched), data.table));
  const auto lines = outcome_lines(data.table, named);
  std::filesystem::create_directories(config.out_dir);
  write_outcomes(config.out_dir / "outcome.csv", lines);
  for (const OutcomeLine& line : lines) {
    log << line.comparison << ": OR " << format_double(line.summary.odds_ratio) << " (95% CI "
        << format_double(line.summary.ci_low) << ", " << format_double(line.summary.ci_high)
        << ")" << (line.summary.continuity_corrected ? " [0.5 added to each cell]" : "") << '\n';
  }
  log << kOutcomeIntervalNote << '\n';
  return kExitOk;
}

CaliperSearch run_min_caliper(const RunConfig& config,
                              const std::optional<std::string>& score_column) {
  const Dataset data = ingest_csv(config.input, config);
  std::vector<double> scores;
  if (score_column) {
    const std::size_t col = data.csv.column(*score_column);
    for (std::size_t r = 0; r < data.csv.rows.size(); ++r) {
      scores.push_back(parse_number(data.csv.rows[r][col], r, *score_column));
    }
  } else {
    scores = estimate_propensity(data.table, config.match_on).scores(data.table);
  }
  std::vector<double> pt, pc;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    (data.table.group()[r] == 1 ? pt : pc).push_back(scores[r]);
  }
  if (pt.empty() || pc.size() < pt.size()) {
    throw DataError("minimum caliper needs at least as many controls as treated units");
  }
  return min_feasible_caliper(pt, pc);
}

}  // namespace tripmatch::cli
