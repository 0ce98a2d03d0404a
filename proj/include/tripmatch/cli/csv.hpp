#ifndef TRIPMATCH_CLI_CSV_HPP_
#define TRIPMATCH_CLI_CSV_HPP_

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tripmatch::cli {

// Problems with input data; carries a location when one is known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw cells, kept verbatim so that outputs can echo the input.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws DataError naming the column when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

// RFC 4180: quoted fields may hold separators, quotes ("") and newlines.
// Every record must have as many fields as the header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

void write_record(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that reads back to the same double.
std::string format_double(double value);

}  // namespace tripmatch::cli

#endif  // TRIPMATCH_CLI_CSV_HPP_
