#pragma once

// RFC 4180 CSV output with 17-significant-digit floats, and JSON metadata
// sidecars carrying the resolved configuration and content hashes.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace homog::report {

/// Empty cells (std::monostate) are written as nothing, i.e. CSV null.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

std::string format_double(double v);
std::string escape(const std::string& field);
std::string format_row(const std::vector<Cell>& row);

/// Writes the header immediately and flushes after every row, so completed
/// rows survive a later failure.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<Cell>& cells);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

/// SHA-1 of "blob <size>\0" + content, as computed by git hash-object.
std::string git_blob_sha1(const std::string& content);

/// Writes <csv_path>.json with the configuration, the CSV's blob hash and
/// any extra fields.
void write_sidecar(const std::string& csv_path, const nlohmann::json& config, const nlohmann::json& extra = {});

std::string read_file(const std::string& path);

}  // namespace homog::report
