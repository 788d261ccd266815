#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace bed {

/// Shortest representation that round-trips a double (17 significant digits).
std::string format_double(double v);

/// Simple CSV assembler: header row then data rows, floats at full precision.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  void add_row_raw(const std::vector<std::string>& cells);
  const std::string& str() const { return body_; }

 private:
  std::size_t columns_;
  std::string body_;
};

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// SHA-256 digest as lowercase hex.
std::string sha256_hex(const std::string& data);

}  // namespace bed
