#pragma once

#include <string>
#include <vector>

namespace rco {

/// Shortest round-trip decimal for a float ("%.9g"); identical input bits
/// always yield identical text.
std::string format_float(float v);
std::string format_double(double v);

/// Minimal deterministic CSV emitter: header row then cell rows, "\n" line
/// endings, no quoting (callers pass clean tokens).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  void write(const std::string& path) const;
  std::string to_string() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace rco
