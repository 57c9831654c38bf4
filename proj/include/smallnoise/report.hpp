#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smallnoise {

// Shortest round-trip decimal form (std::to_chars); locale independent and
// byte-stable, which keeps CSV output identical across runs and worker counts.
std::string format_double(double v);

// CSV with '#' metadata lines (version + resolved config) above the header.
class CsvBuilder {
 public:
  CsvBuilder(const std::string& resolved_config, const std::vector<std::string>& columns);

  void add_cell(const std::string& s);
  void add_cell(double v);
  void add_cell(std::uint64_t v);
  void add_empty_cell();
  void end_row();

  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::size_t n_columns_;
  std::size_t row_cells_ = 0;
};

// Writes text to path atomically enough for our purposes (truncate + write).
void write_file(const std::string& path, const std::string& text);

}  // namespace smallnoise
