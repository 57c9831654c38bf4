#include "smallnoise/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "smallnoise/errors.hpp"
#include "smallnoise/version.hpp"

namespace smallnoise {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvBuilder::CsvBuilder(const std::string& resolved_config,
                       const std::vector<std::string>& columns)
    : n_columns_(columns.size()) {
  text_ += "# version: ";
  text_ += kVersion;
  text_ += "\n# config: ";
  text_ += resolved_config;
  text_ += "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += columns[i];
  }
  text_ += '\n';
}

void CsvBuilder::add_cell(const std::string& s) {
  if (row_cells_ > 0) text_ += ',';
  text_ += s;
  ++row_cells_;
}

void CsvBuilder::add_cell(double v) { add_cell(format_double(v)); }

void CsvBuilder::add_cell(std::uint64_t v) { add_cell(std::to_string(v)); }

void CsvBuilder::add_empty_cell() {
  if (row_cells_ > 0) text_ += ',';
  ++row_cells_;
}

void CsvBuilder::end_row() {
  if (row_cells_ != n_columns_) throw std::logic_error("csv row has wrong cell count");
  text_ += '\n';
  row_cells_ = 0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_input("cannot open output file: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw invalid_input("failed writing output file: " + path);
}

}  // namespace smallnoise
