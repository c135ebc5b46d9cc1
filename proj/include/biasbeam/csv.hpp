// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace biasbeam::csv {

using Row = std::vector<std::string>;

/// Streaming RFC-4180 reader. Quoted fields may span lines; CRLF and LF are
/// both accepted as record terminators.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws DataError on an
  /// unterminated quoted field.
  std::optional<Row> next();

  /// 1-based line number where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, std::span<const std::string> fields);

/// Reads a whole table. The first record is returned as the header.
struct Table {
  Row header;
  std::vector<Row> rows;

  bool operator==(const Table&) const = default;
};

Table read_table(std::istream& in);
Table read_table_file(const std::string& path);
void write_table(std::ostream& out, const Table& table);

}  // namespace biasbeam::csv
