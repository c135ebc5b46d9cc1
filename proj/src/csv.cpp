// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#include "biasbeam/csv.hpp"

#include <fstream>

#include "biasbeam/error.hpp"

namespace biasbeam::csv {

std::optional<Row> Reader::next() {
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return std::nullopt;

  record_line_ = line_;
  Row row;
  std::string field;
  bool quoted = false;
  bool after_quote = false;

  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw DataError("csv: unterminated quoted field starting on line " +
                                  std::to_string(record_line_));
      row.push_back(std::move(field));
      return row;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && in_.peek() == '\n') in_.get();
      ++line_;
      row.push_back(std::move(field));
      return row;
    } else if (ch == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else {
      // Lenient: stray characters after a closing quote are kept verbatim.
      field.push_back(ch);
    }
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

Table read_table(std::istream& in) {
  Reader reader(in);
  Table table;
  if (auto header = reader.next()) table.header = std::move(*header);
  while (auto row = reader.next()) table.rows.push_back(std::move(*row));
  return table;
}

Table read_table_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_table(in);
}

void write_table(std::ostream& out, const Table& table) {
  write_row(out, table.header);
  for (const auto& row : table.rows) write_row(out, row);
}

}  // namespace biasbeam::csv
