// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

// Internal helpers shared by the persistence code.

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "biasbeam/error.hpp"

namespace biasbeam::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Whole-string parse; throws DataError naming `what` on failure.
inline double parse_double(std::string_view text, std::string_view what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(std::string(what) + ": not a number: '" + std::string(text) + "'");
  return v;
}

inline long long parse_int(std::string_view text, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(std::string(what) + ": not an integer: '" + std::string(text) + "'");
  return v;
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError("binary file truncated");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (1u << 20)) throw DataError("binary file corrupt: string too long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw DataError("binary file truncated");
  return s;
}

template <typename Derived>
void put_matrix(std::ostream& out, const Derived& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(typename Derived::Scalar)));
}

template <typename Derived>
void get_matrix(std::istream& in, Derived& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(typename Derived::Scalar)));
  if (!in) throw DataError("binary file truncated");
}

}  // namespace biasbeam::io
