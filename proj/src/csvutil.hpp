#pragma once

// Internal CSV helpers shared by the panel and OHLC readers. Not installed.

#include <charconv>
#include <string>
#include <vector>

#include "gnarspec/errors.hpp"

namespace gnarspec::detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what,
                           int lineno) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end)
    throw InvalidArgument(what + ":" + std::to_string(lineno) +
                          ": not a number: '" + s + "'");
  return v;
}

}  // namespace gnarspec::detail
