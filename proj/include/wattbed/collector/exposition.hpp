// Copyright 2026 The wattbed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Text exposition format, one sample per line:
//   power_watts{node="<id>",source="<src>"} <value> <timestamp_ms>
// Values use shortest round-trip formatting so parse(emit(x)) == x exactly.

#pragma once

#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wattbed/common/numformat.hpp"

namespace wattbed::collector {

struct ExpoSample {
  std::string node_id;
  std::string source;
  double power_w = 0.0;
  std::int64_t timestamp_ms = 0;

  bool operator==(const ExpoSample&) const = default;
};

class MalformedLine : public std::runtime_error {
 public:
  MalformedLine(int line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line_no_(line_no) {}

  int line_no() const { return line_no_; }

 private:
  int line_no_;
};

inline constexpr const char* kExpoMetricName = "power_watts";

namespace detail {

inline bool metric_name_valid(std::string_view name) {
  if (name.empty()) {
    return false;
  }
  const auto head = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
  };
  const auto tail = [&](char c) {
    return head(c) || std::isdigit(static_cast<unsigned char>(c));
  };
  if (!head(name[0])) {
    return false;
  }
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (!tail(name[i])) {
      return false;
    }
  }
  return true;
}

inline std::string escape_label(const std::string& v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '"':
        out += "\\\"";
        break;
      case '\n':
        out += "\\n";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string emit_exposition(const std::vector<ExpoSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += kExpoMetricName;
    out += "{node=\"";
    out += detail::escape_label(s.node_id);
    out += "\",source=\"";
    out += detail::escape_label(s.source);
    out += "\"} ";
    out += format_double(s.power_w);
    out += ' ';
    out += format_int(s.timestamp_ms);
    out += '\n';
  }
  return out;
}

namespace detail {

/// Cursor over one line; every helper throws MalformedLine on mismatch.
class LineParser {
 public:
  LineParser(std::string_view line, int line_no)
      : line_(line), line_no_(line_no) {}

  std::string_view take_metric_name() {
    std::size_t i = pos_;
    while (i < line_.size() && line_[i] != '{' && line_[i] != ' ') {
      ++i;
    }
    const std::string_view name = line_.substr(pos_, i - pos_);
    if (!metric_name_valid(name)) {
      fail("invalid metric name");
    }
    pos_ = i;
    return name;
  }

  void expect(char c) {
    if (pos_ >= line_.size() || line_[pos_] != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  void expect_literal(std::string_view lit) {
    if (line_.substr(pos_, lit.size()) != lit) {
      fail("expected '" + std::string(lit) + "'");
    }
    pos_ += lit.size();
  }

  std::string take_quoted() {
    expect('"');
    std::string out;
    while (pos_ < line_.size() && line_[pos_] != '"') {
      char c = line_[pos_++];
      if (c == '\\') {
        if (pos_ >= line_.size()) {
          fail("dangling escape");
        }
        const char esc = line_[pos_++];
        if (esc == '\\') {
          c = '\\';
        } else if (esc == '"') {
          c = '"';
        } else if (esc == 'n') {
          c = '\n';
        } else {
          fail("unknown escape");
        }
      }
      out += c;
    }
    expect('"');
    return out;
  }

  std::string_view take_token() {
    std::size_t i = pos_;
    while (i < line_.size() && line_[i] != ' ') {
      ++i;
    }
    if (i == pos_) {
      fail("expected a token");
    }
    const std::string_view tok = line_.substr(pos_, i - pos_);
    pos_ = i;
    return tok;
  }

  bool at_end() const { return pos_ == line_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedLine(line_no_, what + " at column " +
                                      std::to_string(pos_ + 1));
  }

 private:
  std::string_view line_;
  int line_no_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Strict inverse of emit_exposition. Blank lines and '#' comment lines are
/// skipped; anything else must match the emitted shape exactly.
inline std::vector<ExpoSample> parse_exposition(const std::string& text) {
  std::vector<ExpoSample> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t eol = text.find('\n', start);
    const bool last = eol == std::string::npos;
    const std::string_view line(text.data() + start,
                                (last ? text.size() : eol) - start);
    ++line_no;
    start = last ? text.size() + 1 : eol + 1;
    if (line.empty() || line[0] == '#') {
      continue;
    }

    detail::LineParser p(line, line_no);
    const std::string_view name = p.take_metric_name();
    if (name != kExpoMetricName) {
      p.fail("unsupported metric '" + std::string(name) + "'");
    }
    ExpoSample s;
    p.expect('{');
    p.expect_literal("node=");
    s.node_id = p.take_quoted();
    p.expect(',');
    p.expect_literal("source=");
    s.source = p.take_quoted();
    p.expect('}');
    p.expect(' ');
    const std::string_view value = p.take_token();
    p.expect(' ');
    const std::string_view ts = p.take_token();
    if (!p.at_end()) {
      p.fail("trailing characters");
    }
    try {
      s.power_w = parse_double(value);
      s.timestamp_ms = parse_int64(ts);
    } catch (const std::exception& e) {
      p.fail(e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace wattbed::collector
