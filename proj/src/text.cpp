#include "vulnbench/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vulnbench/error.hpp"

namespace vulnbench {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::unknown_key: return "unknown-key";
    case ErrorKind::schema_version: return "schema-version";
    case ErrorKind::malformed_record: return "malformed-record";
    case ErrorKind::unknown_template: return "unknown-template";
    case ErrorKind::missing_parameter: return "missing-parameter";
    case ErrorKind::unknown_opcode: return "unknown-opcode";
    case ErrorKind::malformed_immediate: return "malformed-immediate";
    case ErrorKind::duplicate_label: return "duplicate-label";
    case ErrorKind::undefined_branch_target: return "undefined-branch-target";
    case ErrorKind::unbalanced_braces: return "unbalanced-braces";
    case ErrorKind::missing_rendering: return "missing-rendering";
    case ErrorKind::transport_failure: return "transport-failure";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::http_status: return "http-status";
    case ErrorKind::unknown_sample_id: return "unknown-sample-id";
    case ErrorKind::empty_matrix: return "empty-matrix";
    case ErrorKind::unknown_category: return "unknown-category";
    case ErrorKind::malformed_reference: return "malformed-reference";
    case ErrorKind::split_too_small: return "split-too-small";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::io: return "io";
  }
  return "error";
}

namespace {
std::string decorate(ErrorKind kind, const std::string& message, int line) {
  std::string out(to_string(kind));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, int line)
    : std::runtime_error(decorate(kind, message, line)), kind_(kind), line_(line) {}

Error Error::http(int status, const std::string& body) {
  Error e(ErrorKind::http_status, "status " + std::to_string(status) + ": " + body);
  e.status_ = status;
  return e;
}

}  // namespace vulnbench

namespace vulnbench::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) lines.emplace_back(s.substr(start));
      break;
    }
    auto line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::optional<std::size_t> find_word_ci(std::string_view haystack, std::string_view needle,
                                        std::size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) return std::nullopt;
  for (std::size_t pos = from; pos + needle.size() <= haystack.size(); ++pos) {
    if (!starts_with_ci(haystack.substr(pos), needle)) continue;
    // Word boundaries only matter where the needle itself starts/ends with a word char.
    const bool left_ok = pos == 0 || !is_word_char(needle.front()) ||
                         !is_word_char(haystack[pos - 1]);
    const auto end = pos + needle.size();
    const bool right_ok = end == haystack.size() || !is_word_char(needle.back()) ||
                          !is_word_char(haystack[end]);
    if (left_ok && right_ok) return pos;
  }
  return std::nullopt;
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '|': out += "\\|"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case 't': out += '\t'; break;
      case '|': out += '|'; break;
      case '\\': out += '\\'; break;
      default:
        out += '\\';
        out += s[i];
    }
  }
  return out;
}

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && i + 1 < line.size()) {
      current += c;
      current += line[++i];
    } else if (c == '|') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

bool glob_match(std::string_view pattern, std::string_view s) {
  std::size_t p = 0, i = 0, star = std::string_view::npos, mark = 0;
  while (i < s.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

std::string format_fixed(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double halfup = std::floor(std::fabs(value) * scale + 0.5 + 1e-9) / scale;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::copysign(halfup, value));
  return buf;
}

}  // namespace vulnbench::text
