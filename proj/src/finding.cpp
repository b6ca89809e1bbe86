#include "vulnbench/finding.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "vulnbench/error.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench {

std::string to_record(const Finding& f) {
  return text::escape_field(f.category) + "|" + std::to_string(f.line_start) + "|" +
         std::to_string(f.line_end) + "|" + text::escape_field(f.message);
}

Finding finding_from_record(const std::string& line) {
  const auto fields = text::split_record(line);
  if (fields.size() != 4) throw Error(ErrorKind::malformed_record, "finding needs 4 fields");
  Finding f;
  f.category = text::unescape_field(fields[0]);
  try {
    f.line_start = std::stoi(fields[1]);
    f.line_end = std::stoi(fields[2]);
  } catch (const std::exception&) {
    throw Error(ErrorKind::malformed_record, "bad line span in finding");
  }
  f.message = text::unescape_field(fields[3]);
  return f;
}

std::string findings_table(const std::vector<Finding>& findings) {
  std::size_t width = 8;
  for (const auto& f : findings) width = std::max(width, f.category.size());
  std::ostringstream out;
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };
  out << pad("CATEGORY") << "LINES      MESSAGE\n";
  for (const auto& f : findings) {
    std::string lines = std::to_string(f.line_start) + "-" + std::to_string(f.line_end);
    lines.resize(std::max<std::size_t>(lines.size(), 9), ' ');
    out << pad(f.category) << lines << "  " << f.message << "\n";
  }
  if (findings.empty()) out << "(no findings)\n";
  return out.str();
}

void sort_findings(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    return std::tie(a.line_start, a.category) < std::tie(b.line_start, b.category);
  });
}

}  // namespace vulnbench
