#pragma once

#include <string>
#include <vector>

namespace vulnbench {

// One static-analysis detection. Evidence holds instruction indices for TEAL
// and source lines for Rust.
struct Finding {
  std::string category;
  int line_start = 0;
  int line_end = 0;
  std::string message;
  std::vector<int> evidence;

  bool operator==(const Finding&) const = default;
};

// `category|line_start|line_end|message`
std::string to_record(const Finding& finding);
Finding finding_from_record(const std::string& line);
std::string findings_table(const std::vector<Finding>& findings);
void sort_findings(std::vector<Finding>& findings);

}  // namespace vulnbench
