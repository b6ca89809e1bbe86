#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/taxonomy.hpp"

namespace vulnbench::metrics {

struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

std::string to_string(const ConfusionMatrix& cm);

// Unrounded values; a missing cell (accuracy-only references) is NaN.
struct MetricsRow {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Half-up rounding to 2 decimals, tolerant of binary representation error.
double round2(double value);
MetricsRow rounded(const MetricsRow& row);
bool same_at_2dp(const MetricsRow& a, const MetricsRow& b);

// Throws empty_matrix when every cell is 0.
MetricsRow compute_metrics(const ConfusionMatrix& cm);

// Every matrix with tp+fn = n_pos and fp+tn = n_neg whose metrics round to
// `row`. NaN cells of `row` match anything.
std::vector<ConfusionMatrix> reconstruct_cm(const MetricsRow& row, int n_pos, int n_neg);

struct RowKey {
  Platform platform = Platform::solana;
  std::string category;
  std::string config;
  std::string model;

  auto operator<=>(const RowKey&) const = default;
};

struct GroupKey {
  Platform platform = Platform::solana;
  std::string config;
  std::string model;

  auto operator<=>(const GroupKey&) const = default;
};

using Rows = std::map<RowKey, MetricsRow>;

// Arithmetic mean of unrounded accuracies per (platform, config, model).
std::map<GroupKey, double> platform_averages(const Rows& rows);

enum class TableFormat { csv, markdown };

TableFormat parse_table_format(std::string_view text);

// Solana first, then Algorand; categories in report order; one "Avg." row per
// (platform, config, model) group.
std::string emit_table(const Rows& rows, TableFormat format,
                       const Taxonomy& taxonomy = Taxonomy::builtin());

inline constexpr std::string_view kCsvHeader =
    "platform,category,config,model,accuracy,precision,recall,f1";
inline constexpr std::string_view kAverageLabel = "Avg.";

// A committed table: per-category rows plus the averages the table states.
struct Reference {
  Rows rows;
  std::map<GroupKey, double> averages;
};

// Throws malformed_reference with the offending line.
Reference parse_reference(std::string_view csv, const Taxonomy& taxonomy = Taxonomy::builtin());
Reference load_reference(const std::string& path, const Taxonomy& taxonomy = Taxonomy::builtin());

struct DiffEntry {
  std::string platform;
  std::string category;
  std::string config;
  std::string model;
  std::string column;
  std::string actual;    // 2-decimal text, or "missing"
  std::string expected;

  std::string str() const;
};

// Only (config, model) groups present in `rows` are compared. Averages are
// compared when `rows` covers every evaluated category of the platform.
std::vector<DiffEntry> compare_with_reference(const Rows& rows, const Reference& reference,
                                              const Taxonomy& taxonomy = Taxonomy::builtin());

struct OwaspGroup {
  Platform platform = Platform::solana;
  OwaspId owasp_id;
  std::string config;
  std::string model;
  double mean_accuracy = 0;
  int categories = 0;
};

// Unweighted mean accuracy per (platform, OWASP id, config, model). Throws
// unknown_category for a row the taxonomy does not know.
std::vector<OwaspGroup> group_by_owasp(const Rows& rows,
                                       const Taxonomy& taxonomy = Taxonomy::builtin());
std::string emit_owasp_report(const std::vector<OwaspGroup>& groups, TableFormat format);

}  // namespace vulnbench::metrics
