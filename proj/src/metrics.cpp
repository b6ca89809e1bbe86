#include "vulnbench/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <tuple>

#include "vulnbench/error.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::metrics {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<Platform, 2> kPlatformOrder = {Platform::solana, Platform::algorand};

double ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

bool cell_matches(double actual, double expected) {
  if (std::isnan(expected)) return true;
  if (std::isnan(actual)) return false;
  return std::fabs(round2(actual) - round2(expected)) <= 0.005;
}

std::string cell(double v) { return std::isnan(v) ? "" : text::format_fixed(round2(v), 2); }

int ordinal_of(const Taxonomy& taxonomy, const std::string& key) {
  const auto* c = taxonomy.find(key);
  return c ? c->ordinal : std::numeric_limits<int>::max();
}

// Category keys of one platform present in `rows`, in report order.
std::vector<std::string> ordered_categories(const Rows& rows, Platform platform,
                                            const Taxonomy& taxonomy) {
  std::set<std::string> keys;
  for (const auto& [k, _] : rows) {
    if (k.platform == platform) keys.insert(k.category);
  }
  std::vector<std::string> out(keys.begin(), keys.end());
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return ordinal_of(taxonomy, a) < ordinal_of(taxonomy, b);
  });
  return out;
}

std::set<std::pair<std::string, std::string>> groups_of(const Rows& rows, Platform platform) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [k, _] : rows) {
    if (k.platform == platform) out.insert({k.config, k.model});
  }
  return out;
}

std::string column_label(const std::string& config, const std::string& model) {
  return config == "baseline" ? model : config + " " + model;
}

std::string platform_title(Platform p) { return p == Platform::solana ? "Solana" : "Algorand"; }

}  // namespace

std::string to_string(const ConfusionMatrix& cm) {
  return "CM(tp=" + std::to_string(cm.tp) + ", fp=" + std::to_string(cm.fp) +
         ", fn=" + std::to_string(cm.fn) + ", tn=" + std::to_string(cm.tn) + ")";
}

double round2(double value) {
  if (std::isnan(value)) return value;
  return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

MetricsRow rounded(const MetricsRow& row) {
  return {round2(row.accuracy), round2(row.precision), round2(row.recall), round2(row.f1)};
}

bool same_at_2dp(const MetricsRow& a, const MetricsRow& b) {
  return cell_matches(a.accuracy, b.accuracy) && cell_matches(a.precision, b.precision) &&
         cell_matches(a.recall, b.recall) && cell_matches(a.f1, b.f1);
}

MetricsRow compute_metrics(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) {
    throw Error(ErrorKind::invalid_argument, "negative cell in " + to_string(cm));
  }
  if (cm.total() == 0) throw Error(ErrorKind::empty_matrix, "confusion matrix has no samples");
  MetricsRow r;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.recall = ratio(cm.tp, cm.tp + cm.fn);
  r.f1 = r.precision + r.recall == 0 ? 0.0
                                     : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::vector<ConfusionMatrix> reconstruct_cm(const MetricsRow& row, int n_pos, int n_neg) {
  if (n_pos <= 0 || n_neg <= 0) {
    throw Error(ErrorKind::invalid_argument, "class sizes must be positive");
  }
  std::vector<ConfusionMatrix> out;
  for (long tp = 0; tp <= n_pos; ++tp) {
    for (long fp = 0; fp <= n_neg; ++fp) {
      const ConfusionMatrix cm{tp, fp, n_pos - tp, n_neg - fp};
      if (same_at_2dp(compute_metrics(cm), row)) out.push_back(cm);
    }
  }
  return out;
}

std::map<GroupKey, double> platform_averages(const Rows& rows) {
  std::map<GroupKey, std::pair<double, int>> acc;
  for (const auto& [k, r] : rows) {
    auto& [sum, n] = acc[{k.platform, k.config, k.model}];
    sum += r.accuracy;
    ++n;
  }
  std::map<GroupKey, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / v.second;
  return out;
}

TableFormat parse_table_format(std::string_view text) {
  if (text == "csv") return TableFormat::csv;
  if (text == "markdown" || text == "md") return TableFormat::markdown;
  throw Error(ErrorKind::invalid_argument, "unknown table format '" + std::string(text) + "'");
}

std::string emit_table(const Rows& rows, TableFormat format, const Taxonomy& taxonomy) {
  const auto averages = platform_averages(rows);
  std::string out;
  if (format == TableFormat::csv) {
    out += std::string(kCsvHeader) + "\n";
    for (const auto platform : kPlatformOrder) {
      const auto cats = ordered_categories(rows, platform, taxonomy);
      for (const auto& [config, model] : groups_of(rows, platform)) {
        const std::string prefix = std::string(to_string(platform));
        for (const auto& cat : cats) {
          const auto it = rows.find({platform, cat, config, model});
          if (it == rows.end()) continue;
          const auto& r = it->second;
          out += prefix + "," + cat + "," + config + "," + model + "," + cell(r.accuracy) + "," +
                 cell(r.precision) + "," + cell(r.recall) + "," + cell(r.f1) + "\n";
        }
        out += prefix + "," + std::string(kAverageLabel) + "," + config + "," + model + "," +
               cell(averages.at({platform, config, model})) + ",,,\n";
      }
    }
    return out;
  }

  std::set<std::pair<std::string, std::string>> groups;
  bool has[4] = {true, false, false, false};  // accuracy, precision, f1, recall
  for (const auto& [k, r] : rows) {
    groups.insert({k.config, k.model});
    has[1] |= !std::isnan(r.precision);
    has[2] |= !std::isnan(r.f1);
    has[3] |= !std::isnan(r.recall);
  }
  static constexpr const char* kTitles[4] = {"Accuracy", "Precision", "F1-score", "Recall"};
  out += "| Blockchain | Vulnerability |";
  std::string rule = "|---|---|";
  for (int m = 0; m < 4; ++m) {
    if (!has[m]) continue;
    for (const auto& [config, model] : groups) {
      out += std::string(" ") + kTitles[m] + " " + column_label(config, model) + " |";
      rule += "---|";
    }
  }
  out += "\n" + rule + "\n";
  for (const auto platform : kPlatformOrder) {
    const auto cats = ordered_categories(rows, platform, taxonomy);
    if (cats.empty()) continue;
    for (const auto& cat : cats) {
      const auto* c = taxonomy.find(cat);
      out += "| " + platform_title(platform) + " | " + (c ? c->display_name : cat) + " |";
      for (int m = 0; m < 4; ++m) {
        if (!has[m]) continue;
        for (const auto& [config, model] : groups) {
          const auto it = rows.find({platform, cat, config, model});
          double v = kNaN;
          if (it != rows.end()) {
            const auto& r = it->second;
            v = m == 0 ? r.accuracy : m == 1 ? r.precision : m == 2 ? r.f1 : r.recall;
          }
          out += " " + cell(v) + " |";
        }
      }
      out += "\n";
    }
    out += "| " + platform_title(platform) + " | **" + std::string(kAverageLabel) + "** |";
    for (int m = 0; m < 4; ++m) {
      if (!has[m]) continue;
      for (const auto& [config, model] : groups) {
        const auto it = averages.find({platform, config, model});
        out += " " + (m == 0 && it != averages.end() ? "**" + cell(it->second) + "**" : "") + " |";
      }
    }
    out += "\n";
  }
  return out;
}

Reference parse_reference(std::string_view csv, const Taxonomy& taxonomy) {
  Reference ref;
  bool header_seen = false;
  const auto lines = text::split_lines(csv);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) {
      return Error(ErrorKind::malformed_reference, why, line_no);
    };
    if (!header_seen) {
      if (line != kCsvHeader) throw fail("expected header '" + std::string(kCsvHeader) + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.emplace_back(text::trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 8) throw fail("expected 8 fields, got " + std::to_string(f.size()));
    Platform platform;
    try {
      platform = parse_platform(f[0]);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (f[2].empty() || f[3].empty()) throw fail("config and model are required");
    double values[4];
    for (int c = 0; c < 4; ++c) {
      const auto& s = f[4 + c];
      if (s.empty()) {
        values[c] = kNaN;
        continue;
      }
      char* end = nullptr;
      values[c] = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size() || values[c] < 0 || values[c] > 1) {
        throw fail("bad metric value '" + s + "'");
      }
    }
    if (f[1] == kAverageLabel) {
      if (std::isnan(values[0])) throw fail("average row needs an accuracy");
      if (!ref.averages.emplace(GroupKey{platform, f[2], f[3]}, values[0]).second) {
        throw fail("duplicate average row");
      }
      continue;
    }
    const auto* cat = taxonomy.find(f[1]);
    if (!cat || cat->platform != platform) throw fail("unknown category '" + f[1] + "'");
    if (std::isnan(values[0])) throw fail("accuracy is required");
    const MetricsRow row{values[0], values[1], values[2], values[3]};
    if (!ref.rows.emplace(RowKey{platform, f[1], f[2], f[3]}, row).second) {
      throw fail("duplicate row for " + f[1]);
    }
  }
  if (!header_seen) throw Error(ErrorKind::malformed_reference, "empty reference table");
  return ref;
}

Reference load_reference(const std::string& path, const Taxonomy& taxonomy) {
  return parse_reference(text::read_file(path), taxonomy);
}

std::string DiffEntry::str() const {
  return platform + "," + category + "," + config + "," + model + "," + column +
         ": actual=" + actual + " expected=" + expected;
}

std::vector<DiffEntry> compare_with_reference(const Rows& rows, const Reference& reference,
                                              const Taxonomy& taxonomy) {
  std::set<GroupKey> ref_groups, row_groups;
  for (const auto& [k, _] : reference.rows) ref_groups.insert({k.platform, k.config, k.model});
  for (const auto& [k, _] : reference.averages) ref_groups.insert(k);
  for (const auto& [k, _] : rows) row_groups.insert({k.platform, k.config, k.model});

  std::vector<DiffEntry> out;
  auto entry = [&](Platform p, const std::string& cat, const std::string& config,
                   const std::string& model, std::string column, std::string actual,
                   std::string expected) {
    out.push_back({std::string(to_string(p)), cat, config, model, std::move(column),
                   std::move(actual), std::move(expected)});
  };

  for (const auto& g : row_groups) {
    if (!ref_groups.count(g)) {
      entry(g.platform, "*", g.config, g.model, "group", "present", "missing");
      continue;
    }
    for (const auto& [k, expected] : reference.rows) {
      if (GroupKey{k.platform, k.config, k.model} != g) continue;
      const auto it = rows.find(k);
      if (it == rows.end()) {
        entry(k.platform, k.category, k.config, k.model, "row", "missing", "present");
        continue;
      }
      const auto& actual = it->second;
      const std::pair<const char*, std::pair<double, double>> cols[] = {
          {"accuracy", {actual.accuracy, expected.accuracy}},
          {"precision", {actual.precision, expected.precision}},
          {"recall", {actual.recall, expected.recall}},
          {"f1", {actual.f1, expected.f1}}};
      for (const auto& [name, v] : cols) {
        if (!cell_matches(v.first, v.second)) {
          entry(k.platform, k.category, k.config, k.model, name,
                std::isnan(v.first) ? "missing" : cell(v.first), cell(v.second));
        }
      }
    }
    for (const auto& [k, _] : rows) {
      if (GroupKey{k.platform, k.config, k.model} == g && !reference.rows.count(k)) {
        entry(k.platform, k.category, k.config, k.model, "row", "present", "missing");
      }
    }
    const auto avg = reference.averages.find(g);
    if (avg == reference.averages.end()) continue;
    std::size_t covered = 0;
    const auto eval = taxonomy.eval_categories(g.platform);
    for (const auto& c : eval) covered += rows.count({g.platform, c.key, g.config, g.model});
    if (covered != eval.size()) continue;
    const double actual = platform_averages(rows).at(g);
    if (!cell_matches(actual, avg->second)) {
      entry(g.platform, std::string(kAverageLabel), g.config, g.model, "accuracy", cell(actual),
            cell(avg->second));
    }
  }
  return out;
}

std::vector<OwaspGroup> group_by_owasp(const Rows& rows, const Taxonomy& taxonomy) {
  struct Acc {
    double sum = 0;
    int n = 0;
  };
  std::map<std::tuple<int, OwaspId, std::string, std::string>, Acc> acc;
  for (const auto& [k, r] : rows) {
    const auto* c = taxonomy.find(k.category);
    if (!c || c->platform != k.platform) {
      throw Error(ErrorKind::unknown_category, "category '" + k.category + "' is not in the taxonomy");
    }
    const int platform_rank = k.platform == Platform::solana ? 0 : 1;
    auto& a = acc[{platform_rank, c->owasp_id, k.config, k.model}];
    a.sum += r.accuracy;
    ++a.n;
  }
  std::vector<OwaspGroup> out;
  for (const auto& [k, a] : acc) {
    const auto& [rank, id, config, model] = k;
    out.push_back({rank == 0 ? Platform::solana : Platform::algorand, id, config, model,
                   a.sum / a.n, a.n});
  }
  return out;
}

std::string emit_owasp_report(const std::vector<OwaspGroup>& groups, TableFormat format) {
  std::string out;
  if (format == TableFormat::csv) {
    out += "platform,owasp_id,config,model,mean_accuracy,categories\n";
    for (const auto& g : groups) {
      out += std::string(to_string(g.platform)) + "," + to_string(g.owasp_id) + "," + g.config +
             "," + g.model + "," + text::format_fixed(g.mean_accuracy, 4) + "," +
             std::to_string(g.categories) + "\n";
    }
    return out;
  }
  out += "| Blockchain | OWASP | Config | Model | Mean accuracy | Categories |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& g : groups) {
    out += "| " + platform_title(g.platform) + " | " + to_string(g.owasp_id) + " | " + g.config +
           " | " + g.model + " | " + cell(g.mean_accuracy) + " | " + std::to_string(g.categories) +
           " |\n";
  }
  return out;
}

}  // namespace vulnbench::metrics
