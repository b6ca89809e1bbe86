#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vulnbench/error.hpp"
#include "vulnbench/metrics.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::metrics {
namespace {

using CM = ConfusionMatrix;

// Integer oracle: a ratio rounded half-up to hundredths, as an integer.
long hundredths(long num, long den) {
  if (den == 0) return 0;
  return (200 * num + den) / (2 * den);
}

struct Cents {
  long acc, prec, rec, f1;
  bool operator==(const Cents&) const = default;
};

Cents oracle(const CM& cm) {
  return {hundredths(cm.tp + cm.tn, cm.total()), hundredths(cm.tp, cm.tp + cm.fp),
          hundredths(cm.tp, cm.tp + cm.fn),
          // f1 = 2tp / (2tp + fp + fn)
          hundredths(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)};
}

Cents cents(const MetricsRow& r) {
  auto c = [](double v) { return std::lround(round2(v) * 100); };
  return {c(r.accuracy), c(r.precision), c(r.recall), c(r.f1)};
}

const Reference& table3() {
  static const auto ref = load_reference(vbtest::data_path("table3.csv"));
  return ref;
}

const Reference& table4() {
  static const auto ref = load_reference(vbtest::data_path("table4.csv"));
  return ref;
}

TEST(Metrics, ReferenceRowsFromMatrices) {
  EXPECT_EQ(cents(compute_metrics({9, 0, 6, 15})), (Cents{80, 100, 60, 75}));
  EXPECT_EQ(cents(compute_metrics({2, 0, 13, 15})), (Cents{57, 100, 13, 24}));
  EXPECT_EQ(cents(compute_metrics({0, 0, 15, 15})), (Cents{50, 0, 0, 0}));
}

TEST(Metrics, ReferenceRowsMatchCommittedFixture) {
  const auto& rows = table3().rows;
  EXPECT_TRUE(same_at_2dp(compute_metrics({9, 0, 6, 15}),
                          rows.at({Platform::solana, "bump_seed", "baseline", "DS"})));
  EXPECT_TRUE(same_at_2dp(compute_metrics({2, 0, 13, 15}),
                          rows.at({Platform::solana, "missing_key_check", "baseline", "DS"})));
  EXPECT_TRUE(same_at_2dp(compute_metrics({0, 0, 15, 15}),
                          rows.at({Platform::algorand, "unchecked_asset_close_to", "baseline", "DS"})));
}

TEST(Metrics, ZeroDenominatorsGiveZero) {
  const auto r = compute_metrics({0, 0, 15, 15});
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  const auto s = compute_metrics({0, 0, 0, 4});
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.recall, 0.0);
}

TEST(Metrics, EmptyMatrixThrows) {
  try {
    compute_metrics({0, 0, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_matrix);
  }
}

TEST(Metrics, ComputeAgreesWithIntegerOracleExhaustively) {
  for (long tp = 0; tp <= 15; ++tp)
    for (long fp = 0; fp <= 15; ++fp) {
      const CM cm{tp, fp, 15 - tp, 15 - fp};
      EXPECT_EQ(cents(compute_metrics(cm)), oracle(cm)) << to_string(cm);
    }
}

TEST(Metrics, Round2IsHalfUp) {
  EXPECT_DOUBLE_EQ(round2(0.125), 0.13);
  EXPECT_DOUBLE_EQ(round2(0.575), 0.58);
  EXPECT_DOUBLE_EQ(round2(17.0 / 30.0), 0.57);
  EXPECT_DOUBLE_EQ(round2(0.0), 0.0);
}

TEST(Metrics, ReconstructExamples) {
  auto contains = [](const std::vector<CM>& v, const CM& cm) {
    return std::find(v.begin(), v.end(), cm) != v.end();
  };
  EXPECT_TRUE(contains(reconstruct_cm({0.67, 0.78, 0.47, 0.58}, 15, 15), CM{7, 2, 8, 13}));
  EXPECT_EQ(reconstruct_cm({1.0, 1.0, 1.0, 1.0}, 15, 15), (std::vector<CM>{{15, 0, 0, 15}}));
  EXPECT_TRUE(contains(reconstruct_cm({0.60, 1.00, 0.20, 0.33}, 15, 15), CM{3, 0, 12, 15}));
  EXPECT_TRUE(reconstruct_cm({0.99, 0.10, 0.99, 0.10}, 15, 15).empty());
}

TEST(Metrics, ReconstructMatchesBruteForceOracle) {
  for (const auto& [key, row] : table3().rows) {
    std::vector<CM> expected;
    const Cents want{std::lround(row.accuracy * 100), std::lround(row.precision * 100),
                     std::lround(row.recall * 100), std::lround(row.f1 * 100)};
    for (long tp = 0; tp <= 15; ++tp)
      for (long fp = 0; fp <= 15; ++fp) {
        const CM cm{tp, fp, 15 - tp, 15 - fp};
        if (oracle(cm) == want) expected.push_back(cm);
      }
    EXPECT_EQ(reconstruct_cm(row, 15, 15), expected) << key.category << " " << key.model;
  }
}

TEST(Metrics, NanCellsMatchAnything) {
  const double nan = std::nan("");
  const auto all = reconstruct_cm({0.50, nan, nan, nan}, 15, 15);
  for (const auto& cm : all) EXPECT_EQ(cents(compute_metrics(cm)).acc, 50);
  EXPECT_EQ(all.size(), 16u);  // tp = fp
}

TEST(Metrics, ReconstructRejectsEmptyClasses) {
  EXPECT_THROW(reconstruct_cm({0.5, 0.5, 0.5, 0.5}, 0, 15), Error);
}

Rows accuracy_rows(Platform p, const std::vector<std::pair<std::string, double>>& accs,
                   const std::string& config = "baseline", const std::string& model = "DS") {
  Rows rows;
  for (const auto& [cat, a] : accs) rows[{p, cat, config, model}] = {a, 0, 0, 0};
  return rows;
}

std::string avg_cell(const std::string& csv, const std::string& platform,
                     const std::string& config = "baseline", const std::string& model = "DS") {
  const auto prefix = platform + ",Avg.," + config + "," + model + ",";
  for (const auto& line : text::split_lines(csv)) {
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size(), 4);
  }
  return "absent";
}

TEST(Metrics, SolanaAverageFromTableRows) {
  const auto rows = accuracy_rows(Platform::solana, {{"bump_seed", 0.80},
                                                     {"cpi_unchecked", 0.53},
                                                     {"integer_flow", 0.67},
                                                     {"missing_key_check", 0.57},
                                                     {"type_confusion", 0.60}});
  EXPECT_EQ(avg_cell(emit_table(rows, TableFormat::csv), "solana"), "0.63");
}

TEST(Metrics, AlgorandAverageFromTableRows) {
  Rows rows;
  for (const auto& [k, r] : table3().rows) {
    if (k.platform == Platform::algorand && k.model == "DS") rows[k] = r;
  }
  ASSERT_EQ(rows.size(), 8u);
  double sum = 0;
  for (const auto& [k, r] : rows) sum += r.accuracy;
  EXPECT_NEAR(sum / 8, 0.59625, 1e-9);
  EXPECT_EQ(avg_cell(emit_table(rows, TableFormat::csv), "algorand"), "0.60");
}

TEST(Metrics, TableThreeAveragesReproduce) {
  const auto avgs = platform_averages(table3().rows);
  ASSERT_EQ(table3().averages.size(), 4u);
  for (const auto& [g, stated] : table3().averages) {
    EXPECT_DOUBLE_EQ(round2(avgs.at(g)), stated) << g.model;
  }
  EXPECT_DOUBLE_EQ(table3().averages.at({Platform::solana, "baseline", "DS"}), 0.63);
  EXPECT_DOUBLE_EQ(table3().averages.at({Platform::solana, "baseline", "LM"}), 0.53);
  EXPECT_DOUBLE_EQ(table3().averages.at({Platform::algorand, "baseline", "DS"}), 0.60);
  EXPECT_DOUBLE_EQ(table3().averages.at({Platform::algorand, "baseline", "LM"}), 0.50);
}

TEST(Metrics, TableFourStatedAveragesPinned) {
  // Three Algorand averages in the published fine-tuning table do not equal
  // the mean of the rows printed above them.
  const auto avgs = platform_averages(table4().rows);
  std::set<std::pair<std::string, std::string>> mismatched;
  for (const auto& [g, stated] : table4().averages) {
    if (std::fabs(round2(avgs.at(g)) - stated) > 0.005) mismatched.insert({g.config, g.model});
  }
  EXPECT_EQ(mismatched, (std::set<std::pair<std::string, std::string>>{
                            {"FT", "DS"}, {"PE", "DS"}, {"PE+FT", "LM"}}));
}

TEST(Metrics, EmptyInputGivesHeaderOnly) {
  EXPECT_EQ(emit_table({}, TableFormat::csv), std::string(kCsvHeader) + "\n");
}

TEST(Metrics, TableIsStableUnderInsertionOrder) {
  const auto& rows = table3().rows;
  Rows reversed;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) reversed.insert(*it);
  EXPECT_EQ(emit_table(rows, TableFormat::csv), emit_table(reversed, TableFormat::csv));
}

TEST(Metrics, CsvListsSolanaFirstInReportOrder) {
  const auto lines = text::split_lines(emit_table(table3().rows, TableFormat::csv));
  ASSERT_GT(lines.size(), 2u);
  EXPECT_EQ(lines[1], "solana,bump_seed,baseline,DS,0.80,1.00,0.60,0.75");
  EXPECT_EQ(lines[2], "solana,cpi_unchecked,baseline,DS,0.53,0.60,0.20,0.30");
  EXPECT_EQ(lines[6], "solana,Avg.,baseline,DS,0.63,,,");
}

TEST(Metrics, CsvRoundTripsThroughReferenceParser) {
  const auto csv = emit_table(table3().rows, TableFormat::csv);
  const auto back = parse_reference(csv);
  EXPECT_TRUE(compare_with_reference(back.rows, table3()).empty());
}

TEST(Metrics, MarkdownLayout) {
  const auto md = emit_table(table3().rows, TableFormat::markdown);
  const auto lines = text::split_lines(md);
  EXPECT_EQ(lines[0],
            "| Blockchain | Vulnerability | Accuracy DS | Accuracy LM | Precision DS | Precision LM "
            "| F1-score DS | F1-score LM | Recall DS | Recall LM |");
  EXPECT_EQ(lines[2], "| Solana | Bump Seed | 0.80 | 0.60 | 1.00 | 1.00 | 0.75 | 0.33 | 0.60 | 0.20 |");
  EXPECT_NE(md.find("| Solana | **Avg.** | **0.63** | **0.53** |"), std::string::npos);
  const auto md4 = emit_table(table4().rows, TableFormat::markdown);
  EXPECT_EQ(md4.find("Precision"), std::string::npos);
}

TEST(Metrics, ParseTableFormat) {
  EXPECT_EQ(parse_table_format("csv"), TableFormat::csv);
  EXPECT_EQ(parse_table_format("md"), TableFormat::markdown);
  EXPECT_THROW(parse_table_format("xml"), Error);
}

TEST(Metrics, CompareIdenticalAndPerturbed) {
  EXPECT_TRUE(compare_with_reference(table3().rows, table3()).empty());
  auto rows = table3().rows;
  rows.at({Platform::solana, "integer_flow", "baseline", "DS"}).recall += 0.01;
  const auto diff = compare_with_reference(rows, table3());
  ASSERT_EQ(diff.size(), 1u);
  EXPECT_EQ(diff[0].category, "integer_flow");
  EXPECT_EQ(diff[0].column, "recall");
  EXPECT_EQ(diff[0].actual, "0.48");
  EXPECT_EQ(diff[0].expected, "0.47");
}

TEST(Metrics, CompareReportsMissingRowsAndAverages) {
  auto rows = table3().rows;
  rows.erase({Platform::algorand, "unchecked_rekey_to", "baseline", "LM"});
  const auto diff = compare_with_reference(rows, table3());
  ASSERT_FALSE(diff.empty());
  EXPECT_EQ(diff[0].category, "unchecked_rekey_to");
  EXPECT_EQ(diff[0].actual, "missing");
}

TEST(Metrics, CompareFlagsGroupAbsentFromReference) {
  Rows rows;
  rows[{Platform::solana, "bump_seed", "PE", "DS"}] = compute_metrics({9, 0, 6, 15});
  const auto diff = compare_with_reference(rows, table3());
  ASSERT_EQ(diff.size(), 1u);
  EXPECT_EQ(diff[0].column, "group");
}

TEST(Metrics, ReferenceErrorsCarryLine) {
  const std::string header = std::string(kCsvHeader) + "\n";
  auto line_of = [](const std::string& csv) {
    try {
      parse_reference(csv);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::malformed_reference);
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of(header + "solana,bump_seed,baseline,DS,0.8,1,0.6\n"), 2);
  EXPECT_EQ(line_of(header + "solana,nope,baseline,DS,0.8,1,0.6,0.75\n"), 2);
  EXPECT_EQ(line_of(header + "algorand,bump_seed,baseline,DS,0.8,1,0.6,0.75\n"), 2);
  EXPECT_EQ(line_of("# c\n" + header + "solana,bump_seed,baseline,DS,1.8,1,0.6,0.75\n"), 3);
  EXPECT_EQ(line_of("platform,category\n"), 1);
  EXPECT_EQ(line_of(""), 0);
}

TEST(Metrics, GroupByOwaspFineTuningV1) {
  Rows rows;
  for (const auto& [k, r] : table4().rows) {
    if (k.platform == Platform::algorand && k.config == "FT" && k.model == "DS") rows[k] = r;
  }
  const auto groups = group_by_owasp(rows);
  const auto it = std::find_if(groups.begin(), groups.end(),
                               [](const OwaspGroup& g) { return g.owasp_id.value == 1; });
  ASSERT_NE(it, groups.end());
  EXPECT_EQ(it->categories, 4);
  EXPECT_NEAR(it->mean_accuracy, (0.57 + 0.67 + 0.73 + 0.50) / 4, 1e-12);
  EXPECT_NEAR(it->mean_accuracy, 0.6175, 1e-12);
}

TEST(Metrics, SingleCategoryGroupEqualsItsAccuracy) {
  const auto rows = accuracy_rows(Platform::solana, {{"cpi_unchecked", 0.53}});
  const auto groups = group_by_owasp(rows);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].owasp_id.value, 5);
  EXPECT_DOUBLE_EQ(groups[0].mean_accuracy, 0.53);
}

TEST(Metrics, GroupByOwaspUnknownCategory) {
  Rows rows;
  rows[{Platform::solana, "reentrancy", "baseline", "DS"}] = {0.5, 0, 0, 0};
  try {
    group_by_owasp(rows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unknown_category);
  }
}

TEST(Metrics, OwaspReportFormats) {
  const auto groups = group_by_owasp(accuracy_rows(Platform::solana, {{"cpi_unchecked", 0.53}}));
  const auto csv = emit_owasp_report(groups, TableFormat::csv);
  EXPECT_NE(csv.find("solana,V5,baseline,DS,0.5300,1"), std::string::npos) << csv;
  const auto md = emit_owasp_report(groups, TableFormat::markdown);
  EXPECT_NE(md.find("| Solana | V5 | baseline | DS | 0.53 | 1 |"), std::string::npos) << md;
}

}  // namespace
}  // namespace vulnbench::metrics
