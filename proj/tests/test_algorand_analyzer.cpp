#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "vulnbench/algorand_analyzer.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/taxonomy.hpp"

namespace vulnbench {
namespace {

std::set<std::string> categories(const std::vector<Finding>& fs) {
  std::set<std::string> out;
  for (const auto& f : fs) out.insert(f.category);
  return out;
}

std::set<std::string> all_field_categories() {
  std::set<std::string> out;
  for (const auto& r : algorand::field_rules()) out.insert(std::string(r.category));
  return out;
}

// A payment escrow that guards every field except `skip`.
std::string escrow(const std::string& skip) {
  std::string src = "#pragma version 8\n";
  auto guard = [&](const std::string& field, const std::string& rhs, const std::string& op) {
    if (field == skip) return;
    src += "txn " + field + "\n" + rhs + "\n" + op + "\nassert\n";
  };
  guard("RekeyTo", "global ZeroAddress", "==");
  guard("CloseRemainderTo", "global ZeroAddress", "==");
  guard("AssetCloseTo", "global ZeroAddress", "==");
  guard("Receiver", "addr AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA", "==");
  guard("AssetReceiver", "addr AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA", "==");
  guard("Fee", "int 1000", "<=");
  src += "int 1\nreturn\n";
  return src;
}

TEST(AlgorandAnalyzer, FieldRuleTable) {
  std::map<std::string, std::string> got;
  for (const auto& r : algorand::field_rules()) got[std::string(r.category)] = std::string(r.field);
  EXPECT_EQ(got, (std::map<std::string, std::string>{
                     {"unchecked_rekey_to", "RekeyTo"},
                     {"unchecked_close_remainder_to", "CloseRemainderTo"},
                     {"unchecked_asset_close_to", "AssetCloseTo"},
                     {"unchecked_asset_receiver", "AssetReceiver"},
                     {"unchecked_payment_receiver", "Receiver"},
                     {"unchecked_transaction_fee", "Fee"}}));
}

TEST(AlgorandAnalyzer, FullyGuardedEscrowIsClean) {
  EXPECT_TRUE(algorand::analyze_source(escrow("")).empty());
}

TEST(AlgorandAnalyzer, EachMissingGuardRaisesExactlyItsRule) {
  for (const auto& r : algorand::field_rules()) {
    const auto fs = algorand::analyze_source(escrow(std::string(r.field)));
    EXPECT_EQ(categories(fs), std::set<std::string>{std::string(r.category)}) << r.field;
  }
}

TEST(AlgorandAnalyzer, RejectAllProgramsRaiseNothing) {
  EXPECT_TRUE(algorand::analyze_source("int 0\nreturn").empty());
  EXPECT_TRUE(algorand::analyze_source("err").empty());
  EXPECT_TRUE(algorand::analyze_source("txn Fee\nint 1\n>\nbnz bad\nint 0\nreturn\nbad:\nerr\n")
                  .empty());
}

TEST(AlgorandAnalyzer, ImplicitApprovalCounts) {
  // Falling off the end with a non-zero top of stack approves.
  const auto fs = algorand::analyze_source("int 1\n");
  EXPECT_EQ(categories(fs), all_field_categories());
}

TEST(AlgorandAnalyzer, FeeGuardNeedsAnUpperBound) {
  auto src = escrow("Fee");
  src.insert(src.find("int 1\nreturn"), "txn Fee\nint 0\n>=\nassert\n");
  EXPECT_EQ(categories(algorand::analyze_source(src)),
            std::set<std::string>{"unchecked_transaction_fee"});
  src = escrow("Fee");
  src.insert(src.find("int 1\nreturn"), "txn Fee\nint 2000\n<\nassert\n");
  EXPECT_TRUE(algorand::analyze_source(src).empty());
}

TEST(AlgorandAnalyzer, RejectBranchCountsAsGuard) {
  auto src = escrow("RekeyTo");
  src.insert(src.find("int 1\nreturn"),
             "txn RekeyTo\nglobal ZeroAddress\n!=\nbnz reject\n");
  src += "reject:\nint 0\nreturn\n";
  EXPECT_TRUE(algorand::analyze_source(src).empty());
}

TEST(AlgorandAnalyzer, GuardOnOnlyOnePathIsNotEnough) {
  auto src = escrow("RekeyTo");
  src.insert(src.find("int 1\nreturn"),
             "global GroupSize\nint 2\n==\nbnz skip\ntxn RekeyTo\nglobal ZeroAddress\n==\n"
             "assert\nskip:\n");
  EXPECT_EQ(categories(algorand::analyze_source(src)),
            std::set<std::string>{"unchecked_rekey_to"});
}

TEST(AlgorandAnalyzer, GroupTransactionReadsAreGuards) {
  auto src = escrow("RekeyTo");
  src.insert(src.find("int 1\nreturn"), "gtxn 0 RekeyTo\nglobal ZeroAddress\n==\nassert\n");
  EXPECT_TRUE(algorand::analyze_source(src).empty());
}

std::string app(bool guard_update, bool guard_delete) {
  std::string src = escrow("");
  src.resize(src.find("int 1\nreturn"));
  src +=
      "txn OnCompletion\nint UpdateApplication\n==\nbnz on_update\n"
      "txn OnCompletion\nint DeleteApplication\n==\nbnz on_delete\n"
      "int 1\nreturn\n"
      "on_update:\n";
  if (guard_update) src += "txn Sender\nglobal CreatorAddress\n==\nassert\n";
  src += "int 1\nreturn\non_delete:\n";
  if (guard_delete) src += "txn Sender\nglobal CreatorAddress\n==\nreturn\n";
  else src += "int 1\nreturn\n";
  return src;
}

TEST(AlgorandAnalyzer, ApplicationLifecycleRules) {
  EXPECT_TRUE(algorand::analyze_source(app(true, true)).empty());
  EXPECT_EQ(categories(algorand::analyze_source(app(false, true))),
            std::set<std::string>{"arbitrary_update"});
  EXPECT_EQ(categories(algorand::analyze_source(app(true, false))),
            std::set<std::string>{"arbitrary_delete"});
  EXPECT_EQ(categories(algorand::analyze_source(app(false, false))),
            (std::set<std::string>{"arbitrary_update", "arbitrary_delete"}));
}

TEST(AlgorandAnalyzer, FindingsAreSortedAndDeduplicated) {
  const auto fs = algorand::analyze_source("int 1\nreturn\n");
  for (std::size_t i = 1; i < fs.size(); ++i) {
    EXPECT_LE(std::tie(fs[i - 1].line_start, fs[i - 1].category),
              std::tie(fs[i].line_start, fs[i].category));
  }
  EXPECT_EQ(categories(fs).size(), fs.size());
  for (const auto& f : fs) {
    EXPECT_EQ(Taxonomy::builtin().at(f.category).platform, Platform::algorand);
    EXPECT_GE(f.line_start, 1);
    EXPECT_LE(f.line_end, 2);
  }
}

class AlgorandCorpus : public ::testing::Test {
 protected:
  static const CorpusManifest& manifest() {
    static const auto m = corpus::generate(42, 5);
    return m;
  }
};

TEST_F(AlgorandCorpus, VulnerableSamplesRaiseExactlyTheirCategory) {
  for (const auto& s : manifest().samples) {
    if (s.platform != Platform::algorand) continue;
    const auto fs = algorand::analyze_source(s.renderings.at(std::string(kAnalysisSource)));
    if (s.label == Label::vulnerable) {
      EXPECT_EQ(categories(fs), std::set<std::string>{s.category}) << s.id;
      EXPECT_EQ(fs.size(), 1u) << s.id;
    } else {
      EXPECT_TRUE(fs.empty()) << s.id;
    }
  }
}

TEST_F(AlgorandCorpus, RekeyPairExamples) {
  const auto* vuln = manifest().find("unchecked_rekey_to.vulnerable.01");
  const auto* safe = manifest().find("unchecked_rekey_to.safe.01");
  ASSERT_TRUE(vuln && safe);
  const auto& safe_text = safe->renderings.at(std::string(kAnalysisSource));
  const auto& vuln_text = vuln->renderings.at(std::string(kAnalysisSource));
  EXPECT_NE(safe_text.find("RekeyTo"), std::string::npos);
  EXPECT_EQ(vuln_text.find("RekeyTo"), std::string::npos);
}

}  // namespace
}  // namespace vulnbench
