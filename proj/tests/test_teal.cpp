#include <algorithm>

#include <gtest/gtest.h>

#include "vulnbench/algorand_analyzer.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/error.hpp"
#include "vulnbench/teal.hpp"

namespace vulnbench {
namespace {

ErrorKind kind_of(std::string_view src, int* line = nullptr) {
  try {
    teal::load(src);
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  ADD_FAILURE() << "no error for:\n" << src;
  return ErrorKind::io;
}

const Sample& corpus_sample(const std::string& id) {
  static const auto manifest = corpus::generate(42, 5);
  const auto* s = manifest.find(id);
  if (!s) throw std::runtime_error("missing " + id);
  return *s;
}

std::string analysis(const std::string& id) {
  return corpus_sample(id).renderings.at(std::string(kAnalysisSource));
}

TEST(Teal, MinimalApproveProgram) {
  const auto p = teal::load("int 1\nreturn");
  EXPECT_EQ(p.instructions.size(), 2u);
  EXPECT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.version, 1);
  EXPECT_TRUE(p.edges.empty());
}

TEST(Teal, PragmaSetsVersionAndCommentsAreStripped) {
  const auto p = teal::load("#pragma version 8\n// header\nint 1 // approve\nreturn\n");
  EXPECT_EQ(p.version, 8);
  ASSERT_EQ(p.instructions.size(), 2u);
  EXPECT_EQ(p.instructions[0].opcode, "int");
  EXPECT_EQ(p.instructions[0].immediates, std::vector<std::string>{"1"});
  EXPECT_EQ(p.instructions[0].line, 3);
}

TEST(Teal, StraightLineIsOneBlockWithoutEdges) {
  const auto p = teal::load("txn Fee\nint 1000\n<=\nassert\nint 1\nreturn\n");
  EXPECT_EQ(p.blocks.size(), 1u);
  EXPECT_TRUE(p.edges.empty());
}

TEST(Teal, ConditionalBranchHasTakenAndNotTakenEdges) {
  const auto p = teal::load("int 1\nbnz ok\nerr\nok:\nint 1\nreturn\n");
  ASSERT_EQ(p.blocks.size(), 3u);
  const auto succ = p.successors(0);
  ASSERT_EQ(succ.size(), 2u);
  std::vector<teal::EdgeKind> kinds{succ[0]->kind, succ[1]->kind};
  std::sort(kinds.begin(), kinds.end());
  EXPECT_EQ(kinds, (std::vector<teal::EdgeKind>{teal::EdgeKind::branch,
                                               teal::EdgeKind::branch_not_taken}));
  EXPECT_EQ(p.labels.at("ok"), 3u);
}

TEST(Teal, UnconditionalBranchAndTerminators) {
  const auto p = teal::load("b end\nint 0\nreturn\nend:\nint 1\nreturn\n");
  const auto succ = p.successors(p.block_of(0));
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0]->kind, teal::EdgeKind::branch);
  EXPECT_TRUE(p.successors(p.block_of(2)).empty());
}

TEST(Teal, BlocksPartitionInstructions) {
  const auto p = teal::load(analysis("arbitrary_update.vulnerable.01"));
  std::size_t covered = 0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (b > 0) {
      EXPECT_EQ(p.blocks[b].begin, p.blocks[b - 1].end);
    }
    covered += p.blocks[b].end - p.blocks[b].begin;
  }
  EXPECT_EQ(covered, p.instructions.size());
}

TEST(Teal, ArbitraryUpdateSampleDispatchesOnCompletion) {
  const auto p = teal::load(analysis("arbitrary_update.vulnerable.01"));
  EXPECT_GE(p.blocks.size(), 2u);
  EXPECT_FALSE(p.edges.empty());
}

TEST(Teal, UndefinedBranchTarget) {
  int line = 0;
  EXPECT_EQ(kind_of("int 1\nbnz lbl\nint 1\nreturn", &line), ErrorKind::undefined_branch_target);
  EXPECT_EQ(line, 2);
}

TEST(Teal, ErrorClasses) {
  int line = 0;
  EXPECT_EQ(kind_of("int 1\ncallsub foo\n", &line), ErrorKind::unknown_opcode);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(kind_of("int\n"), ErrorKind::malformed_immediate);
  EXPECT_EQ(kind_of("int abc\n"), ErrorKind::malformed_immediate);
  EXPECT_EQ(kind_of("txn NotAField\n"), ErrorKind::malformed_immediate);
  EXPECT_EQ(kind_of("a:\nint 1\na:\nreturn\n", &line), ErrorKind::duplicate_label);
  EXPECT_EQ(line, 3);
  EXPECT_EQ(kind_of("#pragma version x\n"), ErrorKind::malformed_immediate);
}

TEST(Teal, HexAndDecimalIntegers) {
  const auto p = teal::load("int 0x10\nint 010\n+\nreturn\n");
  EXPECT_EQ(p.instructions[0].immediates[0], "0x10");
  EXPECT_NO_THROW(teal::load("int 18446744073709551615\nreturn\n"));
  EXPECT_EQ(kind_of("int 18446744073709551616\nreturn\n"), ErrorKind::malformed_immediate);
}

TEST(Teal, PrintParseFixpointOnSample) {
  const auto p = teal::load(analysis("unchecked_rekey_to.safe.03"));
  const auto q = teal::load(teal::print(p));
  ASSERT_EQ(p.instructions.size(), q.instructions.size());
  for (std::size_t i = 0; i < p.instructions.size(); ++i) {
    EXPECT_TRUE(teal::same_code(p.instructions[i], q.instructions[i])) << i;
  }
  EXPECT_EQ(p.labels, q.labels);
  EXPECT_EQ(teal::print(p), teal::print(q));
}

TEST(Teal, SafeDeleteApprovalsPassSenderGuard) {
  for (int i = 1; i <= 5; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "arbitrary_delete.safe.%02d", i);
    const auto p = teal::load(analysis(id));
    int delete_paths = 0;
    for (const auto& path : algorand::approving_paths(p)) {
      const bool is_delete = std::any_of(path.facts.begin(), path.facts.end(), [](auto& f) {
        return f.field == "OnCompletion" && f.relation == algorand::Relation::eq &&
               f.ref == algorand::RefKind::int_const && f.value == 5;
      });
      if (!is_delete) continue;
      ++delete_paths;
      EXPECT_TRUE(algorand::has_sender_guard(path.facts)) << id;
    }
    EXPECT_GT(delete_paths, 0) << id;
  }
}

TEST(Teal, NamedIntegerConstants) {
  unsigned long long v = 0;
  ASSERT_TRUE(teal::named_int_constant("DeleteApplication", v));
  EXPECT_EQ(v, 5u);
  ASSERT_TRUE(teal::named_int_constant("UpdateApplication", v));
  EXPECT_EQ(v, 4u);
  ASSERT_TRUE(teal::named_int_constant("axfer", v));
  EXPECT_EQ(v, 4u);
  EXPECT_FALSE(teal::named_int_constant("Nope", v));
}

}  // namespace
}  // namespace vulnbench
