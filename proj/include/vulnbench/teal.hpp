#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Parser and control-flow graph for the subset of TEAL assembly the
// analyzer understands. Subroutines, loops and scratch space are out of
// scope; unknown opcodes are rejected.
namespace vulnbench::teal {

struct Instruction {
  std::string opcode;
  std::vector<std::string> immediates;
  int line = 0;
};

// Equal opcode and immediates, ignoring source position.
bool same_code(const Instruction& a, const Instruction& b);

enum class EdgeKind { fallthrough, branch, branch_not_taken };

std::string_view to_string(EdgeKind kind);

// Instructions [begin, end). A label that points past the last instruction
// gets an empty block so branches to it have a target.
struct BasicBlock {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const { return begin == end; }
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  EdgeKind kind = EdgeKind::fallthrough;

  bool operator==(const Edge&) const = default;
};

struct Program {
  int version = 1;
  std::vector<Instruction> instructions;
  // Label name -> index of the instruction that follows it.
  std::map<std::string, std::size_t> labels;
  std::vector<BasicBlock> blocks;
  std::vector<Edge> edges;
  int line_count = 0;

  std::size_t block_of(std::size_t instruction) const;
  std::size_t block_starting_at(std::size_t instruction) const;
  std::vector<const Edge*> successors(std::size_t block) const;
};

// Strips `//` comments, records labels and the `#pragma version` (default 1).
// Throws Error with unknown_opcode, malformed_immediate, duplicate_label or
// undefined_branch_target, each carrying the offending line.
Program parse_teal(std::string_view source);

// Splits into basic blocks at labels and after b/bz/bnz/return/err.
void build_cfg(Program& program);

// parse_teal followed by build_cfg.
Program load(std::string_view source);

// Canonical assembly text; parse_teal(print(p)) has the same instruction list.
std::string print(const Program& program);

bool is_branch(std::string_view opcode);
bool is_terminator(std::string_view opcode);

// Values of named integer constants (`int pay`, `int UpdateApplication`).
bool named_int_constant(std::string_view name, unsigned long long& value);

}  // namespace vulnbench::teal
