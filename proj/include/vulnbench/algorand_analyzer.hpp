#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/finding.hpp"
#include "vulnbench/teal.hpp"

namespace vulnbench::algorand {

// What a comparison is made against.
enum class RefKind { zero_address, creator_address, addr_const, int_const, byte_const, other };

enum class Relation { eq, ne, upper_bound, lower_bound };

// A constraint on a transaction field known to hold along a path, e.g.
// "RekeyTo == global ZeroAddress" or "Fee <= 1000".
struct Fact {
  std::string field;
  Relation relation = Relation::eq;
  RefKind ref = RefKind::other;
  std::uint64_t value = 0;  // for int_const
  std::size_t instruction = 0;

  bool same_constraint(const Fact& other) const;
};

struct ApprovingPath {
  std::vector<std::size_t> blocks;
  std::size_t approval_instruction = 0;
  std::vector<Fact> facts;
};

// Paths from the entry block that can end in approval: a `return` or the end
// of the program whose top-of-stack is not the constant 0. Each block is
// visited at most once per path; enumeration stops after `limit` paths.
std::vector<ApprovingPath> approving_paths(const teal::Program& program,
                                           std::size_t limit = 4096);

bool has_field_guard(const std::vector<Fact>& facts, std::string_view field);
bool has_sender_guard(const std::vector<Fact>& facts);

// Runs all eight rules over a program whose CFG is built. Findings are sorted
// by (line, category) with at most one per category.
std::vector<Finding> analyze(const teal::Program& program);
std::vector<Finding> analyze_source(std::string_view teal_source);

// The transaction field each field-rule category inspects.
struct FieldRule {
  std::string_view category;
  std::string_view field;
};
const std::vector<FieldRule>& field_rules();

}  // namespace vulnbench::algorand
