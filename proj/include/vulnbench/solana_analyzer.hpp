#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/finding.hpp"

namespace vulnbench::solana {

enum class UseKind {
  signer_test,
  owner_test,
  key_compare,
  data_deserialize,
  lamport_arith,
  cpi_call,
  pda_derive,
};

std::string_view to_string(UseKind kind);

// Lines are 1-based, spans inclusive.
struct Function {
  std::string name;
  int line_start = 0;
  int line_end = 0;
};

struct AccountUse {
  std::string identifier;
  UseKind kind = UseKind::signer_test;
  int line = 0;
  int function = -1;  // index into SourceModel::functions, -1 at file scope
};

// Facts that suppress a rule rather than trigger one.
enum class GuardKind {
  account_binding,    // identifier bound from the accounts list
  mutation,           // account data or lamports written
  discriminator,      // tag / discriminator comparison
  bound_check,        // ordering comparison on a balance value
  checked_arith,      // checked_* / saturating_* call
  canonical_derive,   // find_program_address
  stored_bump_check,  // comparison against a stored `.bump`
};

struct Guard {
  GuardKind kind = GuardKind::mutation;
  std::string identifier;
  int line = 0;
  int function = -1;
};

struct SourceModel {
  std::vector<Function> functions;
  std::vector<AccountUse> account_uses;
  std::vector<Guard> guards;
  std::string text;
};

// Names a balance-typed integer is recognized by.
const std::vector<std::string_view>& balance_name_patterns();
// Account identifiers treated as authorities.
const std::vector<std::string_view>& authority_name_patterns();

// Throws unbalanced_braces naming the first mismatched line.
SourceModel scan_source(std::string_view text);

std::vector<Finding> analyze(const SourceModel& model);
std::vector<Finding> analyze_source(std::string_view text);

}  // namespace vulnbench::solana
