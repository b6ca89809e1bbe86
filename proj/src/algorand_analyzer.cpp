#include "vulnbench/algorand_analyzer.hpp"

#include <algorithm>
#include <optional>

#include "vulnbench/teal.hpp"

namespace vulnbench::algorand {
namespace {

using teal::Instruction;
using teal::Program;

struct Value {
  enum class Kind { unknown, constant, field, ref, cond };
  Kind kind = Kind::unknown;
  std::uint64_t n = 0;
  std::string field;
  RefKind ref = RefKind::other;
  std::vector<Fact> when_true;
  std::vector<Fact> when_false;

  bool is_zero() const { return kind == Kind::constant && n == 0; }
  bool is_const() const { return kind == Kind::constant; }
};

Value constant(std::uint64_t n) {
  Value v;
  v.kind = Value::Kind::constant;
  v.n = n;
  return v;
}

enum class Exit { fallthrough, jump, cond_branch, ret, err, end };

struct BlockSummary {
  std::vector<Fact> asserted;
  bool rejects = false;
  Exit exit = Exit::end;
  Value cond;
  bool branch_if_nonzero = true;
  std::size_t exit_instruction = 0;
  bool empty_stack_at_exit = false;
};

std::vector<Fact> concat(std::vector<Fact> a, const std::vector<Fact>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<Fact> intersect(const std::vector<Fact>& a, const std::vector<Fact>& b) {
  std::vector<Fact> out;
  for (const auto& f : a) {
    if (std::any_of(b.begin(), b.end(), [&](const Fact& g) { return f.same_constraint(g); })) {
      out.push_back(f);
    }
  }
  return out;
}

std::optional<std::pair<RefKind, std::uint64_t>> reference_of(const Value& v) {
  if (v.kind == Value::Kind::ref) return std::pair{v.ref, std::uint64_t{0}};
  if (v.kind == Value::Kind::constant) return std::pair{RefKind::int_const, v.n};
  return std::nullopt;
}

std::string mirror(const std::string& op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  if (op == ">=") return "<=";
  return op;
}

Value compare(const std::string& op, const Value& lhs, const Value& rhs, std::size_t at) {
  if (lhs.is_const() && rhs.is_const()) {
    const auto a = lhs.n, b = rhs.n;
    bool r = false;
    if (op == "==") r = a == b;
    else if (op == "!=") r = a != b;
    else if (op == "<") r = a < b;
    else if (op == "<=") r = a <= b;
    else if (op == ">") r = a > b;
    else if (op == ">=") r = a >= b;
    return constant(r ? 1 : 0);
  }
  Value out;
  out.kind = Value::Kind::cond;
  const Value* field = nullptr;
  std::optional<std::pair<RefKind, std::uint64_t>> ref;
  std::string norm = op;
  if (lhs.kind == Value::Kind::field && (ref = reference_of(rhs))) {
    field = &lhs;
  } else if (rhs.kind == Value::Kind::field && (ref = reference_of(lhs))) {
    field = &rhs;
    norm = mirror(op);
  }
  if (!field) return out;
  auto fact = [&](Relation rel) {
    return Fact{field->field, rel, ref->first, ref->second, at};
  };
  if (norm == "==") {
    out.when_true = {fact(Relation::eq)};
    out.when_false = {fact(Relation::ne)};
  } else if (norm == "!=") {
    out.when_true = {fact(Relation::ne)};
    out.when_false = {fact(Relation::eq)};
  } else if (norm == "<" || norm == "<=") {
    out.when_true = {fact(Relation::upper_bound)};
    out.when_false = {fact(Relation::lower_bound)};
  } else {
    out.when_true = {fact(Relation::lower_bound)};
    out.when_false = {fact(Relation::upper_bound)};
  }
  return out;
}

Value push_operand(const Instruction& ins) {
  Value v;
  const auto& op = ins.opcode;
  if (op == "int") {
    std::uint64_t n = 0;
    unsigned long long parsed = 0;
    if (teal::named_int_constant(ins.immediates[0], parsed)) {
      n = parsed;
    } else {
      const auto& lit = ins.immediates[0];
      const bool hex = lit.size() > 2 && lit[0] == '0' && (lit[1] == 'x' || lit[1] == 'X');
      n = std::stoull(lit, nullptr, hex ? 16 : 10);
    }
    return constant(n);
  }
  if (op == "byte") {
    v.kind = Value::Kind::ref;
    v.ref = RefKind::byte_const;
  } else if (op == "addr") {
    v.kind = Value::Kind::ref;
    v.ref = RefKind::addr_const;
  } else if (op == "txn") {
    v.kind = Value::Kind::field;
    v.field = ins.immediates[0];
  } else if (op == "gtxn") {
    v.kind = Value::Kind::field;
    v.field = ins.immediates[1];
  } else if (op == "global") {
    v.kind = Value::Kind::ref;
    const auto& g = ins.immediates[0];
    v.ref = g == "ZeroAddress"      ? RefKind::zero_address
            : g == "CreatorAddress" ? RefKind::creator_address
                                    : RefKind::other;
  }
  return v;
}

bool is_comparison(const std::string& op) {
  return op == "==" || op == "!=" || op == "<" || op == "<=" || op == ">" || op == ">=";
}

BlockSummary summarize(const Program& prog, std::size_t block_index) {
  const auto& blk = prog.blocks[block_index];
  BlockSummary s;
  std::vector<Value> stack;
  auto pop = [&]() {
    if (stack.empty()) return Value{};
    Value v = std::move(stack.back());
    stack.pop_back();
    return v;
  };
  s.exit_instruction = blk.empty() ? (blk.begin == 0 ? 0 : blk.begin - 1) : blk.end - 1;
  for (std::size_t i = blk.begin; i < blk.end; ++i) {
    const auto& ins = prog.instructions[i];
    const auto& op = ins.opcode;
    if (op == "int" || op == "byte" || op == "addr" || op == "txn" || op == "gtxn" || op == "global") {
      stack.push_back(push_operand(ins));
    } else if (is_comparison(op)) {
      const Value rhs = pop();
      const Value lhs = pop();
      stack.push_back(compare(op, lhs, rhs, i));
    } else if (op == "&&" || op == "||") {
      const Value rhs = pop();
      const Value lhs = pop();
      if (lhs.is_const() && rhs.is_const()) {
        const bool r = op == "&&" ? (lhs.n && rhs.n) : (lhs.n || rhs.n);
        stack.push_back(constant(r));
        continue;
      }
      Value v;
      v.kind = Value::Kind::cond;
      if (op == "&&") {
        v.when_true = concat(lhs.when_true, rhs.when_true);
        v.when_false = intersect(lhs.when_false, rhs.when_false);
      } else {
        v.when_true = intersect(lhs.when_true, rhs.when_true);
        v.when_false = concat(lhs.when_false, rhs.when_false);
      }
      stack.push_back(std::move(v));
    } else if (op == "!") {
      Value v = pop();
      if (v.is_const()) {
        stack.push_back(constant(v.n == 0));
        continue;
      }
      Value out;
      out.kind = Value::Kind::cond;
      out.when_true = v.when_false;
      out.when_false = v.when_true;
      stack.push_back(std::move(out));
    } else if (op == "+" || op == "-" || op == "*" || op == "/") {
      pop();
      pop();
      stack.emplace_back();
    } else if (op == "dup") {
      Value v = pop();
      stack.push_back(v);
      stack.push_back(std::move(v));
    } else if (op == "pop") {
      pop();
    } else if (op == "app_global_get") {
      pop();
      stack.emplace_back();
    } else if (op == "app_global_put") {
      pop();
      pop();
    } else if (op == "assert") {
      const Value v = pop();
      if (v.is_zero()) {
        s.rejects = true;
        return s;
      }
      s.asserted.insert(s.asserted.end(), v.when_true.begin(), v.when_true.end());
    } else if (op == "err") {
      s.exit = Exit::err;
      return s;
    } else if (op == "return") {
      s.exit = Exit::ret;
      s.cond = pop();
      return s;
    } else if (op == "b") {
      s.exit = Exit::jump;
      return s;
    } else if (op == "bz" || op == "bnz") {
      s.exit = Exit::cond_branch;
      s.branch_if_nonzero = op == "bnz";
      s.cond = pop();
      return s;
    }
  }
  s.exit = prog.successors(block_index).empty() ? Exit::end : Exit::fallthrough;
  s.empty_stack_at_exit = stack.empty();
  if (!stack.empty()) s.cond = stack.back();
  return s;
}

class PathWalker {
 public:
  PathWalker(const Program& prog, std::size_t limit) : prog_(prog), limit_(limit) {
    for (std::size_t b = 0; b < prog.blocks.size(); ++b) summaries_.push_back(summarize(prog, b));
    on_path_.assign(prog.blocks.size(), false);
  }

  std::vector<ApprovingPath> run() {
    if (!prog_.instructions.empty() && !prog_.blocks.empty()) walk(0, {});
    return std::move(paths_);
  }

 private:
  static constexpr std::size_t kMaxSteps = 200000;

  void walk(std::size_t block, std::vector<Fact> facts) {
    if (paths_.size() >= limit_ || ++steps_ > kMaxSteps || on_path_[block]) return;
    const auto& s = summaries_[block];
    if (s.rejects) return;
    on_path_[block] = true;
    blocks_.push_back(block);
    facts.insert(facts.end(), s.asserted.begin(), s.asserted.end());
    switch (s.exit) {
      case Exit::err:
        break;
      case Exit::ret:
      case Exit::end:
        // Falling off the entry block with nothing pushed leaves an empty stack.
        if (s.exit == Exit::end && s.empty_stack_at_exit && block == 0) break;
        if (!s.cond.is_zero()) {
          paths_.push_back({blocks_, s.exit_instruction, concat(facts, s.cond.when_true)});
        }
        break;
      case Exit::jump:
      case Exit::fallthrough:
        for (const auto* e : prog_.successors(block)) walk(e->to, facts);
        break;
      case Exit::cond_branch:
        for (const auto* e : prog_.successors(block)) {
          const bool taken = e->kind == teal::EdgeKind::branch;
          const bool nonzero = taken == s.branch_if_nonzero;
          if (s.cond.is_const() && (s.cond.n != 0) != nonzero) continue;
          walk(e->to, concat(facts, nonzero ? s.cond.when_true : s.cond.when_false));
        }
        break;
    }
    blocks_.pop_back();
    on_path_[block] = false;
  }

  const Program& prog_;
  std::size_t limit_;
  std::vector<BlockSummary> summaries_;
  std::vector<bool> on_path_;
  std::vector<std::size_t> blocks_;
  std::vector<ApprovingPath> paths_;
  std::size_t steps_ = 0;
};

bool address_like(RefKind r) {
  return r == RefKind::zero_address || r == RefKind::creator_address ||
         r == RefKind::addr_const || r == RefKind::int_const;
}

const Fact* on_completion_fact(const std::vector<Fact>& facts, std::uint64_t action) {
  for (const auto& f : facts) {
    if (f.field == "OnCompletion" && f.relation == Relation::eq && f.ref == RefKind::int_const &&
        f.value == action) {
      return &f;
    }
  }
  return nullptr;
}

}  // namespace

bool Fact::same_constraint(const Fact& o) const {
  return field == o.field && relation == o.relation && ref == o.ref && value == o.value;
}

const std::vector<FieldRule>& field_rules() {
  static const std::vector<FieldRule> kRules{
      {"unchecked_rekey_to", "RekeyTo"},
      {"unchecked_close_remainder_to", "CloseRemainderTo"},
      {"unchecked_asset_close_to", "AssetCloseTo"},
      {"unchecked_asset_receiver", "AssetReceiver"},
      {"unchecked_payment_receiver", "Receiver"},
      {"unchecked_transaction_fee", "Fee"},
  };
  return kRules;
}

std::vector<ApprovingPath> approving_paths(const Program& program, std::size_t limit) {
  return PathWalker(program, limit).run();
}

bool has_field_guard(const std::vector<Fact>& facts, std::string_view field) {
  return std::any_of(facts.begin(), facts.end(), [&](const Fact& f) {
    if (f.field != field) return false;
    if (field == "Fee") return f.relation == Relation::upper_bound && f.ref == RefKind::int_const;
    return f.relation == Relation::eq && address_like(f.ref);
  });
}

bool has_sender_guard(const std::vector<Fact>& facts) {
  return std::any_of(facts.begin(), facts.end(), [](const Fact& f) {
    return f.field == "Sender" && f.relation == Relation::eq &&
           (f.ref == RefKind::creator_address || f.ref == RefKind::addr_const);
  });
}

std::vector<Finding> analyze(const Program& program) {
  std::vector<Finding> findings;
  const auto paths = approving_paths(program);
  if (paths.empty()) return findings;
  const int first_line = program.instructions.front().line;
  auto line_of = [&](std::size_t i) {
    return program.instructions[std::min(i, program.instructions.size() - 1)].line;
  };

  for (const auto& rule : field_rules()) {
    for (const auto& path : paths) {
      if (has_field_guard(path.facts, rule.field)) continue;
      const int approve_line = line_of(path.approval_instruction);
      findings.push_back({std::string(rule.category), first_line, approve_line,
                          std::string(rule.field) +
                              " is not constrained on the path approved at line " +
                              std::to_string(approve_line),
                          {static_cast<int>(path.approval_instruction)}});
      break;
    }
  }

  struct AppRule {
    std::string_view category;
    std::uint64_t action;
    std::string_view action_name;
  };
  for (const AppRule rule : {AppRule{"arbitrary_update", 4, "UpdateApplication"},
                             AppRule{"arbitrary_delete", 5, "DeleteApplication"}}) {
    for (const auto& path : paths) {
      const Fact* oc = on_completion_fact(path.facts, rule.action);
      if (!oc || has_sender_guard(path.facts)) continue;
      const int approve_line = line_of(path.approval_instruction);
      findings.push_back({std::string(rule.category), line_of(oc->instruction), approve_line,
                          std::string(rule.action_name) +
                              " is approved without a Sender check (approval at line " +
                              std::to_string(approve_line) + ")",
                          {static_cast<int>(oc->instruction),
                           static_cast<int>(path.approval_instruction)}});
      break;
    }
  }
  sort_findings(findings);
  return findings;
}

std::vector<Finding> analyze_source(std::string_view teal_source) {
  return analyze(teal::load(teal_source));
}

}  // namespace vulnbench::algorand
