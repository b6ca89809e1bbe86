#include "vulnbench/teal.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <unordered_map>

#include "vulnbench/error.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::teal {
namespace {

enum class Imm { none, integer, bytes, address, txn_field, gtxn, global_field, label };

const std::unordered_map<std::string_view, Imm>& opcode_table() {
  static const std::unordered_map<std::string_view, Imm> kTable{
      {"int", Imm::integer},        {"byte", Imm::bytes},
      {"addr", Imm::address},       {"txn", Imm::txn_field},
      {"gtxn", Imm::gtxn},          {"global", Imm::global_field},
      {"==", Imm::none},            {"!=", Imm::none},
      {"<", Imm::none},             {"<=", Imm::none},
      {">", Imm::none},             {">=", Imm::none},
      {"&&", Imm::none},            {"||", Imm::none},
      {"!", Imm::none},             {"+", Imm::none},
      {"-", Imm::none},             {"*", Imm::none},
      {"/", Imm::none},             {"dup", Imm::none},
      {"pop", Imm::none},           {"assert", Imm::none},
      {"err", Imm::none},           {"return", Imm::none},
      {"b", Imm::label},            {"bz", Imm::label},
      {"bnz", Imm::label},          {"app_global_put", Imm::none},
      {"app_global_get", Imm::none},
  };
  return kTable;
}

const std::set<std::string_view>& txn_fields() {
  static const std::set<std::string_view> kFields{
      "Sender", "Fee", "FirstValid", "FirstValidTime", "LastValid", "Note", "Lease",
      "Receiver", "Amount", "CloseRemainderTo", "VotePK", "SelectionPK", "VoteFirst",
      "VoteLast", "VoteKeyDilution", "Type", "TypeEnum", "XferAsset", "AssetAmount",
      "AssetSender", "AssetReceiver", "AssetCloseTo", "GroupIndex", "TxID",
      "ApplicationID", "OnCompletion", "NumAppArgs", "NumAccounts", "ApprovalProgram",
      "ClearStateProgram", "RekeyTo", "ConfigAsset", "ConfigAssetTotal",
      "ConfigAssetDecimals", "ConfigAssetDefaultFrozen", "ConfigAssetUnitName",
      "ConfigAssetName", "ConfigAssetURL", "ConfigAssetMetadataHash", "ConfigAssetManager",
      "ConfigAssetReserve", "ConfigAssetFreeze", "ConfigAssetClawback", "FreezeAsset",
      "FreezeAssetAccount", "FreezeAssetFrozen", "NumAssets", "NumApplications",
      "GlobalNumUint", "GlobalNumByteSlice", "LocalNumUint", "LocalNumByteSlice",
      "ExtraProgramPages", "Nonparticipation"};
  return kFields;
}

// Array fields take an index immediate after the field name.
const std::set<std::string_view>& txn_array_fields() {
  static const std::set<std::string_view> kFields{"ApplicationArgs", "Accounts", "Assets",
                                                  "Applications"};
  return kFields;
}

const std::set<std::string_view>& global_fields() {
  static const std::set<std::string_view> kFields{
      "MinTxnFee", "MinBalance", "MaxTxnLife", "ZeroAddress", "GroupSize",
      "LogicSigVersion", "Round", "LatestTimestamp", "CurrentApplicationID",
      "CreatorAddress", "CurrentApplicationAddress", "GroupID", "OpcodeBudget",
      "CallerApplicationID", "CallerApplicationAddress"};
  return kFields;
}

bool parse_uint(std::string_view s, unsigned long long& value) {
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty() || s.front() == '-' || s.front() == '+') return false;
  unsigned long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || end != s.data() + s.size()) return false;
  value = v;
  return true;
}

bool is_label_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return text::is_word_char(c); });
}

bool is_address(std::string_view s) {
  return s.size() == 58 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= 'A' && c <= 'Z') || (c >= '2' && c <= '7');
         });
}

bool is_byte_literal(const std::vector<std::string>& imm) {
  if (imm.size() == 1) {
    const auto& v = imm[0];
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return true;
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
      return std::all_of(v.begin() + 2, v.end(),
                         [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
    }
    return false;
  }
  if (imm.size() == 2) {
    static const std::set<std::string_view> kEncodings{"base64", "b64", "base32", "b32"};
    return kEncodings.contains(imm[0]) && !imm[1].empty();
  }
  return false;
}

// Removes a trailing `//` comment that is not inside a string literal.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::vector<std::string> tokenize(std::string_view line, int line_no) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (line[i] == '"') {
      ++i;
      while (i < line.size() && line[i] != '"') {
        if (line[i] == '\\') ++i;
        ++i;
      }
      if (i >= line.size()) throw Error(ErrorKind::malformed_immediate, "unterminated string", line_no);
      ++i;
    } else {
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    }
    tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

void check_immediates(const Instruction& ins, Imm kind) {
  const auto& imm = ins.immediates;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::malformed_immediate, ins.opcode + ": " + why, ins.line);
  };
  unsigned long long v = 0;
  switch (kind) {
    case Imm::none:
      if (!imm.empty()) fail("takes no immediates");
      return;
    case Imm::integer:
      if (imm.size() != 1 || !(parse_uint(imm[0], v) || named_int_constant(imm[0], v)))
        fail("expected one integer");
      return;
    case Imm::bytes:
      if (!is_byte_literal(imm)) fail("expected a byte literal");
      return;
    case Imm::address:
      if (imm.size() != 1 || !is_address(imm[0])) fail("expected a 58-character address");
      return;
    case Imm::txn_field:
      if (imm.size() == 1 && txn_fields().contains(imm[0])) return;
      if (imm.size() == 2 && txn_array_fields().contains(imm[0]) && parse_uint(imm[1], v)) return;
      fail("unknown transaction field");
      return;
    case Imm::gtxn:
      if (imm.size() < 2 || !parse_uint(imm[0], v) || v > 15) fail("expected group index 0..15");
      if (imm.size() == 2 && txn_fields().contains(imm[1])) return;
      if (imm.size() == 3 && txn_array_fields().contains(imm[1]) && parse_uint(imm[2], v)) return;
      fail("unknown transaction field");
      return;
    case Imm::global_field:
      if (imm.size() != 1 || !global_fields().contains(imm[0])) fail("unknown global field");
      return;
    case Imm::label:
      if (imm.size() != 1 || !is_label_name(imm[0])) fail("expected a label");
      return;
  }
}

}  // namespace

bool named_int_constant(std::string_view name, unsigned long long& value) {
  static const std::unordered_map<std::string_view, unsigned long long> kNamed{
      {"NoOp", 0},  {"OptIn", 1},  {"CloseOut", 2}, {"ClearState", 3},
      {"UpdateApplication", 4},    {"DeleteApplication", 5},
      {"unknown", 0}, {"pay", 1},  {"keyreg", 2},   {"acfg", 3},
      {"axfer", 4}, {"afrz", 5},   {"appl", 6}};
  const auto it = kNamed.find(name);
  if (it == kNamed.end()) return false;
  value = it->second;
  return true;
}

bool same_code(const Instruction& a, const Instruction& b) {
  return a.opcode == b.opcode && a.immediates == b.immediates;
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::fallthrough: return "fallthrough";
    case EdgeKind::branch: return "branch";
    case EdgeKind::branch_not_taken: return "branch_not_taken";
  }
  return "?";
}

bool is_branch(std::string_view op) { return op == "b" || op == "bz" || op == "bnz"; }

bool is_terminator(std::string_view op) { return is_branch(op) || op == "return" || op == "err"; }

Program parse_teal(std::string_view source) {
  Program prog;
  const auto lines = text::split_lines(source);
  prog.line_count = static_cast<int>(lines.size());
  std::map<std::string, int> label_lines;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i + 1);
    const auto raw = text::trim(lines[i]);
    if (raw.rfind("#pragma", 0) == 0) {
      const auto toks = tokenize(raw, line_no);
      if (toks.size() >= 2 && toks[1] == "version") {
        unsigned long long v = 0;
        if (toks.size() != 3 || !parse_uint(toks[2], v) || v == 0 || v > 99) {
          throw Error(ErrorKind::malformed_immediate, "bad #pragma version", line_no);
        }
        prog.version = static_cast<int>(v);
      }
      continue;
    }
    auto tokens = tokenize(strip_comment(raw), line_no);
    if (tokens.empty()) continue;
    if (tokens[0].size() > 1 && tokens[0].back() == ':') {
      std::string name = tokens[0].substr(0, tokens[0].size() - 1);
      if (!is_label_name(name)) throw Error(ErrorKind::malformed_immediate, "bad label " + name, line_no);
      if (prog.labels.contains(name)) {
        throw Error(ErrorKind::duplicate_label, "label " + name + " defined twice", line_no);
      }
      prog.labels[name] = prog.instructions.size();
      label_lines[name] = line_no;
      tokens.erase(tokens.begin());
      if (tokens.empty()) continue;
    }
    Instruction ins;
    ins.opcode = tokens[0];
    ins.immediates.assign(tokens.begin() + 1, tokens.end());
    ins.line = line_no;
    const auto it = opcode_table().find(ins.opcode);
    if (it == opcode_table().end()) {
      throw Error(ErrorKind::unknown_opcode, "unsupported opcode '" + ins.opcode + "'", line_no);
    }
    check_immediates(ins, it->second);
    prog.instructions.push_back(std::move(ins));
  }
  for (const auto& ins : prog.instructions) {
    if (is_branch(ins.opcode) && !prog.labels.contains(ins.immediates[0])) {
      throw Error(ErrorKind::undefined_branch_target, "no label " + ins.immediates[0], ins.line);
    }
  }
  return prog;
}

void build_cfg(Program& prog) {
  const auto n = prog.instructions.size();
  std::set<std::size_t> leaders{0};
  for (const auto& [name, idx] : prog.labels) leaders.insert(idx);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_terminator(prog.instructions[i].opcode)) leaders.insert(i + 1);
  }
  const bool label_at_end = std::any_of(prog.labels.begin(), prog.labels.end(),
                                        [n](const auto& kv) { return kv.second == n; });
  if (!label_at_end) leaders.erase(n);
  if (n == 0) leaders = {0};

  prog.blocks.clear();
  prog.edges.clear();
  const std::vector<std::size_t> starts(leaders.begin(), leaders.end());
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const std::size_t end = b + 1 < starts.size() ? starts[b + 1] : n;
    prog.blocks.push_back({starts[b], std::max(starts[b], end)});
  }
  for (std::size_t b = 0; b < prog.blocks.size(); ++b) {
    const auto& blk = prog.blocks[b];
    const bool has_next = b + 1 < prog.blocks.size();
    if (blk.empty()) continue;
    const auto& last = prog.instructions[blk.end - 1];
    if (last.opcode == "return" || last.opcode == "err") continue;
    if (is_branch(last.opcode)) {
      const auto target = prog.block_starting_at(prog.labels.at(last.immediates[0]));
      prog.edges.push_back({b, target, EdgeKind::branch});
      if (last.opcode != "b" && has_next) prog.edges.push_back({b, b + 1, EdgeKind::branch_not_taken});
      continue;
    }
    if (has_next) prog.edges.push_back({b, b + 1, EdgeKind::fallthrough});
  }
}

Program load(std::string_view source) {
  auto prog = parse_teal(source);
  build_cfg(prog);
  return prog;
}

std::size_t Program::block_of(std::size_t instruction) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (instruction >= blocks[b].begin && instruction < blocks[b].end) return b;
  }
  return blocks.empty() ? 0 : blocks.size() - 1;
}

std::size_t Program::block_starting_at(std::size_t instruction) const {
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].begin == instruction) return b;
  }
  return block_of(instruction);
}

std::vector<const Edge*> Program::successors(std::size_t block) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges) {
    if (e.from == block) out.push_back(&e);
  }
  return out;
}

std::string print(const Program& prog) {
  std::multimap<std::size_t, std::string> by_index;
  for (const auto& [name, idx] : prog.labels) by_index.emplace(idx, name);
  std::string out = "#pragma version " + std::to_string(prog.version) + "\n";
  auto emit_labels = [&](std::size_t idx) {
    auto [lo, hi] = by_index.equal_range(idx);
    for (auto it = lo; it != hi; ++it) out += it->second + ":\n";
  };
  for (std::size_t i = 0; i < prog.instructions.size(); ++i) {
    emit_labels(i);
    const auto& ins = prog.instructions[i];
    out += ins.opcode;
    for (const auto& imm : ins.immediates) out += " " + imm;
    out += "\n";
  }
  emit_labels(prog.instructions.size());
  return out;
}

}  // namespace vulnbench::teal
