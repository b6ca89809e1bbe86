#include "vulnbench/solana_analyzer.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "vulnbench/error.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::solana {
namespace {

enum class TokKind { ident, number, literal, punct };

struct Token {
  TokKind kind;
  std::string text;
  int line;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(std::string_view s) {
  static const std::vector<std::string_view> multi = {
      "..=", "::", "->", "=>", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", ".."};
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto skip_string = [&](std::size_t hashes) {
    // s[i] is the opening quote
    ++i;
    const int start_line = line;
    while (i < n) {
      const char c = s[i];
      if (c == '\n') ++line;
      if (c == '\\' && hashes == 0 && i + 1 < n) {
        if (s[i + 1] == '\n') ++line;
        i += 2;
        continue;
      }
      if (c == '"') {
        std::size_t k = 0;
        while (k < hashes && i + 1 + k < n && s[i + 1 + k] == '#') ++k;
        if (k == hashes) {
          i += 1 + hashes;
          out.push_back({TokKind::literal, "\"\"", start_line});
          return;
        }
      }
      ++i;
    }
    out.push_back({TokKind::literal, "\"\"", start_line});
  };
  while (i < n) {
    const char c = s[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '/') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      i += 2;
      while (i < n && !(s[i] == '*' && i + 1 < n && s[i + 1] == '/')) {
        if (s[i] == '\n') ++line;
        ++i;
      }
      i = std::min(n, i + 2);
      continue;
    }
    if (c == '"') {
      skip_string(0);
      continue;
    }
    if (c == '\'') {
      if (i + 1 < n && s[i + 1] == '\\') {
        std::size_t j = i + 2;
        while (j < n && s[j] != '\'' && s[j] != '\n') ++j;
        out.push_back({TokKind::literal, "''", line});
        i = std::min(n, j + 1);
      } else if (i + 2 < n && s[i + 2] == '\'') {
        out.push_back({TokKind::literal, "''", line});
        i += 3;
      } else {
        // lifetime
        ++i;
        while (i < n && ident_char(s[i])) ++i;
      }
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < n && ident_char(s[j])) ++j;
      const std::string_view word = s.substr(i, j - i);
      if ((word == "r" || word == "br") && j < n && (s[j] == '"' || s[j] == '#')) {
        std::size_t hashes = 0;
        while (j + hashes < n && s[j + hashes] == '#') ++hashes;
        if (j + hashes < n && s[j + hashes] == '"') {
          i = j + hashes;
          skip_string(hashes);
          continue;
        }
      }
      if (word == "b" && j < n && s[j] == '"') {
        i = j;
        skip_string(0);
        continue;
      }
      out.push_back({TokKind::ident, std::string(word), line});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && (ident_char(s[j]) ||
                       (s[j] == '.' && j + 1 < n && std::isdigit(static_cast<unsigned char>(s[j + 1]))))) {
        ++j;
      }
      out.push_back({TokKind::number, std::string(s.substr(i, j - i)), line});
      i = j;
      continue;
    }
    bool matched = false;
    for (auto m : multi) {
      if (s.substr(i, m.size()) == m) {
        out.push_back({TokKind::punct, std::string(m), line});
        i += m.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.push_back({TokKind::punct, std::string(1, c), line});
      ++i;
    }
  }
  return out;
}

void check_braces(const std::vector<Token>& toks) {
  std::vector<int> open;
  for (const auto& t : toks) {
    if (t.kind != TokKind::punct) continue;
    if (t.text == "{") {
      open.push_back(t.line);
    } else if (t.text == "}") {
      if (open.empty()) throw Error(ErrorKind::unbalanced_braces, "unmatched '}'", t.line);
      open.pop_back();
    }
  }
  if (!open.empty()) throw Error(ErrorKind::unbalanced_braces, "unclosed '{'", open.back());
}

bool contains_any(const std::string& lowered, const std::vector<std::string_view>& pats) {
  return std::any_of(pats.begin(), pats.end(),
                     [&](std::string_view p) { return lowered.find(p) != std::string::npos; });
}

const std::set<std::string>& integer_types() {
  static const std::set<std::string> types = {"u8",  "u16", "u32", "u64",  "u128",  "usize",
                                              "i8",  "i16", "i32", "i64",  "i128",  "isize"};
  return types;
}

// Names declared with an explicitly non-integer type anywhere in the file.
std::set<std::string> non_integer_names(const std::vector<Token>& toks) {
  static const std::set<std::string> scalar = {"str", "bool", "f32", "f64", "char"};
  std::set<std::string> out;
  for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
    if (toks[i].kind != TokKind::ident || toks[i + 1].text != ":" ||
        toks[i + 2].kind != TokKind::ident) {
      continue;
    }
    const auto& ty = toks[i + 2].text;
    if (integer_types().count(ty)) continue;
    if (scalar.count(ty) || std::isupper(static_cast<unsigned char>(ty[0]))) {
      out.insert(toks[i].text);
    }
  }
  return out;
}

using Stmt = std::vector<const Token*>;

bool has_punct(const Stmt& s, std::string_view p) {
  return std::any_of(s.begin(), s.end(),
                     [&](const Token* t) { return t->kind == TokKind::punct && t->text == p; });
}

bool has_equality(const Stmt& s) { return has_punct(s, "==") || has_punct(s, "!="); }

bool has_ordering(const Stmt& s) {
  return has_punct(s, "<") || has_punct(s, ">") || has_punct(s, "<=") || has_punct(s, ">=");
}

bool is_call(const Stmt& s, std::size_t i) {
  return i + 1 < s.size() && s[i + 1]->text == "(";
}

bool ends_operand(const Token& t) {
  return t.kind == TokKind::ident || t.kind == TokKind::number || t.text == ")" ||
         t.text == "]" || t.text == "?";
}

// Identifiers X in `X . <member>`.
std::vector<std::string> receivers_of(const Stmt& s, std::string_view member) {
  std::vector<std::string> out;
  for (std::size_t i = 2; i < s.size(); ++i) {
    if (s[i]->kind == TokKind::ident && s[i]->text == member && s[i - 1]->text == "." &&
        s[i - 2]->kind == TokKind::ident) {
      out.push_back(s[i - 2]->text);
    }
  }
  return out;
}

class Scanner {
 public:
  explicit Scanner(std::string_view text) : toks_(lex(text)) {
    model_.text = std::string(text);
    check_braces(toks_);
    non_integer_ = non_integer_names(toks_);
  }

  SourceModel run() {
    find_functions();
    for (int f = 0; f < static_cast<int>(model_.functions.size()); ++f) scan_function(f);
    return std::move(model_);
  }

 private:
  std::vector<Token> toks_;
  SourceModel model_;
  std::set<std::string> non_integer_;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;  // body token range per function
  std::vector<int> owner_;

  bool is_balance_name(const std::string& name) const {
    return contains_any(text::to_lower(name), balance_name_patterns()) &&
           !non_integer_.count(name);
  }

  std::string balance_ident(const Stmt& s) const {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i]->kind == TokKind::ident && is_balance_name(s[i]->text) && !is_call(s, i)) {
        return s[i]->text;
      }
    }
    return {};
  }

  void find_functions() {
    for (std::size_t i = 0; i + 1 < toks_.size(); ++i) {
      if (toks_[i].kind != TokKind::ident || toks_[i].text != "fn" ||
          toks_[i + 1].kind != TokKind::ident) {
        continue;
      }
      std::size_t j = i + 2;
      while (j < toks_.size() && toks_[j].text != "{" && toks_[j].text != ";") ++j;
      if (j >= toks_.size() || toks_[j].text == ";") continue;
      int depth = 0;
      std::size_t k = j;
      for (; k < toks_.size(); ++k) {
        if (toks_[k].text == "{") ++depth;
        if (toks_[k].text == "}" && --depth == 0) break;
      }
      model_.functions.push_back({toks_[i + 1].text, toks_[i].line, toks_[k].line});
      ranges_.emplace_back(j, k);
    }
    owner_.assign(toks_.size(), -1);
    for (int f = 0; f < static_cast<int>(ranges_.size()); ++f) {
      const auto [b, e] = ranges_[f];
      for (std::size_t t = b + 1; t < e; ++t) {
        const int cur = owner_[t];
        if (cur < 0 || ranges_[cur].second - ranges_[cur].first > e - b) owner_[t] = f;
      }
    }
  }

  std::vector<Stmt> statements(int f) const {
    std::vector<Stmt> out;
    Stmt cur;
    const auto [b, e] = ranges_[f];
    for (std::size_t t = b + 1; t < e; ++t) {
      if (owner_[t] != f) continue;
      const auto& tok = toks_[t];
      if (tok.kind == TokKind::punct && (tok.text == ";" || tok.text == "{" || tok.text == "}")) {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
        continue;
      }
      cur.push_back(&tok);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  void use(std::string id, UseKind kind, int line, int f) {
    model_.account_uses.push_back({std::move(id), kind, line, f});
  }
  void guard(std::string id, GuardKind kind, int line, int f) {
    model_.guards.push_back({kind, std::move(id), line, f});
  }

  void scan_function(int f) {
    static const std::set<std::string> deserializers = {
        "try_from_slice", "unpack", "unpack_unchecked", "unpack_from_slice",
        "deserialize",    "try_deserialize"};
    static const std::set<std::string> mutators = {"try_borrow_mut_data", "borrow_mut",
                                                   "try_borrow_mut_lamports", "serialize",
                                                   "pack", "pack_into_slice"};
    const auto stmts = statements(f);

    std::string cpi_target;
    for (const auto& s : stmts) {
      for (std::size_t i = 0; i + 4 < s.size(); ++i) {
        if (s[i]->text != "program_id" || s[i + 1]->text != ":") continue;
        std::size_t j = i + 2;
        while (j < s.size() && (s[j]->text == "*" || s[j]->text == "&")) ++j;
        if (j + 2 < s.size() && s[j]->kind == TokKind::ident && s[j + 1]->text == "." &&
            s[j + 2]->text == "key") {
          cpi_target = s[j]->text;
        }
      }
      if (!cpi_target.empty()) break;
    }

    for (const auto& s : stmts) {
      const int line = s.front()->line;
      const bool eq = has_equality(s);

      if (s.size() >= 4 && s[0]->text == "let") {
        std::size_t k = 1;
        if (s[k]->text == "mut") ++k;
        if (k + 2 < s.size() && s[k]->kind == TokKind::ident && s[k + 1]->text == "=" &&
            s[k + 2]->text == "next_account_info") {
          guard(s[k]->text, GuardKind::account_binding, line, f);
        }
      }
      for (const auto& x : receivers_of(s, "is_signer")) use(x, UseKind::signer_test, line, f);
      if (eq) {
        for (const auto& x : receivers_of(s, "owner")) use(x, UseKind::owner_test, line, f);
        for (const auto& x : receivers_of(s, "key")) use(x, UseKind::key_compare, line, f);
        for (const auto& x : receivers_of(s, "bump")) {
          guard(x, GuardKind::stored_bump_check, line, f);
        }
      }

      bool discriminator = false;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& t = *s[i];
        if (t.kind == TokKind::ident) {
          const auto lowered = text::to_lower(t.text);
          if (lowered.find("tag") != std::string::npos ||
              lowered.find("discriminator") != std::string::npos) {
            discriminator = true;
          }
          if (deserializers.count(t.text) && is_call(s, i)) {
            use(t.text, UseKind::data_deserialize, line, f);
          }
          if (mutators.count(t.text) && is_call(s, i)) {
            guard(i >= 2 && s[i - 1]->text == "." ? s[i - 2]->text : t.text, GuardKind::mutation,
                  line, f);
          }
          if (lowered.rfind("checked_", 0) == 0 || lowered.rfind("saturating_", 0) == 0) {
            guard(t.text, GuardKind::checked_arith, line, f);
          }
          if ((t.text == "invoke" || t.text == "invoke_signed") && is_call(s, i)) {
            use(cpi_target, UseKind::cpi_call, line, f);
          }
          if (t.text == "find_program_address" && is_call(s, i)) {
            guard(t.text, GuardKind::canonical_derive, line, f);
          }
          if (t.text == "create_program_address" && is_call(s, i)) {
            std::string bump;
            for (std::size_t k = 0; k < s.size(); ++k) {
              if (s[k]->kind == TokKind::ident &&
                  text::to_lower(s[k]->text).find("bump") != std::string::npos &&
                  (k == 0 || s[k - 1]->text != ".")) {
                bump = s[k]->text;
                break;
              }
            }
            use(bump, UseKind::pda_derive, line, f);
          }
        }
        if (i + 2 < s.size() && t.text == "[" && s[i + 1]->text == "0" && s[i + 2]->text == "]") {
          discriminator = true;
        }
      }
      if (eq && discriminator) guard("", GuardKind::discriminator, line, f);

      const std::string balance = balance_ident(s);
      if (!balance.empty()) {
        bool arith = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto& t = *s[i];
          if (t.kind != TokKind::punct) continue;
          if (t.text == "+=" || t.text == "-=" || t.text == "*=") arith = true;
          if ((t.text == "+" || t.text == "-" || t.text == "*") && i > 0 && ends_operand(*s[i - 1])) {
            arith = true;
          }
        }
        if (arith) use(balance, UseKind::lamport_arith, line, f);
        const auto& head = s.front()->text;
        if ((head == "if" || head == "while" || head == "require" || head == "assert") &&
            has_ordering(s)) {
          guard(balance, GuardKind::bound_check, line, f);
        }
      }
    }
  }
};

Finding make(std::string_view category, int line, std::string message, std::vector<int> evidence) {
  Finding out;
  out.category = std::string(category);
  out.line_start = line;
  out.line_end = line;
  out.message = std::move(message);
  out.evidence = std::move(evidence);
  return out;
}

}  // namespace

std::string_view to_string(UseKind kind) {
  switch (kind) {
    case UseKind::signer_test: return "signer_test";
    case UseKind::owner_test: return "owner_test";
    case UseKind::key_compare: return "key_compare";
    case UseKind::data_deserialize: return "data_deserialize";
    case UseKind::lamport_arith: return "lamport_arith";
    case UseKind::cpi_call: return "cpi_call";
    case UseKind::pda_derive: return "pda_derive";
  }
  return "unknown";
}

const std::vector<std::string_view>& balance_name_patterns() {
  static const std::vector<std::string_view> p = {"lamports", "amount", "balance"};
  return p;
}

const std::vector<std::string_view>& authority_name_patterns() {
  static const std::vector<std::string_view> p = {"authority", "admin"};
  return p;
}

SourceModel scan_source(std::string_view text) { return Scanner(text).run(); }

std::vector<Finding> analyze(const SourceModel& model) {
  std::vector<Finding> out;
  for (int f = 0; f < static_cast<int>(model.functions.size()); ++f) {
    std::vector<const AccountUse*> uses;
    std::vector<const Guard*> guards;
    for (const auto& u : model.account_uses) {
      if (u.function == f) uses.push_back(&u);
    }
    for (const auto& g : model.guards) {
      if (g.function == f) guards.push_back(&g);
    }
    auto uses_of = [&](UseKind k) {
      std::vector<const AccountUse*> r;
      for (auto* u : uses) {
        if (u->kind == k) r.push_back(u);
      }
      return r;
    };
    auto guards_of = [&](GuardKind k) {
      std::vector<const Guard*> r;
      for (auto* g : guards) {
        if (g->kind == k) r.push_back(g);
      }
      return r;
    };
    const auto& fname = model.functions[f].name;
    const auto mutations = guards_of(GuardKind::mutation);
    const auto key_compares = uses_of(UseKind::key_compare);
    const auto deserializes = uses_of(UseKind::data_deserialize);

    if (!mutations.empty()) {
      for (auto* b : guards_of(GuardKind::account_binding)) {
        if (!contains_any(text::to_lower(b->identifier), authority_name_patterns())) continue;
        const bool compared = std::any_of(key_compares.begin(), key_compares.end(),
                                          [&](auto* u) { return u->identifier == b->identifier; });
        if (!compared) {
          out.push_back(make("missing_key_check", b->line,
                             "authority account '" + b->identifier + "' in " + fname +
                                 " is never compared by key",
                             {b->line, mutations.front()->line}));
          break;
        }
      }
      if (uses_of(UseKind::signer_test).empty()) {
        out.push_back(make("signer_check", mutations.front()->line,
                           fname + " writes account state without an is_signer test",
                           {mutations.front()->line}));
      }
    }

    if (!deserializes.empty() && uses_of(UseKind::owner_test).empty()) {
      out.push_back(make("owner_check", deserializes.front()->line,
                         fname + " reads account data without an owner test",
                         {deserializes.front()->line}));
    }

    const auto tags = guards_of(GuardKind::discriminator);
    for (auto* d : deserializes) {
      const bool tagged =
          std::any_of(tags.begin(), tags.end(), [&](auto* g) { return g->line <= d->line; });
      if (!tagged) {
        out.push_back(make("type_confusion", d->line,
                           fname + " deserializes account data without a discriminator check",
                           {d->line}));
        break;
      }
    }

    const auto arith = uses_of(UseKind::lamport_arith);
    if (!arith.empty() && guards_of(GuardKind::checked_arith).empty() &&
        guards_of(GuardKind::bound_check).empty()) {
      out.push_back(make("integer_flow", arith.front()->line,
                         "unchecked arithmetic on '" + arith.front()->identifier + "' in " + fname,
                         {arith.front()->line}));
    }

    for (auto* c : uses_of(UseKind::cpi_call)) {
      if (c->identifier.empty()) continue;
      const bool compared = std::any_of(key_compares.begin(), key_compares.end(), [&](auto* u) {
        return u->identifier == c->identifier && u->line < c->line;
      });
      if (!compared) {
        out.push_back(make("cpi_unchecked", c->line,
                           "cross-program invocation target '" + c->identifier +
                               "' is not checked against a known program id",
                           {c->line}));
        break;
      }
    }

    const bool canonical = !guards_of(GuardKind::canonical_derive).empty() ||
                           !guards_of(GuardKind::stored_bump_check).empty();
    for (auto* p : uses_of(UseKind::pda_derive)) {
      if (p->identifier.empty() || canonical) continue;
      out.push_back(make("bump_seed", p->line,
                         "program address derived from caller-supplied bump '" + p->identifier + "'",
                         {p->line}));
      break;
    }
  }
  sort_findings(out);
  return out;
}

std::vector<Finding> analyze_source(std::string_view text) { return analyze(scan_source(text)); }

}  // namespace vulnbench::solana
