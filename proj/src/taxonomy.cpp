#include "vulnbench/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "vulnbench/error.hpp"
#include "vulnbench/taxonomy_fixture.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench {

std::string_view to_string(Platform platform) {
  return platform == Platform::algorand ? "algorand" : "solana";
}

Platform parse_platform(std::string_view text) {
  const auto t = text::to_lower(text::trim(text));
  if (t == "algorand") return Platform::algorand;
  if (t == "solana") return Platform::solana;
  throw Error(ErrorKind::unknown_key, "unknown platform '" + std::string(text) + "'");
}

std::string_view language_name(Platform platform) {
  return platform == Platform::algorand ? "PyTeal" : "Rust";
}

std::string to_string(OwaspId id) { return "V" + std::to_string(id.value); }

OwaspId parse_owasp_id(std::string_view text) {
  const auto t = text::trim(text);
  if (t.size() >= 2 && (t[0] == 'V' || t[0] == 'v')) {
    int value = 0;
    bool digits = true;
    for (char c : t.substr(1)) {
      if (c < '0' || c > '9') {
        digits = false;
        break;
      }
      value = value * 10 + (c - '0');
    }
    if (digits && value >= 1 && value <= 10) return OwaspId{value};
  }
  throw Error(ErrorKind::unknown_key, "not an OWASP id: '" + std::string(text) + "'");
}

std::span<const OwaspEntry> owasp_entries() {
  static constexpr std::array<OwaspEntry, 10> kEntries{{
      {{1}, "Access Control Vulnerabilities"},
      {{2}, "Price Oracle Manipulation"},
      {{3}, "Logic Errors"},
      {{4}, "Lack of Input Validation"},
      {{5}, "Reentrancy Attacks"},
      {{6}, "Unchecked External Calls"},
      {{7}, "Flash Loan Attacks"},
      {{8}, "Integer Overflow and Underflow"},
      {{9}, "Insecure Randomness"},
      {{10}, "Denial of Service (DoS) Attacks"},
  }};
  return kEntries;
}

std::string_view to_string(CoverageStatus status) {
  switch (status) {
    case CoverageStatus::mapped: return "mapped";
    case CoverageStatus::out_of_scope: return "out_of_scope";
    case CoverageStatus::not_applicable: return "not_applicable";
    case CoverageStatus::taxonomy_only: return "taxonomy_only";
  }
  return "?";
}

std::span<const CoverageRow> owasp_coverage() {
  using enum CoverageStatus;
  constexpr auto A = Platform::algorand;
  constexpr auto S = Platform::solana;
  static const std::vector<CoverageRow> kRows{
      {A, {1}, mapped,
       {"arbitrary_update", "arbitrary_delete", "unchecked_payment_receiver",
        "unchecked_asset_receiver"},
       "Arbitrary Update, Arbitrary Delete, Unchecked Payment Receiver, Unchecked Asset Receiver"},
      {A, {2}, out_of_scope, {}, "off-chain oracle integration without authentication"},
      {A, {3}, out_of_scope, {}, "generic logical vulnerabilities"},
      {A, {4}, not_applicable, {}, ""},
      {A, {5}, not_applicable, {}, "atomic, stateless transaction model prevents reentrancy"},
      {A, {6}, mapped,
       {"unchecked_rekey_to", "unchecked_close_remainder_to", "unchecked_asset_close_to"},
       "Unchecked RekeyTo"},
      {A, {7}, not_applicable, {}, "atomic groups, no nonce, no penalties for failed transactions"},
      {A, {8}, mapped, {"unchecked_transaction_fee"},
       "arithmetic overflow/underflow (no evaluated category), Unchecked Transaction Fee"},
      {A, {9}, not_applicable, {}, "randomness from VRF"},
      {A, {10}, mapped, {"unchecked_transaction_fee"},
       "partially mitigated; DoS via Unchecked Transaction Fee"},
      {S, {1}, mapped, {"missing_key_check", "owner_check", "signer_check"},
       "Owner Check, Signer Check, Key Check"},
      {S, {2}, out_of_scope, {}, "oracle manipulation via external price feeds"},
      {S, {3}, out_of_scope, {}, "generic logical vulnerabilities"},
      {S, {4}, mapped, {"type_confusion"}, "Type Confusion when parsing account inputs"},
      {S, {5}, mapped, {"cpi_unchecked"}, "Cross-Program Invocation without strict validation"},
      {S, {6}, mapped, {"bump_seed"}, "Bump Seed; unchecked low-level calls"},
      {S, {7}, out_of_scope, {}, "flash loans depend on external protocols"},
      {S, {8}, mapped, {"integer_flow"}, "integer overflow/underflow without validation"},
      {S, {9}, mapped, {"bump_seed"}, "PDA collisions from Bump Seed"},
      {S, {10}, taxonomy_only, {}, "leader election DoS; protocol level, not visible in contract source"},
  };
  return kRows;
}

namespace {

bool category_less(const VulnCategory& a, const VulnCategory& b) {
  if (a.platform != b.platform) return a.platform < b.platform;
  if (a.owasp_id != b.owasp_id) return a.owasp_id < b.owasp_id;
  return a.key < b.key;
}

bool parse_bool(std::string_view s, int line) {
  const auto t = text::to_lower(text::trim(s));
  if (t == "true") return true;
  if (t == "false") return false;
  throw Error(ErrorKind::malformed_record, "in_eval_scope must be true|false", line);
}

std::vector<std::string> split_aliases(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    auto alias = text::trim(s.substr(start, comma - start));
    if (!alias.empty()) out.emplace_back(alias);
    start = comma + 1;
  }
  return out;
}

// Rejects fixtures where one category's alias occurs as a whole word inside an
// alias of another category on the same platform; such pairs make label
// parsing depend on match position rather than on the text.
void check_alias_ambiguity(const std::vector<VulnCategory>& cats) {
  for (const auto& a : cats) {
    for (const auto& b : cats) {
      if (&a == &b || a.platform != b.platform) continue;
      std::vector<std::string> a_names = a.aliases;
      a_names.push_back(a.display_name);
      std::vector<std::string> b_names = b.aliases;
      b_names.push_back(b.display_name);
      for (const auto& x : a_names) {
        for (const auto& y : b_names) {
          if (text::find_word_ci(y, x)) {
            throw Error(ErrorKind::malformed_record, "alias '" + x + "' of " + a.key +
                                                         " is ambiguous with '" + y + "' of " +
                                                         b.key);
          }
        }
      }
    }
  }
}

}  // namespace

Taxonomy Taxonomy::parse(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines.front()) != "#taxonomy-v1") {
    throw Error(ErrorKind::schema_version, "expected header #taxonomy-v1", 1);
  }
  Taxonomy tax;
  std::set<std::string> keys;
  int ordinal = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i + 1);
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto f = text::split_record(line);
    if (f.size() != 6 && f.size() != 7) {
      throw Error(ErrorKind::malformed_record, "expected 6 or 7 fields", line_no);
    }
    VulnCategory c;
    c.key = std::string(text::trim(f[0]));
    if (c.key.empty()) throw Error(ErrorKind::malformed_record, "empty key", line_no);
    try {
      c.platform = parse_platform(f[1]);
      c.owasp_id = parse_owasp_id(f[2]);
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_record, e.what(), line_no);
    }
    c.display_name = text::unescape_field(text::trim(f[3]));
    c.aliases = split_aliases(text::unescape_field(f[4]));
    c.in_eval_scope = parse_bool(f[5], line_no);
    if (f.size() == 7) c.description = text::unescape_field(text::trim(f[6]));
    c.ordinal = ordinal++;
    if (!keys.insert(c.key).second) {
      throw Error(ErrorKind::malformed_record, "duplicate key " + c.key, line_no);
    }
    if (c.in_eval_scope && c.aliases.size() < 2) {
      throw Error(ErrorKind::malformed_record, c.key + " needs at least two aliases", line_no);
    }
    tax.categories_.push_back(std::move(c));
  }
  check_alias_ambiguity(tax.categories_);
  std::sort(tax.categories_.begin(), tax.categories_.end(), category_less);
  return tax;
}

Taxonomy Taxonomy::load(const std::string& path) { return parse(text::read_file(path)); }

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy tax = [] {
    auto t = parse(detail::kTaxonomyFixture);
    const auto algo = t.eval_categories(Platform::algorand).size();
    const auto sol = t.eval_categories(Platform::solana).size();
    if (algo != 8 || sol != 5) {
      throw Error(ErrorKind::malformed_record, "built-in taxonomy must have 8+5 evaluated categories");
    }
    return t;
  }();
  return tax;
}

std::vector<VulnCategory> Taxonomy::all_categories(std::optional<Platform> platform) const {
  std::vector<VulnCategory> out;
  for (const auto& c : categories_) {
    if (!platform || c.platform == *platform) out.push_back(c);
  }
  return out;
}

std::vector<VulnCategory> Taxonomy::eval_categories(std::optional<Platform> platform) const {
  auto out = all_categories(platform);
  std::erase_if(out, [](const VulnCategory& c) { return !c.in_eval_scope; });
  return out;
}

const VulnCategory* Taxonomy::find(std::string_view key) const {
  for (const auto& c : categories_) {
    if (c.key == key) return &c;
  }
  return nullptr;
}

const VulnCategory& Taxonomy::at(std::string_view key) const {
  if (const auto* c = find(key)) return *c;
  throw Error(ErrorKind::unknown_key, "unknown category '" + std::string(key) + "'");
}

OwaspId Taxonomy::owasp_for(std::string_view key) const { return at(key).owasp_id; }

const VulnCategory* Taxonomy::parse_category_label(std::string_view input, Platform platform) const {
  const VulnCategory* best = nullptr;
  std::size_t best_pos = std::string_view::npos;
  for (const auto& c : categories_) {
    if (c.platform != platform) continue;
    auto consider = [&](std::string_view name) {
      const auto pos = text::find_word_ci(input, name);
      // Strict '<' keeps the earlier category on ties.
      if (pos && *pos < best_pos) {
        best_pos = *pos;
        best = &c;
      }
    };
    consider(c.display_name);
    for (const auto& alias : c.aliases) consider(alias);
  }
  return best;
}

}  // namespace vulnbench
