#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vulnbench {

enum class Platform { algorand, solana };

std::string_view to_string(Platform platform);
Platform parse_platform(std::string_view text);
// Source language the LLM-facing rendering is written in.
std::string_view language_name(Platform platform);

// OWASP Smart Contract Top 10 identifier, V1..V10.
struct OwaspId {
  int value = 1;

  friend auto operator<=>(const OwaspId&, const OwaspId&) = default;
};

std::string to_string(OwaspId id);
OwaspId parse_owasp_id(std::string_view text);

struct OwaspEntry {
  OwaspId id;
  std::string_view name;
};

std::span<const OwaspEntry> owasp_entries();

enum class CoverageStatus { mapped, out_of_scope, not_applicable, taxonomy_only };

std::string_view to_string(CoverageStatus status);

// One cell of the platform mapping table: how an OWASP entry shows up on a
// platform and which categories (if any) carry it.
struct CoverageRow {
  Platform platform;
  OwaspId id;
  CoverageStatus status;
  std::vector<std::string_view> categories;
  std::string_view note;
};

std::span<const CoverageRow> owasp_coverage();

struct VulnCategory {
  std::string key;
  Platform platform = Platform::algorand;
  OwaspId owasp_id;
  std::string display_name;
  std::vector<std::string> aliases;
  bool in_eval_scope = false;
  std::string description;
  // Position in the fixture; drives table layout.
  int ordinal = 0;

  bool operator==(const VulnCategory&) const = default;
};

// Immutable set of categories loaded from a `#taxonomy-v1` fixture.
class Taxonomy {
 public:
  // The fixture compiled into the library (data/taxonomy-v1.txt).
  static const Taxonomy& builtin();
  static Taxonomy parse(std::string_view text);
  static Taxonomy load(const std::string& path);

  // Ordered by (platform, owasp id, key).
  std::vector<VulnCategory> all_categories(std::optional<Platform> platform = {}) const;
  std::vector<VulnCategory> eval_categories(std::optional<Platform> platform = {}) const;

  const VulnCategory* find(std::string_view key) const;
  const VulnCategory& at(std::string_view key) const;
  OwaspId owasp_for(std::string_view key) const;

  // Case-insensitive whole-word match of any alias or display name. The
  // earliest match in the text wins; ties go to the category order above.
  // Returns nullptr when nothing matches.
  const VulnCategory* parse_category_label(std::string_view text, Platform platform) const;

  std::size_t size() const { return categories_.size(); }

 private:
  std::vector<VulnCategory> categories_;  // sorted
};

}  // namespace vulnbench
