#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vulnbench/finding.hpp"
#include "vulnbench/taxonomy.hpp"

namespace vulnbench {

enum class Label { vulnerable, safe };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

using Params = std::map<std::string, std::string>;

// Rendering keys.
inline constexpr std::string_view kLlmSource = "llm_source";
inline constexpr std::string_view kAnalysisSource = "analysis_source";

struct Sample {
  std::string id;
  Platform platform = Platform::algorand;
  std::string category;
  Label label = Label::vulnerable;
  std::map<std::string, std::string> renderings;
  std::string template_id;
  Params params;

  bool operator==(const Sample&) const = default;
};

struct CorpusManifest {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;

  std::map<std::pair<std::string, Label>, int> counts() const;
  const Sample* find(std::string_view id) const;

  bool operator==(const CorpusManifest&) const = default;
};

}  // namespace vulnbench

namespace vulnbench::corpus {

// Structural variants per (category, label).
inline constexpr int kVariants = 5;
inline constexpr int kMinPerClass = 5;

// Template source split into lines; guard lines exist only in the safe or
// only in the vulnerable rendering. Everything else is shared.
enum class LineTag { common, safe_only, vuln_only };

struct TaggedLine {
  std::string text;
  LineTag tag = LineTag::common;
};

struct TaggedSource {
  std::vector<TaggedLine> lines;

  std::string render(Label label) const;
};

struct TemplatePair {
  TaggedSource llm_source;
  TaggedSource analysis_source;
};

// `<platform>/<category>/<vuln|safe>/<variant>`; the 3-part form means variant 0.
struct TemplateId {
  Platform platform = Platform::algorand;
  std::string category;
  Label label = Label::vulnerable;
  int variant = 0;

  std::string str() const;
  // Template family shared by a vulnerable template and its safe twin.
  std::string family() const;
  static TemplateId parse(std::string_view text);
};

// Both labels of one template family. Throws unknown_template or
// missing_parameter.
TemplatePair render_pair(Platform platform, std::string_view category, int variant,
                         const Params& params);

// Map form -> source text for one template.
std::map<std::string, std::string> render(std::string_view template_id, const Params& params);

// Parameters a template family reads.
Params draw_params(Platform platform, std::string_view category, int variant,
                   std::mt19937_64& rng);

// Identifier-valued parameters and the pools they are drawn from. Every pool
// member keeps the analyzers' naming conventions, so swapping one for another
// is an alpha-renaming.
const std::map<std::string, std::vector<std::string>>& identifier_pools(Platform platform);

// per_class >= kMinPerClass. Deterministic in (seed, per_class).
CorpusManifest generate(std::uint64_t seed, int per_class);

// Runs the platform's analyzer on the analysis rendering.
std::vector<Finding> analyze_sample(const Sample& sample);

struct ValidationReport {
  std::vector<std::string> balance_violations;
  std::vector<std::string> ground_truth_violations;

  bool ok() const { return balance_violations.empty() && ground_truth_violations.empty(); }
};

// With require_all_categories, every evaluated category must be present.
ValidationReport validate(const CorpusManifest& manifest, bool require_all_categories = true);

std::string serialize_manifest(const CorpusManifest& manifest);
CorpusManifest parse_manifest(std::string_view content);
void write_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

CorpusManifest filter_category(const CorpusManifest& manifest, std::string_view category);

}  // namespace vulnbench::corpus
