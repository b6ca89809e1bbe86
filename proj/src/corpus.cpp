#include "vulnbench/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "templates.hpp"
#include "vulnbench/algorand_analyzer.hpp"
#include "vulnbench/error.hpp"
#include "vulnbench/solana_analyzer.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench {

std::string_view to_string(Label label) {
  return label == Label::vulnerable ? "vulnerable" : "safe";
}

Label parse_label(std::string_view text) {
  if (text == "vulnerable") return Label::vulnerable;
  if (text == "safe") return Label::safe;
  throw Error(ErrorKind::invalid_argument, "unknown label '" + std::string(text) + "'");
}

std::map<std::pair<std::string, Label>, int> CorpusManifest::counts() const {
  std::map<std::pair<std::string, Label>, int> out;
  for (const auto& s : samples) ++out[{s.category, s.label}];
  return out;
}

const Sample* CorpusManifest::find(std::string_view id) const {
  for (const auto& s : samples) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

}  // namespace vulnbench

namespace vulnbench::corpus {
namespace detail {

const std::string& ParamReader::operator()(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorKind::missing_parameter, "template parameter '" + name + "' not supplied");
  }
  return it->second;
}

std::string ParamReader::fill(std::string_view pattern) const {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    const auto open = pattern.find("${", i);
    if (open == std::string_view::npos) {
      out.append(pattern.substr(i));
      break;
    }
    const auto close = pattern.find('}', open);
    if (close == std::string_view::npos) {
      out.append(pattern.substr(i));
      break;
    }
    out.append(pattern.substr(i, open - i));
    out += (*this)(std::string(pattern.substr(open + 2, close - open - 2)));
    i = close + 1;
  }
  return out;
}

void SourceBuilder::add(std::string_view pattern, LineTag tag) {
  source_.lines.push_back({params_.fill(pattern), tag});
}

void SourceBuilder::guard(std::string_view pattern, bool is_guard_under_test) {
  add(pattern, is_guard_under_test ? LineTag::safe_only : LineTag::common);
}

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

const std::string& pick_from(std::mt19937_64& rng, const std::vector<std::string>& pool) {
  return pool[pick(rng, pool.size())];
}

}  // namespace detail

namespace {

const VulnCategory& eval_category(Platform platform, std::string_view category) {
  const auto* c = Taxonomy::builtin().find(category);
  if (!c || c->platform != platform || !c->in_eval_scope) {
    throw Error(ErrorKind::unknown_template,
                "no template for " + std::string(to_string(platform)) + "/" +
                    std::string(category));
  }
  return *c;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string sample_id(std::string_view category, Label label, int ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", ordinal);
  return std::string(category) + "." + std::string(to_string(label)) + "." + buf;
}

}  // namespace

std::string TaggedSource::render(Label label) const {
  std::string out;
  for (const auto& l : lines) {
    if (l.tag == LineTag::safe_only && label != Label::safe) continue;
    if (l.tag == LineTag::vuln_only && label != Label::vulnerable) continue;
    out += l.text;
    out += '\n';
  }
  return out;
}

std::string TemplateId::str() const {
  return family() + "/" + (label == Label::vulnerable ? "vuln" : "safe") + "/" +
         std::to_string(variant);
}

std::string TemplateId::family() const {
  return std::string(to_string(platform)) + "/" + category;
}

TemplateId TemplateId::parse(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto slash = text.find('/', start);
    parts.emplace_back(text.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  auto fail = [&]() -> Error {
    return Error(ErrorKind::unknown_template, "unknown template '" + std::string(text) + "'");
  };
  if (parts.size() != 3 && parts.size() != 4) throw fail();
  TemplateId id;
  if (parts[0] == "algorand") {
    id.platform = Platform::algorand;
  } else if (parts[0] == "solana") {
    id.platform = Platform::solana;
  } else {
    throw fail();
  }
  id.category = parts[1];
  if (parts[2] == "vuln") {
    id.label = Label::vulnerable;
  } else if (parts[2] == "safe") {
    id.label = Label::safe;
  } else {
    throw fail();
  }
  if (parts.size() == 4) {
    const auto& v = parts[3];
    if (v.size() != 1 || v[0] < '0' || v[0] >= '0' + kVariants) throw fail();
    id.variant = v[0] - '0';
  }
  try {
    eval_category(id.platform, id.category);
  } catch (const Error&) {
    throw fail();
  }
  return id;
}

TemplatePair render_pair(Platform platform, std::string_view category, int variant,
                         const Params& params) {
  eval_category(platform, category);
  if (variant < 0 || variant >= kVariants) {
    throw Error(ErrorKind::unknown_template, "variant " + std::to_string(variant) + " out of range");
  }
  const detail::ParamReader reader(params);
  return platform == Platform::algorand ? detail::algorand_template(category, variant, reader)
                                        : detail::solana_template(category, variant, reader);
}

std::map<std::string, std::string> render(std::string_view template_id, const Params& params) {
  const auto id = TemplateId::parse(template_id);
  const auto pair = render_pair(id.platform, id.category, id.variant, params);
  return {{std::string(kLlmSource), pair.llm_source.render(id.label)},
          {std::string(kAnalysisSource), pair.analysis_source.render(id.label)}};
}

Params draw_params(Platform platform, std::string_view category, int variant,
                   std::mt19937_64& rng) {
  eval_category(platform, category);
  return platform == Platform::algorand ? detail::algorand_params(category, variant, rng)
                                        : detail::solana_params(category, variant, rng);
}

const std::map<std::string, std::vector<std::string>>& identifier_pools(Platform platform) {
  return platform == Platform::algorand ? detail::algorand_pools() : detail::solana_pools();
}

CorpusManifest generate(std::uint64_t seed, int per_class) {
  if (per_class < kMinPerClass) {
    throw Error(ErrorKind::invalid_argument,
                "per_class must be at least " + std::to_string(kMinPerClass));
  }
  CorpusManifest out;
  out.seed = seed;
  for (const auto& cat : Taxonomy::builtin().eval_categories()) {
    std::vector<Params> params;
    std::vector<TemplatePair> pairs;
    for (int i = 0; i < per_class; ++i) {
      const int variant = i % kVariants;
      std::mt19937_64 rng(splitmix(seed ^ splitmix(fnv1a(cat.key) + static_cast<std::uint64_t>(i))));
      params.push_back(draw_params(cat.platform, cat.key, variant, rng));
      pairs.push_back(render_pair(cat.platform, cat.key, variant, params.back()));
    }
    for (const Label label : {Label::vulnerable, Label::safe}) {
      for (int i = 0; i < per_class; ++i) {
        Sample s;
        s.id = sample_id(cat.key, label, i + 1);
        s.platform = cat.platform;
        s.category = cat.key;
        s.label = label;
        s.template_id = TemplateId{cat.platform, cat.key, label, i % kVariants}.str();
        s.params = params[i];
        s.renderings[std::string(kLlmSource)] = pairs[i].llm_source.render(label);
        s.renderings[std::string(kAnalysisSource)] = pairs[i].analysis_source.render(label);
        out.samples.push_back(std::move(s));
      }
    }
  }
  return out;
}

std::vector<Finding> analyze_sample(const Sample& sample) {
  const auto it = sample.renderings.find(std::string(kAnalysisSource));
  if (it == sample.renderings.end()) {
    throw Error(ErrorKind::missing_rendering, sample.id + " has no analysis_source rendering");
  }
  return sample.platform == Platform::algorand ? algorand::analyze_source(it->second)
                                               : solana::analyze_source(it->second);
}

ValidationReport validate(const CorpusManifest& manifest, bool require_all_categories) {
  ValidationReport report;
  const auto counts = manifest.counts();
  std::set<std::string> present;
  for (const auto& s : manifest.samples) present.insert(s.category);
  for (const auto& cat : Taxonomy::builtin().eval_categories()) {
    if (!require_all_categories && !present.count(cat.key)) continue;
    auto count = [&](Label l) {
      const auto it = counts.find({cat.key, l});
      return it == counts.end() ? 0 : it->second;
    };
    const int v = count(Label::vulnerable), s = count(Label::safe);
    if (v != s || v < kMinPerClass) {
      report.balance_violations.push_back(cat.key + ": vulnerable=" + std::to_string(v) +
                                          " safe=" + std::to_string(s));
    }
  }
  for (const auto& sample : manifest.samples) {
    std::vector<Finding> findings;
    try {
      findings = analyze_sample(sample);
    } catch (const Error& e) {
      report.ground_truth_violations.push_back(sample.id + ": " + e.what());
      continue;
    }
    std::set<std::string> cats;
    for (const auto& f : findings) cats.insert(f.category);
    const std::set<std::string> expected =
        sample.label == Label::vulnerable ? std::set<std::string>{sample.category}
                                          : std::set<std::string>{};
    if (cats != expected) {
      std::vector<std::string> got(cats.begin(), cats.end());
      report.ground_truth_violations.push_back(
          sample.id + ": expected [" + (expected.empty() ? "" : sample.category) + "] got [" +
          text::join(got, ",") + "]");
    }
  }
  return report;
}

namespace {

constexpr std::string_view kHeader = "#corpus-v1";

nlohmann::json to_json(const Sample& s) {
  return {{"id", s.id},
          {"platform", to_string(s.platform)},
          {"category", s.category},
          {"label", to_string(s.label)},
          {"template_id", s.template_id},
          {"params", s.params},
          {"renderings", s.renderings}};
}

Sample from_json(const nlohmann::json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.platform = parse_platform(j.at("platform").get<std::string>());
  s.category = j.at("category").get<std::string>();
  s.label = parse_label(j.at("label").get<std::string>());
  s.template_id = j.at("template_id").get<std::string>();
  s.params = j.at("params").get<Params>();
  s.renderings = j.at("renderings").get<std::map<std::string, std::string>>();
  return s;
}

}  // namespace

std::string serialize_manifest(const CorpusManifest& manifest) {
  std::string out = std::string(kHeader) + " seed=" + std::to_string(manifest.seed) + "\n";
  for (const auto& s : manifest.samples) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

CorpusManifest parse_manifest(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || !text::starts_with_ci(lines[0], "#corpus-v")) {
    throw Error(ErrorKind::schema_version, "missing #corpus-v1 header", 1);
  }
  const auto header = std::string(text::trim(lines[0]));
  const auto space = header.find(' ');
  if (header.substr(0, space) != kHeader) {
    throw Error(ErrorKind::schema_version,
                "unsupported manifest version '" + header.substr(0, space) + "'", 1);
  }
  CorpusManifest out;
  if (space != std::string::npos) {
    const auto rest = std::string(text::trim(std::string_view(header).substr(space)));
    if (rest.rfind("seed=", 0) != 0) {
      throw Error(ErrorKind::malformed_record, "bad header field '" + rest + "'", 1);
    }
    try {
      out.seed = std::stoull(rest.substr(5));
    } catch (const std::exception&) {
      throw Error(ErrorKind::malformed_record, "bad seed '" + rest + "'", 1);
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    if (text::trim(lines[i]).empty()) continue;
    try {
      out.samples.push_back(from_json(nlohmann::json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::malformed_record, e.what(), line_no);
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_record, e.what(), line_no);
    }
  }
  return out;
}

void write_manifest(const CorpusManifest& manifest, const std::string& path) {
  text::write_file(path, serialize_manifest(manifest));
}

CorpusManifest load_manifest(const std::string& path) {
  return parse_manifest(text::read_file(path));
}

CorpusManifest filter_category(const CorpusManifest& manifest, std::string_view category) {
  CorpusManifest out;
  out.seed = manifest.seed;
  for (const auto& s : manifest.samples) {
    if (s.category == category) out.samples.push_back(s);
  }
  return out;
}

}  // namespace vulnbench::corpus
