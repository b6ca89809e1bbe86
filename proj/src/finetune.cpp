#include "vulnbench/finetune.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "vulnbench/error.hpp"
#include "vulnbench/harness.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::finetune {
namespace {

std::string instruction_for(Platform platform) {
  auto spec = harness::PromptSpec::for_mode(harness::PromptMode::baseline);
  std::string out = spec.user_template;
  const auto src = out.find("--" + std::string(harness::kSourcePlaceholder) + "--");
  if (src != std::string::npos) out.erase(src);
  const auto lang = out.find(harness::kLanguagePlaceholder);
  out.replace(lang, harness::kLanguagePlaceholder.size(), language_name(platform));
  return std::string(text::trim(out));
}

std::uint64_t hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {"model_name",   "epochs",        "lora_r",
                                                "lora_alpha",   "lora_dropout",  "learning_rate",
                                                "max_seq_len",  "optimizer"};
  return keys;
}

int positive_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || n <= 0) {
    throw Error(ErrorKind::invalid_argument, key + " must be a positive integer, got '" + v + "'");
  }
  return n;
}

double number(const std::string& key, const std::string& v, double lo, double hi) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || d < lo || d > hi) {
    throw Error(ErrorKind::invalid_argument, key + " out of range: '" + v + "'");
  }
  return d;
}

void apply(FineTuneConfig& c, const std::string& key, const std::string& v) {
  if (key == "epochs") c.epochs = positive_int(key, v);
  else if (key == "lora_r") c.lora_r = positive_int(key, v);
  else if (key == "lora_alpha") c.lora_alpha = positive_int(key, v);
  else if (key == "lora_dropout") c.lora_dropout = number(key, v, 0.0, 0.999999);
  else if (key == "learning_rate") c.learning_rate = number(key, v, 1e-12, 1.0);
  else if (key == "max_seq_len") c.max_seq_len = positive_int(key, v);
  else if (key == "optimizer") c.optimizer = v;
  else if (key == "model_name") c.model_name = v;
  else throw Error(ErrorKind::unknown_key, "unknown config key '" + key + "'");
}

std::string shortest(double d) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, d);
    if (std::stod(buf) == d) break;
  }
  return buf;
}

}  // namespace

TrainingPair to_pair(const Sample& sample) {
  const auto it = sample.renderings.find(std::string(kLlmSource));
  if (it == sample.renderings.end()) {
    throw Error(ErrorKind::missing_rendering, sample.id + " has no llm_source rendering");
  }
  return {instruction_for(sample.platform), it->second,
          sample.label == Label::vulnerable ? Taxonomy::builtin().at(sample.category).display_name
                                            : std::string(kNegativeOutput)};
}

DatasetSplit export_dataset(const CorpusManifest& manifest, double split_fraction,
                            std::uint64_t seed) {
  if (!(split_fraction > 0 && split_fraction < 1)) {
    throw Error(ErrorKind::invalid_argument, "split fraction must lie strictly between 0 and 1");
  }
  std::map<std::string, std::set<std::string>> families;  // category -> families
  std::map<std::string, std::string> family_of;           // sample id -> family
  for (const auto& s : manifest.samples) {
    const auto id = corpus::TemplateId::parse(s.template_id);
    const auto family = id.family() + "/" + std::to_string(id.variant);
    families[s.category].insert(family);
    family_of[s.id] = family;
  }
  std::set<std::string> train_families;
  for (const auto& [category, fams] : families) {
    std::vector<std::string> units(fams.begin(), fams.end());
    std::mt19937_64 rng(seed ^ hash(category));
    for (std::size_t i = units.size(); i > 1; --i) std::swap(units[i - 1], units[rng() % i]);
    const auto n_train = static_cast<std::size_t>(split_fraction * units.size() + 0.5);
    if (n_train == 0 || n_train >= units.size()) {
      throw Error(ErrorKind::split_too_small,
                  category + ": " + std::to_string(units.size()) + " template families cannot be split at " +
                      text::format_fixed(split_fraction, 2));
    }
    train_families.insert(units.begin(), units.begin() + static_cast<long>(n_train));
  }
  DatasetSplit out;
  out.train.seed = out.eval.seed = manifest.seed;
  std::vector<const Sample*> sorted;
  for (const auto& s : manifest.samples) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const Sample* a, const Sample* b) { return a->id < b->id; });
  for (const auto* s : sorted) {
    const bool train = train_families.count(family_of.at(s->id)) > 0;
    (train ? out.train : out.eval).samples.push_back(*s);
    (train ? out.train_pairs : out.eval_pairs).push_back(to_pair(*s));
  }
  return out;
}

std::string serialize_pairs(const std::vector<TrainingPair>& pairs) {
  std::string out = std::string(kPairsHeader) + "\n";
  for (const auto& p : pairs) {
    out += nlohmann::json{{"instruction", p.instruction}, {"input", p.input}, {"output", p.output}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<TrainingPair> parse_pairs(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != kPairsHeader) {
    throw Error(ErrorKind::schema_version, "pairs file must start with #ftpairs-v1", 1);
  }
  std::vector<TrainingPair> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      out.push_back({j.at("instruction").get<std::string>(), j.at("input").get<std::string>(),
                     j.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::malformed_record, e.what(), static_cast<int>(i) + 1);
    }
  }
  return out;
}

FineTuneConfig make_config(const std::string& model_name,
                           const std::map<std::string, std::string>& overrides) {
  if (text::trim(model_name).empty()) {
    throw Error(ErrorKind::invalid_argument, "model name must not be empty");
  }
  FineTuneConfig c;
  c.model_name = model_name;
  const auto lowered = text::to_lower(model_name);
  if (lowered.find("deepseek") != std::string::npos) c.epochs = 10;
  else if (lowered.find("llama") != std::string::npos) c.epochs = 4;
  for (const auto& [key, value] : overrides) {
    if (key == "model_name") throw Error(ErrorKind::unknown_key, "model_name is not an override");
    apply(c, key, value);
    c.overridden.insert(key);
  }
  if (c.epochs == 0) {
    throw Error(ErrorKind::invalid_argument,
                "no default epoch count for '" + model_name + "'; pass an epochs override");
  }
  return c;
}

std::string serialize_config(const FineTuneConfig& c) {
  std::string out = std::string(kConfigHeader) + "\n";
  out += "model_name=" + c.model_name + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "lora_r=" + std::to_string(c.lora_r) + "\n";
  out += "lora_alpha=" + std::to_string(c.lora_alpha) + "\n";
  out += "lora_dropout=" + shortest(c.lora_dropout) + "\n";
  out += "learning_rate=" + shortest(c.learning_rate) + "\n";
  out += "max_seq_len=" + std::to_string(c.max_seq_len) + "\n";
  out += "optimizer=" + c.optimizer + "\n";
  out += "overrides=" + text::join({c.overridden.begin(), c.overridden.end()}, ",") + "\n";
  return out;
}

std::string write_config(const std::string& model_name,
                         const std::map<std::string, std::string>& overrides) {
  return serialize_config(make_config(model_name, overrides));
}

FineTuneConfig parse_config(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != kConfigHeader) {
    throw Error(ErrorKind::schema_version, "config must start with #ftconfig-v1", 1);
  }
  FineTuneConfig c;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::malformed_record, "expected key=value", static_cast<int>(i) + 1);
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key == "overrides") {
      std::size_t start = 0;
      while (start < value.size()) {
        auto comma = value.find(',', start);
        if (comma == std::string::npos) comma = value.size();
        if (comma > start) c.overridden.insert(value.substr(start, comma - start));
        start = comma + 1;
      }
      continue;
    }
    apply(c, key, value);
    seen.insert(key);
  }
  for (const auto& key : config_keys()) {
    if (!seen.count(key)) throw Error(ErrorKind::malformed_record, "config lacks '" + key + "'");
  }
  return c;
}

void write_export(const DatasetSplit& split, const std::string& config_text,
                  const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  text::write_file((dir / "train.jsonl").string(), serialize_pairs(split.train_pairs));
  text::write_file((dir / "eval.jsonl").string(), serialize_pairs(split.eval_pairs));
  corpus::write_manifest(split.eval, (dir / "eval_manifest.jsonl").string());
  text::write_file((dir / "ftconfig.txt").string(), config_text);
}

}  // namespace vulnbench::finetune
