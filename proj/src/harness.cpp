#include "vulnbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "vulnbench/error.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::harness {
namespace {

constexpr std::string_view kBaselineUser =
    "Can you check if the following smart contract written in [Programming Language] contains "
    "a vulnerability? --[Source Code]--";

constexpr std::string_view kRoleSystem =
    "You are a smart contract security analyzer. You receive smart contract written in "
    "[Programming Language] as input and answer with the vulnerability identified if exist. "
    "The vulnerabilities are classified according to OWASP Top 10.";

constexpr std::string_view kNegativePhrases[] = {
    "no vulnerability",     "no vulnerabilities", "not vulnerable",
    "does not contain a vulnerability", "is safe", "is secure",
};

// Substitutes both placeholders in one pass so source text containing a
// placeholder literal is left alone.
std::string fill_template(std::string_view tmpl, std::string_view language, std::string_view source) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.substr(i, kLanguagePlaceholder.size()) == kLanguagePlaceholder) {
      out += language;
      i += kLanguagePlaceholder.size();
    } else if (tmpl.substr(i, kSourcePlaceholder.size()) == kSourcePlaceholder) {
      out += source;
      i += kSourcePlaceholder.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t request_seed(std::uint64_t seed, std::string_view sample_id, int run) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : sample_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix(seed ^ mix(h + static_cast<std::uint64_t>(run)));
}

bool is_negative(std::string_view response) {
  std::string bare = text::to_lower(text::trim(response));
  while (!bare.empty() && (bare.back() == '.' || bare.back() == '!')) bare.pop_back();
  if (bare == "none") return true;
  return std::any_of(std::begin(kNegativePhrases), std::end(kNegativePhrases),
                     [&](std::string_view p) { return text::find_word_ci(response, p).has_value(); });
}

}  // namespace

std::string_view to_string(PromptMode mode) {
  return mode == PromptMode::baseline ? "baseline" : "role_based";
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "baseline") return PromptMode::baseline;
  if (text == "role_based") return PromptMode::role_based;
  throw Error(ErrorKind::invalid_argument, "unknown prompt mode '" + std::string(text) + "'");
}

PromptSpec PromptSpec::for_mode(PromptMode mode, std::string language_name) {
  PromptSpec spec;
  spec.mode = mode;
  spec.language_name = std::move(language_name);
  spec.user_template = std::string(kBaselineUser);
  if (mode == PromptMode::role_based) spec.system_text = std::string(kRoleSystem);
  return spec;
}

std::vector<Message> build_prompt(const PromptSpec& spec, const Sample& sample) {
  const auto it = sample.renderings.find(std::string(kLlmSource));
  if (it == sample.renderings.end()) {
    throw Error(ErrorKind::missing_rendering, sample.id + " has no llm_source rendering");
  }
  const std::string language =
      spec.language_name.empty() ? std::string(language_name(sample.platform)) : spec.language_name;
  std::vector<Message> out;
  if (spec.mode == PromptMode::role_based) {
    out.push_back({"system", fill_template(spec.system_text, language, "")});
  }
  out.push_back({"user", fill_template(spec.user_template, language, it->second)});
  return out;
}

std::string query(ChatEndpoint& endpoint, const ChatRequest& request) {
  const auto& cfg = endpoint.config();
  for (int attempt = 0;; ++attempt) {
    try {
      return endpoint.complete(request);
    } catch (const Error& e) {
      const bool transient =
          e.kind() == ErrorKind::transport_failure || e.kind() == ErrorKind::timeout;
      if (!transient || attempt >= cfg.retries) throw;
      if (!endpoint.simulated()) std::this_thread::sleep_for(cfg.backoff * (1 << attempt));
    }
  }
}

std::optional<std::string> parse_response(std::string_view response, Platform platform,
                                          const Taxonomy& taxonomy) {
  if (is_negative(response)) return std::nullopt;
  if (const auto* c = taxonomy.parse_category_label(response, platform)) return c->key;
  const auto other = platform == Platform::algorand ? Platform::solana : Platform::algorand;
  if (const auto* c = taxonomy.parse_category_label(response, other)) return c->key;
  return std::nullopt;
}

std::vector<PredictionRecord> run_eval(ChatEndpoint& endpoint, const CorpusManifest& manifest,
                                       const EvalOptions& options) {
  if (options.repetitions < 1) {
    throw Error(ErrorKind::invalid_argument, "repetitions must be at least 1");
  }
  std::vector<const Sample*> samples;
  for (const auto& s : manifest.samples) samples.push_back(&s);
  std::sort(samples.begin(), samples.end(),
            [](const Sample* a, const Sample* b) { return a->id < b->id; });

  const auto spec = PromptSpec::for_mode(options.mode);
  const std::size_t reps = static_cast<std::size_t>(options.repetitions);
  std::vector<PredictionRecord> records(samples.size() * reps);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      const Sample& sample = *samples[i / reps];
      auto& rec = records[i];
      rec.sample_id = sample.id;
      rec.run = static_cast<int>(i % reps) + 1;
      rec.mode = options.mode;
      const auto start = std::chrono::steady_clock::now();
      try {
        ChatRequest req{build_prompt(spec, sample), sample.id, rec.run,
                        request_seed(options.seed, sample.id, rec.run)};
        rec.raw_response = query(endpoint, req);
        rec.parsed_category = parse_response(rec.raw_response, sample.platform);
        rec.predicted_vulnerable = rec.parsed_category.has_value();
      } catch (const Error& e) {
        rec.error = true;
        rec.raw_response = e.what();
      }
      if (!endpoint.simulated()) {
        rec.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
      }
    }
  };

  const int workers =
      static_cast<int>(std::min<std::size_t>(std::max(1, options.concurrency), records.size()));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return records;
}

std::map<std::string, metrics::ConfusionMatrix> score(
    const std::vector<PredictionRecord>& records, const CorpusManifest& manifest) {
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : manifest.samples) by_id[s.id] = &s;
  std::map<std::string, metrics::ConfusionMatrix> out;
  for (const auto& r : records) {
    const auto it = by_id.find(r.sample_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::unknown_sample_id, "prediction for unknown sample '" + r.sample_id + "'");
    }
    const Sample& s = *it->second;
    auto& cm = out[s.category];
    if (s.label == Label::vulnerable) {
      (r.parsed_category == s.category ? cm.tp : cm.fn) += 1;
    } else {
      (r.parsed_category ? cm.fp : cm.tn) += 1;
    }
  }
  return out;
}

std::string serialize_predictions(const std::vector<PredictionRecord>& records) {
  std::string out = std::string(kPredictionsHeader) + "\n";
  for (const auto& r : records) {
    out += text::escape_field(r.sample_id) + "|" + std::to_string(r.run) + "|" +
           std::string(to_string(r.mode)) + "|" + text::escape_field(r.parsed_category.value_or("")) +
           "|" + (r.error ? "error" : r.predicted_vulnerable ? "1" : "0") + "|" +
           std::to_string(r.latency.count()) + "|" + text::escape_field(r.raw_response) + "\n";
  }
  return out;
}

std::vector<PredictionRecord> parse_predictions(std::string_view content) {
  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != kPredictionsHeader) {
    throw Error(ErrorKind::schema_version, "predictions file must start with #predictions-v1", 1);
  }
  std::vector<PredictionRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split_record(lines[i]);
    auto fail = [&](const std::string& why) {
      return Error(ErrorKind::malformed_record, why, line_no);
    };
    if (f.size() != 7) throw fail("expected 7 fields, got " + std::to_string(f.size()));
    PredictionRecord r;
    r.sample_id = text::unescape_field(f[0]);
    try {
      r.run = std::stoi(f[1]);
      r.latency = std::chrono::milliseconds(std::stoll(f[5]));
      r.mode = parse_prompt_mode(f[2]);
    } catch (const std::exception& e) {
      throw fail(std::string("bad field: ") + e.what());
    }
    if (r.run < 1) throw fail("run must be positive");
    const auto parsed = text::unescape_field(f[3]);
    if (!parsed.empty()) r.parsed_category = parsed;
    if (f[4] == "error") {
      r.error = true;
    } else if (f[4] == "1" || f[4] == "0") {
      r.predicted_vulnerable = f[4] == "1";
    } else {
      throw fail("predicted must be 1, 0 or error");
    }
    if (r.predicted_vulnerable != r.parsed_category.has_value()) {
      throw fail("predicted flag disagrees with parsed_category");
    }
    r.raw_response = text::unescape_field(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_predictions(const std::vector<PredictionRecord>& records, const std::string& path) {
  text::write_file(path, serialize_predictions(records));
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  return parse_predictions(text::read_file(path));
}

namespace {

std::string detection(const std::string& category) {
  return "The contract contains a " + Taxonomy::builtin().at(category).display_name +
         " vulnerability.";
}

constexpr std::string_view kNegativeAnswer = "No vulnerability found.";

}  // namespace

std::vector<MockEndpoint::Rule> identity_script(const CorpusManifest& manifest) {
  std::vector<MockEndpoint::Rule> rules;
  for (const auto& s : manifest.samples) {
    rules.push_back({s.id, std::nullopt, 0,
                     s.label == Label::vulnerable ? detection(s.category)
                                                  : std::string(kNegativeAnswer)});
  }
  return rules;
}

std::vector<MockEndpoint::Rule> script_for_matrices(
    const CorpusManifest& manifest, const std::map<std::string, metrics::ConfusionMatrix>& target,
    int repetitions) {
  std::vector<const Sample*> samples;
  for (const auto& s : manifest.samples) samples.push_back(&s);
  std::sort(samples.begin(), samples.end(),
            [](const Sample* a, const Sample* b) { return a->id < b->id; });
  std::map<std::pair<std::string, Label>, long> used;
  std::vector<MockEndpoint::Rule> rules;
  for (const auto* s : samples) {
    const auto it = target.find(s->category);
    if (it == target.end()) {
      throw Error(ErrorKind::unknown_category, "no target matrix for " + s->category);
    }
    const long quota = s->label == Label::vulnerable ? it->second.tp : it->second.fp;
    for (int run = 1; run <= repetitions; ++run) {
      const bool hit = used[{s->category, s->label}]++ < quota;
      rules.push_back({s->id, run, 0,
                       hit ? detection(s->category) : std::string(kNegativeAnswer)});
    }
  }
  return rules;
}

}  // namespace vulnbench::harness
