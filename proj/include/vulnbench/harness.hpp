#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/corpus.hpp"
#include "vulnbench/metrics.hpp"

namespace vulnbench::harness {

enum class PromptMode { baseline, role_based };

std::string_view to_string(PromptMode mode);
PromptMode parse_prompt_mode(std::string_view text);

inline constexpr std::string_view kLanguagePlaceholder = "[Programming Language]";
inline constexpr std::string_view kSourcePlaceholder = "[Source Code]";

struct PromptSpec {
  PromptMode mode = PromptMode::baseline;
  // Empty means "the language of each sample's platform".
  std::string language_name;
  std::string system_text;
  std::string user_template;

  static PromptSpec for_mode(PromptMode mode, std::string language_name = {});
};

struct Message {
  std::string role;
  std::string content;

  bool operator==(const Message&) const = default;
};

// Throws missing_rendering when the sample has no llm_source.
std::vector<Message> build_prompt(const PromptSpec& spec, const Sample& sample);

struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  double temperature = 0.7;
  int max_new_tokens = 512;
  std::chrono::milliseconds timeout{60000};
  std::string auth_env = "LLM_API_KEY";
  int retries = 2;
  std::chrono::milliseconds backoff{250};
};

struct ChatRequest {
  std::vector<Message> messages;
  std::string sample_id;
  int run = 1;
  std::uint64_t seed = 0;
};

// One stateless completion per call. Implementations throw Error with
// transport_failure, timeout or http_status.
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual const ModelEndpoint& config() const = 0;
  // Scripted endpoints report zero latency and skip retry backoff.
  virtual bool simulated() const { return false; }
};

// OpenAI-style POST {base_url}/chat/completions.
class HttpEndpoint : public ChatEndpoint {
 public:
  explicit HttpEndpoint(ModelEndpoint config);
  std::string complete(const ChatRequest& request) override;
  const ModelEndpoint& config() const override { return config_; }

 private:
  ModelEndpoint config_;
};

// In-process responder driven by a `#mock-v1` script. Each record is
// `pattern|run|failures|response`: `pattern` globs the sample id, `run` is a
// run index or `*`, the first `failures` attempts of every matching
// (sample, run) fail with a transport error. The first matching record wins.
class MockEndpoint : public ChatEndpoint {
 public:
  struct Rule {
    std::string pattern;
    std::optional<int> run;
    int failures = 0;
    std::string response;
  };

  explicit MockEndpoint(std::vector<Rule> rules, ModelEndpoint config = {});
  MockEndpoint(MockEndpoint&& other) noexcept;
  static MockEndpoint parse(std::string_view script, ModelEndpoint config = {});
  static MockEndpoint load(const std::string& path, ModelEndpoint config = {});

  std::string complete(const ChatRequest& request) override;
  const ModelEndpoint& config() const override { return config_; }
  bool simulated() const override { return true; }

  int attempts(const std::string& sample_id, int run) const;
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  std::vector<Rule> rules_;
  ModelEndpoint config_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, int>, int> attempts_;
};

std::string serialize_mock_script(const std::vector<MockEndpoint::Rule>& rules);

// `mock:<script path>` selects MockEndpoint, anything else HttpEndpoint.
std::unique_ptr<ChatEndpoint> make_endpoint(const ModelEndpoint& config);

// Retries transport failures and timeouts up to config().retries times with
// exponential backoff. Status errors surface immediately.
std::string query(ChatEndpoint& endpoint, const ChatRequest& request);

// Negative phrasings win over category aliases. Aliases of the sample's
// platform are tried first, then the other platform's.
std::optional<std::string> parse_response(std::string_view response, Platform platform,
                                          const Taxonomy& taxonomy = Taxonomy::builtin());

struct PredictionRecord {
  std::string sample_id;
  int run = 1;
  PromptMode mode = PromptMode::baseline;
  std::string raw_response;
  std::optional<std::string> parsed_category;
  bool predicted_vulnerable = false;
  bool error = false;  // raw_response then holds the error message
  std::chrono::milliseconds latency{0};

  bool operator==(const PredictionRecord&) const = default;
};

struct EvalOptions {
  PromptMode mode = PromptMode::baseline;
  int repetitions = 3;
  std::uint64_t seed = 0;
  int concurrency = 4;
};

// repetitions x |samples| records sorted by (sample_id, run). Failed requests
// become error records.
std::vector<PredictionRecord> run_eval(ChatEndpoint& endpoint, const CorpusManifest& manifest,
                                       const EvalOptions& options);

// Pooled counts over every record. Throws unknown_sample_id.
std::map<std::string, metrics::ConfusionMatrix> score(
    const std::vector<PredictionRecord>& records, const CorpusManifest& manifest);

inline constexpr std::string_view kPredictionsHeader = "#predictions-v1";

std::string serialize_predictions(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_predictions(std::string_view content);
void write_predictions(const std::vector<PredictionRecord>& records, const std::string& path);
std::vector<PredictionRecord> load_predictions(const std::string& path);

// Mock rules answering every vulnerable sample with its category and every
// safe sample with "none".
std::vector<MockEndpoint::Rule> identity_script(const CorpusManifest& manifest);

// Mock rules reproducing one confusion matrix per category. Requests are
// taken in (sample_id, run) order: the first tp vulnerable requests name the
// category, the first fp safe requests name it too, the rest answer "none".
std::vector<MockEndpoint::Rule> script_for_matrices(
    const CorpusManifest& manifest, const std::map<std::string, metrics::ConfusionMatrix>& target,
    int repetitions);

}  // namespace vulnbench::harness
