#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "vulnbench/error.hpp"
#include "vulnbench/harness.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::harness {
namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

Url split_url(const std::string& base) {
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::invalid_argument, "endpoint url '" + base + "' has no scheme");
  }
  if (base.compare(0, scheme_end, "http") != 0) {
    throw Error(ErrorKind::invalid_argument,
                "unsupported scheme in '" + base + "' (only http:// and mock: are built in)");
  }
  const auto slash = base.find('/', scheme_end + 3);
  Url url{base.substr(0, slash), slash == std::string::npos ? "" : base.substr(slash)};
  while (!url.path.empty() && url.path.back() == '/') url.path.pop_back();
  return url;
}

void check_config(const ModelEndpoint& c) {
  if (!(c.temperature >= 0)) throw Error(ErrorKind::invalid_argument, "temperature must be >= 0");
  if (c.retries < 0) throw Error(ErrorKind::invalid_argument, "retries must be >= 0");
  if (c.max_new_tokens < 1) throw Error(ErrorKind::invalid_argument, "max_new_tokens must be >= 1");
  if (c.timeout.count() <= 0) throw Error(ErrorKind::invalid_argument, "timeout must be positive");
}

}  // namespace

HttpEndpoint::HttpEndpoint(ModelEndpoint config) : config_(std::move(config)) {
  check_config(config_);
  split_url(config_.base_url);
}

std::string HttpEndpoint::complete(const ChatRequest& request) {
  const auto url = split_url(config_.base_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  const nlohmann::json body = {{"model", config_.model_name},
                               {"messages", messages},
                               {"temperature", config_.temperature},
                               {"max_tokens", config_.max_new_tokens},
                               {"seed", request.seed}};
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.auth_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto start = std::chrono::steady_clock::now();
  const auto res = client.Post(url.path + "/chat/completions", headers, body.dump(),
                               "application/json");
  if (!res) {
    const auto err = res.error();
    const auto what = httplib::to_string(err);
    const bool slow = std::chrono::steady_clock::now() - start >= config_.timeout;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && slow)) {
      throw Error(ErrorKind::timeout, config_.base_url + ": " + what);
    }
    throw Error(ErrorKind::transport_failure, config_.base_url + ": " + what);
  }
  if (res->status < 200 || res->status >= 300) throw Error::http(res->status, res->body);
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_record, std::string("unexpected completion body: ") + e.what());
  }
}

MockEndpoint::MockEndpoint(std::vector<Rule> rules, ModelEndpoint config)
    : rules_(std::move(rules)), config_(std::move(config)) {
  check_config(config_);
}

MockEndpoint::MockEndpoint(MockEndpoint&& other) noexcept
    : rules_(std::move(other.rules_)),
      config_(std::move(other.config_)),
      attempts_(std::move(other.attempts_)) {}

MockEndpoint MockEndpoint::parse(std::string_view script, ModelEndpoint config) {
  const auto lines = text::split_lines(script);
  if (lines.empty() || text::trim(lines[0]) != "#mock-v1") {
    throw Error(ErrorKind::schema_version, "mock script must start with #mock-v1", 1);
  }
  std::vector<Rule> rules;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto line = lines[i];
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split_record(line);
    if (f.size() != 4) {
      throw Error(ErrorKind::malformed_record, "expected pattern|run|failures|response", line_no);
    }
    Rule r;
    r.pattern = text::unescape_field(f[0]);
    try {
      if (f[1] != "*") {
        r.run = std::stoi(f[1]);
        if (*r.run < 1) throw std::invalid_argument("run");
      }
      r.failures = std::stoi(f[2]);
      if (r.failures < 0) throw std::invalid_argument("failures");
    } catch (const std::exception&) {
      throw Error(ErrorKind::malformed_record, "bad run or failure count", line_no);
    }
    r.response = text::unescape_field(f[3]);
    rules.push_back(std::move(r));
  }
  return MockEndpoint(std::move(rules), std::move(config));
}

MockEndpoint MockEndpoint::load(const std::string& path, ModelEndpoint config) {
  return parse(text::read_file(path), std::move(config));
}

std::string MockEndpoint::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  for (const auto& rule : rules_) {
    if (!text::glob_match(rule.pattern, request.sample_id)) continue;
    if (rule.run && *rule.run != request.run) continue;
    const int n = ++attempts_[{request.sample_id, request.run}];
    if (n <= rule.failures) {
      throw Error(ErrorKind::transport_failure,
                  "scripted failure " + std::to_string(n) + " for " + request.sample_id);
    }
    return rule.response;
  }
  throw Error(ErrorKind::invalid_argument, "no mock rule for " + request.sample_id + " run " +
                                               std::to_string(request.run));
}

int MockEndpoint::attempts(const std::string& sample_id, int run) const {
  std::lock_guard lock(mutex_);
  const auto it = attempts_.find({sample_id, run});
  return it == attempts_.end() ? 0 : it->second;
}

std::string serialize_mock_script(const std::vector<MockEndpoint::Rule>& rules) {
  std::string out = "#mock-v1\n";
  for (const auto& r : rules) {
    out += text::escape_field(r.pattern) + "|" + (r.run ? std::to_string(*r.run) : "*") + "|" +
           std::to_string(r.failures) + "|" + text::escape_field(r.response) + "\n";
  }
  return out;
}

std::unique_ptr<ChatEndpoint> make_endpoint(const ModelEndpoint& config) {
  constexpr std::string_view kMock = "mock:";
  if (config.base_url.rfind(kMock, 0) == 0) {
    return std::make_unique<MockEndpoint>(
        MockEndpoint::load(config.base_url.substr(kMock.size()), config));
  }
  return std::make_unique<HttpEndpoint>(config);
}

}  // namespace vulnbench::harness
