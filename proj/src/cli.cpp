#include "vulnbench/cli.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulnbench/algorand_analyzer.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/error.hpp"
#include "vulnbench/finetune.hpp"
#include "vulnbench/harness.hpp"
#include "vulnbench/metrics.hpp"
#include "vulnbench/solana_analyzer.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench::cli {
namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct CorpusGenArgs {
  std::uint64_t seed = kDefaultSeed;
  int per_class = corpus::kMinPerClass;
  std::string out;
};

struct ScanArgs {
  std::string manifest;
  std::vector<std::string> files;
  std::string platform;
  bool check = false;
  bool table = false;
};

struct EvalArgs {
  std::string manifest;
  std::vector<std::string> categories;
  std::string endpoint;
  std::string model = "default";
  std::string mode = "baseline";
  int reps = 3;
  std::uint64_t seed = kDefaultSeed;
  int concurrency = 4;
  double temperature = 0.7;
  int max_tokens = 512;
  int timeout_ms = 60000;
  int retries = 2;
  std::string out;
};

struct MetricsArgs {
  std::vector<std::string> inputs;
  std::string manifest;
  std::string ref;
  std::string table;
  std::string format = "csv";
  std::string out;
};

struct ExportArgs {
  std::string manifest;
  double split = 0.8;
  std::uint64_t seed = kDefaultSeed;
  std::string mode = "per-platform";
  std::string model;
  std::vector<std::string> overrides;
  std::string out;
};

struct MockArgs {
  std::string manifest;
  std::string ref;
  std::string model = "DS";
  std::string config = "baseline";
  int reps = 3;
  bool identity = false;
  std::string out;
};

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") out << content;
  else text::write_file(path, content);
}

Platform platform_for_file(const std::string& path, const std::string& forced) {
  if (!forced.empty()) return parse_platform(forced);
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".teal") return Platform::algorand;
  if (ext == ".rs") return Platform::solana;
  throw Error(ErrorKind::invalid_argument,
              path + ": cannot infer platform from extension; pass --platform");
}

std::vector<Finding> scan_text(Platform platform, std::string_view source) {
  auto findings = platform == Platform::algorand ? algorand::analyze_source(source)
                                                 : solana::analyze_source(source);
  sort_findings(findings);
  return findings;
}

void print_findings(const std::vector<Finding>& findings, bool table, std::ostream& out) {
  if (table) {
    out << findings_table(findings);
    return;
  }
  for (const auto& f : findings) out << to_record(f) << '\n';
}

int run_corpus_gen(const CorpusGenArgs& a, std::ostream& out) {
  const auto manifest = corpus::generate(a.seed, a.per_class);
  emit(a.out, corpus::serialize_manifest(manifest), out);
  if (!a.out.empty() && a.out != "-") {
    out << "wrote " << manifest.samples.size() << " samples to " << a.out << '\n';
  }
  return kExitOk;
}

int run_corpus_validate(const std::string& path, std::ostream& out) {
  const auto manifest = corpus::load_manifest(path);
  const auto report = corpus::validate(manifest);
  for (const auto& v : report.balance_violations) out << "balance: " << v << '\n';
  for (const auto& v : report.ground_truth_violations) out << "ground truth: " << v << '\n';
  out << manifest.samples.size() << " samples, "
      << report.balance_violations.size() + report.ground_truth_violations.size()
      << " violations\n";
  return report.ok() ? kExitOk : kExitFindings;
}

int run_scan(const ScanArgs& a, std::ostream& out) {
  if (a.manifest.empty() == a.files.empty()) {
    throw Error(ErrorKind::invalid_argument, "scan takes either --manifest or source files");
  }
  int mismatches = 0;
  if (!a.files.empty()) {
    for (const auto& path : a.files) {
      const auto findings = scan_text(platform_for_file(path, a.platform), text::read_file(path));
      if (a.files.size() > 1) out << "# " << path << '\n';
      print_findings(findings, a.table, out);
    }
    return kExitOk;
  }
  const auto manifest = corpus::load_manifest(a.manifest);
  for (const auto& sample : manifest.samples) {
    auto findings = corpus::analyze_sample(sample);
    sort_findings(findings);
    if (a.check) {
      if (sample.label == Label::safe && !findings.empty()) {
        out << sample.id << ": safe sample has " << findings.size() << " finding(s)\n";
        ++mismatches;
      } else if (sample.label == Label::vulnerable && findings.empty()) {
        out << sample.id << ": vulnerable sample has no finding\n";
        ++mismatches;
      }
      continue;
    }
    out << "# " << sample.id << '\n';
    print_findings(findings, a.table, out);
  }
  if (a.check) {
    out << manifest.samples.size() << " samples, " << mismatches << " mismatches\n";
    return mismatches == 0 ? kExitOk : kExitFindings;
  }
  return kExitOk;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  auto manifest = corpus::load_manifest(a.manifest);
  if (!a.categories.empty()) {
    CorpusManifest filtered;
    filtered.seed = manifest.seed;
    for (const auto& c : a.categories) {
      const auto part = corpus::filter_category(manifest, c);
      if (part.samples.empty()) {
        throw Error(ErrorKind::unknown_category, "no samples for category '" + c + "'");
      }
      filtered.samples.insert(filtered.samples.end(), part.samples.begin(), part.samples.end());
    }
    manifest = std::move(filtered);
  }
  harness::ModelEndpoint config;
  config.base_url = a.endpoint;
  config.model_name = a.model;
  config.temperature = a.temperature;
  config.max_new_tokens = a.max_tokens;
  config.timeout = std::chrono::milliseconds(a.timeout_ms);
  config.retries = a.retries;
  auto endpoint = harness::make_endpoint(config);

  harness::EvalOptions options;
  options.mode = harness::parse_prompt_mode(a.mode);
  options.repetitions = a.reps;
  options.seed = a.seed;
  options.concurrency = a.concurrency;
  const auto records = harness::run_eval(*endpoint, manifest, options);
  emit(a.out, harness::serialize_predictions(records), out);

  std::size_t failed = 0;
  for (const auto& r : records) failed += r.error ? 1 : 0;
  if (!a.out.empty() && a.out != "-") {
    out << "wrote " << records.size() << " records to " << a.out << " (" << failed
        << " failed)\n";
  }
  return kExitOk;
}

// Ground truth from ids of the form category.label.NN.
CorpusManifest manifest_from_ids(const std::vector<harness::PredictionRecord>& records) {
  const auto& taxonomy = Taxonomy::builtin();
  CorpusManifest out;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.sample_id).second) continue;
    const auto first = r.sample_id.find('.');
    const auto second = r.sample_id.find('.', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw Error(ErrorKind::unknown_sample_id,
                  "'" + r.sample_id + "' does not encode its category; pass --manifest");
    }
    Sample s;
    s.id = r.sample_id;
    s.category = r.sample_id.substr(0, first);
    s.platform = taxonomy.at(s.category).platform;
    s.label = parse_label(r.sample_id.substr(first + 1, second - first - 1));
    out.samples.push_back(std::move(s));
  }
  return out;
}

// `path[,model[,config]]`
struct InputSpec {
  std::string path;
  std::string model = "DS";
  std::string config = "baseline";
};

InputSpec parse_input(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = spec.find(',', start);
    parts.push_back(spec.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.size() > 3 || parts[0].empty()) {
    throw Error(ErrorKind::invalid_argument, "--in expects path[,model[,config]]: " + spec);
  }
  InputSpec in{parts[0]};
  if (parts.size() > 1 && !parts[1].empty()) in.model = parts[1];
  if (parts.size() > 2 && !parts[2].empty()) in.config = parts[2];
  return in;
}

metrics::Rows rows_from_inputs(const std::vector<std::string>& inputs,
                               const std::string& manifest_path) {
  std::optional<CorpusManifest> manifest;
  if (!manifest_path.empty()) manifest = corpus::load_manifest(manifest_path);
  const auto& taxonomy = Taxonomy::builtin();
  metrics::Rows rows;
  for (const auto& spec : inputs) {
    const auto in = parse_input(spec);
    const auto records = harness::load_predictions(in.path);
    const auto truth = manifest ? *manifest : manifest_from_ids(records);
    for (const auto& [category, cm] : harness::score(records, truth)) {
      if (cm.total() == 0) continue;
      rows[{taxonomy.at(category).platform, category, in.config, in.model}] =
          metrics::compute_metrics(cm);
    }
  }
  return rows;
}

int run_metrics(const MetricsArgs& a, std::ostream& out) {
  const auto format = metrics::parse_table_format(a.format);
  const auto rows = rows_from_inputs(a.inputs, a.manifest);
  emit(a.out, metrics::emit_table(rows, format), out);
  if (a.ref.empty()) return kExitOk;
  const auto diff = metrics::compare_with_reference(rows, metrics::load_reference(a.ref));
  for (const auto& d : diff) out << "diff " << d.str() << '\n';
  out << "diff against " << a.ref << ": " << diff.size() << " entries\n";
  return diff.empty() ? kExitOk : kExitFindings;
}

int run_report(const MetricsArgs& a, std::ostream& out) {
  if (a.inputs.empty() == a.table.empty()) {
    throw Error(ErrorKind::invalid_argument, "report takes either --in or --table");
  }
  const auto format = metrics::parse_table_format(a.format);
  const auto rows = a.table.empty() ? rows_from_inputs(a.inputs, a.manifest)
                                    : metrics::load_reference(a.table).rows;
  emit(a.out, metrics::emit_owasp_report(metrics::group_by_owasp(rows), format), out);
  return kExitOk;
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::invalid_argument, "--set expects key=value: " + item);
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

int run_export(const ExportArgs& a, std::ostream& out) {
  const auto manifest = corpus::load_manifest(a.manifest);
  const auto config = finetune::write_config(a.model, parse_overrides(a.overrides));
  auto export_one = [&](const CorpusManifest& part, const std::string& dir) {
    const auto split = finetune::export_dataset(part, a.split, a.seed);
    finetune::write_export(split, config, dir);
    out << dir << ": " << split.train_pairs.size() << " train, " << split.eval_pairs.size()
        << " eval\n";
  };
  if (a.mode == "joint") {
    export_one(manifest, a.out);
    return kExitOk;
  }
  if (a.mode != "per-platform") {
    throw Error(ErrorKind::invalid_argument, "unknown export mode '" + a.mode + "'");
  }
  for (const auto platform : {Platform::algorand, Platform::solana}) {
    CorpusManifest part;
    part.seed = manifest.seed;
    for (const auto& s : manifest.samples) {
      if (s.platform == platform) part.samples.push_back(s);
    }
    if (part.samples.empty()) continue;
    export_one(part, (std::filesystem::path(a.out) / std::string(to_string(platform))).string());
  }
  return kExitOk;
}

int run_mock_script(const MockArgs& a, std::ostream& out) {
  const auto manifest = corpus::load_manifest(a.manifest);
  if (a.identity) {
    emit(a.out, harness::serialize_mock_script(harness::identity_script(manifest)), out);
    return kExitOk;
  }
  if (a.ref.empty()) throw Error(ErrorKind::invalid_argument, "mock-script needs --ref or --identity");
  const auto counts = manifest.counts();
  std::map<std::string, metrics::ConfusionMatrix> target;
  for (const auto& [key, row] : metrics::load_reference(a.ref).rows) {
    if (key.model != a.model || key.config != a.config) continue;
    const auto pos = counts.find({key.category, Label::vulnerable});
    const auto neg = counts.find({key.category, Label::safe});
    if (pos == counts.end() || neg == counts.end()) continue;
    const auto candidates =
        metrics::reconstruct_cm(row, pos->second * a.reps, neg->second * a.reps);
    if (candidates.empty()) {
      throw Error(ErrorKind::invalid_argument,
                  "no confusion matrix reproduces the " + key.category + " row");
    }
    target[key.category] = candidates.front();
  }
  if (target.empty()) {
    throw Error(ErrorKind::invalid_argument,
                "reference has no rows for " + a.model + "/" + a.config);
  }
  emit(a.out, harness::serialize_mock_script(harness::script_for_matrices(manifest, target, a.reps)),
       out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vulnerability benchmark toolkit for Algorand and Solana contracts", "vulnbench"};
  app.require_subcommand(1);
  app.fallthrough(false);

  auto* corpus_cmd = app.add_subcommand("corpus", "Generate or validate a labeled corpus");
  corpus_cmd->require_subcommand(1);
  CorpusGenArgs gen;
  auto* gen_cmd = corpus_cmd->add_subcommand("gen", "Generate a label-balanced corpus manifest");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per category and label")
      ->capture_default_str()
      ->check(CLI::Range(corpus::kMinPerClass, 1000));
  gen_cmd->add_option("--out", gen.out, "Output manifest (stdout when omitted)");
  std::string validate_path;
  auto* validate_cmd =
      corpus_cmd->add_subcommand("validate", "Check label balance and analyzer ground truth");
  validate_cmd->add_option("--manifest", validate_path, "Corpus manifest")->required();

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Run the static analyzers");
  scan_cmd->add_option("files", scan.files, "TEAL (.teal) or Rust (.rs) sources");
  scan_cmd->add_option("--manifest", scan.manifest, "Scan every sample of a corpus manifest");
  scan_cmd->add_option("--platform", scan.platform, "Force the platform: algorand or solana");
  scan_cmd->add_flag("--check", scan.check,
                     "Compare findings with sample labels; exit 1 on any mismatch");
  scan_cmd->add_flag("--table", scan.table, "Print findings as a table instead of records");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Query a model endpoint for every sample");
  eval_cmd->add_option("--manifest", ev.manifest, "Corpus manifest")->required();
  eval_cmd->add_option("--endpoint", ev.endpoint, "http://host:port[/path] or mock:<script>")
      ->required();
  eval_cmd->add_option("--category", ev.categories, "Restrict to these categories");
  eval_cmd->add_option("--model", ev.model, "Model name sent to the endpoint")
      ->capture_default_str();
  eval_cmd->add_option("--mode", ev.mode, "Prompt mode: baseline or role_based")
      ->capture_default_str();
  eval_cmd->add_option("--reps", ev.reps, "Repetitions per sample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", ev.seed, "Request seed base")->capture_default_str();
  eval_cmd->add_option("--concurrency", ev.concurrency, "Concurrent requests")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--temperature", ev.temperature, "Sampling temperature")
      ->capture_default_str();
  eval_cmd->add_option("--max-tokens", ev.max_tokens, "Maximum new tokens")
      ->capture_default_str();
  eval_cmd->add_option("--timeout-ms", ev.timeout_ms, "Per-request timeout")
      ->capture_default_str();
  eval_cmd->add_option("--retries", ev.retries, "Retries on transport failure")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--out", ev.out, "Predictions file (stdout when omitted)");

  MetricsArgs met;
  auto* metrics_cmd = app.add_subcommand("metrics", "Score predictions into a metrics table");
  metrics_cmd->add_option("--in", met.inputs, "Predictions as path[,model[,config]]")
      ->required();
  metrics_cmd->add_option("--manifest", met.manifest,
                          "Ground truth manifest (default: read from sample ids)");
  metrics_cmd->add_option("--ref", met.ref, "Reference table to diff against");
  metrics_cmd->add_option("--format", met.format, "csv or markdown")->capture_default_str();
  metrics_cmd->add_option("--out", met.out, "Table output (stdout when omitted)");

  MetricsArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Mean accuracy grouped by OWASP category");
  report_cmd->add_option("--in", rep.inputs, "Predictions as path[,model[,config]]");
  report_cmd->add_option("--manifest", rep.manifest,
                         "Ground truth manifest (default: read from sample ids)");
  report_cmd->add_option("--table", rep.table, "Group the rows of a metrics table instead");
  report_cmd->add_option("--format", rep.format, "csv or markdown")->capture_default_str();
  report_cmd->add_option("--out", rep.out, "Report output (stdout when omitted)");

  ExportArgs ex;
  auto* export_cmd = app.add_subcommand("export-ft", "Export fine-tuning pairs and config");
  export_cmd->add_option("--manifest", ex.manifest, "Corpus manifest")->required();
  export_cmd->add_option("--model", ex.model, "Base model name")->required();
  export_cmd->add_option("--split", ex.split, "Training fraction")->capture_default_str();
  export_cmd->add_option("--seed", ex.seed, "Split seed")->capture_default_str();
  export_cmd->add_option("--mode", ex.mode, "per-platform or joint")->capture_default_str();
  export_cmd->add_option("--set", ex.overrides, "Config override key=value");
  export_cmd->add_option("--out", ex.out, "Output directory")->required();

  MockArgs mock;
  auto* mock_cmd =
      app.add_subcommand("mock-script", "Write a mock endpoint script for offline runs");
  mock_cmd->add_option("--manifest", mock.manifest, "Corpus manifest")->required();
  mock_cmd->add_option("--ref", mock.ref, "Reproduce the rows of this table");
  mock_cmd->add_option("--model", mock.model, "Table model column")->capture_default_str();
  mock_cmd->add_option("--config", mock.config, "Table config column")->capture_default_str();
  mock_cmd->add_option("--reps", mock.reps, "Repetitions per sample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  mock_cmd->add_flag("--identity", mock.identity, "Answer every sample correctly");
  mock_cmd->add_option("--out", mock.out, "Script output (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_corpus_gen(gen, out);
    if (validate_cmd->parsed()) return run_corpus_validate(validate_path, out);
    if (scan_cmd->parsed()) return run_scan(scan, out);
    if (eval_cmd->parsed()) return run_eval(ev, out);
    if (metrics_cmd->parsed()) return run_metrics(met, out);
    if (report_cmd->parsed()) return run_report(rep, out);
    if (export_cmd->parsed()) return run_export(ex, out);
    if (mock_cmd->parsed()) return run_mock_script(mock, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace vulnbench::cli
