#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/corpus.hpp"

namespace vulnbench::finetune {

inline constexpr std::string_view kNegativeOutput = "none";
inline constexpr std::string_view kPairsHeader = "#ftpairs-v1";
inline constexpr std::string_view kConfigHeader = "#ftconfig-v1";

struct TrainingPair {
  std::string instruction;
  std::string input;
  std::string output;

  bool operator==(const TrainingPair&) const = default;
};

TrainingPair to_pair(const Sample& sample);

struct DatasetSplit {
  CorpusManifest train;
  CorpusManifest eval;
  std::vector<TrainingPair> train_pairs;
  std::vector<TrainingPair> eval_pairs;
};

// The split unit is one template family: (platform, category, variant). Each
// category keeps round-half-up(fraction x units) families for training and
// the rest for evaluation. Throws split_too_small when either side would lose
// a category.
DatasetSplit export_dataset(const CorpusManifest& manifest, double split_fraction,
                            std::uint64_t seed);

std::string serialize_pairs(const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> parse_pairs(std::string_view content);

struct FineTuneConfig {
  std::string model_name;
  int epochs = 0;
  int lora_r = 64;
  int lora_alpha = 16;
  double lora_dropout = 0.1;
  double learning_rate = 2e-4;
  int max_seq_len = 2048;
  std::string optimizer = "adam";
  std::set<std::string> overridden;

  bool operator==(const FineTuneConfig&) const = default;
};

// Epochs default to 10 for DeepSeek models and 4 for LLaMA models. Throws
// unknown_key for an override the config does not have.
FineTuneConfig make_config(const std::string& model_name,
                           const std::map<std::string, std::string>& overrides = {});
std::string write_config(const std::string& model_name,
                         const std::map<std::string, std::string>& overrides = {});
std::string serialize_config(const FineTuneConfig& config);
FineTuneConfig parse_config(std::string_view content);

// Writes train.jsonl, eval.jsonl, eval_manifest.jsonl and ftconfig.txt.
void write_export(const DatasetSplit& split, const std::string& config_text,
                  const std::string& out_dir);

}  // namespace vulnbench::finetune
