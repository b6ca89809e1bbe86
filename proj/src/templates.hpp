#pragma once

#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vulnbench/corpus.hpp"

namespace vulnbench::corpus::detail {

// Reads template parameters, failing on absent names.
class ParamReader {
 public:
  explicit ParamReader(const Params& params) : params_(params) {}

  const std::string& operator()(const std::string& name) const;
  // Replaces every `${name}` in `pattern`.
  std::string fill(std::string_view pattern) const;

 private:
  const Params& params_;
};

class SourceBuilder {
 public:
  explicit SourceBuilder(const ParamReader& params) : params_(params) {}

  void add(std::string_view pattern, LineTag tag = LineTag::common);
  void guard(std::string_view pattern, bool is_guard_under_test);
  void blank() { add(""); }

  TaggedSource take() { return std::move(source_); }

 private:
  const ParamReader& params_;
  TaggedSource source_;
};

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n);
const std::string& pick_from(std::mt19937_64& rng, const std::vector<std::string>& pool);

TemplatePair algorand_template(std::string_view category, int variant, const ParamReader& params);
Params algorand_params(std::string_view category, int variant, std::mt19937_64& rng);
const std::map<std::string, std::vector<std::string>>& algorand_pools();

TemplatePair solana_template(std::string_view category, int variant, const ParamReader& params);
Params solana_params(std::string_view category, int variant, std::mt19937_64& rng);
const std::map<std::string, std::vector<std::string>>& solana_pools();

}  // namespace vulnbench::corpus::detail
