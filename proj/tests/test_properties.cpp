#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vulnbench/algorand_analyzer.hpp"
#include "vulnbench/corpus.hpp"
#include "vulnbench/finetune.hpp"
#include "vulnbench/harness.hpp"
#include "vulnbench/metrics.hpp"
#include "vulnbench/solana_analyzer.hpp"
#include "vulnbench/taxonomy.hpp"
#include "vulnbench/teal.hpp"
#include "vulnbench/text.hpp"

namespace vulnbench {
namespace {

using vbtest::Gen;
using vbtest::for_all;

const CorpusManifest& base() {
  static const auto m = corpus::generate(42, 5);
  return m;
}

std::set<std::string> categories(const std::vector<Finding>& findings) {
  std::set<std::string> out;
  for (const auto& f : findings) out.insert(f.category);
  return out;
}

// Metrics

metrics::ConfusionMatrix random_cm(Gen& g, int n_pos, int n_neg) {
  const long tp = g.uniform(0, n_pos);
  const long fp = g.uniform(0, n_neg);
  return {tp, fp, n_pos - tp, n_neg - fp};
}

TEST(Property, ReconstructFindsTheGeneratingMatrix) {
  for_all(300, [](Gen& g) {
    const int n_pos = g.uniform(1, 20), n_neg = g.uniform(1, 20);
    const auto cm = random_cm(g, n_pos, n_neg);
    const auto row = metrics::rounded(metrics::compute_metrics(cm));
    const auto found = metrics::reconstruct_cm(row, n_pos, n_neg);
    EXPECT_NE(std::find(found.begin(), found.end(), cm), found.end()) << metrics::to_string(cm);
    for (const auto& other : found) {
      EXPECT_TRUE(metrics::same_at_2dp(metrics::compute_metrics(other), row));
    }
  });
}

TEST(Property, MetricsStayInUnitInterval) {
  for_all(300, [](Gen& g) {
    metrics::ConfusionMatrix cm{g.uniform(0, 30), g.uniform(0, 30), g.uniform(0, 30),
                                g.uniform(0, 30)};
    if (cm.total() == 0) cm.tn = 1;
    const auto r = metrics::compute_metrics(cm);
    for (const double v : {r.accuracy, r.precision, r.recall, r.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_LE(r.f1, std::max(r.precision, r.recall) + 1e-12);
    EXPECT_GE(r.f1, std::min(r.precision, r.recall) - 1e-12);
  });
}

TEST(Property, AveragesIgnoreRowOrder) {
  for_all(50, [](Gen& g) {
    std::vector<std::pair<metrics::RowKey, metrics::MetricsRow>> entries;
    for (const auto& c : Taxonomy::builtin().eval_categories()) {
      for (const char* model : {"DS", "LM"}) {
        entries.push_back({{c.platform, c.key, "baseline", model},
                           metrics::compute_metrics(random_cm(g, 15, 15))});
      }
    }
    metrics::Rows a(entries.begin(), entries.end());
    std::shuffle(entries.begin(), entries.end(), g.engine());
    metrics::Rows b;
    for (const auto& e : entries) b.insert(e);
    EXPECT_EQ(metrics::emit_table(a, metrics::TableFormat::csv),
              metrics::emit_table(b, metrics::TableFormat::csv));
    EXPECT_EQ(metrics::platform_averages(a), metrics::platform_averages(b));
  });
}

// Scoring

TEST(Property, ScoreConservesCountsAndIgnoresOrder) {
  const auto m = corpus::filter_category(base(), "unchecked_asset_receiver");
  for_all(100, [&](Gen& g) {
    const int reps = g.uniform(1, 4);
    std::vector<harness::PredictionRecord> recs;
    for (const auto& s : m.samples) {
      for (int run = 1; run <= reps; ++run) {
        harness::PredictionRecord r;
        r.sample_id = s.id;
        r.run = run;
        r.error = g.coin(0.1);
        if (!r.error && g.coin(0.5)) {
          r.parsed_category = g.coin(0.7) ? s.category : "unchecked_rekey_to";
        }
        r.predicted_vulnerable = r.parsed_category.has_value();
        recs.push_back(r);
      }
    }
    const auto cm = harness::score(recs, m).at("unchecked_asset_receiver");
    EXPECT_EQ(cm.tp + cm.fn, 5L * reps);
    EXPECT_EQ(cm.fp + cm.tn, 5L * reps);
    std::shuffle(recs.begin(), recs.end(), g.engine());
    EXPECT_EQ(harness::score(recs, m).at("unchecked_asset_receiver"), cm);
  });
}

TEST(Property, PredictedIffParsed) {
  const char* phrases[] = {"none",        "No vulnerability",  "Bump Seed",   "rekey",
                           "close to",    "unchecked fee",     "integer overflow",
                           "looks fine",  "arbitrary update",  "type confusion"};
  for_all(200, [&](Gen& g) {
    const auto& s = base().samples[g.uniform(0, static_cast<int>(base().samples.size()) - 1)];
    harness::MockEndpoint mock({{"*", std::nullopt, 0, g.pick(std::vector<std::string>(
                                                           std::begin(phrases), std::end(phrases)))}});
    CorpusManifest one;
    one.samples = {s};
    for (const auto& r : harness::run_eval(mock, one, {harness::PromptMode::baseline, 1, 0, 1})) {
      EXPECT_EQ(r.predicted_vulnerable, r.parsed_category.has_value());
      EXPECT_EQ(r.parsed_category, harness::parse_response(r.raw_response, s.platform));
    }
  });
}

// Taxonomy

TEST(Property, LabelParsingIsDeterministic) {
  const auto& tax = Taxonomy::builtin();
  std::vector<std::string> words = {"the", "contract", "has", "no", "issue", "Bump", "Seed",
                                    "rekey", "fee", "signer", "check", "close", "overflow", "."};
  for (const auto& c : tax.all_categories()) words.push_back(c.display_name);
  for_all(300, [&](Gen& g) {
    std::vector<std::string> parts;
    for (int i = g.uniform(1, 8); i > 0; --i) parts.push_back(g.pick(words));
    const auto text_ = text::join(parts, " ");
    const auto platform = g.coin(0.5) ? Platform::algorand : Platform::solana;
    const auto* a = tax.parse_category_label(text_, platform);
    const auto* b = tax.parse_category_label(text_, platform);
    EXPECT_EQ(a, b) << text_;
    if (a) {
      EXPECT_EQ(a->platform, platform) << text_;
    }
  });
}

// Corpus

TEST(Property, ManifestRoundTripsForAnySeed) {
  for_all(8, [](Gen& g) {
    const auto m = corpus::generate(g.next(), 5 + g.uniform(0, 2));
    EXPECT_EQ(corpus::parse_manifest(corpus::serialize_manifest(m)), m);
    EXPECT_TRUE(corpus::validate(m).ok());
  });
}

// TEAL

TEST(Property, PrintParseFixpointOnCorpus) {
  for (const auto& s : base().samples) {
    if (s.platform != Platform::algorand) continue;
    const auto p = teal::load(s.renderings.at(std::string(kAnalysisSource)));
    const auto printed = teal::print(p);
    EXPECT_EQ(teal::print(teal::load(printed)), printed) << s.id;
    const auto q = teal::load(printed);
    ASSERT_EQ(q.instructions.size(), p.instructions.size());
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
      EXPECT_TRUE(teal::same_code(p.instructions[i], q.instructions[i])) << s.id << " @" << i;
    }
  }
}

std::string random_teal(Gen& g) {
  const std::vector<std::string> straight = {
      "txn Fee",         "txn RekeyTo",        "global ZeroAddress", "int 1000",
      "==",              "<=",                 "&&",                 "||",
      "!",               "dup",                "pop",                "txn TypeEnum",
      "int pay",         "gtxn 0 CloseRemainderTo", "global GroupSize", "txn Sender",
      "addr AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA", "assert"};
  const int n_labels = g.uniform(1, 4);
  std::string out = "#pragma version " + std::to_string(g.uniform(2, 8)) + "\n";
  for (int l = 0; l < n_labels; ++l) {
    for (int i = g.uniform(0, 6); i > 0; --i) out += g.pick(straight) + "\n";
    const int r = g.uniform(0, 5);
    const auto target = "L" + std::to_string(g.uniform(0, n_labels - 1));
    if (r == 0) out += "bnz " + target + "\n";
    if (r == 1) out += "bz " + target + "\n";
    if (r == 2) out += "b " + target + "\n";
    if (r == 3) out += "return\n";
    if (r == 4) out += "err\n";
    if (g.coin(0.3)) out += "// comment " + std::to_string(l) + "\n";
    out += "L" + std::to_string(l) + ":\n";
  }
  out += "int 1\nreturn\n";
  return out;
}

TEST(Property, PrintParseFixpointOnRandomPrograms) {
  for_all(300, [](Gen& g) {
    const auto src = random_teal(g);
    const auto p = teal::load(src);
    const auto printed = teal::print(p);
    EXPECT_EQ(teal::print(teal::load(printed)), printed) << src;
    EXPECT_EQ(teal::load(printed).edges, p.edges) << src;
  });
}

std::string insert_noise(Gen& g, const std::string& src, bool stack_noise) {
  const auto lines = text::split_lines(src);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out += lines[i] + "\n";
    if (i == 0) continue;  // keep the pragma first
    if (g.coin(0.3)) out += "// noise\n";
    if (stack_noise && g.coin(0.3)) {
      const auto t = text::trim(lines[i]);
      const bool after_label = !t.empty() && t.back() == ':';
      if (after_label || t.empty() || t.rfind("//", 0) == 0) continue;
      out += "dup\npop\n";
    }
  }
  return out;
}

TEST(Property, CommentsAndStackNoiseDoNotChangeAlgorandFindings) {
  const auto& samples = base().samples;
  for_all(200, [&](Gen& g) {
    const Sample* s = nullptr;
    while (!s || s->platform != Platform::algorand) {
      s = &samples[g.uniform(0, static_cast<int>(samples.size()) - 1)];
    }
    const auto& src = s->renderings.at(std::string(kAnalysisSource));
    const auto expected = categories(algorand::analyze_source(src));
    EXPECT_EQ(categories(algorand::analyze_source(insert_noise(g, src, false))), expected) << s->id;
    EXPECT_EQ(categories(algorand::analyze_source(insert_noise(g, src, true))), expected) << s->id;
  });
}

// Solana

TEST(Property, RenamingIdentifiersKeepsSolanaFindings) {
  const auto& tax = Taxonomy::builtin();
  const auto cats = tax.eval_categories(Platform::solana);
  const auto& pools = corpus::identifier_pools(Platform::solana);
  for_all(150, [&](Gen& g) {
    const auto& cat = g.pick(cats);
    const int variant = g.uniform(0, corpus::kVariants - 1);
    auto params = corpus::draw_params(Platform::solana, cat.key, variant, g.engine());
    auto renamed = params;
    for (auto& [key, value] : renamed) {
      if (const auto it = pools.find(key); it != pools.end()) value = g.pick(it->second);
    }
    const auto a = corpus::render_pair(Platform::solana, cat.key, variant, params);
    const auto b = corpus::render_pair(Platform::solana, cat.key, variant, renamed);
    for (const auto label : {Label::vulnerable, Label::safe}) {
      EXPECT_EQ(categories(solana::analyze_source(a.analysis_source.render(label))),
                categories(solana::analyze_source(b.analysis_source.render(label))))
          << cat.key << " variant " << variant;
    }
  });
}

TEST(Property, MinimalPairsDifferOnlyInTaggedLines) {
  for (const auto& c : Taxonomy::builtin().eval_categories()) {
    for (int variant = 0; variant < corpus::kVariants; ++variant) {
      std::mt19937_64 rng(variant);
      const auto params = corpus::draw_params(c.platform, c.key, variant, rng);
      const auto pair = corpus::render_pair(c.platform, c.key, variant, params);
      for (const auto* src : {&pair.llm_source, &pair.analysis_source}) {
        std::vector<std::string> common_v, common_s;
        int tagged = 0;
        for (const auto& line : src->lines) {
          if (line.tag == corpus::LineTag::common) {
            common_v.push_back(line.text);
          } else {
            ++tagged;
          }
        }
        EXPECT_GT(tagged, 0) << c.key << " " << variant;
        // Removing each label's own lines leaves the shared skeleton.
        auto strip = [](const std::string& rendered, const corpus::TaggedSource& s,
                        corpus::LineTag own) {
          std::vector<std::string> lines = text::split_lines(rendered);
          std::vector<std::string> out;
          std::size_t j = 0;
          for (const auto& l : s.lines) {
            if (l.tag == corpus::LineTag::common) {
              out.push_back(lines.at(j++));
            } else if (l.tag == own) {
              ++j;
            }
          }
          EXPECT_EQ(j, lines.size());
          return out;
        };
        EXPECT_EQ(strip(src->render(Label::vulnerable), *src, corpus::LineTag::vuln_only), common_v);
        EXPECT_EQ(strip(src->render(Label::safe), *src, corpus::LineTag::safe_only), common_v);
        EXPECT_NE(src->render(Label::vulnerable), src->render(Label::safe));
      }
    }
  }
}

// Fine-tuning export

TEST(Property, ExportIsDeterministicAndPartitions) {
  for_all(20, [](Gen& g) {
    const double fraction = 0.3 + 0.1 * g.uniform(0, 4);
    const auto seed = g.next();
    const auto a = finetune::export_dataset(base(), fraction, seed);
    const auto b = finetune::export_dataset(base(), fraction, seed);
    EXPECT_EQ(finetune::serialize_pairs(a.train_pairs), finetune::serialize_pairs(b.train_pairs));
    EXPECT_EQ(a.eval, b.eval);
    std::set<std::string> ids;
    for (const auto* side : {&a.train, &a.eval}) {
      for (const auto& s : side->samples) EXPECT_TRUE(ids.insert(s.id).second) << s.id;
    }
    EXPECT_EQ(ids.size(), base().samples.size());
  });
}

}  // namespace
}  // namespace vulnbench
