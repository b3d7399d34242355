#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quotemark/attrib.hpp"
#include "quotemark/corpus.hpp"
#include "quotemark/lexicon.hpp"
#include "quotemark/mentions.hpp"
#include "quotemark/metrics.hpp"
#include "quotemark/quotes.hpp"
#include "quotemark/seqmodel.hpp"

namespace quotemark {

// Resolved run configuration; serialized into every run manifest.
struct RunConfig {
  uint64_t seed = 0;
  std::string quote_style = "auto";
  std::string honorifics_path;
  std::string speech_verbs_path;
  std::string method = "explicit-rule";  // explicit-rule|nearest|seq
  std::string split = "quotations";      // quotations|novels
  size_t n_folds = 5;
  bool include_internal = false;
  bool use_gold_referring = false;
  bool use_inside_quote_spans = true;
  int min_count = 2;
  SeqModelConfig model;

  std::string to_json() const;
  static RunConfig from_json(const std::string& json_text);

  // Applies QUOTEMARK_LEXICON_DIR when paths are unset.
  void resolve_lexicon_paths();
  Lexicon make_lexicon() const;
};

// ---- manifest ----

uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Machine-readable record of one run: inputs, resolved config, outputs,
// all content-hashed. Deterministic (no clocks).
void write_manifest(const std::string& out_path, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const RunConfig& config);

// ---- pipeline steps ----

QuoteStyle resolve_quote_style(const NovelBundle& bundle,
                               const std::string& name);

// Gold-augmented candidate inventory: gold internal mentions, explicit
// alias matches, and (optionally) an external coref dump.
CandidateInventory build_inventory(const NovelBundle& bundle,
                                   const Lexicon& lexicon,
                                   const std::optional<std::string>& coref_path,
                                   const MentionConfig& config = {});

std::vector<Attribution> run_rule_attribution(
    const NovelBundle& bundle, const CandidateInventory& inventory,
    const Lexicon& lexicon, const std::string& method,
    bool use_gold_referring);

// ---- cross-validated sequential model ----

struct NovelData {
  const NovelBundle* bundle = nullptr;
  const CandidateInventory* inventory = nullptr;
};

struct CvFoldOutput {
  SeqModelParams params;
  std::vector<EpochTrace> trace;
};

struct CvResult {
  FoldSpec folds;
  std::vector<CvFoldOutput> fold_models;
  std::map<std::string, std::vector<Attribution>> predictions;  // per novel
  AttributionReport report;
};

CvResult run_speaker_cv(const std::vector<NovelData>& novels, SplitMode mode,
                        const RunConfig& config);

}  // namespace quotemark
