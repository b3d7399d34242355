#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quotemark/attrib.hpp"
#include "quotemark/charid.hpp"
#include "quotemark/corpus.hpp"
#include "quotemark/mentions.hpp"
#include "quotemark/quotes.hpp"

namespace quotemark {

// ---- character identification ----

struct CharacterRecognitionReport {
  size_t n_gold = 0;          // N
  size_t n_pred_entities = 0; // K
  size_t n_matched_pred = 0;  // K' (diagnostic)
  size_t n_matched_gold = 0;  // M
  double cr = 0.0;            // M / N
};

CharacterRecognitionReport character_recognition_score(
    const std::vector<CharacterEntity>& pred_entities,
    const std::vector<CharacterEntity>& gold_characters,
    const Lexicon& lexicon);

// Homogeneity: fraction of clusters linking to exactly one gold entity.
// Completeness: mean count of homogeneous clusters per gold entity, over
// entities that have at least one. v is their harmonic mean and can
// exceed 1 because completeness can.
struct ClusteringReport {
  size_t n_clusters = 0;
  std::optional<double> homogeneity;
  std::optional<double> completeness;
  std::optional<double> v_score;
};

ClusteringReport clustering_scores(
    const std::vector<CharacterEntity>& pred_entities,
    const std::vector<CharacterEntity>& gold_characters,
    const Lexicon& lexicon);

// ---- coreference ----

struct MentionClusterStats {
  size_t n_clusters = 0;
  double frac_uniq = 0.0;
  double frac_mult = 0.0;
  double frac_none = 0.0;
};

MentionClusterStats mention_cluster_stats(
    const std::vector<ClusterMatch>& matches);

struct MentionResolutionReport {
  size_t n_eval = 0;
  std::optional<double> accuracy;
};

// Gold internal mentions whose exact span lands in a Uniq cluster; a hit
// needs the cluster's entity among the mention's referents.
MentionResolutionReport mention_resolution_accuracy(
    const std::vector<MentionCluster>& clusters,
    const std::vector<ClusterMatch>& matches, const NovelBundle& bundle);

// ---- quotation identification ----

struct QuoteIdScore {
  double exact_match_rate = 0.0;
  double overlap_recall = 0.0;
  double precision_proxy = 0.0;
  size_t n_gold = 0;
  size_t n_pred = 0;
};

QuoteIdScore quotation_identification_score(const std::vector<Span>& pred,
                                            const NovelBundle& bundle,
                                            bool trim_delimiters = true);

// ---- speaker attribution ----

struct AttributionReport {
  double overall = 0.0;  // micro accuracy; UNRESOLVED counts as wrong
  size_t n_total = 0;
  size_t n_correct = 0;
  // explicit / anaphoric / implicit / rest (= anaphoric + implicit)
  std::map<std::string, double> by_type;
  std::map<std::string, size_t> by_type_n;
  std::map<std::string, double> per_novel;
  double macro_mean = 0.0;
};

AttributionReport attribution_accuracy_report(
    const std::map<std::string, std::vector<Attribution>>& per_novel,
    const std::map<std::string, const NovelBundle*>& bundles);

// ---- cross-validation folds ----

enum class SplitMode { Quotations, Novels };

struct FoldSpec {
  SplitMode mode = SplitMode::Quotations;
  // Quotations mode holds "novel_id/quote_id" keys; novels mode novel_ids.
  std::vector<std::vector<std::string>> folds;
  uint64_t seed = 0;
};

// Quotations mode stratifies folds within each novel with a rotating
// dealer so global sizes stay within one of each other; novels mode deals
// whole novels.
FoldSpec make_cv_folds(const std::vector<const NovelBundle*>& bundles,
                       SplitMode mode, uint64_t seed, size_t n_folds = 5);

// ---- report JSON ----

struct CharIdNovelRow {
  std::string novel;
  size_t n_chars = 0;
  double cr = 0.0;
  size_t n_clus = 0;
  std::optional<double> c_hom, c_comp, v_score;
};

std::string charid_report_to_json(const std::vector<CharIdNovelRow>& rows);

std::string attribution_report_to_json(
    const std::map<std::string, std::map<std::string, AttributionReport>>&
        by_method_and_split);

std::string unresolved_report_to_json(const UnresolvedRateReport& report);

}  // namespace quotemark
