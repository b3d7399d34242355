#pragma once

#include <string>
#include <vector>

#include "quotemark/charid.hpp"
#include "quotemark/corpus.hpp"

namespace quotemark {

struct MentionCluster {
  int cluster_id = 0;
  std::vector<MentionSpan> spans;  // sorted by start, no duplicates
};

struct ClusterMatch {
  int cluster_id = 0;
  MatchResult match;  // Uniq / Mult / None over the cluster's named spans
};

enum class MentionSource { PdncGold, ExplicitMatch, ExternalCoref };

const char* mention_source_name(MentionSource s);

struct ResolvedMention {
  Span span;
  CharId char_id = kUnknownChar;
  MentionSource source = MentionSource::ExplicitMatch;
};

struct CandidateInventory {
  std::vector<ResolvedMention> mentions;  // sorted, non-overlapping
  std::vector<std::string> warnings;      // ConflictingGold reports
};

struct MentionConfig {
  // Whether spans inside gold quotations vote in cluster matching.
  bool use_inside_quote_spans = true;
};

// Maximal word-boundary-aligned alias occurrences resolved to a unique
// character.
std::vector<ResolvedMention> scan_explicit_mentions(const NovelBundle& bundle,
                                                    const Lexicon& lexicon);

// Named spans (capitalized away from a sentence start) vote via the staged
// matcher; unanimity is Uniq, disagreement Mult, silence None. The matcher
// object carries the per-bundle token stream so batches stay cheap.
class ClusterMatcher {
 public:
  ClusterMatcher(const NovelBundle& bundle, const NameMatcher& matcher,
                 const Lexicon& lexicon, const MentionConfig& config = {});

  ClusterMatch match(const MentionCluster& cluster) const;

 private:
  const NovelBundle& bundle_;
  const NameMatcher& matcher_;
  MentionConfig config_;
  std::vector<Token> tokens_;
  std::vector<bool> initial_;
};

ClusterMatch match_cluster_to_entity(const MentionCluster& cluster,
                                     const NovelBundle& bundle,
                                     const NameMatcher& matcher,
                                     const Lexicon& lexicon,
                                     const MentionConfig& config = {});

// Priority merge (gold > explicit match > external coref) of the three
// mention sources into a non-overlapping inventory.
CandidateInventory curate_candidates(
    const NovelBundle& bundle,
    const std::vector<ResolvedMention>& explicit_mentions,
    const std::vector<MentionCluster>& external_clusters,
    const std::vector<ClusterMatch>& cluster_matches);

// External coref dump: JSON-lines, one cluster per line,
// {"cluster_id": int, "spans": [{"start","end","text"}]}.
// Spans that do not slice to their text are dropped with a warning.
struct ClusterLoadResult {
  std::vector<MentionCluster> clusters;
  std::vector<std::string> warnings;
};
ClusterLoadResult load_cluster_dump(const std::string& path,
                                    const NovelBundle& bundle);

// Inventory JSONL: {"start","end","char_id","source"} per line.
std::string inventory_to_jsonl(const CandidateInventory& inv);
CandidateInventory inventory_from_jsonl(const std::string& text);

}  // namespace quotemark
