#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quotemark/corpus.hpp"
#include "quotemark/lexicon.hpp"
#include "quotemark/mentions.hpp"

namespace quotemark {

// Prediction outcome when no resolved character can be assigned. Distinct
// from kUnknownChar, which is a gold label for unnamed utterers.
constexpr CharId kUnresolved = -2;

enum class AttributionMethod { ExplicitRule, NearestMention, SeqModel };

const char* attribution_method_name(AttributionMethod m);

struct Attribution {
  std::string quote_id;
  CharId predicted = kUnresolved;
  AttributionMethod method = AttributionMethod::ExplicitRule;
  std::optional<Span> evidence;
};

// Narration adjacent to the quote (same paragraph, clipped at neighboring
// quotations), searched for a <mention, speech-verb> pair within five
// tokens of the quote boundary. Nearest pair wins; ties go to the side
// after the quote.
std::optional<std::pair<Span, CharId>> detect_referring_expression(
    const Quotation& q, const NovelBundle& bundle,
    const CandidateInventory& inventory, const Lexicon& lexicon);

// Referring-expression rule. With use_gold_referring, the annotated
// expression span is resolved against the inventory instead of detection.
Attribution attribute_explicit(const Quotation& q, const NovelBundle& bundle,
                               const CandidateInventory& inventory,
                               const Lexicon& lexicon,
                               bool use_gold_referring = false);

// Nearest resolved mention outside any quotation, searched backward from
// the quote start then forward from its end, within two paragraphs either
// way; ties break backward.
Attribution attribute_nearest(const Quotation& q, const NovelBundle& bundle,
                              const CandidateInventory& inventory);

struct UnresolvedRateReport {
  struct NovelRate {
    size_t n_quotations = 0;
    size_t n_unresolved = 0;
    double rate = 0.0;
  };
  std::map<std::string, NovelRate> per_novel;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

UnresolvedRateReport compute_unresolved_rate(
    const std::map<std::string, std::vector<Attribution>>& per_novel);

// Attribution JSONL: {"quote_id","predicted_char_id","method","evidence"}.
std::string attributions_to_jsonl(const std::vector<Attribution>& attrs);
std::vector<Attribution> attributions_from_jsonl(const std::string& text);

}  // namespace quotemark
