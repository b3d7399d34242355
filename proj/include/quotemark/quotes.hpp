#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quotemark/corpus.hpp"
#include "quotemark/lexicon.hpp"

namespace quotemark {

// Primary/secondary quote-mark pairs used by one novel.
struct QuoteStyle {
  char32_t primary_open, primary_close;
  char32_t secondary_open, secondary_close;
  std::string name;  // auto|double|single|smart-double|smart-single

  static QuoteStyle straight_double();
  static QuoteStyle straight_single();
  static QuoteStyle smart_double();
  static QuoteStyle smart_single();
  static std::optional<QuoteStyle> by_name(const std::string& name);
};

// Picks the style whose opening marks dominate the text.
QuoteStyle detect_quote_style(const std::u32string& text);

struct QuoteSpanCandidate {
  Span span;                         // includes the delimiters
  std::vector<int> paragraph_ids;
  int nesting_depth = 0;
};

struct QuoteExtraction {
  std::vector<QuoteSpanCandidate> candidates;  // top-level and nested, sorted
  std::vector<std::string> warnings;           // unbalanced-quote recoveries

  std::vector<QuoteSpanCandidate> top_level() const;
};

// Top-level quoted spans plus nested secondary spans. A paragraph ending
// with an unclosed primary quote continues into a successor paragraph that
// begins with a primary open mark; otherwise the span closes at the
// paragraph end with a warning.
QuoteExtraction extract_quotations(const NovelBundle& bundle,
                                   const QuoteStyle& style);
QuoteExtraction extract_quotations(const std::u32string& text,
                                   const std::vector<Span>& paragraphs,
                                   const QuoteStyle& style);

// explicit: a referring expression is attached (gold or detected, or a
// name+speech-verb pattern in the adjacent narration); anaphoric: adjacent
// narration carries pronoun+speech-verb; implicit otherwise.
QuoteType classify_quote_type(const QuoteSpanCandidate& q,
                              const NovelBundle& bundle,
                              std::optional<Span> referring,
                              const Lexicon& lexicon);

}  // namespace quotemark
