#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quotemark/span.hpp"

namespace quotemark {

// ---- character classes over Unicode scalars ----
// ASCII plus the Latin-1 / Latin Extended-A letters that occur in
// 19th/20th-century English-language novels (café, Brontë, façade).

bool is_letter(char32_t c);
bool is_digit(char32_t c);
bool is_word_char(char32_t c);  // letter or digit
bool is_upper_letter(char32_t c);
bool is_apostrophe(char32_t c);  // ' and U+2019
bool is_space(char32_t c);
char32_t fold_lower(char32_t c);

// Case-folded copy (lowercasing per fold_lower).
std::u32string fold_lower(const std::u32string& s);

// ---- normalization ----

// Line-break and blank-line normalization with an offset remap back into
// the normalized text. Offsets in annotation tables refer to the raw text;
// remap_span converts them.
struct NormalizedText {
  std::u32string text;
  // new_pos[i] = index of raw scalar i in `text`, or UINT32_MAX if dropped.
  std::vector<uint32_t> new_pos;

  // Remaps a raw-text span into the normalized text. Spans whose content
  // was entirely dropped come back empty.
  Span remap_span(Span raw) const;
};

// CRLF/CR -> LF, strips a UTF-8 BOM, turns whitespace-only lines into empty
// lines, collapses runs of blank lines to one, trims leading/trailing blank
// lines.
NormalizedText normalize_text(const std::u32string& raw);

// ---- paragraphs ----

// Maximal runs of non-blank lines; spans cover the run's content including
// interior newlines, excluding the surrounding line breaks.
std::vector<Span> segment_paragraphs(const std::u32string& text);

// ---- tokens ----

struct Token {
  std::u32string text;
  uint32_t start = 0;
  uint32_t end = 0;

  Span span() const { return {start, end}; }
};

// Tokens are maximal runs of letters/digits (with word-internal
// apostrophes), or single punctuation marks. text[start:end]
// reconstructs each token exactly.
std::vector<Token> tokenize_with_offsets(const std::u32string& text);

// Flags tokens that open a sentence: the first word token of each
// paragraph and the first word token after . ! ? (a period directly after
// an abbreviation such as an honorific does not end the sentence).
// `abbreviations` holds case-folded forms without the trailing period.
std::vector<bool> sentence_initial_flags(
    const std::vector<Token>& tokens, const std::vector<Span>& paragraphs,
    const std::vector<std::u32string>& abbreviations);

// Index of the paragraph containing `pos`, or -1 when pos falls between
// paragraphs. `paragraphs` must be sorted.
int paragraph_of(const std::vector<Span>& paragraphs, uint32_t pos);

}  // namespace quotemark
