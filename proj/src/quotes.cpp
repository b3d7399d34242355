#include "quotemark/quotes.hpp"

#include <algorithm>
#include <array>

#include "quotemark/utf8.hpp"

namespace quotemark {

QuoteStyle QuoteStyle::straight_double() {
  return {U'"', U'"', U'\'', U'\'', "double"};
}
QuoteStyle QuoteStyle::straight_single() {
  return {U'\'', U'\'', U'"', U'"', "single"};
}
QuoteStyle QuoteStyle::smart_double() {
  return {U'“', U'”', U'‘', U'’', "smart-double"};
}
QuoteStyle QuoteStyle::smart_single() {
  return {U'‘', U'’', U'“', U'”', "smart-single"};
}

std::optional<QuoteStyle> QuoteStyle::by_name(const std::string& name) {
  if (name == "double") return straight_double();
  if (name == "single") return straight_single();
  if (name == "smart-double") return smart_double();
  if (name == "smart-single") return smart_single();
  return std::nullopt;
}

namespace {

bool open_boundary_before(const std::u32string& text, size_t i,
                          size_t region_start) {
  if (i == region_start) return true;
  char32_t prev = text[i - 1];
  if (is_space(prev)) return true;
  switch (prev) {
    case U'(': case U'[': case U'-': case 0x2013: case 0x2014:
    case U'"': case U'“': case U'‘':
      return true;
    default:
      return false;
  }
}

bool word_at(const std::u32string& text, size_t i) {
  return i < text.size() && is_word_char(text[i]);
}

}  // namespace

QuoteStyle detect_quote_style(const std::u32string& text) {
  size_t smart_d = 0, smart_s = 0, straight_d = 0, straight_s = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char32_t c = text[i];
    if (c == U'“') ++smart_d;
    else if (c == U'‘') ++smart_s;  // U+2019 doubles as apostrophe
    else if (c == U'"') ++straight_d;
    else if (c == U'\'' && open_boundary_before(text, i, 0) && word_at(text, i + 1))
      ++straight_s;
  }
  straight_d /= 2;  // open+close share one mark
  // Preference order breaks ties: smart-double, double, smart-single, single.
  std::array<std::pair<size_t, QuoteStyle>, 4> scored = {{
      {smart_d, QuoteStyle::smart_double()},
      {straight_d, QuoteStyle::straight_double()},
      {smart_s, QuoteStyle::smart_single()},
      {straight_s, QuoteStyle::straight_single()},
  }};
  size_t best = 0;
  for (size_t k = 1; k < scored.size(); ++k)
    if (scored[k].first > scored[best].first) best = k;
  return scored[best].second;
}

std::vector<QuoteSpanCandidate> QuoteExtraction::top_level() const {
  std::vector<QuoteSpanCandidate> out;
  for (const auto& c : candidates)
    if (c.nesting_depth == 0) out.push_back(c);
  return out;
}

QuoteExtraction extract_quotations(const NovelBundle& bundle,
                                   const QuoteStyle& style) {
  return extract_quotations(bundle.text, bundle.paragraph_index, style);
}

QuoteExtraction extract_quotations(const std::u32string& text,
                                   const std::vector<Span>& paragraphs,
                                   const QuoteStyle& style) {
  QuoteExtraction result;
  const bool primary_same = style.primary_open == style.primary_close;
  const bool secondary_same = style.secondary_open == style.secondary_close;

  // An open primary span, possibly carried across paragraph breaks by the
  // continuation convention.
  struct Open {
    uint32_t start;
    std::vector<int> paragraph_ids;
  };
  std::optional<Open> open;
  std::optional<uint32_t> sec_open;

  auto is_single_mark = [](char32_t c) {
    return c == U'\'' || c == U'’' || c == U'‘';
  };

  for (size_t pi = 0; pi < paragraphs.size(); ++pi) {
    const Span para = paragraphs[pi];
    size_t i = para.start;
    if (open) {
      open->paragraph_ids.push_back(static_cast<int>(pi));
      // The continuation paragraph restates the open mark; consume it.
      if (i < para.end && text[i] == style.primary_open) ++i;
    }
    for (; i < para.end; ++i) {
      char32_t c = text[i];
      // Word-internal apostrophes are never quote marks.
      if (is_single_mark(c) && word_at(text, i - 1) && word_at(text, i + 1) &&
          i > para.start)
        continue;

      bool may_open, may_close;
      if (c == style.primary_open || c == style.primary_close) {
        if (primary_same) {
          may_close = open.has_value();
          may_open = !may_close;
          if (c == U'\'') {
            // Apostrophe-vs-delimiter: an opener must sit on a word start.
            if (may_open && !(open_boundary_before(text, i, para.start) &&
                              word_at(text, i + 1)))
              continue;
          }
        } else {
          may_open = c == style.primary_open;
          may_close = c == style.primary_close;
        }
        if (may_open && !open) {
          open = Open{static_cast<uint32_t>(i), {static_cast<int>(pi)}};
        } else if (may_close && open) {
          QuoteSpanCandidate q;
          q.span = {open->start, static_cast<uint32_t>(i + 1)};
          q.paragraph_ids = open->paragraph_ids;
          q.nesting_depth = 0;
          result.candidates.push_back(std::move(q));
          open.reset();
          sec_open.reset();
        } else if (may_close) {
          result.warnings.push_back(
              "UnbalancedQuote: dangling close mark at offset " +
              std::to_string(i));
        }
        continue;
      }
      if (!open) continue;  // secondary marks outside dialogue are ignored
      if (c == style.secondary_open || c == style.secondary_close) {
        bool s_open, s_close;
        if (secondary_same) {
          s_close = sec_open.has_value();
          s_open = !s_close;
          if (c == U'\'' && s_open &&
              !(open_boundary_before(text, i, para.start) &&
                word_at(text, i + 1)))
            continue;
        } else {
          s_open = c == style.secondary_open;
          s_close = c == style.secondary_close;
        }
        if (s_open && !sec_open) {
          sec_open = static_cast<uint32_t>(i);
        } else if (s_close && sec_open) {
          QuoteSpanCandidate q;
          q.span = {*sec_open, static_cast<uint32_t>(i + 1)};
          q.paragraph_ids = {static_cast<int>(pi)};
          q.nesting_depth = 1;
          result.candidates.push_back(std::move(q));
          sec_open.reset();
        }
      }
    }
    // Paragraph ended inside a primary quote: continue only when the next
    // paragraph re-opens it; otherwise recover by closing here.
    if (open) {
      bool continues = pi + 1 < paragraphs.size() &&
                       text[paragraphs[pi + 1].start] == style.primary_open &&
                       !primary_same;
      if (primary_same && pi + 1 < paragraphs.size()) {
        uint32_t nstart = paragraphs[pi + 1].start;
        continues = text[nstart] == style.primary_open &&
                    (style.primary_open != U'\'' || word_at(text, nstart + 1));
      }
      if (!continues) {
        QuoteSpanCandidate q;
        q.span = {open->start, para.end};
        q.paragraph_ids = open->paragraph_ids;
        q.nesting_depth = 0;
        result.candidates.push_back(std::move(q));
        result.warnings.push_back(
            "UnbalancedQuote: unclosed quote recovered at paragraph " +
            std::to_string(pi) + " end");
        open.reset();
      }
      sec_open.reset();  // nested spans do not continue across paragraphs
    }
  }
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const QuoteSpanCandidate& a, const QuoteSpanCandidate& b) {
              if (a.span != b.span) return a.span < b.span;
              return a.nesting_depth < b.nesting_depth;
            });
  return result;
}

// ---------------------------------------------------------------------------
// Quote-type classification
// ---------------------------------------------------------------------------

namespace {

bool is_quote_mark_char(char32_t c) {
  return c == U'"' || c == U'“' || c == U'”';
}

enum class Evidence { None, Pronoun, Name };

// Looks for a speech verb in the token window and reports what sits next
// to it: a pronoun subject or a capitalized name.
Evidence verb_subject_evidence(const std::vector<Token>& toks,
                               const Lexicon& lexicon) {
  for (size_t v = 0; v < toks.size(); ++v) {
    if (!is_word_char(toks[v].text[0])) continue;
    if (!lexicon.is_speech_verb(fold_lower(toks[v].text))) continue;
    // Nearest neighbor decides; subject-after-verb checked first.
    const std::array<int, 6> offsets = {1, -1, 2, -2, 3, -3};
    for (int off : offsets) {
      long u = static_cast<long>(v) + off;
      if (u < 0 || u >= static_cast<long>(toks.size())) continue;
      const auto& t = toks[u];
      if (!is_word_char(t.text[0])) continue;
      if (lexicon.is_pronoun(fold_lower(t.text))) return Evidence::Pronoun;
      if (is_upper_letter(t.text[0])) return Evidence::Name;
    }
  }
  return Evidence::None;
}

}  // namespace

QuoteType classify_quote_type(const QuoteSpanCandidate& q,
                              const NovelBundle& bundle,
                              std::optional<Span> referring,
                              const Lexicon& lexicon) {
  if (referring) return QuoteType::Explicit;
  const std::u32string& text = bundle.text;
  const auto& paragraphs = bundle.paragraph_index;
  int last_para = q.paragraph_ids.empty()
                      ? paragraph_of(paragraphs, q.span.end - 1)
                      : q.paragraph_ids.back();
  int first_para = q.paragraph_ids.empty()
                       ? paragraph_of(paragraphs, q.span.start)
                       : q.paragraph_ids.front();

  constexpr size_t kWindowTokens = 5;
  Evidence best = Evidence::None;

  // Narration after the quote, up to the next quote mark in its paragraph.
  if (last_para >= 0) {
    uint32_t limit = paragraphs[last_para].end;
    uint32_t stop = q.span.end;
    while (stop < limit && !is_quote_mark_char(text[stop])) ++stop;
    auto toks = tokenize_with_offsets(
        text.substr(q.span.end, stop - q.span.end));
    if (toks.size() > kWindowTokens) toks.resize(kWindowTokens);
    best = verb_subject_evidence(toks, lexicon);
  }
  // Narration before the quote, back to the previous quote mark.
  if (best == Evidence::None && first_para >= 0) {
    uint32_t limit = paragraphs[first_para].start;
    uint32_t begin = q.span.start;
    while (begin > limit && !is_quote_mark_char(text[begin - 1])) --begin;
    auto toks =
        tokenize_with_offsets(text.substr(begin, q.span.start - begin));
    if (toks.size() > kWindowTokens)
      toks.erase(toks.begin(), toks.end() - kWindowTokens);
    best = verb_subject_evidence(toks, lexicon);
  }
  switch (best) {
    case Evidence::Name: return QuoteType::Explicit;
    case Evidence::Pronoun: return QuoteType::Anaphoric;
    case Evidence::None: return QuoteType::Implicit;
  }
  return QuoteType::Implicit;
}

}  // namespace quotemark
