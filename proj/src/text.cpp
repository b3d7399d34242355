#include "quotemark/text.hpp"

#include <algorithm>

namespace quotemark {

bool is_letter(char32_t c) {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
  if (c >= 0xC0 && c <= 0xFF && c != 0xD7 && c != 0xF7) return true;  // Latin-1
  if (c >= 0x100 && c <= 0x17F) return true;  // Latin Extended-A
  return false;
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_word_char(char32_t c) { return is_letter(c) || is_digit(c); }

bool is_upper_letter(char32_t c) {
  if (c >= U'A' && c <= U'Z') return true;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return true;
  return false;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == 0xA0;
}

char32_t fold_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  return c;
}

std::u32string fold_lower(const std::u32string& s) {
  std::u32string out(s);
  for (auto& c : out) c = fold_lower(c);
  return out;
}

Span NormalizedText::remap_span(Span raw) const {
  uint32_t n = static_cast<uint32_t>(new_pos.size());
  uint32_t s = std::min(raw.start, n);
  uint32_t e = std::min(raw.end, n);
  // First kept scalar at or after start.
  uint32_t ns = static_cast<uint32_t>(text.size());
  for (uint32_t i = s; i < e; ++i) {
    if (new_pos[i] != UINT32_MAX) {
      ns = new_pos[i];
      break;
    }
  }
  // Last kept scalar before end.
  uint32_t ne = ns;
  for (uint32_t i = e; i > s; --i) {
    if (new_pos[i - 1] != UINT32_MAX) {
      ne = new_pos[i - 1] + 1;
      break;
    }
  }
  if (ne < ns) ne = ns;
  return {ns, ne};
}

NormalizedText normalize_text(const std::u32string& raw) {
  // Pass 1: line breaks. CRLF and lone CR become LF; BOM dropped.
  std::u32string lf;
  std::vector<uint32_t> lf_pos(raw.size(), UINT32_MAX);
  lf.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    char32_t c = raw[i];
    if (c == 0xFEFF) continue;
    if (c == U'\r') {
      lf_pos[i] = static_cast<uint32_t>(lf.size());
      lf.push_back(U'\n');
      if (i + 1 < raw.size() && raw[i + 1] == U'\n') {
        lf_pos[i + 1] = static_cast<uint32_t>(lf.size() - 1);
        ++i;
      }
      continue;
    }
    lf_pos[i] = static_cast<uint32_t>(lf.size());
    lf.push_back(c);
  }

  // Pass 2: per line, drop content of whitespace-only lines, collapse blank
  // runs, trim blank lines at both ends.
  struct Line {
    size_t begin, end;  // content range in lf, end excludes '\n'
    bool blank;
  };
  std::vector<Line> lines;
  size_t pos = 0;
  while (pos <= lf.size()) {
    size_t eol = lf.find(U'\n', pos);
    size_t end = (eol == std::u32string::npos) ? lf.size() : eol;
    bool blank = true;
    for (size_t i = pos; i < end; ++i) {
      if (!is_space(lf[i])) {
        blank = false;
        break;
      }
    }
    lines.push_back({pos, end, blank});
    if (eol == std::u32string::npos) break;
    pos = eol + 1;
  }
  while (!lines.empty() && lines.back().blank) lines.pop_back();
  size_t first = 0;
  while (first < lines.size() && lines[first].blank) ++first;

  NormalizedText out;
  out.new_pos.assign(raw.size(), UINT32_MAX);
  std::vector<uint32_t> lf_to_new(lf.size(), UINT32_MAX);
  bool prev_blank = false;
  bool any_emitted = false;
  for (size_t li = first; li < lines.size(); ++li) {
    const Line& ln = lines[li];
    if (ln.blank) {
      if (!prev_blank && any_emitted) {
        out.text.push_back(U'\n');  // first '\n' of the separator
        out.text.push_back(U'\n');
      }
      prev_blank = true;
      continue;
    }
    if (!prev_blank && any_emitted) out.text.push_back(U'\n');
    prev_blank = false;
    any_emitted = true;
    for (size_t i = ln.begin; i < ln.end; ++i) {
      lf_to_new[i] = static_cast<uint32_t>(out.text.size());
      out.text.push_back(lf[i]);
    }
  }
  for (size_t i = 0; i < raw.size(); ++i) {
    uint32_t p = lf_pos[i];
    if (p != UINT32_MAX && p < lf_to_new.size()) out.new_pos[i] = lf_to_new[p];
  }
  return out;
}

std::vector<Span> segment_paragraphs(const std::u32string& text) {
  std::vector<Span> paragraphs;
  size_t pos = 0;
  size_t run_start = std::u32string::npos;
  size_t run_end = 0;
  while (pos <= text.size()) {
    size_t eol = text.find(U'\n', pos);
    size_t end = (eol == std::u32string::npos) ? text.size() : eol;
    bool blank = true;
    for (size_t i = pos; i < end; ++i) {
      if (!is_space(text[i])) {
        blank = false;
        break;
      }
    }
    if (!blank) {
      if (run_start == std::u32string::npos) run_start = pos;
      run_end = end;
    } else if (run_start != std::u32string::npos) {
      paragraphs.push_back({static_cast<uint32_t>(run_start),
                            static_cast<uint32_t>(run_end)});
      run_start = std::u32string::npos;
    }
    if (eol == std::u32string::npos) break;
    pos = eol + 1;
  }
  if (run_start != std::u32string::npos) {
    paragraphs.push_back(
        {static_cast<uint32_t>(run_start), static_cast<uint32_t>(run_end)});
  }
  return paragraphs;
}

std::vector<Token> tokenize_with_offsets(const std::u32string& text) {
  std::vector<Token> tokens;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    char32_t c = text[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_word_char(c)) {
      size_t start = i;
      ++i;
      while (i < n) {
        if (is_word_char(text[i])) {
          ++i;
        } else if (is_apostrophe(text[i]) && i + 1 < n &&
                   is_word_char(text[i + 1])) {
          i += 2;  // word-internal apostrophe: don't, o'clock
        } else {
          break;
        }
      }
      tokens.push_back({text.substr(start, i - start),
                        static_cast<uint32_t>(start),
                        static_cast<uint32_t>(i)});
      continue;
    }
    tokens.push_back({std::u32string(1, c), static_cast<uint32_t>(i),
                      static_cast<uint32_t>(i + 1)});
    ++i;
  }
  return tokens;
}

std::vector<bool> sentence_initial_flags(
    const std::vector<Token>& tokens, const std::vector<Span>& paragraphs,
    const std::vector<std::u32string>& abbreviations) {
  std::vector<bool> flags(tokens.size(), false);
  auto is_abbrev = [&](const std::u32string& word) {
    std::u32string folded = fold_lower(word);
    return std::find(abbreviations.begin(), abbreviations.end(), folded) !=
           abbreviations.end();
  };
  size_t para = 0;
  bool pending = true;
  for (size_t t = 0; t < tokens.size(); ++t) {
    const Token& tok = tokens[t];
    while (para < paragraphs.size() && tok.start >= paragraphs[para].end) {
      ++para;
      pending = true;  // new paragraph restarts a sentence
    }
    if (is_word_char(tok.text[0])) {
      if (pending) flags[t] = true;
      pending = false;
      continue;
    }
    char32_t c = tok.text[0];
    if (c == U'!' || c == U'?') {
      pending = true;
    } else if (c == U'.') {
      bool after_abbrev =
          t > 0 && is_word_char(tokens[t - 1].text[0]) &&
          tokens[t - 1].end == tok.start && is_abbrev(tokens[t - 1].text);
      if (!after_abbrev) pending = true;
    }
    // Closing quotes and brackets keep the pending flag as-is.
  }
  return flags;
}

int paragraph_of(const std::vector<Span>& paragraphs, uint32_t pos) {
  auto it = std::upper_bound(
      paragraphs.begin(), paragraphs.end(), pos,
      [](uint32_t p, const Span& s) { return p < s.start; });
  if (it == paragraphs.begin()) return -1;
  --it;
  if (pos < it->end) return static_cast<int>(it - paragraphs.begin());
  return -1;
}

}  // namespace quotemark
