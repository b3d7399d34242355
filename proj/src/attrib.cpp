#include "quotemark/attrib.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "json.hpp"
#include "quotemark/errors.hpp"
#include "quotemark/utf8.hpp"

using ordered_json = nlohmann::ordered_json;

namespace quotemark {

const char* attribution_method_name(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::ExplicitRule: return "explicit_rule";
    case AttributionMethod::NearestMention: return "nearest_mention";
    case AttributionMethod::SeqModel: return "seq_model";
  }
  return "explicit_rule";
}

namespace {

constexpr size_t kBoundaryWindowTokens = 5;
constexpr int kParagraphWindow = 2;

bool is_preposition(const std::u32string& folded) {
  static const std::array<std::u32string, 8> preps = {
      U"to", U"at", U"of", U"for", U"with", U"upon", U"toward", U"towards"};
  return std::find(preps.begin(), preps.end(), folded) != preps.end();
}

bool inside_any_quotation(const NovelBundle& bundle, const Span& s) {
  for (const auto& q : bundle.quotations)
    if (q.span.overlaps(s)) return true;
  return false;
}

// Narration slice next to the quote in its paragraph, clipped at the
// nearest neighboring quotation.
Span narration_after(const Quotation& q, const NovelBundle& bundle) {
  int para = paragraph_of(bundle.paragraph_index, q.span.end - 1);
  if (para < 0) return {q.span.end, q.span.end};
  uint32_t end = bundle.paragraph_index[para].end;
  for (const auto& other : bundle.quotations) {
    if (other.span.start >= q.span.end && other.span.start < end)
      end = other.span.start;
  }
  return {q.span.end, end};
}

Span narration_before(const Quotation& q, const NovelBundle& bundle) {
  int para = paragraph_of(bundle.paragraph_index, q.span.start);
  if (para < 0) return {q.span.start, q.span.start};
  uint32_t start = bundle.paragraph_index[para].start;
  for (const auto& other : bundle.quotations) {
    if (other.span.end <= q.span.start && other.span.end > start)
      start = other.span.end;
  }
  return {start, q.span.start};
}

struct PairHit {
  Span mention_span;
  CharId char_id;
  uint32_t distance;  // chars from the quote boundary to the pair
  bool after;
};

// Scans one narration window for <mention, speech-verb> patterns.
void collect_pairs(const Span& region, bool after_side, const Quotation& q,
                   const NovelBundle& bundle,
                   const CandidateInventory& inventory, const Lexicon& lexicon,
                   std::vector<PairHit>& hits) {
  if (region.empty()) return;
  auto toks = tokenize_with_offsets(
      bundle.text.substr(region.start, region.end - region.start));
  for (auto& t : toks) {
    t.start += region.start;
    t.end += region.start;
  }
  // Keep only the window tokens nearest the quote boundary.
  if (toks.size() > kBoundaryWindowTokens) {
    if (after_side)
      toks.resize(kBoundaryWindowTokens);
    else
      toks.erase(toks.begin(), toks.end() - kBoundaryWindowTokens);
  }
  if (toks.empty()) return;
  Span window{toks.front().start, toks.back().end};

  // Inventory mentions wholly inside the window, with token extents.
  struct WinMention {
    size_t first_tok, last_tok;
    const ResolvedMention* m;
  };
  std::vector<WinMention> mentions;
  for (const auto& m : inventory.mentions) {
    if (m.span.start < window.start || m.span.end > window.end) continue;
    size_t first = toks.size(), last = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].start >= m.span.start && toks[i].end <= m.span.end) {
        first = std::min(first, i);
        last = std::max(last, i);
      }
    }
    if (first < toks.size()) mentions.push_back({first, last, &m});
  }
  if (mentions.empty()) return;

  for (size_t v = 0; v < toks.size(); ++v) {
    if (!is_word_char(toks[v].text[0])) continue;
    std::u32string folded = fold_lower(toks[v].text);
    if (!lexicon.is_speech_verb(folded)) continue;
    // A pronoun directly before the verb owns it ("she said to Liz").
    bool pronoun_subject = false;
    for (size_t u = v; u-- > 0;) {
      if (!is_word_char(toks[u].text[0])) continue;
      pronoun_subject = lexicon.is_pronoun(fold_lower(toks[u].text));
      break;
    }
    for (const auto& wm : mentions) {
      bool ok = false;
      if (wm.last_tok < v) {
        // <mention, verb>: up to two intervening tokens, none pronominal.
        size_t gap = v - wm.last_tok - 1;
        ok = gap <= 2;
        for (size_t k = wm.last_tok + 1; ok && k < v; ++k) {
          if (is_word_char(toks[k].text[0]) &&
              lexicon.is_pronoun(fold_lower(toks[k].text)))
            ok = false;
        }
      } else if (wm.first_tok > v && !pronoun_subject) {
        // <verb, mention>: inverted subject sits tight after the verb.
        size_t gap = wm.first_tok - v - 1;
        ok = gap <= 1;
        for (size_t k = v + 1; ok && k < wm.first_tok; ++k) {
          if (!is_word_char(toks[k].text[0])) continue;
          std::u32string g = fold_lower(toks[k].text);
          if (lexicon.is_pronoun(g) || is_preposition(g)) ok = false;
        }
      }
      if (!ok) continue;
      uint32_t pair_edge =
          after_side
              ? std::min(wm.m->span.start, toks[v].start) - q.span.end
              : q.span.start - std::max(wm.m->span.end, toks[v].end);
      hits.push_back({wm.m->span, wm.m->char_id, pair_edge, after_side});
    }
  }
}

}  // namespace

std::optional<std::pair<Span, CharId>> detect_referring_expression(
    const Quotation& q, const NovelBundle& bundle,
    const CandidateInventory& inventory, const Lexicon& lexicon) {
  std::vector<PairHit> hits;
  collect_pairs(narration_after(q, bundle), true, q, bundle, inventory,
                lexicon, hits);
  collect_pairs(narration_before(q, bundle), false, q, bundle, inventory,
                lexicon, hits);
  if (hits.empty()) return std::nullopt;
  auto best = std::min_element(
      hits.begin(), hits.end(), [](const PairHit& a, const PairHit& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.after > b.after;  // tie: the side after the quote
      });
  return std::make_pair(best->mention_span, best->char_id);
}

Attribution attribute_explicit(const Quotation& q, const NovelBundle& bundle,
                               const CandidateInventory& inventory,
                               const Lexicon& lexicon,
                               bool use_gold_referring) {
  Attribution a;
  a.quote_id = q.quote_id;
  a.method = AttributionMethod::ExplicitRule;
  if (use_gold_referring && q.referring_expression) {
    const Span ref = *q.referring_expression;
    for (const auto& m : inventory.mentions) {
      if (m.span.overlaps(ref)) {
        a.predicted = m.char_id;
        a.evidence = m.span;
        return a;
      }
    }
    a.predicted = kUnresolved;
    return a;
  }
  auto hit = detect_referring_expression(q, bundle, inventory, lexicon);
  if (hit) {
    a.predicted = hit->second;
    a.evidence = hit->first;
  } else {
    a.predicted = kUnresolved;
  }
  return a;
}

Attribution attribute_nearest(const Quotation& q, const NovelBundle& bundle,
                              const CandidateInventory& inventory) {
  Attribution a;
  a.quote_id = q.quote_id;
  a.method = AttributionMethod::NearestMention;
  a.predicted = kUnresolved;

  int fp = paragraph_of(bundle.paragraph_index, q.span.start);
  int lp = paragraph_of(bundle.paragraph_index, q.span.end - 1);
  if (fp < 0) fp = lp;
  if (lp < 0) lp = fp;
  if (fp < 0) return a;
  int lo_para = std::max(0, fp - kParagraphWindow);
  int hi_para = std::min(static_cast<int>(bundle.paragraph_index.size()) - 1,
                         lp + kParagraphWindow);
  uint32_t win_start = bundle.paragraph_index[lo_para].start;
  uint32_t win_end = bundle.paragraph_index[hi_para].end;

  const ResolvedMention* back = nullptr;
  const ResolvedMention* fwd = nullptr;
  for (const auto& m : inventory.mentions) {
    if (m.span.start >= win_end) break;
    if (m.span.end < win_start) continue;
    if (inside_any_quotation(bundle, m.span)) continue;
    if (m.span.end <= q.span.start) {
      back = &m;  // inventory is sorted: the last one seen is nearest
    } else if (m.span.start >= q.span.end && !fwd) {
      fwd = &m;
    }
  }
  if (back && fwd) {
    uint32_t db = q.span.start - back->span.end;
    uint32_t df = fwd->span.start - q.span.end;
    if (df < db) back = nullptr; else fwd = nullptr;
  }
  const ResolvedMention* pick = back ? back : fwd;
  if (pick) {
    a.predicted = pick->char_id;
    a.evidence = pick->span;
  }
  return a;
}

UnresolvedRateReport compute_unresolved_rate(
    const std::map<std::string, std::vector<Attribution>>& per_novel) {
  if (per_novel.empty())
    throw Error(ErrorKind::EmptyInput, "no attributions to score");
  UnresolvedRateReport report;
  double sum = 0.0;
  bool first = true;
  for (const auto& [novel, attrs] : per_novel) {
    if (attrs.empty())
      throw Error(ErrorKind::EmptyInput, "novel " + novel +
                                             " has no attributions");
    UnresolvedRateReport::NovelRate nr;
    nr.n_quotations = attrs.size();
    for (const auto& a : attrs)
      if (a.predicted == kUnresolved) ++nr.n_unresolved;
    nr.rate = static_cast<double>(nr.n_unresolved) / nr.n_quotations;
    sum += nr.rate;
    if (first || nr.rate < report.min) report.min = nr.rate;
    if (first || nr.rate > report.max) report.max = nr.rate;
    first = false;
    report.per_novel[novel] = nr;
  }
  report.mean = sum / static_cast<double>(per_novel.size());
  return report;
}

std::string attributions_to_jsonl(const std::vector<Attribution>& attrs) {
  std::ostringstream out;
  for (const auto& a : attrs) {
    ordered_json j;
    j["quote_id"] = a.quote_id;
    j["predicted_char_id"] =
        a.predicted == kUnresolved ? ordered_json(nullptr)
                                   : ordered_json(a.predicted);
    j["method"] = attribution_method_name(a.method);
    j["evidence"] = a.evidence ? ordered_json::array(
                                     {a.evidence->start, a.evidence->end})
                               : ordered_json(nullptr);
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<Attribution> attributions_from_jsonl(const std::string& text) {
  std::vector<Attribution> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    Attribution a;
    a.quote_id = j.at("quote_id").get<std::string>();
    a.predicted = j.at("predicted_char_id").is_null()
                      ? kUnresolved
                      : j.at("predicted_char_id").get<CharId>();
    std::string m = j.at("method").get<std::string>();
    if (m == "nearest_mention") a.method = AttributionMethod::NearestMention;
    else if (m == "seq_model") a.method = AttributionMethod::SeqModel;
    else a.method = AttributionMethod::ExplicitRule;
    if (!j.at("evidence").is_null())
      a.evidence = Span{j["evidence"][0].get<uint32_t>(),
                        j["evidence"][1].get<uint32_t>()};
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace quotemark
