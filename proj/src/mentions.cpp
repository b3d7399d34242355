#include "quotemark/mentions.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "quotemark/errors.hpp"
#include "quotemark/utf8.hpp"

using ordered_json = nlohmann::ordered_json;

namespace quotemark {

const char* mention_source_name(MentionSource s) {
  switch (s) {
    case MentionSource::PdncGold: return "pdnc_gold";
    case MentionSource::ExplicitMatch: return "explicit_match";
    case MentionSource::ExternalCoref: return "external_coref";
  }
  return "explicit_match";
}

// ---------------------------------------------------------------------------
// Explicit alias scanning
// ---------------------------------------------------------------------------

std::vector<ResolvedMention> scan_explicit_mentions(const NovelBundle& bundle,
                                                    const Lexicon& lexicon) {
  NameMatcher matcher(bundle.characters, lexicon);

  // Alias token sequences grouped by first token, longest first.
  struct AliasSeq {
    std::vector<std::u32string> tokens;
  };
  std::map<std::u32string, std::vector<AliasSeq>> by_first;
  std::set<std::u32string> seen;
  for (const auto& c : bundle.characters) {
    for (const auto& alias : c.aliases) {
      auto toks = name_tokens_utf8(alias);
      if (toks.empty()) continue;
      auto key = join_tokens(toks);
      if (!seen.insert(key).second) continue;
      by_first[toks.front()].push_back({std::move(toks)});
    }
  }
  for (auto& [first, seqs] : by_first) {
    std::sort(seqs.begin(), seqs.end(), [](const AliasSeq& a, const AliasSeq& b) {
      return a.tokens.size() > b.tokens.size();
    });
  }

  const auto all_tokens = tokenize_with_offsets(bundle.text);
  std::vector<size_t> words;
  for (size_t i = 0; i < all_tokens.size(); ++i)
    if (is_word_char(all_tokens[i].text[0])) words.push_back(i);

  // Adjacent word tokens may be separated by an honorific period only.
  auto adjacent = [&](size_t wi) {
    size_t a = words[wi], b = words[wi + 1];
    if (b == a + 1) return true;
    if (b == a + 2 && all_tokens[a + 1].text == U"." &&
        all_tokens[a + 1].start == all_tokens[a].end &&
        lexicon.is_honorific(fold_lower(all_tokens[a].text)))
      return true;
    return false;
  };

  std::vector<ResolvedMention> out;
  size_t wi = 0;
  while (wi < words.size()) {
    const std::u32string first = fold_lower(all_tokens[words[wi]].text);
    auto it = by_first.find(first);
    bool matched = false;
    if (it != by_first.end()) {
      for (const auto& seq : it->second) {
        size_t n = seq.tokens.size();
        if (wi + n > words.size()) continue;
        bool ok = true;
        for (size_t k = 0; k < n && ok; ++k) {
          if (fold_lower(all_tokens[words[wi + k]].text) != seq.tokens[k])
            ok = false;
          if (ok && k + 1 < n && !adjacent(wi + k)) ok = false;
        }
        if (!ok) continue;
        Span span{all_tokens[words[wi]].start,
                  all_tokens[words[wi + n - 1]].end};
        MatchResult m = matcher.match(bundle.text.substr(
            span.start, span.end - span.start));
        if (m.kind == MatchResult::Kind::Unique) {
          out.push_back({span, m.unique_id(), MentionSource::ExplicitMatch});
        }
        wi += n;  // maximal, non-overlapping
        matched = true;
        break;
      }
    }
    if (!matched) ++wi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cluster matching
// ---------------------------------------------------------------------------

ClusterMatcher::ClusterMatcher(const NovelBundle& bundle,
                               const NameMatcher& matcher,
                               const Lexicon& lexicon,
                               const MentionConfig& config)
    : bundle_(bundle), matcher_(matcher), config_(config) {
  tokens_ = tokenize_with_offsets(bundle.text);
  std::vector<std::u32string> abbrevs;
  for (const auto& h : lexicon.honorifics()) abbrevs.push_back(fold_lower(h));
  initial_ = sentence_initial_flags(tokens_, bundle.paragraph_index, abbrevs);
}

ClusterMatch ClusterMatcher::match(const MentionCluster& cluster) const {
  auto inside_quote = [&](const Span& s) {
    for (const auto& q : bundle_.quotations)
      if (q.span.contains(s)) return true;
    return false;
  };
  // Named span: carries a capitalized token away from a sentence start.
  auto is_named = [&](const MentionSpan& m) {
    auto lo = std::lower_bound(
        tokens_.begin(), tokens_.end(), m.span.start,
        [](const Token& t, uint32_t pos) { return t.start < pos; });
    for (auto it = lo; it != tokens_.end() && it->start < m.span.end; ++it) {
      if (!is_word_char(it->text[0]) || !is_upper_letter(it->text[0]))
        continue;
      size_t idx = static_cast<size_t>(it - tokens_.begin());
      if (!initial_[idx]) return true;
    }
    return false;
  };

  std::set<CharId> ids;
  for (const auto& m : cluster.spans) {
    if (!config_.use_inside_quote_spans && inside_quote(m.span)) continue;
    if (!is_named(m)) continue;
    MatchResult r = matcher_.match(m.surface);
    if (r.kind == MatchResult::Kind::Unique) ids.insert(r.unique_id());
  }
  ClusterMatch cm;
  cm.cluster_id = cluster.cluster_id;
  cm.match.char_ids.assign(ids.begin(), ids.end());
  if (ids.size() == 1) {
    cm.match.kind = MatchResult::Kind::Unique;
  } else if (ids.size() >= 2) {
    cm.match.kind = MatchResult::Kind::Multiple;
  } else {
    cm.match.kind = MatchResult::Kind::None;
  }
  return cm;
}

ClusterMatch match_cluster_to_entity(const MentionCluster& cluster,
                                     const NovelBundle& bundle,
                                     const NameMatcher& matcher,
                                     const Lexicon& lexicon,
                                     const MentionConfig& config) {
  return ClusterMatcher(bundle, matcher, lexicon, config).match(cluster);
}

// ---------------------------------------------------------------------------
// Curation
// ---------------------------------------------------------------------------

CandidateInventory curate_candidates(
    const NovelBundle& bundle,
    const std::vector<ResolvedMention>& explicit_mentions,
    const std::vector<MentionCluster>& external_clusters,
    const std::vector<ClusterMatch>& cluster_matches) {
  CandidateInventory inv;

  std::vector<ResolvedMention> gold;
  for (const auto& q : bundle.quotations) {
    for (const auto& m : q.internal_mentions) {
      // Multi-referent mentions are not single-speaker candidates.
      if (m.entity_ids.size() != 1) continue;
      if (m.entity_ids[0] == kUnknownChar) continue;
      gold.push_back({m.span, m.entity_ids[0], MentionSource::PdncGold});
    }
  }

  std::vector<ResolvedMention> external;
  std::map<int, CharId> uniq_cluster;
  for (const auto& cm : cluster_matches) {
    if (cm.match.kind == MatchResult::Kind::Unique)
      uniq_cluster[cm.cluster_id] = cm.match.unique_id();
  }
  for (const auto& cl : external_clusters) {
    auto it = uniq_cluster.find(cl.cluster_id);
    if (it == uniq_cluster.end()) continue;  // Mult and None are dropped
    for (const auto& m : cl.spans)
      external.push_back({m.span, it->second, MentionSource::ExternalCoref});
  }

  auto canon = [](std::vector<ResolvedMention>& v) {
    std::sort(v.begin(), v.end(),
              [](const ResolvedMention& a, const ResolvedMention& b) {
                if (a.span != b.span) return a.span < b.span;
                return a.char_id < b.char_id;
              });
  };
  std::vector<ResolvedMention> expl = explicit_mentions;
  canon(gold);
  canon(expl);
  canon(external);

  // Priority sweep; within one tier the earlier span wins.
  auto overlaps_kept = [&](const Span& s) {
    for (const auto& m : inv.mentions)
      if (m.span.overlaps(s)) return &m;
    return static_cast<const ResolvedMention*>(nullptr);
  };
  for (const auto& g : gold) {
    if (const auto* kept = overlaps_kept(g.span)) {
      if (kept->char_id != g.char_id) {
        inv.warnings.push_back(
            "ConflictingGold: [" + std::to_string(g.span.start) + "," +
            std::to_string(g.span.end) + ") entity " +
            std::to_string(g.char_id) + " conflicts with kept entity " +
            std::to_string(kept->char_id));
      }
      continue;
    }
    inv.mentions.push_back(g);
  }
  for (const auto& e : expl) {
    if (overlaps_kept(e.span)) continue;
    inv.mentions.push_back(e);
  }
  for (const auto& x : external) {
    if (overlaps_kept(x.span)) continue;
    inv.mentions.push_back(x);
  }
  std::sort(inv.mentions.begin(), inv.mentions.end(),
            [](const ResolvedMention& a, const ResolvedMention& b) {
              return a.span < b.span;
            });
  return inv;
}

// ---------------------------------------------------------------------------
// I/O
// ---------------------------------------------------------------------------

ClusterLoadResult load_cluster_dump(const std::string& path,
                                    const NovelBundle& bundle) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path);
  ClusterLoadResult result;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      result.warnings.push_back("cluster dump line " + std::to_string(lineno) +
                                ": bad JSON, skipped");
      continue;
    }
    MentionCluster cl;
    cl.cluster_id = j.at("cluster_id").get<int>();
    for (const auto& sj : j.at("spans")) {
      MentionSpan m;
      m.span = {sj.at("start").get<uint32_t>(), sj.at("end").get<uint32_t>()};
      std::string text = sj.value("text", std::string());
      if (m.span.end > bundle.text.size() || m.span.empty() ||
          (!text.empty() && bundle.slice_utf8(m.span) != text)) {
        result.warnings.push_back("cluster dump line " +
                                  std::to_string(lineno) +
                                  ": span fails text-slice check, dropped");
        continue;
      }
      m.surface = bundle.slice_utf8(m.span);
      cl.spans.push_back(std::move(m));
    }
    std::sort(cl.spans.begin(), cl.spans.end(),
              [](const MentionSpan& a, const MentionSpan& b) {
                return a.span < b.span;
              });
    cl.spans.erase(std::unique(cl.spans.begin(), cl.spans.end(),
                               [](const MentionSpan& a, const MentionSpan& b) {
                                 return a.span == b.span;
                               }),
                   cl.spans.end());
    if (!cl.spans.empty()) result.clusters.push_back(std::move(cl));
  }
  return result;
}

std::string inventory_to_jsonl(const CandidateInventory& inv) {
  std::ostringstream out;
  for (const auto& m : inv.mentions) {
    ordered_json j;
    j["start"] = m.span.start;
    j["end"] = m.span.end;
    j["char_id"] = m.char_id;
    j["source"] = mention_source_name(m.source);
    out << j.dump() << "\n";
  }
  return out.str();
}

CandidateInventory inventory_from_jsonl(const std::string& text) {
  CandidateInventory inv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    ResolvedMention m;
    m.span = {j.at("start").get<uint32_t>(), j.at("end").get<uint32_t>()};
    m.char_id = j.at("char_id").get<CharId>();
    std::string src = j.at("source").get<std::string>();
    if (src == "pdnc_gold") m.source = MentionSource::PdncGold;
    else if (src == "external_coref") m.source = MentionSource::ExternalCoref;
    else m.source = MentionSource::ExplicitMatch;
    inv.mentions.push_back(m);
  }
  return inv;
}

}  // namespace quotemark
