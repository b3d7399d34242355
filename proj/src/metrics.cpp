#include "quotemark/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"
#include "quotemark/errors.hpp"
#include "quotemark/seqmodel.hpp"
#include "quotemark/utf8.hpp"

using ordered_json = nlohmann::ordered_json;

namespace quotemark {

namespace {

// The gold entities a predicted entity reaches through unique alias
// matches.
std::vector<std::set<CharId>> resolve_pred_entities(
    const std::vector<CharacterEntity>& pred,
    const std::vector<CharacterEntity>& gold, const Lexicon& lexicon) {
  NameMatcher matcher(gold, lexicon);
  std::vector<std::set<CharId>> resolved(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    for (const auto& alias : pred[i].aliases) {
      MatchResult r = matcher.match(alias);
      if (r.kind == MatchResult::Kind::Unique)
        resolved[i].insert(r.unique_id());
    }
  }
  return resolved;
}

}  // namespace

CharacterRecognitionReport character_recognition_score(
    const std::vector<CharacterEntity>& pred_entities,
    const std::vector<CharacterEntity>& gold_characters,
    const Lexicon& lexicon) {
  if (gold_characters.empty())
    throw Error(ErrorKind::EmptyGold, "no gold characters");
  auto resolved = resolve_pred_entities(pred_entities, gold_characters, lexicon);
  CharacterRecognitionReport r;
  r.n_gold = gold_characters.size();
  r.n_pred_entities = pred_entities.size();
  std::set<CharId> hit;
  for (const auto& ids : resolved) {
    if (!ids.empty()) ++r.n_matched_pred;
    hit.insert(ids.begin(), ids.end());
  }
  r.n_matched_gold = hit.size();
  r.cr = static_cast<double>(r.n_matched_gold) /
         static_cast<double>(r.n_gold);
  return r;
}

ClusteringReport clustering_scores(
    const std::vector<CharacterEntity>& pred_entities,
    const std::vector<CharacterEntity>& gold_characters,
    const Lexicon& lexicon) {
  ClusteringReport rep;
  rep.n_clusters = pred_entities.size();
  if (pred_entities.empty()) return rep;  // NoClusters: null fields
  auto resolved = resolve_pred_entities(pred_entities, gold_characters, lexicon);

  size_t homogeneous = 0;
  std::map<CharId, size_t> per_entity;
  for (const auto& ids : resolved) {
    if (ids.size() == 1) {
      ++homogeneous;
      per_entity[*ids.begin()] += 1;
    }
  }
  rep.homogeneity =
      static_cast<double>(homogeneous) / static_cast<double>(rep.n_clusters);
  if (!per_entity.empty()) {
    double sum = 0.0;
    for (const auto& [id, n] : per_entity) sum += static_cast<double>(n);
    rep.completeness = sum / static_cast<double>(per_entity.size());
  }
  if (rep.homogeneity && rep.completeness &&
      *rep.homogeneity + *rep.completeness > 0.0) {
    rep.v_score = 2.0 * *rep.homogeneity * *rep.completeness /
                  (*rep.homogeneity + *rep.completeness);
  }
  return rep;
}

MentionClusterStats mention_cluster_stats(
    const std::vector<ClusterMatch>& matches) {
  if (matches.empty())
    throw Error(ErrorKind::EmptyInput, "no clusters to score");
  MentionClusterStats s;
  s.n_clusters = matches.size();
  size_t uniq = 0, mult = 0, none = 0;
  for (const auto& m : matches) {
    switch (m.match.kind) {
      case MatchResult::Kind::Unique: ++uniq; break;
      case MatchResult::Kind::Multiple: ++mult; break;
      case MatchResult::Kind::None: ++none; break;
    }
  }
  double n = static_cast<double>(s.n_clusters);
  s.frac_uniq = uniq / n;
  s.frac_mult = mult / n;
  s.frac_none = none / n;
  return s;
}

MentionResolutionReport mention_resolution_accuracy(
    const std::vector<MentionCluster>& clusters,
    const std::vector<ClusterMatch>& matches, const NovelBundle& bundle) {
  std::map<int, CharId> uniq;
  for (const auto& m : matches)
    if (m.match.kind == MatchResult::Kind::Unique)
      uniq[m.cluster_id] = m.match.unique_id();

  // span -> entity of the first Uniq cluster holding it
  std::map<Span, CharId> span_entity;
  for (const auto& cl : clusters) {
    auto it = uniq.find(cl.cluster_id);
    if (it == uniq.end()) continue;
    for (const auto& s : cl.spans) span_entity.emplace(s.span, it->second);
  }

  MentionResolutionReport rep;
  size_t correct = 0;
  for (const auto& q : bundle.quotations) {
    for (const auto& gm : q.internal_mentions) {
      auto it = span_entity.find(gm.span);
      if (it == span_entity.end()) continue;  // outside any Uniq cluster
      ++rep.n_eval;
      if (std::find(gm.entity_ids.begin(), gm.entity_ids.end(), it->second) !=
          gm.entity_ids.end())
        ++correct;
    }
  }
  if (rep.n_eval > 0)
    rep.accuracy = static_cast<double>(correct) /
                   static_cast<double>(rep.n_eval);
  return rep;
}

// ---------------------------------------------------------------------------
// Quotation identification
// ---------------------------------------------------------------------------

namespace {

bool is_delimiter_char(char32_t c) {
  switch (c) {
    case U'"': case U'\'':
    case U'“': case U'”': case U'‘': case U'’':
      return true;
    default:
      return false;
  }
}

Span trim_span(const std::u32string& text, Span s, bool trim) {
  if (!trim) return s;
  while (s.start < s.end && is_delimiter_char(text[s.start])) ++s.start;
  while (s.end > s.start && is_delimiter_char(text[s.end - 1])) --s.end;
  return s;
}

}  // namespace

QuoteIdScore quotation_identification_score(const std::vector<Span>& pred,
                                            const NovelBundle& bundle,
                                            bool trim_delimiters) {
  if (bundle.quotations.empty())
    throw Error(ErrorKind::EmptyGold, "no gold quotations");
  if (pred.empty())
    throw Error(ErrorKind::EmptyInput, "no predicted spans");
  QuoteIdScore score;
  score.n_gold = bundle.quotations.size();
  score.n_pred = pred.size();

  std::set<Span> pred_trimmed;
  for (const Span& p : pred)
    pred_trimmed.insert(trim_span(bundle.text, p, trim_delimiters));

  size_t exact = 0, overlapped = 0;
  for (const auto& g : bundle.quotations) {
    Span gt = trim_span(bundle.text, g.span, trim_delimiters);
    if (pred_trimmed.count(gt)) ++exact;
    bool any = false;
    for (const Span& p : pred) {
      if (p.overlaps(g.span)) {
        any = true;
        break;
      }
    }
    if (any) ++overlapped;
  }
  size_t pred_hits = 0;
  for (const Span& p : pred) {
    for (const auto& g : bundle.quotations) {
      if (p.overlaps(g.span)) {
        ++pred_hits;
        break;
      }
    }
  }
  score.exact_match_rate =
      static_cast<double>(exact) / static_cast<double>(score.n_gold);
  score.overlap_recall =
      static_cast<double>(overlapped) / static_cast<double>(score.n_gold);
  score.precision_proxy =
      static_cast<double>(pred_hits) / static_cast<double>(score.n_pred);
  return score;
}

// ---------------------------------------------------------------------------
// Attribution accuracy
// ---------------------------------------------------------------------------

AttributionReport attribution_accuracy_report(
    const std::map<std::string, std::vector<Attribution>>& per_novel,
    const std::map<std::string, const NovelBundle*>& bundles) {
  AttributionReport rep;
  std::map<std::string, std::pair<size_t, size_t>> type_counts;  // correct, n
  std::vector<std::string> missing;

  for (const auto& [novel, bundle] : bundles) {
    auto it = per_novel.find(novel);
    std::map<std::string, CharId> predicted;
    if (it != per_novel.end()) {
      for (const auto& a : it->second) {
        if (!predicted.emplace(a.quote_id, a.predicted).second)
          missing.push_back(novel + "/" + a.quote_id + " (duplicate)");
      }
    }
    size_t novel_correct = 0, novel_n = 0;
    for (const auto& q : bundle->quotations) {
      auto pit = predicted.find(q.quote_id);
      if (pit == predicted.end()) {
        missing.push_back(novel + "/" + q.quote_id);
        continue;
      }
      bool correct =
          pit->second != kUnresolved && pit->second == q.speaker_id;
      ++novel_n;
      ++rep.n_total;
      if (correct) {
        ++novel_correct;
        ++rep.n_correct;
      }
      const char* tname = quote_type_name(q.quote_type);
      auto& tc = type_counts[tname];
      tc.second += 1;
      if (correct) tc.first += 1;
      if (q.quote_type != QuoteType::Explicit) {
        auto& rc = type_counts["rest"];
        rc.second += 1;
        if (correct) rc.first += 1;
      }
    }
    if (novel_n > 0)
      rep.per_novel[novel] =
          static_cast<double>(novel_correct) / static_cast<double>(novel_n);
  }
  if (!missing.empty()) {
    std::string msg = "quotations without exactly one attribution:";
    for (size_t i = 0; i < missing.size() && i < 20; ++i)
      msg += " " + missing[i];
    if (missing.size() > 20)
      msg += " (+" + std::to_string(missing.size() - 20) + " more)";
    throw Error(ErrorKind::MissingPrediction, msg);
  }
  rep.overall = rep.n_total == 0
                    ? 0.0
                    : static_cast<double>(rep.n_correct) /
                          static_cast<double>(rep.n_total);
  for (const auto& [t, c] : type_counts) {
    rep.by_type[t] = c.second == 0 ? 0.0
                                   : static_cast<double>(c.first) /
                                         static_cast<double>(c.second);
    rep.by_type_n[t] = c.second;
  }
  if (!rep.per_novel.empty()) {
    double s = 0.0;
    for (const auto& [n, v] : rep.per_novel) s += v;
    rep.macro_mean = s / static_cast<double>(rep.per_novel.size());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

FoldSpec make_cv_folds(const std::vector<const NovelBundle*>& bundles,
                       SplitMode mode, uint64_t seed, size_t n_folds) {
  if (n_folds == 0)
    throw Error(ErrorKind::UsageError, "fold count must be positive");
  FoldSpec spec;
  spec.mode = mode;
  spec.seed = seed;
  spec.folds.assign(n_folds, {});
  SplitMix64 rng(seed);

  if (mode == SplitMode::Novels) {
    if (bundles.size() < n_folds)
      throw Error(ErrorKind::TooFewNovels,
                  std::to_string(bundles.size()) + " novels for " +
                      std::to_string(n_folds) + " folds");
    std::vector<size_t> order(bundles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (size_t k = 0; k < order.size(); ++k)
      spec.folds[k % n_folds].push_back(bundles[order[k]]->novel_id);
  } else {
    // Rotating dealer keeps global fold sizes within one of each other
    // while each novel stays stratified.
    size_t dealer = 0;
    for (const auto* b : bundles) {
      std::vector<size_t> order(b->quotations.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      for (size_t i : order) {
        spec.folds[dealer % n_folds].push_back(
            b->novel_id + "/" + b->quotations[i].quote_id);
        ++dealer;
      }
    }
  }
  for (auto& fold : spec.folds) std::sort(fold.begin(), fold.end());
  return spec;
}

// ---------------------------------------------------------------------------
// Report JSON
// ---------------------------------------------------------------------------

namespace {

ordered_json opt_to_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

std::string charid_report_to_json(const std::vector<CharIdNovelRow>& rows) {
  ordered_json j;
  ordered_json arr = ordered_json::array();
  double cr_sum = 0, hom_sum = 0, comp_sum = 0, v_sum = 0;
  double chars_sum = 0, clus_sum = 0;
  size_t cr_n = 0, hom_n = 0, comp_n = 0, v_n = 0;
  for (const auto& r : rows) {
    ordered_json rj;
    rj["novel"] = r.novel;
    rj["n_chars"] = r.n_chars;
    rj["cr"] = r.cr;
    rj["n_clus"] = r.n_clus;
    rj["c_hom"] = opt_to_json(r.c_hom);
    rj["c_comp"] = opt_to_json(r.c_comp);
    rj["v_score"] = opt_to_json(r.v_score);
    arr.push_back(std::move(rj));
    chars_sum += static_cast<double>(r.n_chars);
    clus_sum += static_cast<double>(r.n_clus);
    cr_sum += r.cr;
    ++cr_n;
    if (r.c_hom) { hom_sum += *r.c_hom; ++hom_n; }
    if (r.c_comp) { comp_sum += *r.c_comp; ++comp_n; }
    if (r.v_score) { v_sum += *r.v_score; ++v_n; }
  }
  j["rows"] = std::move(arr);
  ordered_json mean;
  size_t n = rows.size();
  mean["n_chars"] = n ? chars_sum / n : 0.0;
  mean["cr"] = cr_n ? cr_sum / cr_n : 0.0;
  mean["n_clus"] = n ? clus_sum / n : 0.0;
  mean["c_hom"] = hom_n ? ordered_json(hom_sum / hom_n) : ordered_json(nullptr);
  mean["c_comp"] =
      comp_n ? ordered_json(comp_sum / comp_n) : ordered_json(nullptr);
  mean["v_score"] = v_n ? ordered_json(v_sum / v_n) : ordered_json(nullptr);
  j["mean"] = std::move(mean);
  return j.dump(2);
}

namespace {

ordered_json attribution_report_json(const AttributionReport& rep) {
  ordered_json j;
  j["overall"] = rep.overall;
  j["n_total"] = rep.n_total;
  j["n_correct"] = rep.n_correct;
  ordered_json bt;
  for (const char* key : {"explicit", "anaphoric", "implicit", "rest"}) {
    auto it = rep.by_type.find(key);
    if (it == rep.by_type.end()) continue;
    ordered_json e;
    e["accuracy"] = it->second;
    e["n"] = rep.by_type_n.at(key);
    bt[key] = std::move(e);
  }
  j["by_type"] = std::move(bt);
  ordered_json pn;
  for (const auto& [novel, acc] : rep.per_novel) pn[novel] = acc;
  j["per_novel"] = std::move(pn);
  j["macro_mean"] = rep.macro_mean;
  return j;
}

}  // namespace

std::string attribution_report_to_json(
    const std::map<std::string, std::map<std::string, AttributionReport>>&
        by_method_and_split) {
  ordered_json j;
  for (const auto& [method, splits] : by_method_and_split) {
    ordered_json mj;
    for (const auto& [split, rep] : splits)
      mj[split] = attribution_report_json(rep);
    j[method] = std::move(mj);
  }
  return j.dump(2);
}

std::string unresolved_report_to_json(const UnresolvedRateReport& report) {
  ordered_json j;
  ordered_json pn;
  for (const auto& [novel, r] : report.per_novel) {
    ordered_json e;
    e["n_quotations"] = r.n_quotations;
    e["n_unresolved"] = r.n_unresolved;
    e["rate"] = r.rate;
    pn[novel] = std::move(e);
  }
  j["per_novel"] = std::move(pn);
  j["mean"] = report.mean;
  j["min"] = report.min;
  j["max"] = report.max;
  return j.dump(2);
}

}  // namespace quotemark
