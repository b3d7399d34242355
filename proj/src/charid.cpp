#include "quotemark/charid.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "quotemark/errors.hpp"
#include "quotemark/utf8.hpp"

namespace quotemark {

std::string NameCandidate::alias_string() const {
  return honorific ? *honorific + " " + surface : surface;
}

std::vector<std::u32string> name_tokens(const std::u32string& name) {
  std::vector<std::u32string> out;
  for (const auto& tok : tokenize_with_offsets(name)) {
    if (is_word_char(tok.text[0])) out.push_back(fold_lower(tok.text));
  }
  return out;
}

std::vector<std::u32string> name_tokens_utf8(const std::string& name) {
  return name_tokens(utf8_decode(name));
}

std::u32string join_tokens(const std::vector<std::u32string>& tokens) {
  std::u32string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(U' ');
    out += tokens[i];
  }
  return out;
}

std::optional<std::vector<std::u32string>> strip_honorific(
    const std::vector<std::u32string>& tokens, const Lexicon& lexicon) {
  if (tokens.size() < 2) return std::nullopt;
  if (!lexicon.is_honorific(tokens.front())) return std::nullopt;
  return std::vector<std::u32string>(tokens.begin() + 1, tokens.end());
}

// ---------------------------------------------------------------------------
// Candidate extraction
// ---------------------------------------------------------------------------

std::vector<NameCandidate> extract_name_candidates(const NovelBundle& bundle,
                                                   int min_count,
                                                   const Lexicon& lexicon) {
  const auto tokens = tokenize_with_offsets(bundle.text);
  std::vector<std::u32string> abbrevs;
  for (const auto& h : lexicon.honorifics()) abbrevs.push_back(fold_lower(h));
  const auto initial =
      sentence_initial_flags(tokens, bundle.paragraph_index, abbrevs);

  auto capitalized = [&](size_t t) {
    return is_word_char(tokens[t].text[0]) &&
           is_upper_letter(tokens[t].text[0]);
  };

  struct Tally {
    int count = 0;
    int non_initial = 0;
    size_t first_seen = 0;
  };
  // Key: (surface, honorific) as display text.
  std::map<std::pair<std::string, std::string>, Tally> tally;

  size_t t = 0;
  while (t < tokens.size()) {
    if (!capitalized(t)) {
      ++t;
      continue;
    }
    int para = paragraph_of(bundle.paragraph_index, tokens[t].start);
    size_t run_begin = t;
    size_t j = t;
    while (true) {
      size_t next = j + 1;
      // One period directly after an honorific does not break the run.
      if (next < tokens.size() && tokens[next].text == U"." &&
          lexicon.is_honorific(fold_lower(tokens[j].text)) &&
          tokens[next].start == tokens[j].end) {
        ++next;
      }
      if (next < tokens.size() && capitalized(next) &&
          paragraph_of(bundle.paragraph_index, tokens[next].start) == para) {
        j = next;
      } else {
        break;
      }
    }
    size_t run_end = j;
    t = j + 1;

    // Split one leading honorific off the run.
    size_t surface_begin = run_begin;
    std::string honorific;
    if (lexicon.is_honorific(fold_lower(tokens[run_begin].text)) &&
        run_end > run_begin) {
      honorific = utf8_encode(tokens[run_begin].text);
      surface_begin = run_begin + 1;
      if (tokens[surface_begin].text == U".") ++surface_begin;
    }
    if (surface_begin > run_end) continue;  // honorific-only run
    if (lexicon.is_honorific(fold_lower(tokens[run_begin].text)) &&
        surface_begin == run_begin) {
      continue;  // bare honorific ("Miss" as vocative) is not a name
    }

    Span surf_span{tokens[surface_begin].start, tokens[run_end].end};
    std::string surface = bundle.slice_utf8(surf_span);
    auto& entry = tally[{surface, honorific}];
    if (entry.count == 0) entry.first_seen = run_begin;
    entry.count += 1;
    if (!initial[run_begin]) entry.non_initial += 1;
  }

  std::vector<NameCandidate> out;
  for (const auto& [key, tl] : tally) {
    if (tl.count < min_count || tl.non_initial == 0) continue;
    NameCandidate c;
    c.surface = key.first;
    c.count = tl.count;
    if (!key.second.empty()) c.honorific = key.second;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const NameCandidate& a, const NameCandidate& b) {
              if (a.count != b.count) return a.count > b.count;
              if (a.surface != b.surface) return a.surface < b.surface;
              return a.honorific.value_or("") < b.honorific.value_or("");
            });
  return out;
}

// ---------------------------------------------------------------------------
// Alias clustering
// ---------------------------------------------------------------------------

NameCandidate candidate_from_alias(const std::string& alias,
                                   const Lexicon& lexicon) {
  NameCandidate c;
  std::u32string u = utf8_decode(alias);
  auto toks = tokenize_with_offsets(u);
  std::vector<size_t> words;
  for (size_t i = 0; i < toks.size(); ++i)
    if (is_word_char(toks[i].text[0])) words.push_back(i);
  if (words.size() >= 2 &&
      lexicon.is_honorific(fold_lower(toks[words[0]].text))) {
    c.honorific = utf8_encode(toks[words[0]].text);
    Span rest{toks[words[1]].start, toks[words.back()].end};
    c.surface = utf8_encode(u.substr(rest.start, rest.end - rest.start));
  } else {
    c.surface = alias;
  }
  return c;
}

namespace {

struct UnionFind {
  std::vector<size_t> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = i;
  }
  size_t find(size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(size_t a, size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<CharacterEntity> cluster_aliases(
    const std::vector<NameCandidate>& candidates, const Lexicon& lexicon) {
  if (candidates.empty())
    throw Error(ErrorKind::EmptyInput, "no name candidates to cluster");

  const size_t n = candidates.size();
  std::vector<std::u32string> surface_key(n);
  std::vector<std::vector<std::u32string>> surface_toks(n);
  for (size_t i = 0; i < n; ++i) {
    surface_toks[i] = name_tokens_utf8(candidates[i].surface);
    surface_key[i] = join_tokens(surface_toks[i]);
  }

  UnionFind uf(n);

  // Rule (a): a bare surface merges with its honorific variant, but only
  // when there is exactly one variant; "Mr Archer" and "Mrs Archer" name
  // different people and must not be bridged through bare "Archer".
  std::map<std::u32string, std::vector<size_t>> by_surface;
  for (size_t i = 0; i < n; ++i) by_surface[surface_key[i]].push_back(i);
  for (const auto& [key, members] : by_surface) {
    std::vector<size_t> bare;
    std::set<std::string> honorifics;
    std::vector<size_t> variants;
    for (size_t i : members) {
      if (candidates[i].honorific) {
        honorifics.insert(*candidates[i].honorific);
        variants.push_back(i);
      } else {
        bare.push_back(i);
      }
    }
    if (!bare.empty() && honorifics.size() == 1) {
      for (size_t i : variants) uf.unite(bare.front(), i);
    }
    for (size_t k = 1; k < bare.size(); ++k) uf.unite(bare[0], bare[k]);
  }

  // Rule (b): a given-name-only candidate joins the unique full name that
  // starts with it. Shared first names (or any shared surname) stay apart.
  std::map<std::u32string, std::vector<size_t>> first_token_of_full;
  for (size_t i = 0; i < n; ++i) {
    if (surface_toks[i].size() >= 2)
      first_token_of_full[surface_toks[i].front()].push_back(i);
  }
  for (size_t i = 0; i < n; ++i) {
    if (surface_toks[i].size() != 1) continue;
    auto it = first_token_of_full.find(surface_toks[i].front());
    if (it == first_token_of_full.end()) continue;
    std::set<size_t> roots;
    for (size_t f : it->second) roots.insert(uf.find(f));
    if (roots.size() == 1) uf.unite(i, *roots.begin());
  }

  // Assemble entities.
  std::map<size_t, std::vector<size_t>> groups;
  for (size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);

  struct Built {
    CharacterEntity entity;
    long total_count = 0;
  };
  std::vector<Built> built;
  for (const auto& [root, members] : groups) {
    Built b;
    std::set<std::string> aliases;
    for (size_t i : members) {
      aliases.insert(candidates[i].alias_string());
      b.total_count += candidates[i].count;
    }
    b.entity.aliases.assign(aliases.begin(), aliases.end());
    b.entity.main_name = *std::max_element(
        b.entity.aliases.begin(), b.entity.aliases.end(),
        [](const std::string& x, const std::string& y) {
          size_t lx = utf8_decode(x).size(), ly = utf8_decode(y).size();
          if (lx != ly) return lx < ly;
          return x > y;  // tie: lexicographically smaller wins
        });
    built.push_back(std::move(b));
  }
  std::sort(built.begin(), built.end(), [](const Built& a, const Built& b) {
    if (a.total_count != b.total_count) return a.total_count > b.total_count;
    return a.entity.main_name < b.entity.main_name;
  });
  std::vector<CharacterEntity> out;
  for (size_t i = 0; i < built.size(); ++i) {
    built[i].entity.char_id = static_cast<CharId>(i);
    out.push_back(std::move(built[i].entity));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Staged name matching
// ---------------------------------------------------------------------------

namespace {

void add_id(std::unordered_map<std::u32string, std::vector<CharId>>& map,
            const std::u32string& key, CharId id) {
  auto& v = map[key];
  if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
}

MatchResult decide(std::set<CharId> ids) {
  MatchResult r;
  r.char_ids.assign(ids.begin(), ids.end());
  if (ids.size() == 1) {
    r.kind = MatchResult::Kind::Unique;
  } else if (ids.size() >= 2) {
    r.kind = MatchResult::Kind::Multiple;
  } else {
    r.kind = MatchResult::Kind::None;
  }
  return r;
}

}  // namespace

NameMatcher::NameMatcher(const std::vector<CharacterEntity>& characters,
                         const Lexicon& lexicon)
    : lexicon_(lexicon), n_characters_(characters.size()) {
  for (const auto& c : characters) {
    for (const auto& alias : c.aliases) {
      auto toks = name_tokens_utf8(alias);
      if (toks.empty()) continue;
      add_id(exact_, join_tokens(toks), c.char_id);
      auto stripped = strip_honorific(toks, lexicon_);
      if (stripped) add_id(stripped_, join_tokens(*stripped), c.char_id);
      const auto& body = stripped ? *stripped : toks;
      for (const auto& tok : body) add_id(token_, tok, c.char_id);
    }
  }
}

MatchResult NameMatcher::match(const std::u32string& query) const {
  if (n_characters_ == 0)
    throw Error(ErrorKind::EmptyCharacterList, "match_name on empty list");
  auto q_toks = name_tokens(query);
  MatchResult none;
  if (q_toks.empty()) return none;
  std::u32string q_key = join_tokens(q_toks);
  auto q_stripped = strip_honorific(q_toks, lexicon_);

  // Stage 1: exact alias match.
  {
    std::set<CharId> ids;
    if (auto it = exact_.find(q_key); it != exact_.end())
      ids.insert(it->second.begin(), it->second.end());
    if (!ids.empty()) return decide(std::move(ids));
  }
  // Stage 2: honorific-stripped exact match, on either side or both.
  {
    std::set<CharId> ids;
    if (q_stripped) {
      std::u32string sq = join_tokens(*q_stripped);
      if (auto it = exact_.find(sq); it != exact_.end())
        ids.insert(it->second.begin(), it->second.end());
      if (auto it = stripped_.find(sq); it != stripped_.end())
        ids.insert(it->second.begin(), it->second.end());
    }
    if (auto it = stripped_.find(q_key); it != stripped_.end())
      ids.insert(it->second.begin(), it->second.end());
    if (!ids.empty()) return decide(std::move(ids));
  }
  // Stage 3: the query's final token against any alias token.
  {
    const auto& body = q_stripped ? *q_stripped : q_toks;
    std::set<CharId> ids;
    if (auto it = token_.find(body.back()); it != token_.end())
      ids.insert(it->second.begin(), it->second.end());
    return decide(std::move(ids));
  }
}

MatchResult NameMatcher::match(const std::string& query) const {
  return match(utf8_decode(query));
}

MatchResult match_name(const std::string& query,
                       const std::vector<CharacterEntity>& characters,
                       const Lexicon& lexicon) {
  return NameMatcher(characters, lexicon).match(query);
}

}  // namespace quotemark
