#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "quotemark/corpus.hpp"
#include "quotemark/lexicon.hpp"

namespace quotemark {

struct NameCandidate {
  std::string surface;                    // without the honorific
  int count = 1;
  std::optional<std::string> honorific;   // "Mr", "Lady", ... (no period)

  // Display form: "Mr Darcy" / "Darcy".
  std::string alias_string() const;
};

struct MatchResult {
  enum class Kind { Unique, Multiple, None };
  Kind kind = Kind::None;
  std::vector<CharId> char_ids;  // sorted; 1 for Unique, >=2 for Multiple

  CharId unique_id() const { return char_ids.front(); }
};

// Capitalized-sequence name candidates occurring at least min_count times
// and at least once away from a sentence start, sorted by descending count.
std::vector<NameCandidate> extract_name_candidates(const NovelBundle& bundle,
                                                   int min_count,
                                                   const Lexicon& lexicon);

// Conservative alias grouping: honorific variants of one surface collapse
// onto its bare form, and an unambiguous given name joins its unique full
// name. Candidates sharing only a surname never merge.
std::vector<CharacterEntity> cluster_aliases(
    const std::vector<NameCandidate>& candidates, const Lexicon& lexicon);

// Splits one leading honorific off an alias string.
NameCandidate candidate_from_alias(const std::string& alias,
                                   const Lexicon& lexicon);

// Staged string matching of a name against a character list:
//   1. exact alias match (case-insensitive)
//   2. exact match with one leading honorific stripped from query/alias
//   3. unique match of the query's final token against any alias token
// The first stage with survivors decides.
class NameMatcher {
 public:
  NameMatcher(const std::vector<CharacterEntity>& characters,
              const Lexicon& lexicon);

  MatchResult match(const std::string& query) const;
  MatchResult match(const std::u32string& query) const;

 private:
  const Lexicon& lexicon_;
  size_t n_characters_;
  std::unordered_map<std::u32string, std::vector<CharId>> exact_;
  std::unordered_map<std::u32string, std::vector<CharId>> stripped_;
  std::unordered_map<std::u32string, std::vector<CharId>> token_;
};

MatchResult match_name(const std::string& query,
                       const std::vector<CharacterEntity>& characters,
                       const Lexicon& lexicon);

// ---- shared name-normalization helpers ----

// Case-folded word tokens of a name; punctuation dropped.
std::vector<std::u32string> name_tokens(const std::u32string& name);
std::vector<std::u32string> name_tokens_utf8(const std::string& name);

// Joins tokens with single spaces into a canonical key.
std::u32string join_tokens(const std::vector<std::u32string>& tokens);

// Tokens with one leading honorific removed, when present and not the
// whole name; nullopt when nothing to strip.
std::optional<std::vector<std::u32string>> strip_honorific(
    const std::vector<std::u32string>& tokens, const Lexicon& lexicon);

}  // namespace quotemark
