#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace quotemark {

// Word lists backing name matching and referring-expression detection.
// Each list ships with a built-in default and can be replaced by a plain
// text file, one entry per line ('#' starts a comment).
class Lexicon {
 public:
  static Lexicon defaults();

  // Loads honorifics/speech verbs from files where given; empty path keeps
  // the built-in list. Relative names are resolved against dir when set.
  static Lexicon load(const std::string& honorifics_path,
                      const std::string& speech_verbs_path);

  bool is_honorific(const std::u32string& folded_word) const;
  // Matches inflected forms too: says/said/saying, replies/replied, ...
  bool is_speech_verb(const std::u32string& folded_word) const;
  bool is_pronoun(const std::u32string& folded_word) const;

  const std::vector<std::u32string>& honorifics() const { return honorifics_; }

 private:
  std::vector<std::u32string> honorifics_;
  std::unordered_set<std::u32string> honorific_set_;
  std::unordered_set<std::u32string> speech_verb_set_;  // closed over inflections
  std::unordered_set<std::u32string> pronoun_set_;

  void index_honorifics();
  void index_speech_verbs(const std::vector<std::u32string>& bases);
};

std::vector<std::u32string> read_lexicon_file(const std::string& path);

}  // namespace quotemark
