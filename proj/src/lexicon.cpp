#include "quotemark/lexicon.hpp"

#include <fstream>

#include "quotemark/errors.hpp"
#include "quotemark/text.hpp"
#include "quotemark/utf8.hpp"

namespace quotemark {

namespace {

const char* kDefaultHonorifics[] = {
    "Mr",   "Mrs",  "Miss",    "Ms",      "Sir",      "Lady",
    "Dr",   "Lord", "Madame",  "Monsieur", "Captain", "Colonel",
    "Professor", "Aunt", "Uncle",
};

// Base forms; irregular pasts are their own entries.
const char* kDefaultSpeechVerbs[] = {
    "say",      "said",      "reply",    "ask",       "cry",
    "answer",   "exclaim",   "whisper",  "murmur",    "shout",
    "observe",  "continue",  "add",      "return",    "interrupt",
    "call",     "mutter",    "remark",   "respond",   "inquire",
    "demand",   "declare",   "announce", "repeat",    "insist",
    "suggest",  "protest",   "plead",    "beg",       "urge",
    "groan",    "moan",      "sigh",     "laugh",     "chuckle",
    "growl",    "snap",      "retort",   "rejoin",    "echo",
    "begin",    "began",     "conclude", "admit",     "confess",
    "agree",    "assent",    "object",   "venture",   "falter",
    "stammer",  "gasp",      "breathe",  "scream",    "yell",
    "drawl",    "sneer",     "scoff",    "warn",      "promise",
    "tell",     "told",      "speak",    "spoke",
};

const char* kPronouns[] = {
    "he",  "she",  "it",   "i",    "we",    "you",   "they",
    "him", "her",  "them", "his",  "hers",  "their", "theirs",
    "me",  "my",   "mine", "us",   "our",   "ours",  "your",
    "yours", "himself", "herself", "themselves", "one",
};

std::vector<std::u32string> to_u32(const char* const* arr, size_t n) {
  std::vector<std::u32string> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(utf8_decode(arr[i]));
  return out;
}

}  // namespace

std::vector<std::u32string> read_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingFile, "lexicon file: " + path);
  std::vector<std::u32string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t");
    entries.push_back(utf8_decode(line.substr(b, e - b + 1)));
  }
  return entries;
}

Lexicon Lexicon::defaults() {
  Lexicon lex;
  lex.honorifics_ =
      to_u32(kDefaultHonorifics, std::size(kDefaultHonorifics));
  lex.index_honorifics();
  lex.index_speech_verbs(
      to_u32(kDefaultSpeechVerbs, std::size(kDefaultSpeechVerbs)));
  for (const auto& p : to_u32(kPronouns, std::size(kPronouns)))
    lex.pronoun_set_.insert(p);
  return lex;
}

Lexicon Lexicon::load(const std::string& honorifics_path,
                      const std::string& speech_verbs_path) {
  Lexicon lex = defaults();
  if (!honorifics_path.empty()) {
    lex.honorifics_ = read_lexicon_file(honorifics_path);
    lex.honorific_set_.clear();
    lex.index_honorifics();
  }
  if (!speech_verbs_path.empty()) {
    lex.speech_verb_set_.clear();
    lex.index_speech_verbs(read_lexicon_file(speech_verbs_path));
  }
  return lex;
}

void Lexicon::index_honorifics() {
  for (const auto& h : honorifics_) honorific_set_.insert(fold_lower(h));
}

void Lexicon::index_speech_verbs(const std::vector<std::u32string>& bases) {
  // Expand -s/-es/-ed/-d/-ing (with consonant-y -> -ies/-ied) so matching
  // is one set lookup.
  for (const auto& raw : bases) {
    std::u32string base = fold_lower(raw);
    if (base.empty()) continue;
    speech_verb_set_.insert(base);
    std::u32string stem = base;
    bool y_ending = base.size() >= 2 && base.back() == U'y' &&
                    !is_apostrophe(base[base.size() - 2]) &&
                    base[base.size() - 2] != U'a' &&
                    base[base.size() - 2] != U'e' &&
                    base[base.size() - 2] != U'o' &&
                    base[base.size() - 2] != U'u';
    if (y_ending) {
      stem = base.substr(0, base.size() - 1);
      speech_verb_set_.insert(stem + U"ies");
      speech_verb_set_.insert(stem + U"ied");
    } else {
      speech_verb_set_.insert(base + U"s");
      if (base.back() == U'e') {
        speech_verb_set_.insert(base + U"d");
      } else {
        speech_verb_set_.insert(base + U"ed");
      }
    }
    std::u32string ing_stem =
        base.back() == U'e' ? base.substr(0, base.size() - 1) : base;
    speech_verb_set_.insert(ing_stem + U"ing");
  }
}

bool Lexicon::is_honorific(const std::u32string& folded_word) const {
  return honorific_set_.count(folded_word) > 0;
}

bool Lexicon::is_speech_verb(const std::u32string& folded_word) const {
  return speech_verb_set_.count(folded_word) > 0;
}

bool Lexicon::is_pronoun(const std::u32string& folded_word) const {
  return pronoun_set_.count(folded_word) > 0;
}

}  // namespace quotemark
