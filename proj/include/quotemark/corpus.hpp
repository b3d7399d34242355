#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quotemark/span.hpp"
#include "quotemark/text.hpp"

namespace quotemark {

using CharId = int32_t;

// Reserved speaker id for unnamed utterers ("a crowd", "a voice").
constexpr CharId kUnknownChar = -1;

struct CharacterEntity {
  CharId char_id = 0;
  std::string main_name;                // UTF-8
  std::vector<std::string> aliases;     // includes main_name
};

struct MentionSpan {
  Span span;
  std::string surface;                  // UTF-8 slice of the text at span
  std::vector<CharId> entity_ids;       // one or more referents
};

enum class QuoteType { Explicit, Anaphoric, Implicit };

const char* quote_type_name(QuoteType t);
std::optional<QuoteType> quote_type_from_name(const std::string& name);

struct Quotation {
  std::string quote_id;
  Span span;
  CharId speaker_id = kUnknownChar;
  std::vector<CharId> addressee_ids;
  std::optional<Span> referring_expression;
  QuoteType quote_type = QuoteType::Implicit;
  std::vector<MentionSpan> internal_mentions;
};

struct NovelBundle {
  std::string novel_id;
  std::string title;
  std::u32string text;                  // normalized, see normalize_text
  std::vector<CharacterEntity> characters;
  std::vector<Quotation> quotations;
  std::vector<Span> paragraph_index;    // derived from text

  std::string slice_utf8(Span s) const;
  const CharacterEntity* find_character(CharId id) const;

  // Checks every documented invariant; throws Error on violation.
  void validate() const;
};

// ---- normalized bundle JSON ----

std::string bundle_to_json(const NovelBundle& bundle);
NovelBundle bundle_from_json(const std::string& json_text);

NovelBundle load_bundle_file(const std::string& path);
void save_bundle_file(const NovelBundle& bundle, const std::string& path);

// Character-list JSON (same schema as the bundle's `characters` key).
std::string characters_to_json(const std::vector<CharacterEntity>& chars);
std::vector<CharacterEntity> characters_from_json(const std::string& json_text);

// ---- PDNC release adapter ----

// One novel folder of a PDNC-style release:
//   novel_text.txt       the novel text, UTF-8
//   character_info.csv   char_id,main_name,aliases   (aliases ';'-joined)
//   quotation_info.csv   quote_id,start,end,text,speaker,addressees,
//                        quote_type,ref_start,ref_end,mentions
//   meta.json            optional, {"title": ...}
// Offsets may be Unicode-scalar or byte positions in the raw file; rows
// carrying the text column are verified by slicing and converted.
struct LoadResult {
  NovelBundle bundle;
  bool quote_types_derived = false;  // true when the table had no type column
  std::vector<std::string> warnings;
};

LoadResult load_pdnc_bundle(const std::string& dir);

}  // namespace quotemark
