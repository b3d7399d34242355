#include "quotemark/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "quotemark/errors.hpp"
#include "quotemark/utf8.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace quotemark {

const char* quote_type_name(QuoteType t) {
  switch (t) {
    case QuoteType::Explicit: return "explicit";
    case QuoteType::Anaphoric: return "anaphoric";
    case QuoteType::Implicit: return "implicit";
  }
  return "implicit";
}

std::optional<QuoteType> quote_type_from_name(const std::string& name) {
  std::string folded;
  for (char c : name) folded.push_back(static_cast<char>(std::tolower(c)));
  if (folded == "explicit") return QuoteType::Explicit;
  if (folded == "anaphoric") return QuoteType::Anaphoric;
  if (folded == "implicit") return QuoteType::Implicit;
  return std::nullopt;
}

std::string NovelBundle::slice_utf8(Span s) const {
  if (s.start > text.size() || s.end > text.size() || s.end < s.start)
    return {};
  return utf8_encode(
      std::u32string_view(text).substr(s.start, s.end - s.start));
}

const CharacterEntity* NovelBundle::find_character(CharId id) const {
  for (const auto& c : characters)
    if (c.char_id == id) return &c;
  return nullptr;
}

void NovelBundle::validate() const {
  std::unordered_set<CharId> ids;
  std::unordered_map<std::string, CharId> alias_owner;
  for (const auto& c : characters) {
    if (!ids.insert(c.char_id).second)
      throw Error(ErrorKind::MalformedRow,
                  "duplicate char_id " + std::to_string(c.char_id));
    if (c.char_id == kUnknownChar)
      throw Error(ErrorKind::MalformedRow, "char_id -1 is reserved");
    if (c.aliases.empty())
      throw Error(ErrorKind::MalformedRow,
                  "empty alias set for " + c.main_name);
    if (std::find(c.aliases.begin(), c.aliases.end(), c.main_name) ==
        c.aliases.end())
      throw Error(ErrorKind::MalformedRow,
                  "main_name not among aliases: " + c.main_name);
    for (const auto& a : c.aliases) {
      auto [it, inserted] = alias_owner.emplace(a, c.char_id);
      if (!inserted && it->second != c.char_id) {
        // Shared alias strings are tolerated only for bare surnames.
        std::u32string u = utf8_decode(a);
        auto toks = tokenize_with_offsets(u);
        if (toks.size() != 1)
          throw Error(ErrorKind::MalformedRow,
                      "full alias shared by two characters: " + a);
      }
    }
  }
  auto check_id = [&](CharId id, const std::string& where) {
    if (id != kUnknownChar && !ids.count(id))
      throw Error(ErrorKind::DanglingReference,
                  where + " refers to undeclared char_id " +
                      std::to_string(id));
  };
  uint32_t n = static_cast<uint32_t>(text.size());
  std::unordered_set<std::string> quote_ids;
  for (const auto& q : quotations) {
    if (!quote_ids.insert(q.quote_id).second)
      throw Error(ErrorKind::MalformedRow, "duplicate quote_id " + q.quote_id);
    if (q.span.end > n || q.span.start >= q.span.end)
      throw Error(ErrorKind::MalformedRow,
                  "quotation span out of bounds: " + q.quote_id);
    check_id(q.speaker_id, "quotation " + q.quote_id);
    for (CharId a : q.addressee_ids) check_id(a, "quotation " + q.quote_id);
    if (q.referring_expression) {
      const Span& r = *q.referring_expression;
      if (r.end > n || r.start >= r.end)
        throw Error(ErrorKind::MalformedRow,
                    "referring expression out of bounds: " + q.quote_id);
      if (r.overlaps(q.span))
        throw Error(ErrorKind::MalformedRow,
                    "referring expression overlaps quotation " + q.quote_id);
    }
    for (const auto& m : q.internal_mentions) {
      if (m.span.end > n || m.span.start >= m.span.end)
        throw Error(ErrorKind::MalformedRow,
                    "mention span out of bounds in " + q.quote_id);
      if (m.entity_ids.empty())
        throw Error(ErrorKind::MalformedRow,
                    "gold mention without entity in " + q.quote_id);
      for (CharId e : m.entity_ids) check_id(e, "mention in " + q.quote_id);
      if (slice_utf8(m.span) != m.surface)
        throw Error(ErrorKind::MalformedRow,
                    "mention surface does not match text slice in " +
                        q.quote_id);
    }
  }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json span_to_json(Span s) { return ordered_json::array({s.start, s.end}); }

Span span_from_json(const ordered_json& j) {
  return {j.at(0).get<uint32_t>(), j.at(1).get<uint32_t>()};
}

ordered_json character_to_json(const CharacterEntity& c) {
  ordered_json j;
  j["char_id"] = c.char_id;
  j["main_name"] = c.main_name;
  j["aliases"] = c.aliases;
  return j;
}

CharacterEntity character_from_json(const ordered_json& j) {
  CharacterEntity c;
  c.char_id = j.at("char_id").get<CharId>();
  c.main_name = j.at("main_name").get<std::string>();
  c.aliases = j.at("aliases").get<std::vector<std::string>>();
  return c;
}

ordered_json mention_to_json(const MentionSpan& m) {
  ordered_json j;
  j["span"] = span_to_json(m.span);
  j["surface"] = m.surface;
  j["entity_ids"] = m.entity_ids;
  return j;
}

MentionSpan mention_from_json(const ordered_json& j) {
  MentionSpan m;
  m.span = span_from_json(j.at("span"));
  m.surface = j.at("surface").get<std::string>();
  m.entity_ids = j.at("entity_ids").get<std::vector<CharId>>();
  return m;
}

}  // namespace

std::string bundle_to_json(const NovelBundle& bundle) {
  ordered_json j;
  j["novel_id"] = bundle.novel_id;
  j["title"] = bundle.title;
  j["text"] = utf8_encode(bundle.text);
  ordered_json chars = ordered_json::array();
  for (const auto& c : bundle.characters) chars.push_back(character_to_json(c));
  j["characters"] = std::move(chars);
  ordered_json quotes = ordered_json::array();
  for (const auto& q : bundle.quotations) {
    ordered_json qj;
    qj["quote_id"] = q.quote_id;
    qj["span"] = span_to_json(q.span);
    qj["speaker_id"] = q.speaker_id;
    qj["addressee_ids"] = q.addressee_ids;
    qj["referring_expression"] =
        q.referring_expression ? span_to_json(*q.referring_expression)
                               : ordered_json(nullptr);
    qj["quote_type"] = quote_type_name(q.quote_type);
    ordered_json ms = ordered_json::array();
    for (const auto& m : q.internal_mentions) ms.push_back(mention_to_json(m));
    qj["internal_mentions"] = std::move(ms);
    quotes.push_back(std::move(qj));
  }
  j["quotations"] = std::move(quotes);
  return j.dump(2);
}

NovelBundle bundle_from_json(const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  NovelBundle b;
  b.novel_id = j.at("novel_id").get<std::string>();
  b.title = j.at("title").get<std::string>();
  b.text = utf8_decode(j.at("text").get<std::string>());
  for (const auto& cj : j.at("characters"))
    b.characters.push_back(character_from_json(cj));
  for (const auto& qj : j.at("quotations")) {
    Quotation q;
    q.quote_id = qj.at("quote_id").get<std::string>();
    q.span = span_from_json(qj.at("span"));
    q.speaker_id = qj.at("speaker_id").get<CharId>();
    q.addressee_ids = qj.at("addressee_ids").get<std::vector<CharId>>();
    if (!qj.at("referring_expression").is_null())
      q.referring_expression = span_from_json(qj.at("referring_expression"));
    auto qt = quote_type_from_name(qj.at("quote_type").get<std::string>());
    if (!qt)
      throw Error(ErrorKind::MalformedRow,
                  "unknown quote_type in " + q.quote_id);
    q.quote_type = *qt;
    for (const auto& mj : qj.at("internal_mentions"))
      q.internal_mentions.push_back(mention_from_json(mj));
    b.quotations.push_back(std::move(q));
  }
  b.paragraph_index = segment_paragraphs(b.text);
  b.validate();
  return b;
}

NovelBundle load_bundle_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return bundle_from_json(ss.str());
}

void save_bundle_file(const NovelBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  out << bundle_to_json(bundle) << "\n";
}

std::string characters_to_json(const std::vector<CharacterEntity>& chars) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : chars) arr.push_back(character_to_json(c));
  return arr.dump(2);
}

std::vector<CharacterEntity> characters_from_json(
    const std::string& json_text) {
  ordered_json j = ordered_json::parse(json_text);
  std::vector<CharacterEntity> out;
  for (const auto& cj : j) out.push_back(character_from_json(cj));
  return out;
}

// ---------------------------------------------------------------------------
// PDNC release adapter
// ---------------------------------------------------------------------------

namespace {

// Minimal RFC 4180 reader: quoted fields, "" escapes, embedded newlines.
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingFile, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string data = ss.str();

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  size_t i = 0;
  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
    row.clear();
  };
  while (i < data.size()) {
    char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_row();
  }
  return rows;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t sep = s.find(';', pos);
    size_t end = (sep == std::string::npos) ? s.size() : sep;
    size_t b = pos;
    while (b < end && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    size_t e = end;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (e > b) parts.push_back(s.substr(b, e - b));
    if (sep == std::string::npos) break;
    pos = sep + 1;
  }
  return parts;
}

struct Header {
  std::unordered_map<std::string, size_t> cols;
  bool has(const std::string& name) const { return cols.count(name) > 0; }
  size_t at(const std::string& name, const std::string& file) const {
    auto it = cols.find(name);
    if (it == cols.end())
      throw Error(ErrorKind::MalformedRow,
                  file + " row 1: missing column '" + name + "'");
    return it->second;
  }
};

Header parse_header(const std::vector<std::string>& row) {
  Header h;
  for (size_t i = 0; i < row.size(); ++i) h.cols[row[i]] = i;
  return h;
}

std::string cell(const std::vector<std::string>& row, size_t idx) {
  return idx < row.size() ? row[idx] : std::string();
}

long parse_long(const std::string& s, const std::string& ctx) {
  try {
    size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::MalformedRow, ctx + ": not an integer: '" + s + "'");
  }
}

// Name resolution for annotation cells: main names first, then a uniquely
// owned alias.
class NameIndex {
 public:
  explicit NameIndex(const std::vector<CharacterEntity>& chars) {
    for (const auto& c : chars) {
      main_[utf8_encode(fold_lower(utf8_decode(c.main_name)))] = c.char_id;
      for (const auto& a : c.aliases) {
        std::string key = utf8_encode(fold_lower(utf8_decode(a)));
        auto [it, inserted] = alias_.emplace(key, c.char_id);
        if (!inserted && it->second != c.char_id) it->second = kAmbiguous;
      }
    }
  }

  CharId resolve(const std::string& name, const std::string& ctx) const {
    std::string key = utf8_encode(fold_lower(utf8_decode(name)));
    if (auto it = main_.find(key); it != main_.end()) return it->second;
    if (auto it = alias_.find(key); it != alias_.end()) {
      if (it->second == kAmbiguous)
        throw Error(ErrorKind::MalformedRow,
                    ctx + ": ambiguous character name '" + name + "'");
      return it->second;
    }
    throw Error(ErrorKind::DanglingReference,
                ctx + ": character '" + name + "' not in character list");
  }

 private:
  static constexpr CharId kAmbiguous = -2;
  std::unordered_map<std::string, CharId> main_;
  std::unordered_map<std::string, CharId> alias_;
};

enum class OffsetMode { Unknown, Scalar, Byte };

}  // namespace

LoadResult load_pdnc_bundle(const std::string& dir) {
  fs::path root(dir);
  fs::path text_path = root / "novel_text.txt";
  fs::path chars_path = root / "character_info.csv";
  fs::path quotes_path = root / "quotation_info.csv";
  for (const auto& p : {text_path, chars_path, quotes_path}) {
    if (!fs::exists(p)) throw Error(ErrorKind::MissingFile, p.string());
  }

  LoadResult result;
  NovelBundle& bundle = result.bundle;
  bundle.novel_id = root.filename().string();
  bundle.title = bundle.novel_id;
  fs::path meta_path = root / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream mi(meta_path);
    ordered_json mj = ordered_json::parse(mi);
    if (mj.contains("title")) bundle.title = mj["title"].get<std::string>();
  }

  std::ifstream ti(text_path, std::ios::binary);
  std::ostringstream tss;
  tss << ti.rdbuf();
  const std::string raw_bytes = tss.str();
  const std::u32string raw_text = utf8_decode(raw_bytes);
  NormalizedText norm = normalize_text(raw_text);
  bundle.text = norm.text;
  bundle.paragraph_index = segment_paragraphs(bundle.text);

  // Characters.
  auto crows = read_csv(chars_path.string());
  if (crows.empty())
    throw Error(ErrorKind::MalformedRow, "character_info.csv is empty");
  Header ch = parse_header(crows[0]);
  size_t c_id = ch.at("char_id", "character_info.csv");
  size_t c_main = ch.at("main_name", "character_info.csv");
  size_t c_alias = ch.at("aliases", "character_info.csv");
  for (size_t r = 1; r < crows.size(); ++r) {
    std::string ctx = "character_info.csv row " + std::to_string(r + 1);
    CharacterEntity c;
    c.char_id = static_cast<CharId>(parse_long(cell(crows[r], c_id), ctx));
    c.main_name = cell(crows[r], c_main);
    if (c.main_name.empty())
      throw Error(ErrorKind::MalformedRow, ctx + ": empty main_name");
    c.aliases = split_list(cell(crows[r], c_alias));
    if (std::find(c.aliases.begin(), c.aliases.end(), c.main_name) ==
        c.aliases.end())
      c.aliases.insert(c.aliases.begin(), c.main_name);
    bundle.characters.push_back(std::move(c));
  }
  NameIndex names(bundle.characters);

  // Quotations.
  auto qrows = read_csv(quotes_path.string());
  if (qrows.empty())
    throw Error(ErrorKind::MalformedRow, "quotation_info.csv is empty");
  Header qh = parse_header(qrows[0]);
  size_t q_id = qh.at("quote_id", "quotation_info.csv");
  size_t q_start = qh.at("start", "quotation_info.csv");
  size_t q_end = qh.at("end", "quotation_info.csv");
  size_t q_speaker = qh.at("speaker", "quotation_info.csv");
  bool has_text = qh.has("text");
  bool has_type = qh.has("quote_type");
  bool has_addr = qh.has("addressees");
  bool has_ref = qh.has("ref_start") && qh.has("ref_end");
  bool has_mentions = qh.has("mentions");
  result.quote_types_derived = !has_type;

  OffsetMode mode = OffsetMode::Unknown;
  auto interpret = [&](long start, long end, const std::string& verify_utf8,
                       const std::string& ctx) -> Span {
    if (start < 0 || end <= start)
      throw Error(ErrorKind::MalformedRow, ctx + ": bad span");
    auto scalar_ok = [&](uint32_t s, uint32_t e) {
      return e <= raw_text.size() &&
             utf8_encode(std::u32string_view(raw_text).substr(s, e - s)) ==
                 verify_utf8;
    };
    if (!verify_utf8.empty()) {
      if (mode == OffsetMode::Unknown) {
        if (scalar_ok(static_cast<uint32_t>(start),
                      static_cast<uint32_t>(end))) {
          mode = OffsetMode::Scalar;
        } else {
          size_t bs = byte_to_scalar_offset(raw_bytes, start);
          size_t be = byte_to_scalar_offset(raw_bytes, end);
          if (bs != std::string::npos && be != std::string::npos &&
              scalar_ok(static_cast<uint32_t>(bs),
                        static_cast<uint32_t>(be))) {
            mode = OffsetMode::Byte;
            result.warnings.push_back(
                "quotation_info.csv: byte offsets detected, converting");
          } else {
            throw Error(ErrorKind::MalformedRow,
                        ctx + ": span does not slice to the given text");
          }
        }
      }
      Span s;
      if (mode == OffsetMode::Byte) {
        size_t bs = byte_to_scalar_offset(raw_bytes, start);
        size_t be = byte_to_scalar_offset(raw_bytes, end);
        if (bs == std::string::npos || be == std::string::npos)
          throw Error(ErrorKind::MalformedRow, ctx + ": byte span out of range");
        s = {static_cast<uint32_t>(bs), static_cast<uint32_t>(be)};
      } else {
        s = {static_cast<uint32_t>(start), static_cast<uint32_t>(end)};
      }
      if (!scalar_ok(s.start, s.end))
        throw Error(ErrorKind::MalformedRow,
                    ctx + ": span does not slice to the given text");
      return s;
    }
    // No verification text: trust the established (or scalar) convention.
    if (mode == OffsetMode::Byte) {
      size_t bs = byte_to_scalar_offset(raw_bytes, start);
      size_t be = byte_to_scalar_offset(raw_bytes, end);
      if (bs == std::string::npos || be == std::string::npos)
        throw Error(ErrorKind::MalformedRow, ctx + ": byte span out of range");
      return {static_cast<uint32_t>(bs), static_cast<uint32_t>(be)};
    }
    if (static_cast<size_t>(end) > raw_text.size())
      throw Error(ErrorKind::MalformedRow, ctx + ": span out of range");
    return {static_cast<uint32_t>(start), static_cast<uint32_t>(end)};
  };

  for (size_t r = 1; r < qrows.size(); ++r) {
    std::string ctx = "quotation_info.csv row " + std::to_string(r + 1);
    const auto& row = qrows[r];
    Quotation q;
    q.quote_id = cell(row, q_id);
    if (q.quote_id.empty())
      throw Error(ErrorKind::MalformedRow, ctx + ": empty quote_id");
    long rs = parse_long(cell(row, q_start), ctx);
    long re = parse_long(cell(row, q_end), ctx);
    Span raw_span = interpret(rs, re, has_text ? cell(row, qh.at("text", "")) :
                                                 std::string(), ctx);
    q.span = norm.remap_span(raw_span);
    if (q.span.empty())
      throw Error(ErrorKind::MalformedRow,
                  ctx + ": span vanished under normalization");

    std::string speaker = cell(row, q_speaker);
    if (speaker.empty() || speaker == "UNKNOWN") {
      q.speaker_id = kUnknownChar;
    } else {
      q.speaker_id = names.resolve(speaker, ctx);
    }
    if (has_addr) {
      for (const auto& a : split_list(cell(row, qh.at("addressees", ""))))
        q.addressee_ids.push_back(names.resolve(a, ctx));
    }
    if (has_ref) {
      std::string ref_s = cell(row, qh.at("ref_start", ""));
      std::string ref_e = cell(row, qh.at("ref_end", ""));
      if (!ref_s.empty() && !ref_e.empty()) {
        Span ref = interpret(parse_long(ref_s, ctx), parse_long(ref_e, ctx),
                             std::string(), ctx);
        q.referring_expression = norm.remap_span(ref);
      }
    }
    if (has_type) {
      std::string t = cell(row, qh.at("quote_type", ""));
      if (t.empty()) {
        q.quote_type = q.referring_expression ? QuoteType::Explicit
                                              : QuoteType::Implicit;
        result.quote_types_derived = true;
      } else {
        auto qt = quote_type_from_name(t);
        if (!qt)
          throw Error(ErrorKind::MalformedRow,
                      ctx + ": unknown quote_type '" + t + "'");
        q.quote_type = *qt;
      }
    } else {
      q.quote_type = q.referring_expression ? QuoteType::Explicit
                                            : QuoteType::Implicit;
    }
    if (has_mentions) {
      std::string mcell = cell(row, qh.at("mentions", ""));
      if (!mcell.empty()) {
        ordered_json marr;
        try {
          marr = ordered_json::parse(mcell);
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorKind::MalformedRow,
                      ctx + ": bad mentions JSON: " + e.what());
        }
        for (const auto& mj : marr) {
          MentionSpan m;
          std::string verify = mj.contains("text")
                                   ? mj["text"].get<std::string>()
                                   : std::string();
          Span mraw = interpret(mj.at("start").get<long>(),
                                mj.at("end").get<long>(), verify, ctx);
          m.span = norm.remap_span(mraw);
          for (const auto& nm : mj.at("names"))
            m.entity_ids.push_back(
                names.resolve(nm.get<std::string>(), ctx));
          if (m.entity_ids.empty())
            throw Error(ErrorKind::MalformedRow,
                        ctx + ": mention without referent");
          m.surface = bundle.slice_utf8(m.span);
          q.internal_mentions.push_back(std::move(m));
        }
      }
    }
    std::sort(q.internal_mentions.begin(), q.internal_mentions.end(),
              [](const MentionSpan& a, const MentionSpan& b) {
                return a.span < b.span;
              });
    bundle.quotations.push_back(std::move(q));
  }
  std::stable_sort(bundle.quotations.begin(), bundle.quotations.end(),
                   [](const Quotation& a, const Quotation& b) {
                     return a.span < b.span;
                   });
  bundle.validate();
  return result;
}

}  // namespace quotemark
