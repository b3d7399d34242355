#pragma once

#include <string>
#include <string_view>

namespace quotemark {

// Decode UTF-8 into Unicode scalar values. Invalid byte sequences become
// U+FFFD so that a stray byte in a novel file cannot abort a whole run.
std::u32string utf8_decode(std::string_view bytes);

std::string utf8_encode(std::u32string_view text);

// Scalar offset of each byte position is what annotation tables sometimes
// count in; this maps a byte offset into the scalar offset of the character
// containing it. Returns npos for out-of-range.
size_t byte_to_scalar_offset(std::string_view bytes, size_t byte_offset);

}  // namespace quotemark
