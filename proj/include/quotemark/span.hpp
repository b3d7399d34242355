#pragma once

#include <algorithm>
#include <cstdint>

namespace quotemark {

// Half-open [start, end) span over Unicode scalar offsets.
struct Span {
  uint32_t start = 0;
  uint32_t end = 0;

  uint32_t length() const { return end - start; }
  bool empty() const { return end <= start; }
  bool contains(uint32_t pos) const { return pos >= start && pos < end; }
  bool contains(const Span& other) const {
    return other.start >= start && other.end <= end;
  }
  bool overlaps(const Span& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span& a, const Span& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    return a.end <=> b.end;
  }
};

}  // namespace quotemark
