#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace keep {

// External concept identifier (e.g. an OMOP concept id). Stable across the
// whole pipeline, unlike ConceptIndex which is dense per vocabulary.
struct ConceptId {
  std::uint64_t value = 0;

  constexpr ConceptId() = default;
  constexpr explicit ConceptId(std::uint64_t v) : value(v) {}
  auto operator<=>(const ConceptId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, ConceptId id) {
  return os << id.value;
}

// Dense row index 0..V-1 into a vocabulary.
using ConceptIndex = std::uint32_t;

}  // namespace keep

template <>
struct std::hash<keep::ConceptId> {
  std::size_t operator()(keep::ConceptId id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
