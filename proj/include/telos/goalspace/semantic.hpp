#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "telos/blockworld/geometry.hpp"

namespace telos::goals {

inline constexpr std::size_t kNumClosePairs = 10;
inline constexpr std::size_t kNumAbovePairs = 20;
inline constexpr std::size_t kSemanticWidth = kNumClosePairs + kNumAbovePairs;

// Bit k of the configuration. Close pairs (i<j) come first in lexicographic
// order, then ordered above pairs (i,j), i!=j, lexicographic.
constexpr std::size_t close_index(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  // Offset of row i in the upper triangle of a 5x5 matrix.
  constexpr std::array<std::size_t, kNumObjects> row_start{0, 4, 7, 9, 10};
  return row_start[i] + (j - i - 1);
}

constexpr std::size_t above_index(std::size_t i, std::size_t j) {
  return kNumClosePairs + i * (kNumObjects - 1) + (j < i ? j : j - 1);
}

struct PredicateInfo {
  bool is_close;
  std::size_t first;
  std::size_t second;
};

constexpr std::array<PredicateInfo, kSemanticWidth> make_predicate_table() {
  std::array<PredicateInfo, kSemanticWidth> table{};
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (i == j) continue;
      if (i < j) table[close_index(i, j)] = {true, i, j};
      table[above_index(i, j)] = {false, i, j};
    }
  }
  return table;
}

inline constexpr auto kPredicates = make_predicate_table();

constexpr std::array<std::uint32_t, kNumObjects> make_object_masks() {
  std::array<std::uint32_t, kNumObjects> masks{};
  for (std::size_t k = 0; k < kSemanticWidth; ++k) {
    masks[kPredicates[k].first] |= 1u << k;
    masks[kPredicates[k].second] |= 1u << k;
  }
  return masks;
}

// Bits of every predicate that mentions a given object.
inline constexpr auto kObjectMasks = make_object_masks();

inline constexpr std::uint32_t kCloseMask = (1u << kNumClosePairs) - 1;
inline constexpr std::uint32_t kAboveMask = ((1u << kSemanticWidth) - 1) & ~kCloseMask;
inline constexpr std::uint32_t kFullMask = (1u << kSemanticWidth) - 1;

// 30 binary close/above predicates over 5 objects.
class SemanticConfiguration {
 public:
  constexpr SemanticConfiguration() = default;
  constexpr explicit SemanticConfiguration(std::uint32_t bits) : bits_(bits) {
    if (bits & ~kFullMask) throw std::invalid_argument("SemanticConfiguration: bits beyond width 30");
  }

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr bool bit(std::size_t k) const { return (bits_ >> k) & 1u; }
  constexpr void set_bit(std::size_t k, bool v) { bits_ = v ? (bits_ | (1u << k)) : (bits_ & ~(1u << k)); }

  constexpr bool close(std::size_t i, std::size_t j) const { return bit(close_index(i, j)); }
  constexpr bool above(std::size_t i, std::size_t j) const { return bit(above_index(i, j)); }
  constexpr void set_close(std::size_t i, std::size_t j, bool v = true) { set_bit(close_index(i, j), v); }
  constexpr void set_above(std::size_t i, std::size_t j, bool v = true) { set_bit(above_index(i, j), v); }

  constexpr std::uint32_t close_bits() const { return bits_ & kCloseMask; }
  constexpr std::uint32_t above_bits() const { return bits_ & kAboveMask; }
  int count() const { return std::popcount(bits_); }

  std::array<double, kSemanticWidth> as_vector() const {
    std::array<double, kSemanticWidth> v{};
    for (std::size_t k = 0; k < kSemanticWidth; ++k) v[k] = bit(k) ? 1.0 : 0.0;
    return v;
  }

  // Edge slice for the directed pair i->j: [close(i,j), above(i,j), above(j,i)].
  std::array<double, 3> edge_slice(std::size_t i, std::size_t j) const {
    return {close(i, j) ? 1.0 : 0.0, above(i, j) ? 1.0 : 0.0, above(j, i) ? 1.0 : 0.0};
  }

  // Relabels objects: object i becomes perm[i].
  SemanticConfiguration permuted(const std::array<std::size_t, kNumObjects>& perm) const {
    SemanticConfiguration out;
    for (std::size_t k = 0; k < kSemanticWidth; ++k) {
      if (!bit(k)) continue;
      const auto& p = kPredicates[k];
      if (p.is_close) {
        out.set_close(perm[p.first], perm[p.second]);
      } else {
        out.set_above(perm[p.first], perm[p.second]);
      }
    }
    return out;
  }

  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(8) << std::setfill('0') << bits_;
    return os.str();
  }

  static SemanticConfiguration from_hex(const std::string& s) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used, 16);
    if (used != s.size()) throw std::invalid_argument("SemanticConfiguration: bad hex '" + s + "'");
    return SemanticConfiguration(static_cast<std::uint32_t>(v));
  }

  friend constexpr bool operator==(SemanticConfiguration a, SemanticConfiguration b) { return a.bits_ == b.bits_; }
  friend constexpr bool operator<(SemanticConfiguration a, SemanticConfiguration b) { return a.bits_ < b.bits_; }

 private:
  std::uint32_t bits_ = 0;
};

struct SemanticHash {
  std::size_t operator()(SemanticConfiguration c) const { return std::hash<std::uint32_t>{}(c.bits()); }
};

}  // namespace telos::goals
