#pragma once

#include <array>
#include <bit>
#include <cstdint>

#include "telos/goalspace/semantic.hpp"

namespace telos::goals {

namespace detail {

// Object supports (objects i rests on) as bitmasks, from the above bits.
inline std::array<std::uint32_t, kNumObjects> supports_of(std::uint32_t bits) {
  std::array<std::uint32_t, kNumObjects> below{};
  for (std::size_t k = kNumClosePairs; k < kSemanticWidth; ++k) {
    if ((bits >> k) & 1u) below[kPredicates[k].first] |= 1u << kPredicates[k].second;
  }
  return below;
}

// Above-relation rules. On success forced_close holds the close bits that
// must be set and forbidden_close those that must be clear. Without geometric
// entailment only pyramid supports are forced.
inline bool above_structure_ok(std::uint32_t bits, std::uint32_t& forced_close, std::uint32_t& forbidden_close,
                               bool geometric = false) {
  const auto below = supports_of(bits);
  std::array<int, kNumObjects> on_top{};
  forced_close = 0;
  forbidden_close = 0;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    const int n = std::popcount(below[i]);
    if (n > 2) return false;
    if (n == 2) {
      const auto a = static_cast<std::size_t>(std::countr_zero(below[i]));
      const auto b = static_cast<std::size_t>(31 - std::countl_zero(below[i]));
      forced_close |= 1u << close_index(a, b);
    }
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if ((below[i] >> j) & 1u) ++on_top[j];
    }
  }
  for (int n : on_top) {
    if (n > 1) return false;
  }
  // Kahn's algorithm: every object must be peelable from the bottom up.
  std::uint32_t placed = 0;
  for (std::size_t round = 0; round < kNumObjects; ++round) {
    bool progress = false;
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if (!((placed >> i) & 1u) && (below[i] & ~placed) == 0) {
        placed |= 1u << i;
        progress = true;
      }
    }
    if (!progress) break;
  }
  if (placed != (1u << kNumObjects) - 1) return false;
  if (geometric) {
    // Stacked blocks are within d_close up to two levels apart, never three.
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      std::uint32_t level = below[i];
      for (int depth = 1; depth <= 4 && level; ++depth) {
        std::uint32_t next = 0;
        for (std::size_t j = 0; j < kNumObjects; ++j) {
          if (!((level >> j) & 1u)) continue;
          if (depth <= 2) forced_close |= 1u << close_index(i, j);
          if (depth >= 3) forbidden_close |= 1u << close_index(i, j);
          next |= below[j];
        }
        level = next;
      }
    }
  }
  return (forced_close & forbidden_close) == 0;
}

}  // namespace detail

// Physical-consistency rules for a configuration: the above relation is
// acyclic, no object carries more than one object, an object rests on at most
// two objects, and two supports must be close to each other. The geometric
// variant also ties close bits to stacking at the default thresholds.
inline bool reachable_filter(SemanticConfiguration config, bool geometric = false) {
  std::uint32_t forced = 0, forbidden = 0;
  if (!detail::above_structure_ok(config.bits(), forced, forbidden, geometric)) return false;
  return (config.close_bits() & forced) == forced && (config.close_bits() & forbidden) == 0;
}

// Number of configurations passing reachable_filter, computed per above mask
// (close bits the rules leave open are free).
inline std::uint64_t count_reachable(bool geometric = false) {
  std::uint64_t total = 0;
  for (std::uint32_t above = 0; above < (1u << kNumAbovePairs); ++above) {
    std::uint32_t forced = 0, forbidden = 0;
    if (!detail::above_structure_ok(above << kNumClosePairs, forced, forbidden, geometric)) continue;
    total += std::uint64_t{1} << (kNumClosePairs - static_cast<std::size_t>(std::popcount(forced | forbidden)));
  }
  return total;
}

}  // namespace telos::goals
