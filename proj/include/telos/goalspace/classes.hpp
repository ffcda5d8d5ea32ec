#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "telos/goalspace/semantic.hpp"
#include "telos/numcore/init.hpp"

namespace telos::goals {

enum class ClassId {
  C1, C2, C3,
  S2, S3, S4, S5,
  P3,
  S2_S2, S2_S3, P3_S2,
  CS0, CS2, CS3, CS4, CS5,
};

inline constexpr std::array<ClassId, 11> kSemanticClasses{
    ClassId::C1, ClassId::C2, ClassId::C3, ClassId::S2,    ClassId::S3,    ClassId::S4,
    ClassId::S5, ClassId::P3, ClassId::S2_S2, ClassId::S2_S3, ClassId::P3_S2,
};

inline constexpr std::array<ClassId, 5> kContinuousClasses{ClassId::CS0, ClassId::CS2, ClassId::CS3, ClassId::CS4,
                                                           ClassId::CS5};

inline bool is_continuous(ClassId c) { return c >= ClassId::CS0; }
inline bool is_semantic(ClassId c) { return !is_continuous(c); }

inline const char* class_name(ClassId c) {
  switch (c) {
    case ClassId::C1: return "C1";
    case ClassId::C2: return "C2";
    case ClassId::C3: return "C3";
    case ClassId::S2: return "S2";
    case ClassId::S3: return "S3";
    case ClassId::S4: return "S4";
    case ClassId::S5: return "S5";
    case ClassId::P3: return "P3";
    case ClassId::S2_S2: return "S2&S2";
    case ClassId::S2_S3: return "S2&S3";
    case ClassId::P3_S2: return "P3&S2";
    case ClassId::CS0: return "cS0";
    case ClassId::CS2: return "cS2";
    case ClassId::CS3: return "cS3";
    case ClassId::CS4: return "cS4";
    case ClassId::CS5: return "cS5";
  }
  return "?";
}

// Accepts the display names; '+' may replace '&' for shell convenience.
inline ClassId parse_class(std::string name) {
  std::replace(name.begin(), name.end(), '+', '&');
  for (int k = 0; k <= static_cast<int>(ClassId::CS5); ++k) {
    if (name == class_name(static_cast<ClassId>(k))) return static_cast<ClassId>(k);
  }
  throw std::invalid_argument("unknown evaluation class '" + name + "'");
}

// Number of stacked blocks for a continuous class.
inline std::size_t continuous_stack_size(ClassId c) {
  switch (c) {
    case ClassId::CS0: return 0;
    case ClassId::CS2: return 2;
    case ClassId::CS3: return 3;
    case ClassId::CS4: return 4;
    case ClassId::CS5: return 5;
    default: throw std::logic_error(std::string("not a continuous class: ") + class_name(c));
  }
}

// Stack given top-to-bottom: above(c[m], c[m+1]); blocks at most two levels
// apart are within the close distance.
inline SemanticConfiguration stack_pattern(const std::vector<std::size_t>& top_to_bottom) {
  SemanticConfiguration c;
  for (std::size_t m = 0; m + 1 < top_to_bottom.size(); ++m) c.set_above(top_to_bottom[m], top_to_bottom[m + 1]);
  for (std::size_t a = 0; a < top_to_bottom.size(); ++a) {
    for (std::size_t b = a + 1; b < top_to_bottom.size() && b <= a + 2; ++b) {
      c.set_close(top_to_bottom[a], top_to_bottom[b]);
    }
  }
  return c;
}

// Top block resting on two adjacent bases.
inline SemanticConfiguration pyramid_pattern(std::size_t top, std::size_t base_a, std::size_t base_b) {
  SemanticConfiguration c;
  c.set_above(top, base_a);
  c.set_above(top, base_b);
  c.set_close(base_a, base_b);
  c.set_close(top, base_a);
  c.set_close(top, base_b);
  return c;
}

namespace detail {

inline std::vector<std::vector<std::size_t>> ordered_tuples(std::size_t k, std::uint32_t excluded = 0) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::function<void(std::uint32_t)> rec = [&](std::uint32_t used) {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::size_t o = 0; o < kNumObjects; ++o) {
      if (used & (1u << o)) continue;
      cur.push_back(o);
      rec(used | (1u << o));
      cur.pop_back();
    }
  };
  rec(excluded);
  return out;
}

inline std::uint32_t object_set(const std::vector<std::size_t>& objs) {
  std::uint32_t m = 0;
  for (auto o : objs) m |= 1u << o;
  return m;
}

}  // namespace detail

// Every member of a semantic class, sorted by bit pattern, duplicate-free.
inline std::vector<SemanticConfiguration> enumerate_class(ClassId cls) {
  if (is_continuous(cls)) {
    throw std::logic_error(std::string("enumerate_class: continuous class ") + class_name(cls));
  }
  std::set<SemanticConfiguration> out;
  auto close_combinations = [&](std::size_t n) {
    for (std::uint32_t m = 0; m < (1u << kNumClosePairs); ++m) {
      if (static_cast<std::size_t>(std::popcount(m)) == n) out.insert(SemanticConfiguration(m));
    }
  };
  auto stacks = [&](std::size_t k) {
    for (const auto& t : detail::ordered_tuples(k)) out.insert(stack_pattern(t));
  };
  auto pyramids_with = [&](const std::function<void(SemanticConfiguration, std::uint32_t)>& then) {
    for (std::size_t top = 0; top < kNumObjects; ++top) {
      for (std::size_t a = 0; a < kNumObjects; ++a) {
        for (std::size_t b = a + 1; b < kNumObjects; ++b) {
          if (a == top || b == top) continue;
          then(pyramid_pattern(top, a, b), (1u << top) | (1u << a) | (1u << b));
        }
      }
    }
  };
  auto stack_then_stack = [&](std::size_t k1, std::size_t k2) {
    for (const auto& t1 : detail::ordered_tuples(k1)) {
      for (const auto& t2 : detail::ordered_tuples(k2, detail::object_set(t1))) {
        out.insert(SemanticConfiguration(stack_pattern(t1).bits() | stack_pattern(t2).bits()));
      }
    }
  };
  switch (cls) {
    case ClassId::C1: close_combinations(1); break;
    case ClassId::C2: close_combinations(2); break;
    case ClassId::C3: close_combinations(3); break;
    case ClassId::S2: stacks(2); break;
    case ClassId::S3: stacks(3); break;
    case ClassId::S4: stacks(4); break;
    case ClassId::S5: stacks(5); break;
    case ClassId::P3:
      pyramids_with([&](SemanticConfiguration p, std::uint32_t) { out.insert(p); });
      break;
    case ClassId::S2_S2: stack_then_stack(2, 2); break;
    case ClassId::S2_S3: stack_then_stack(3, 2); break;
    case ClassId::P3_S2:
      pyramids_with([&](SemanticConfiguration p, std::uint32_t used) {
        for (const auto& t : detail::ordered_tuples(2, used)) {
          out.insert(SemanticConfiguration(p.bits() | stack_pattern(t).bits()));
        }
      });
      break;
    default: break;
  }
  return {out.begin(), out.end()};
}

// Structural classifier: decomposes the above relation into chains and
// pyramids, then requires the close bits to be exactly those the structures
// imply. Returns nullopt for configurations outside every class.
inline std::optional<ClassId> classify(SemanticConfiguration config) {
  if (config.above_bits() == 0) {
    switch (std::popcount(config.close_bits())) {
      case 1: return ClassId::C1;
      case 2: return ClassId::C2;
      case 3: return ClassId::C3;
      default: return std::nullopt;
    }
  }
  std::array<int, kNumObjects> n_on_top{};  // objects resting on i
  std::array<int, kNumObjects> n_below{};   // objects i rests on
  std::array<std::uint32_t, kNumObjects> adjacency{};
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (i != j && config.above(i, j)) {
        ++n_on_top[j];
        ++n_below[i];
        adjacency[i] |= 1u << j;
        adjacency[j] |= 1u << i;
      }
    }
  }
  std::uint32_t expected_close = 0;
  // Structure codes: stack size k -> k, pyramid -> 6.
  constexpr int kPyramid = 6;
  std::array<int, 3> parts{};
  std::size_t n_parts = 0;
  std::uint32_t seen = 0;
  for (std::size_t start = 0; start < kNumObjects; ++start) {
    if ((seen >> start) & 1u || adjacency[start] == 0) continue;
    std::uint32_t comp = 0;
    std::array<std::size_t, 4 * kNumObjects> frontier{};
    std::size_t top_of_stack = 0;
    frontier[top_of_stack++] = start;
    while (top_of_stack > 0) {
      const std::size_t o = frontier[--top_of_stack];
      if ((comp >> o) & 1u) continue;
      comp |= 1u << o;
      for (std::size_t n = 0; n < kNumObjects; ++n) {
        if (((adjacency[o] >> n) & 1u) && !((comp >> n) & 1u)) frontier[top_of_stack++] = n;
      }
    }
    seen |= comp;
    const auto size = static_cast<std::size_t>(std::popcount(comp));
    std::size_t edges = 0;
    for (std::size_t o = 0; o < kNumObjects; ++o) {
      if ((comp >> o) & 1u) edges += static_cast<std::size_t>(n_below[o]);
    }
    if (edges != size - 1) return std::nullopt;  // cycles or extra relations

    // Pyramid: exactly one object on two bases, each base holding nothing else.
    std::size_t two_below = kNumObjects;
    bool chain_like = true;
    for (std::size_t o = 0; o < kNumObjects; ++o) {
      if (!((comp >> o) & 1u)) continue;
      if (n_on_top[o] > 1) return std::nullopt;
      if (n_below[o] == 2) two_below = o;
      if (n_below[o] > 2) return std::nullopt;
      if (n_below[o] == 2) chain_like = false;
    }
    if (!chain_like) {
      if (size != 3) return std::nullopt;
      std::array<std::size_t, 2> bases{};
      std::size_t nb = 0;
      for (std::size_t o = 0; o < kNumObjects; ++o) {
        if (o != two_below && ((comp >> o) & 1u)) bases[nb++] = o;
      }
      expected_close |= pyramid_pattern(two_below, bases[0], bases[1]).close_bits();
      parts[n_parts++] = kPyramid;
      continue;
    }
    // Chain: walk down from the unique top (no object on it).
    std::size_t top = kNumObjects;
    for (std::size_t o = 0; o < kNumObjects; ++o) {
      if (((comp >> o) & 1u) && n_on_top[o] == 0) {
        if (top != kNumObjects) return std::nullopt;
        top = o;
      }
    }
    if (top == kNumObjects) return std::nullopt;
    std::array<std::size_t, kNumObjects> chain{top};
    std::size_t len = 1;
    while (len < size) {
      const std::size_t cur = chain[len - 1];
      std::size_t next = kNumObjects;
      for (std::size_t o = 0; o < kNumObjects; ++o) {
        if (o != cur && config.above(cur, o)) next = o;
      }
      if (next == kNumObjects) return std::nullopt;
      chain[len++] = next;
    }
    // Close pairs implied by a stack: levels at most two apart.
    for (std::size_t a = 0; a < len; ++a) {
      for (std::size_t b = a + 1; b < len && b <= a + 2; ++b) expected_close |= 1u << close_index(chain[a], chain[b]);
    }
    parts[n_parts++] = static_cast<int>(size);
  }
  if (config.close_bits() != expected_close) return std::nullopt;
  std::sort(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(n_parts));
  if (n_parts == 1) {
    switch (parts[0]) {
      case 2: return ClassId::S2;
      case 3: return ClassId::S3;
      case 4: return ClassId::S4;
      case 5: return ClassId::S5;
      case kPyramid: return ClassId::P3;
      default: return std::nullopt;
    }
  }
  if (n_parts == 2) {
    if (parts[0] == 2 && parts[1] == 2) return ClassId::S2_S2;
    if (parts[0] == 2 && parts[1] == 3) return ClassId::S2_S3;
    if (parts[0] == 2 && parts[1] == kPyramid) return ClassId::P3_S2;
  }
  return std::nullopt;
}

// Some object rests on two objects that are close to each other.
inline bool contains_pyramid(SemanticConfiguration c) {
  for (std::size_t top = 0; top < kNumObjects; ++top) {
    for (std::size_t a = 0; a < kNumObjects; ++a) {
      for (std::size_t b = a + 1; b < kNumObjects; ++b) {
        if (a != top && b != top && c.above(top, a) && c.above(top, b) && c.close(a, b)) return true;
      }
    }
  }
  return false;
}

// Some above-chain spans at least three objects.
inline bool contains_stack_of_three(SemanticConfiguration c) {
  for (std::size_t a = 0; a < kNumObjects; ++a) {
    for (std::size_t b = 0; b < kNumObjects; ++b) {
      if (a == b || !c.above(a, b)) continue;
      for (std::size_t d = 0; d < kNumObjects; ++d) {
        if (d != a && d != b && c.above(b, d)) return true;
      }
    }
  }
  return false;
}

// k goals from a semantic class. Draws without replacement while k fits in
// the class; beyond that, successive shuffled passes over the whole class.
inline std::vector<SemanticConfiguration> sample_semantic_eval_goals(ClassId cls, std::size_t k,
                                                                     std::mt19937_64& rng) {
  auto members = enumerate_class(cls);
  std::vector<SemanticConfiguration> out;
  out.reserve(k);
  while (out.size() < k) {
    auto pass = members;
    for (std::size_t i = pass.size(); i > 1; --i) std::swap(pass[i - 1], pass[num::uniform_index(rng, i)]);
    for (std::size_t i = 0; i < pass.size() && out.size() < k; ++i) out.push_back(pass[i]);
  }
  return out;
}

}  // namespace telos::goals
