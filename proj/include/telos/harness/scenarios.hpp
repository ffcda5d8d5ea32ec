#pragma once

#include <stdexcept>
#include <vector>

#include "telos/goalspace/classes.hpp"
#include "telos/goalspace/goal.hpp"

namespace telos::harness {

using goals::ClassId;

struct TransferSetup {
  goals::HeldOut heldout;
  std::vector<ClassId> test_classes;
};

inline bool in_class(goals::SemanticConfiguration c, std::initializer_list<ClassId> classes) {
  const auto k = goals::classify(c);
  if (!k) return false;
  for (auto x : classes) {
    if (*k == x) return true;
  }
  return false;
}

// 1: combinations of structures; 2: anything with a pyramid; 3: any stack of
// three or more.
inline TransferSetup transfer_setup(int scenario) {
  switch (scenario) {
    case 1:
      return {[](goals::SemanticConfiguration c) { return in_class(c, {ClassId::S2_S2, ClassId::S2_S3, ClassId::P3_S2}); },
              {ClassId::S2_S2, ClassId::S2_S3, ClassId::P3_S2}};
    case 2:
      return {goals::contains_pyramid, {ClassId::P3, ClassId::P3_S2}};
    case 3:
      return {goals::contains_stack_of_three, {ClassId::S3}};
    default:
      throw std::invalid_argument("transfer scenario must be 1, 2 or 3");
  }
}

}  // namespace telos::harness
