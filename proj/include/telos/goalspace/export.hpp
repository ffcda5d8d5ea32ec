#pragma once

#include <nlohmann/json.hpp>

#include "telos/goalspace/classes.hpp"

namespace telos::goals {

// {"format":"telos.classes","version":1,"classes":{"P3":["0000a001",...],...}}
inline nlohmann::json class_table_json() {
  nlohmann::json classes = nlohmann::json::object();
  for (ClassId c : kSemanticClasses) {
    nlohmann::json members = nlohmann::json::array();
    for (auto m : enumerate_class(c)) members.push_back(m.hex());
    classes[class_name(c)] = std::move(members);
  }
  return {{"format", "telos.classes"}, {"version", 1}, {"classes", std::move(classes)}};
}

}  // namespace telos::goals
