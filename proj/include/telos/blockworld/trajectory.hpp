#pragma once

#include <ostream>

#include <nlohmann/json.hpp>

#include "telos/blockworld/world.hpp"

namespace telos::world {

inline nlohmann::json state_json(const WorldState& st) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : st.objects) objects.push_back({{"pos", o.pos}, {"orient", o.orient}, {"vel", o.vel}});
  return {{"gripper_pos", st.gripper_pos},
          {"gripper_aperture", st.gripper_aperture},
          {"gripper_vel", st.gripper_vel},
          {"held", st.held ? nlohmann::json(*st.held) : nlohmann::json(nullptr)},
          {"objects", std::move(objects)}};
}

// One JSON object per line: {"t", "state", "action", "achieved"}. The action
// is the one applied at t (null on the final state).
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(out) {}

  void write(std::size_t t, const WorldState& st, const Action* action) {
    nlohmann::json line = {{"t", t}, {"state", state_json(st)}, {"achieved", achieved(st).hex()}};
    line["action"] = action ? nlohmann::json(*action) : nlohmann::json(nullptr);
    out_ << line.dump() << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace telos::world
