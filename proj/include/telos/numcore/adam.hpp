#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "telos/numcore/param_store.hpp"

namespace telos::num {

// Raised when a gradient holds NaN/Inf; the update is not applied.
struct PoisonedUpdate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  struct Moments {
    Matrix first;
    Matrix second;
  };
  std::map<std::string, Moments> moments;
  std::int64_t step = 0;

  static AdamState for_store(const ParamStore& params) {
    AdamState s;
    for (const auto& [name, p] : params) {
      s.moments[name] = {Matrix(p.value.rows(), p.value.cols()), Matrix(p.value.rows(), p.value.cols())};
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["step"] = step;
    for (const auto& [name, m] : moments) j["moments"][name] = {{"m", m.first.to_vector()}, {"v", m.second.to_vector()}};
    return j;
  }

  void load_json(const nlohmann::json& j) {
    step = j.at("step").get<std::int64_t>();
    for (auto& [name, m] : moments) {
      const auto first = j.at("moments").at(name).at("m").get<std::vector<double>>();
      const auto second = j.at("moments").at(name).at("v").get<std::vector<double>>();
      if (first.size() != m.first.size() || second.size() != m.second.size()) {
        throw ShapeError("AdamState: moment size mismatch for '" + name + "'");
      }
      m.first = Matrix(m.first.rows(), m.first.cols(), first);
      m.second = Matrix(m.second.rows(), m.second.cols(), second);
    }
  }
};

// One bias-corrected Adam step using the gradients held in `params`.
inline void adam_step(ParamStore& params, AdamState& state, double lr, const AdamConfig& cfg = {}) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw PoisonedUpdate("adam_step: non-finite gradient in '" + name + "'");
    auto it = state.moments.find(name);
    if (it == state.moments.end() || !it->second.first.same_shape(p.value)) {
      throw ShapeError("adam_step: optimizer state does not match parameter '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    auto& [m, v] = state.moments.at(name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace telos::num
