#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "telos/numcore/matrix.hpp"

namespace telos::num {

struct Parameter {
  Matrix value;
  Matrix grad;
};

// Named weight matrices with gradient slots. Node-based storage keeps
// references stable while a tape holds them.
class ParamStore {
 public:
  static constexpr int kFormatVersion = 1;

  Parameter& add(const std::string& name, Matrix value) {
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw ContractError("ParamStore: duplicate parameter '" + name + "'");
    it->second.grad = Matrix(value.rows(), value.cols());
    it->second.value = std::move(value);
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Parameter& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamStore: no parameter '" + name + "'");
    return it->second;
  }
  const Parameter& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("ParamStore: no parameter '" + name + "'");
    return it->second;
  }

  std::size_t size() const { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.fill(0.0);
  }

  // Copies values (not gradients) from a store of identical layout.
  void copy_values_from(const ParamStore& other) {
    check_layout(other);
    for (auto& [name, p] : params_) p.value = other.params_.at(name).value;
  }

  void check_layout(const ParamStore& other) const {
    if (other.params_.size() != params_.size()) throw ShapeError("ParamStore: layout mismatch (count)");
    for (const auto& [name, p] : params_) {
      auto it = other.params_.find(name);
      if (it == other.params_.end()) throw ShapeError("ParamStore: layout mismatch, missing '" + name + "'");
      require_same_shape(p.value, it->second.value, name.c_str());
    }
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "telos.params";
    j["version"] = kFormatVersion;
    auto& entries = j["params"] = nlohmann::json::object();
    for (const auto& [name, p] : params_) {
      entries[name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"values", p.value.to_vector()}};
    }
    return j;
  }

  static ParamStore from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "telos.params") throw ContractError("ParamStore: not a parameter dump");
    if (j.value("version", 0) != kFormatVersion) {
      throw ContractError("ParamStore: unsupported version " + std::to_string(j.value("version", 0)));
    }
    ParamStore store;
    for (const auto& [name, entry] : j.at("params").items()) {
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw ShapeError("ParamStore: bad shape for '" + name + "'");
      store.add(name, Matrix(shape[0], shape[1], entry.at("values").get<std::vector<double>>()));
    }
    return store;
  }

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace telos::num
