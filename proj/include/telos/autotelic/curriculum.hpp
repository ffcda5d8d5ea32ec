#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "telos/goalspace/classes.hpp"
#include "telos/numcore/init.hpp"

namespace telos::autotelic {

using goals::ClassId;

// Per-class windows of self-evaluation outcomes. Competence is the window
// mean; learning progress is |mean(recent half) - mean(older half)|.
class LpTracker {
 public:
  explicit LpTracker(std::vector<ClassId> classes = {goals::kContinuousClasses.begin(), goals::kContinuousClasses.end()},
                     std::size_t capacity = 1000)
      : classes_(std::move(classes)), capacity_(capacity) {
    if (classes_.empty()) throw std::invalid_argument("LpTracker: no classes");
    for (auto c : classes_) outcomes_[c];
  }

  const std::vector<ClassId>& classes() const { return classes_; }
  std::size_t capacity() const { return capacity_; }

  void record(ClassId c, bool success) {
    auto& q = window(c);
    q.push_back(success ? 1 : 0);
    if (q.size() > capacity_) q.pop_front();
  }

  std::size_t count(ClassId c) const { return window(c).size(); }

  double competence(ClassId c) const {
    const auto& q = window(c);
    if (q.empty()) return 0.0;
    double s = 0;
    for (auto v : q) s += v;
    return s / static_cast<double>(q.size());
  }

  double lp(ClassId c) const {
    const auto& q = window(c);
    const std::size_t half = q.size() / 2;
    if (half == 0) return 0.0;
    double older = 0, recent = 0;
    for (std::size_t i = 0; i < half; ++i) {
      older += q[i];
      recent += q[q.size() - half + i];
    }
    return std::abs(recent - older) / static_cast<double>(half);
  }

  std::vector<double> lps() const {
    std::vector<double> v;
    for (auto c : classes_) v.push_back(lp(c));
    return v;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["capacity"] = capacity_;
    for (auto c : classes_) j["outcomes"][goals::class_name(c)] = std::vector<int>(window(c).begin(), window(c).end());
    return j;
  }

  void load_json(const nlohmann::json& j) {
    capacity_ = j.at("capacity").get<std::size_t>();
    for (auto c : classes_) {
      const auto v = j.at("outcomes").at(goals::class_name(c)).get<std::vector<int>>();
      outcomes_[c] = std::deque<std::uint8_t>(v.begin(), v.end());
    }
  }

 private:
  const std::deque<std::uint8_t>& window(ClassId c) const {
    auto it = outcomes_.find(c);
    if (it == outcomes_.end()) throw std::invalid_argument(std::string("LpTracker: untracked class ") + goals::class_name(c));
    return it->second;
  }
  std::deque<std::uint8_t>& window(ClassId c) {
    return const_cast<std::deque<std::uint8_t>&>(static_cast<const LpTracker&>(*this).window(c));
  }

  std::vector<ClassId> classes_;
  std::size_t capacity_;
  std::map<ClassId, std::deque<std::uint8_t>> outcomes_;
};

struct CurriculumOptions {
  double epsilon = 0.1;    // uniform share of the class distribution
  double self_eval = 0.1;  // probability a rollout is a self-evaluation
  bool uniform = false;    // ablation: ignore LP
};

// p(c) = (1 - eps) LP(c) / sum LP + eps / N; uniform when no class shows progress.
inline std::vector<double> class_probabilities(const std::vector<double>& lp, const CurriculumOptions& opt) {
  const double n = static_cast<double>(lp.size());
  double total = 0;
  for (double v : lp) total += v;
  std::vector<double> p(lp.size(), 1.0 / n);
  if (opt.uniform || total <= 0) return p;
  for (std::size_t i = 0; i < lp.size(); ++i) p[i] = (1.0 - opt.epsilon) * lp[i] / total + opt.epsilon / n;
  return p;
}

struct ClassDraw {
  std::vector<ClassId> classes;
  std::vector<bool> self_eval;
};

inline std::size_t draw_index(const std::vector<double>& p, std::mt19937_64& rng) {
  double u = num::unit_uniform(rng);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  return p.size() - 1;
}

inline ClassDraw sample_class_lp(const LpTracker& tracker, std::size_t n, std::mt19937_64& rng,
                                 const CurriculumOptions& opt = {}) {
  const auto p = class_probabilities(tracker.lps(), opt);
  ClassDraw d;
  for (std::size_t i = 0; i < n; ++i) {
    d.self_eval.push_back(num::unit_uniform(rng) < opt.self_eval);
    d.classes.push_back(tracker.classes()[draw_index(p, rng)]);
  }
  return d;
}

}  // namespace telos::autotelic
