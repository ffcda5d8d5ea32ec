#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telos/autotelic/trainer.hpp"
#include "telos/blockworld/trajectory.hpp"
#include "telos/harness/config.hpp"
#include "telos/harness/evaluation.hpp"
#include "telos/harness/metrics.hpp"
#include "telos/harness/scenarios.hpp"

namespace telos::harness {

inline constexpr const char* kCheckpointFormat = "telos-checkpoint";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent streams per purpose: 1 = weights, 2 = training, 3+epoch = evaluation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5EED));
}

struct RunOptions {
  std::string out_dir;
  bool resume = false;
  std::ostream* log = nullptr;  // one progress line per epoch
  std::function<void(const autotelic::CycleStats&)> on_cycle;
};

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path metrics() const { return dir / "metrics.jsonl"; }
  std::filesystem::path checkpoint() const { return dir / "checkpoint.json"; }
  std::filesystem::path buffers() const { return dir / "checkpoint.replay"; }
  std::filesystem::path config() const { return dir / "config.json"; }
};

inline nlohmann::json config_json(const RunConfig& c) { return nlohmann::json::parse(c.to_json().dump()); }

inline autotelic::Trainer make_trainer(const RunConfig& c) {
  auto tc = train_config(c);
  if (c.scenario != 0) tc.heldout = transfer_setup(c.scenario).heldout;
  return autotelic::Trainer(tc, sac::AgentNets::create(net_spec(c), derive_seed(c.seed, 1)), derive_seed(c.seed, 2));
}

// Nets of a checkpoint file, rebuilt from its embedded config.
struct LoadedCheckpoint {
  RunConfig config;
  std::size_t epoch = 0;
  sac::AgentNets nets;
};

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

inline void check_checkpoint_header(const nlohmann::json& j, const std::string& where) {
  if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error(where + ": not a checkpoint");
  if (j.value("version", -1) != sac::kCheckpointVersion) {
    throw std::runtime_error(where + ": checkpoint version " + std::to_string(j.value("version", -1)) +
                             ", expected " + std::to_string(sac::kCheckpointVersion));
  }
}

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  const auto j = read_json_file(path);
  check_checkpoint_header(j, path);
  LoadedCheckpoint c{config_from_json(j.at("config")), j.at("epoch").get<std::size_t>(), {}};
  c.nets = sac::AgentNets::create(net_spec(c.config), 0);
  sac::load_json(c.nets, j.at("trainer").at("nets"));
  return c;
}

inline void write_file_atomic(const std::filesystem::path& p, const std::string& text) {
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

inline MetricsRecord make_record(const RunConfig& c, const autotelic::Trainer& t, const Evaluation& e,
                                 std::size_t epoch, double wall_clock) {
  MetricsRecord r;
  r.epoch = epoch;
  for (std::size_t i = 0; i < e.classes.size(); ++i) r.sr.emplace_back(goals::class_name(e.classes[i]), e.sr[i]);
  r.set_global();
  if (c.scenario != 0) {
    double s = 0;
    const auto test = transfer_setup(c.scenario).test_classes;
    for (auto cls : test) {
      for (std::size_t i = 0; i < e.classes.size(); ++i) {
        if (e.classes[i] == cls) s += e.sr[i];
      }
    }
    r.test_sr = s / static_cast<double>(test.size());
  }
  r.discovered = t.discovered().size();
  r.episodes = t.cycles_done() * c.nb_mpis * c.nb_rollouts_per_mpi;
  r.updates = t.cycles_done() * c.nb_updates;
  r.wall_clock = wall_clock;
  return r;
}

inline Evaluation evaluate_epoch(const RunConfig& c, const sac::AgentNets& nets, std::size_t epoch) {
  return evaluate(nets, default_classes(c.goal_mode), c.eval_goals, derive_seed(c.seed, 3 + epoch), c.rollouts_length);
}

// Trains for n_epochs; each epoch is nb_cycles cycles then an evaluation.
// Writes metrics.jsonl (one record per epoch), config.json and a checkpoint
// (JSON plus binary replay sidecar) every checkpoint_every epochs and at the
// last epoch. With a time budget, training stops before any later epoch that would
// overrun it, judged by the previous epoch's duration. Resuming accepts a
// larger n_epochs than the checkpointed run.
inline std::vector<MetricsRecord> run(const RunConfig& c, const RunOptions& opt) {
  c.validate();
  const RunPaths paths{opt.out_dir};
  std::filesystem::create_directories(paths.dir);
  auto trainer = make_trainer(c);
  std::size_t start = 0;
  double clock_offset = 0;
  std::vector<MetricsRecord> records;

  if (opt.resume && std::filesystem::exists(paths.checkpoint())) {
    const auto j = read_json_file(paths.checkpoint());
    check_checkpoint_header(j, paths.checkpoint().string());
    auto saved = j.at("config");
    auto now = config_json(c);
    for (const char* k : {"n_epochs", "time_budget"}) {
      saved.erase(k);
      now.erase(k);
    }
    if (saved != now) {
      throw std::runtime_error("resume: " + paths.checkpoint().string() + " was written with a different config");
    }
    trainer.load_state_json(j.at("trainer"));
    trainer.load_buffers(paths.buffers().string());
    start = j.at("epoch").get<std::size_t>();
    clock_offset = j.at("wall_clock").get<double>();
    // Keep the records up to the checkpoint; later ones are recomputed.
    if (std::filesystem::exists(paths.metrics())) {
      for (auto& r : read_metrics_file(paths.metrics().string())) {
        if (r.epoch <= start) records.push_back(std::move(r));
      }
    }
    std::string text;
    for (const auto& r : records) text += r.to_json().dump() + "\n";
    write_file_atomic(paths.metrics(), text);
  } else {
    write_file_atomic(paths.metrics(), "");
  }
  write_file_atomic(paths.config(), c.to_json().dump(2) + "\n");

  std::ofstream metrics(paths.metrics(), std::ios::app);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return clock_offset + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  double last_epoch = 0;
  for (std::size_t epoch = start + 1; epoch <= c.n_epochs; ++epoch) {
    const double epoch_start = elapsed();
    if (c.time_budget > 0 && epoch > start + 1 && epoch_start + last_epoch > c.time_budget) {
      if (opt.log) *opt.log << "time budget reached after epoch " << epoch - 1 << "\n";
      break;
    }
    try {
      double critic_loss = 0, actor_loss = 0;
      std::size_t rollouts = 0, successes = 0;
      for (std::size_t k = 0; k < c.nb_cycles; ++k) {
        const auto s = trainer.cycle();
        critic_loss += s.critic_loss;
        actor_loss += s.actor_loss;
        rollouts += s.rollouts;
        successes += s.successes;
        if (opt.on_cycle) opt.on_cycle(s);
      }
      const auto e = evaluate_epoch(c, trainer.nets(), epoch);
      const auto rec = make_record(c, trainer, e, epoch, elapsed());
      last_epoch = rec.wall_clock - epoch_start;
      const bool last = epoch == c.n_epochs || (c.time_budget > 0 && rec.wall_clock + last_epoch > c.time_budget);
      if (epoch % c.checkpoint_every == 0 || last) {
        nlohmann::json ck;
        ck["format"] = kCheckpointFormat;
        ck["version"] = sac::kCheckpointVersion;
        ck["config"] = config_json(c);
        ck["epoch"] = epoch;
        ck["wall_clock"] = rec.wall_clock;
        ck["trainer"] = trainer.state_json();
        trainer.save_buffers(paths.buffers().string() + ".tmp");
        std::filesystem::rename(paths.buffers().string() + ".tmp", paths.buffers());
        write_file_atomic(paths.checkpoint(), ck.dump());
      }
      metrics << rec.to_json().dump() << '\n' << std::flush;
      records.push_back(rec);
      if (opt.log) {
        const auto cycles = static_cast<double>(c.nb_cycles);
        *opt.log << "epoch " << epoch << " global_sr " << rec.global_sr << " discovered " << rec.discovered
                 << " train_success " << static_cast<double>(successes) / static_cast<double>(rollouts)
                 << " critic_loss " << critic_loss / cycles << " actor_loss " << actor_loss / cycles << " wall_clock "
                 << rec.wall_clock << "s\n"
                 << std::flush;
      }
    } catch (const std::exception& ex) {
      ordered_json d;
      d["epoch"] = epoch;
      d["error"] = ex.what();
      metrics << d.dump() << '\n' << std::flush;
      throw;
    }
  }
  return records;
}

// Deterministic episode toward `goal` from an unbiased reset, as trajectory lines.
inline bool dump_episode(const sac::AgentNets& nets, const goals::Goal& goal, std::uint64_t seed, std::ostream& out,
                         std::size_t length = world::kEpisodeLength) {
  std::mt19937_64 rng(seed);
  world::WorldState st = world::reset(rng, 0.0);
  world::TrajectoryWriter w(out);
  bool success = false;
  std::size_t t = 0;
  for (; t < length && !success; ++t) {
    const auto a = sac::act(nets, world::observe(st), goal, true, rng);
    w.write(t, st, &a);
    st = world::step(st, a);
    success = goals::goal_reward(goals::achieved_goal(goal.mode, world::positions(st)), goal).success;
  }
  w.write(t, st, nullptr);
  return success;
}

}  // namespace telos::harness
