#pragma once

#include <memory>
#include <string>

#include "edgerec/edge_runtime.hpp"
#include "edgerec/metrics.hpp"

namespace edgerec {

// A synthetic session user: stable category preferences the cloud can see,
// plus in-session dynamics (post-click boost, re-exposure fatigue, delete
// suppression) that only the edge can observe in time.
struct SyntheticUser {
  UserProfile profile;
  Vec boost;        // per category, raised by clicks/IPV engagement
  Vec fatigue;      // per category, raised by exposures
  Vec suppression;  // per category, raised by deletes

  static SyntheticUser create(int user, const Config& cfg, std::uint64_t seed);
};

struct SimResult {
  MetricsReport report;
  std::string log_path;
};

// Drives edge_runtime + cloud_rs end to end for cfg.users sessions and writes
// the session log. With model == nullptr the display stays in cloud order
// (the "without EdgeRec" arm); behaviors and triggers are still logged so the
// log is trainable. Deterministic for a fixed (config, seed, model).
SimResult simulate(const Config& cfg, std::shared_ptr<const EdgeRecModel> device_model,
                   const std::string& model_version, const CloudRs* cloud,
                   const std::string& log_path, std::uint64_t seed);

// Convenience wrapper that owns a catalog + cloud, publishing the model's
// embedding part when one is given.
SimResult simulate_standalone(const Config& cfg, const EdgeRecModel* full_model,
                              const std::string& model_version, const std::string& log_path,
                              std::uint64_t seed);

}  // namespace edgerec
