#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "edgerec/cloud_rs.hpp"
#include "edgerec/hubsm.hpp"
#include "edgerec/model.hpp"
#include "edgerec/session_log.hpp"

namespace edgerec {

// One finalized behavior line as logged by the device; action features are
// frozen at the device's encode time so training sees exactly what serving
// saw.
struct EncodedBehavior {
  BehaviorKind kind = BehaviorKind::kIe;
  std::int64_t ts = 0;
  ItemAttributes attrs;
  Vec action;
};

struct TrainTarget {
  int cand = 0;   // index into TrainRequest::candidates
  int label = 0;  // clicked before session end
};

// One rerank request with its subsequently exposed candidates. Behavior
// windows are [hi - max, hi) slices of the per-user streams, which keeps the
// dataset compact across overlapping requests.
struct TrainRequest {
  int user = 0;
  std::int64_t serve_ts = 0;
  std::string request_id;
  std::vector<ItemAttributes> candidates;  // initial cloud order
  int ie_hi = 0;
  int ipv_hi = 0;
  std::vector<TrainTarget> targets;
};

struct UserBehaviors {
  std::vector<EncodedBehavior> ie, ipv;
};

struct Dataset {
  std::map<int, UserBehaviors> behaviors;
  std::vector<TrainRequest> requests;  // ordered by (user, serve_ts)
  LogReadStats log_stats;
  std::size_t malformed_records = 0;  // structurally broken but parseable lines

  std::size_t sample_count() const;
};

// Builds training samples from a session log: one sample per exposure
// attributed to a rerank request, label 1 iff that exposure was clicked
// before session end. Behavior windows contain only records strictly before
// the request's serve timestamp.
Dataset build_samples(const std::string& log_path, const Config& cfg);

// Zero when no request window leaks a record at or after its serve timestamp.
std::size_t count_leakage_violations(const Dataset& ds, const Config& cfg);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_gauc = 0.5;
  double val_gauc = 0.5;
};

struct TrainResult {
  std::shared_ptr<EdgeRecModel> model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_gauc = 0.5;
  std::size_t train_samples = 0, val_samples = 0;
};

// Minimizes mean binary cross-entropy with Adam; requests grouped so shared
// encoders run once per request. Deterministic for fixed (dataset, seed).
TrainResult train(const Dataset& ds, Variant variant, const Config& cfg, std::uint64_t seed);

// Forward-only scores for a request's targets, in target order.
Vec score_request(const EdgeRecModel& model, const Dataset& ds, const TrainRequest& req);

// Summed cross-entropy over the request's targets; with backward=true the
// exact analytic gradients accumulate into the parameter store.
double request_loss(EdgeRecModel& model, const Dataset& ds, const TrainRequest& req,
                    bool backward);

// GAUC of the model on a set of requests (impression-weighted, one-class
// requests excluded; 0.5 when undefined).
double evaluate_gauc(const EdgeRecModel& model, const Dataset& ds,
                     const std::vector<const TrainRequest*>& requests);

struct ExportPaths {
  std::string bundle;
  std::string device;
  std::string embeddings;
};

// Byte-exact three-way partition: behavior+rerank tensors to the device file,
// embedding matrices to the cloud file; optionally publishes to a cloud
// instance.
ExportPaths split_and_export(const EdgeRecModel& model, const std::string& version,
                             const std::string& out_dir, CloudRs* cloud);

struct ReplayStats {
  std::size_t requests_checked = 0;
  std::size_t requests_skipped = 0;  // version mismatch or unscored
  std::size_t score_mismatches = 0;
  double max_abs_diff = 0.0;
};

// Re-runs the device scoring path over a logged session (incremental context
// fold + rerank) and compares against the logged scores.
ReplayStats replay_scores(const std::string& log_path, const EdgeRecModel& full_model,
                          const Config& cfg);

}  // namespace edgerec
