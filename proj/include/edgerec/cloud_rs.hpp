#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "edgerec/config.hpp"
#include "edgerec/features.hpp"
#include "edgerec/model.hpp"

namespace edgerec {

struct CatalogItem {
  ItemAttributes attrs;  // scores filled per request by the ranking stub
  double quality = 0.0;  // latent, drives both the stub and the simulator
  double price = 0.0;
};

// Deterministic synthetic catalog; attrs derive from per-item hash streams.
class Catalog {
 public:
  static Catalog generate(const Config& cfg, std::uint64_t seed);

  const CatalogItem& item(std::size_t i) const { return items_[i]; }
  const CatalogItem* by_id(std::int64_t id) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<CatalogItem> items_;
  std::map<std::int64_t, std::size_t> by_id_;
};

// What the cloud knows about a user: the stable preference profile, without
// any in-session dynamics (those are only observable on the edge).
struct UserProfile {
  int user = 0;
  Vec category_affinity;  // one entry per category
};

// Versioned key-value store for embedding matrices. A publish builds the
// version completely before it becomes visible, so concurrent readers never
// observe a partial version.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int retention = 3) : retention_(retention) {}

  struct VersionData {
    std::string version;
    FeatureConfig features;
    std::vector<Tensor> tables;  // FeatureConfig::tables() order
  };

  void publish(const std::string& version, const FeatureConfig& fc, std::vector<Tensor> tables);

  // Exact version, or nullptr when evicted/never published.
  std::shared_ptr<const VersionData> resolve(const std::string& version) const;
  std::shared_ptr<const VersionData> newest() const;
  std::vector<std::string> retained_versions() const;
  bool empty() const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<std::shared_ptr<const VersionData>> versions_;  // publish order
  int retention_;
};

struct PageCandidate {
  ItemAttributes attrs;       // includes p7 scores from the initial ranker
  EmbeddingRows rows;         // resolved at the served version; empty when no model
  double initial_score = 0.0;
  double price = 0.0;
};

struct PageResponse {
  std::string request_id;
  std::vector<PageCandidate> candidates;  // initial-rank order
  std::string served_version;             // empty when store empty / no version asked
  bool fallback = false;
};

// Recall + initial ranking stub + embedding resolution (right half of the
// system diagram). Thread safe for concurrent page() calls.
class CloudRs {
 public:
  CloudRs(const Config& cfg, std::shared_ptr<const Catalog> catalog, std::uint64_t seed);

  void publish_version(const nlohmann::json& embedding_bundle);
  void publish_version(const std::string& version, const FeatureConfig& fc,
                       std::vector<Tensor> tables);

  // Candidates the user has already seen this session are excluded by the
  // recall stub; model_version may be empty (no model on device).
  PageResponse page(const UserProfile& user, const std::string& model_version, int page_index,
                    const std::unordered_set<std::int64_t>& exclude) const;

  // Deterministic seeded scoring stub; sorts descending and fills p7.
  std::vector<PageCandidate> initial_rank(const UserProfile& user,
                                          std::vector<std::size_t> item_indices) const;

  const EmbeddingStore& store() const { return store_; }
  const Catalog& catalog() const { return *catalog_; }

 private:
  Config cfg_;
  std::shared_ptr<const Catalog> catalog_;
  std::uint64_t seed_;
  EmbeddingStore store_;
};

}  // namespace edgerec
