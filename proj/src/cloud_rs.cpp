#include "edgerec/cloud_rs.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace edgerec {

Catalog Catalog::generate(const Config& cfg, std::uint64_t seed) {
  Catalog cat;
  const auto& fc = cfg.features;
  cat.items_.reserve(cfg.catalog_items);
  for (int i = 0; i < cfg.catalog_items; ++i) {
    Rng rng = stream_rng(seed, "catalog_item", i);
    CatalogItem it;
    it.attrs.item_id = 1000 + i;
    it.attrs.category_id = int(rng.below(std::uint64_t(fc.category_vocab)));
    it.attrs.brand_id = int(rng.below(std::uint64_t(fc.brand_vocab)));
    it.attrs.gender_id = int(rng.below(std::uint64_t(fc.gender_vocab)));
    it.attrs.price_level = int(rng.below(std::uint64_t(fc.price_vocab)));
    it.attrs.age_level = int(rng.below(std::uint64_t(fc.age_vocab)));
    it.attrs.bc_type = int(rng.below(std::uint64_t(fc.bc_vocab)));
    it.attrs.scores.assign(fc.score_count, 0.0);
    it.quality = 0.5 * rng.normal();
    it.price = 5.0 + 195.0 * rng.u01();
    cat.by_id_[it.attrs.item_id] = cat.items_.size();
    cat.items_.push_back(std::move(it));
  }
  return cat;
}

const CatalogItem* Catalog::by_id(std::int64_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &items_[it->second];
}

// ---------------------------------------------------------------------------

void EmbeddingStore::publish(const std::string& version, const FeatureConfig& fc,
                             std::vector<Tensor> tables) {
  auto specs = fc.tables();
  EDGEREC_CHECK(tables.size() == specs.size(), "publish: expected six embedding tables");
  for (std::size_t i = 0; i < specs.size(); ++i)
    EDGEREC_CHECK(tables[i].rows() == std::size_t(specs[i].vocab) &&
                      tables[i].cols() == std::size_t(specs[i].dim),
                  "publish: table shape mismatch for " + specs[i].name);

  // Fully build the immutable snapshot before taking the writer lock.
  auto data = std::make_shared<VersionData>();
  data->version = version;
  data->features = fc;
  data->tables = std::move(tables);

  std::unique_lock lock(mu_);
  for (const auto& v : versions_)
    EDGEREC_CHECK(v->version != version, "duplicate version id: " + version);
  versions_.push_back(std::move(data));
  while (int(versions_.size()) > retention_) versions_.erase(versions_.begin());
}

std::shared_ptr<const EmbeddingStore::VersionData> EmbeddingStore::resolve(
    const std::string& version) const {
  std::shared_lock lock(mu_);
  for (const auto& v : versions_)
    if (v->version == version) return v;
  return nullptr;
}

std::shared_ptr<const EmbeddingStore::VersionData> EmbeddingStore::newest() const {
  std::shared_lock lock(mu_);
  return versions_.empty() ? nullptr : versions_.back();
}

std::vector<std::string> EmbeddingStore::retained_versions() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& v : versions_) out.push_back(v->version);
  return out;
}

bool EmbeddingStore::empty() const {
  std::shared_lock lock(mu_);
  return versions_.empty();
}

// ---------------------------------------------------------------------------

CloudRs::CloudRs(const Config& cfg, std::shared_ptr<const Catalog> catalog, std::uint64_t seed)
    : cfg_(cfg), catalog_(std::move(catalog)), seed_(seed), store_(cfg.retention) {}

void CloudRs::publish_version(const nlohmann::json& embedding_bundle) {
  const auto& man = embedding_bundle.at("manifest");
  FeatureConfig fc = FeatureConfig::from_json(man.at("features"));
  auto specs = fc.tables();
  std::vector<Tensor> tables(specs.size());
  std::vector<bool> seen(specs.size(), false);
  for (const auto& tj : embedding_bundle.at("tensors")) {
    std::string name;
    Tensor t = tensor_from_json(tj, &name);
    EDGEREC_CHECK(name.rfind("emb.", 0) == 0, "embedding bundle holds non-embedding tensor " + name);
    std::string table = name.substr(4);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].name == table) {
        tables[i] = std::move(t);
        seen[i] = true;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    EDGEREC_CHECK(seen[i], "embedding bundle missing table " + specs[i].name);
  store_.publish(man.at("version").get<std::string>(), fc, std::move(tables));
}

void CloudRs::publish_version(const std::string& version, const FeatureConfig& fc,
                              std::vector<Tensor> tables) {
  store_.publish(version, fc, std::move(tables));
}

std::vector<PageCandidate> CloudRs::initial_rank(const UserProfile& user,
                                                 std::vector<std::size_t> item_indices) const {
  std::vector<PageCandidate> out;
  out.reserve(item_indices.size());
  for (std::size_t idx : item_indices) {
    const CatalogItem& it = catalog_->item(idx);
    Rng rng = stream_rng(seed_, "cloud_score", user.user, it.attrs.item_id);
    double aff = user.category_affinity.empty() ? 0.0 : user.category_affinity[it.attrs.category_id];
    double ctr = sigmoid(cfg_.base_click_logit + aff + cfg_.quality_weight * it.quality +
                         cfg_.cloud_noise * rng.normal());
    double cvr = sigmoid(-1.0 + 0.8 * it.quality + 0.8 * aff + 0.4 * cfg_.cloud_noise * rng.normal());
    PageCandidate pc;
    pc.attrs = it.attrs;
    pc.attrs.scores.assign(std::size_t(cfg_.features.score_count), 0.0);
    if (cfg_.features.score_count > 0) pc.attrs.scores[0] = ctr;
    if (cfg_.features.score_count > 1) pc.attrs.scores[1] = cvr;
    pc.initial_score = ctr;
    pc.price = it.price;
    out.push_back(std::move(pc));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.initial_score > b.initial_score; });
  return out;
}

PageResponse CloudRs::page(const UserProfile& user, const std::string& model_version,
                           int page_index, const std::unordered_set<std::int64_t>& exclude) const {
  PageResponse resp;
  resp.request_id = "u" + std::to_string(user.user) + "-p" + std::to_string(page_index);

  // Recall stub: weighted sampling without replacement (exponential keys),
  // weights sharpened by the user's stable affinity.
  Rng rng = stream_rng(seed_, "recall", user.user, page_index);
  const std::size_t want = std::size_t(cfg_.return_count);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(catalog_->size());
  for (std::size_t i = 0; i < catalog_->size(); ++i) {
    const CatalogItem& it = catalog_->item(i);
    if (exclude.count(it.attrs.item_id)) continue;
    double aff =
        user.category_affinity.empty() ? 0.0 : user.category_affinity[it.attrs.category_id];
    double w = std::exp(cfg_.recall_sharpness * aff);
    double u = rng.u01();
    while (u <= 0.0) u = rng.u01();
    keyed.push_back({-std::log(u) / w, i});  // smaller key = stronger draw
  }
  std::size_t take = std::min(want, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + take, keyed.end());
  std::vector<std::size_t> picked;
  picked.reserve(take);
  for (std::size_t i = 0; i < take; ++i) picked.push_back(keyed[i].second);

  resp.candidates = initial_rank(user, std::move(picked));

  if (!model_version.empty()) {
    auto data = store_.resolve(model_version);
    if (!data) {
      data = store_.newest();
      resp.fallback = true;
    }
    if (data) {
      resp.served_version = data->version;
      EmbeddingTables tables(data->features, data->tables);
      for (auto& c : resp.candidates) c.rows = tables.lookup(c.attrs);
    } else {
      resp.fallback = true;  // store empty: no rows at all
    }
  }
  return resp;
}

}  // namespace edgerec
