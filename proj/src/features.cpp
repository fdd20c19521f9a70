#include "edgerec/features.hpp"

#include <algorithm>
#include <cmath>

namespace edgerec {

namespace {
const char* kDeleteNames[] = {"none", "not_interested", "seen_similar", "poor_quality", "other"};
}

const char* delete_reason_name(DeleteReason r) { return kDeleteNames[int(r)]; }

DeleteReason delete_reason_from_name(const std::string& s) {
  for (int i = 0; i < 5; ++i)
    if (s == kDeleteNames[i]) return DeleteReason(i);
  fail("unknown delete reason: " + s);
}

nlohmann::json ExposureAction::to_json() const {
  return {{"dur", exposure_duration_ms}, {"cnt", exposure_count},
          {"sspeed", scroll_speed_max},  {"sdur", scroll_duration_max_ms},
          {"scnt", scroll_count},        {"del", delete_reason_name(delete_reason)},
          {"decay", expose_decay_ms}};
}

ExposureAction ExposureAction::from_json(const nlohmann::json& j) {
  ExposureAction a;
  a.exposure_duration_ms = j.at("dur").get<std::int64_t>();
  a.exposure_count = j.at("cnt").get<std::int64_t>();
  a.scroll_speed_max = j.at("sspeed").get<double>();
  a.scroll_duration_max_ms = j.at("sdur").get<std::int64_t>();
  a.scroll_count = j.at("scnt").get<std::int64_t>();
  a.delete_reason = delete_reason_from_name(j.at("del").get<std::string>());
  a.expose_decay_ms = j.at("decay").get<std::int64_t>();
  return a;
}

nlohmann::json PageViewAction::to_json() const {
  return {{"dur", ipv_duration_ms}, {"flags", flags}, {"decay", ipv_decay_ms}};
}

PageViewAction PageViewAction::from_json(const nlohmann::json& j) {
  PageViewAction a;
  a.ipv_duration_ms = j.at("dur").get<std::int64_t>();
  auto f = j.at("flags").get<std::vector<int>>();
  EDGEREC_CHECK(f.size() == 10, "pageview flags must have 10 entries");
  std::copy(f.begin(), f.end(), a.flags.begin());
  a.ipv_decay_ms = j.at("decay").get<std::int64_t>();
  return a;
}

int ItemAttributes::index(int table) const {
  switch (table) {
    case 0: return category_id;
    case 1: return brand_id;
    case 2: return gender_id;
    case 3: return price_level;
    case 4: return age_level;
    case 5: return bc_type;
    default: fail("bad table index");
  }
}

nlohmann::json ItemAttributes::to_json() const {
  return {{"id", item_id},      {"cat", category_id}, {"brand", brand_id}, {"gender", gender_id},
          {"price", price_level}, {"age", age_level},   {"bc", bc_type},     {"scores", scores}};
}

ItemAttributes ItemAttributes::from_json(const nlohmann::json& j) {
  ItemAttributes a;
  a.item_id = j.at("id").get<std::int64_t>();
  a.category_id = j.at("cat").get<int>();
  a.brand_id = j.at("brand").get<int>();
  a.gender_id = j.at("gender").get<int>();
  a.price_level = j.at("price").get<int>();
  a.age_level = j.at("age").get<int>();
  a.bc_type = j.at("bc").get<int>();
  a.scores = j.at("scores").get<Vec>();
  return a;
}

Vec bucketize(double value, const std::vector<double>& boundaries) {
  EDGEREC_CHECK(std::isfinite(value), "bucketize: value must be finite");
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    EDGEREC_CHECK(boundaries[i - 1] < boundaries[i], "bucketize: boundaries must ascend");
  Vec out(boundaries.size() + 1, 0.0);
  // Hot index = number of boundaries <= value.
  std::size_t hot = std::upper_bound(boundaries.begin(), boundaries.end(), value) - boundaries.begin();
  out[hot] = 1.0;
  return out;
}

namespace {
void append(Vec& dst, const Vec& src) { dst.insert(dst.end(), src.begin(), src.end()); }
}  // namespace

Vec encode_exposure_action(const ExposureAction& a, const FeatureConfig& cfg) {
  Vec out;
  out.reserve(cfg.exposure_action_dim());
  append(out, bucketize(double(a.exposure_duration_ms), cfg.exposure_duration_ms));
  append(out, bucketize(double(a.exposure_count), cfg.exposure_count));
  append(out, bucketize(a.scroll_speed_max, cfg.scroll_speed));
  append(out, bucketize(double(a.scroll_duration_max_ms), cfg.scroll_duration_ms));
  append(out, bucketize(double(a.scroll_count), cfg.scroll_count));
  Vec del(cfg.delete_reason_count, 0.0);
  EDGEREC_CHECK(int(a.delete_reason) < cfg.delete_reason_count, "delete reason out of range");
  del[int(a.delete_reason)] = 1.0;
  append(out, del);
  append(out, bucketize(double(a.expose_decay_ms), cfg.expose_decay_ms));
  return out;
}

Vec encode_pageview_action(const PageViewAction& a, const FeatureConfig& cfg) {
  Vec out;
  out.reserve(cfg.pageview_action_dim());
  append(out, bucketize(double(a.ipv_duration_ms), cfg.ipv_duration_ms));
  for (int f : a.flags) {
    EDGEREC_CHECK(f == 0 || f == 1, "pageview flags must be 0 or 1");
    out.push_back(double(f));
  }
  append(out, bucketize(double(a.ipv_decay_ms), cfg.ipv_decay_ms));
  return out;
}

EmbeddingTables::EmbeddingTables(const FeatureConfig& cfg, std::vector<Tensor> tables)
    : tables_(std::move(tables)) {
  auto specs = cfg.tables();
  EDGEREC_CHECK(tables_.size() == specs.size(), "expected six embedding tables");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EDGEREC_CHECK(tables_[i].rows() == std::size_t(specs[i].vocab) &&
                      tables_[i].cols() == std::size_t(specs[i].dim),
                  "embedding table " + specs[i].name + " has wrong shape");
  }
}

EmbeddingRows EmbeddingTables::lookup(const ItemAttributes& attrs) const {
  EmbeddingRows rows;
  rows.reserve(tables_.size());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    int idx = attrs.index(int(t));
    EDGEREC_CHECK(idx >= 0 && std::size_t(idx) < tables_[t].rows(),
                  "embedding row missing (vocabulary/version mismatch), table " + std::to_string(t) +
                      " index " + std::to_string(idx));
    const double* r = tables_[t].row(idx);
    rows.emplace_back(r, r + tables_[t].cols());
  }
  return rows;
}

Vec encode_item(const ItemAttributes& attrs, const EmbeddingTables& emb, const FeatureConfig& cfg) {
  return encode_item_from_rows(emb.lookup(attrs), attrs.scores, cfg);
}

Vec encode_item_from_rows(const EmbeddingRows& rows, const Vec& scores, const FeatureConfig& cfg) {
  auto specs = cfg.tables();
  EDGEREC_CHECK(rows.size() == specs.size(), "expected six embedding rows");
  Vec out;
  out.reserve(cfg.item_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EDGEREC_CHECK(int(rows[i].size()) == specs[i].dim, "embedding row dim mismatch");
    append(out, rows[i]);
  }
  EDGEREC_CHECK(int(scores.size()) == cfg.score_count, "score vector length mismatch");
  append(out, scores);
  return out;
}

}  // namespace edgerec
