#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "edgerec/config.hpp"
#include "edgerec/tensor.hpp"

namespace edgerec {

enum class DeleteReason { kNone = 0, kNotInterested, kSeenSimilar, kPoorQuality, kOther };

const char* delete_reason_name(DeleteReason r);
DeleteReason delete_reason_from_name(const std::string& s);

// User actions observed while an item sat in the feed (e1..e7).
struct ExposureAction {
  std::int64_t exposure_duration_ms = 0;
  std::int64_t exposure_count = 1;
  double scroll_speed_max = 0;        // px/s
  std::int64_t scroll_duration_max_ms = 0;
  std::int64_t scroll_count = 0;
  DeleteReason delete_reason = DeleteReason::kNone;
  std::int64_t expose_decay_ms = 0;   // encode time minus exposure time

  nlohmann::json to_json() const;
  static ExposureAction from_json(const nlohmann::json& j);
};

// User actions inside the detail page after a click (d1..d12).
struct PageViewAction {
  std::int64_t ipv_duration_ms = 0;
  // d2..d11 in table order.
  std::array<int, 10> flags{};  // cart, buy, favorite, comment, select_sku, wdj, wangwang,
                                // detail, shop, recommendation
  std::int64_t ipv_decay_ms = 0;

  nlohmann::json to_json() const;
  static PageViewAction from_json(const nlohmann::json& j);
};

// Id features p1..p6 plus raw ranker scores p7.
struct ItemAttributes {
  std::int64_t item_id = 0;
  int category_id = 0;
  int brand_id = 0;
  int gender_id = 0;
  int price_level = 0;
  int age_level = 0;
  int bc_type = 0;
  Vec scores;  // length = FeatureConfig::score_count

  int index(int table) const;  // table in [0,6), same order as FeatureConfig::tables()

  nlohmann::json to_json() const;
  static ItemAttributes from_json(const nlohmann::json& j);
};

// One-hot over half-open intervals [b_i, b_{i+1}); values below the first
// boundary land in bucket 0, values at a boundary belong to the upper bucket.
Vec bucketize(double value, const std::vector<double>& boundaries);

Vec encode_exposure_action(const ExposureAction& a, const FeatureConfig& cfg);
Vec encode_pageview_action(const PageViewAction& a, const FeatureConfig& cfg);

// Embedding rows for p1..p6, in table order, as served by the cloud.
using EmbeddingRows = std::vector<Vec>;

class EmbeddingTables {
 public:
  EmbeddingTables() = default;
  EmbeddingTables(const FeatureConfig& cfg, std::vector<Tensor> tables);

  const Tensor& table(int i) const { return tables_[i]; }
  std::size_t count() const { return tables_.size(); }

  EmbeddingRows lookup(const ItemAttributes& attrs) const;

 private:
  std::vector<Tensor> tables_;
};

Vec encode_item(const ItemAttributes& attrs, const EmbeddingTables& emb, const FeatureConfig& cfg);
Vec encode_item_from_rows(const EmbeddingRows& rows, const Vec& scores, const FeatureConfig& cfg);

}  // namespace edgerec
