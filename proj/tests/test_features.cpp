#include <doctest.h>

#include "edgerec/features.hpp"

using namespace edgerec;

TEST_CASE("bucketize half-open intervals") {
  std::vector<double> b{1, 10, 100};
  CHECK(bucketize(0, b) == Vec{1, 0, 0, 0});
  CHECK(bucketize(10, b) == Vec{0, 0, 1, 0});  // boundary joins the upper bucket
  CHECK(bucketize(1e9, b) == Vec{0, 0, 0, 1});
  CHECK_THROWS(bucketize(std::nan(""), b));
  CHECK_THROWS(bucketize(1.0, {5, 5, 6}));
}

TEST_CASE("bucketize is one-hot for arbitrary inputs") {
  Rng rng(42);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> b;
    double edge = rng.uniform(0.1, 2.0);
    for (int i = 0, n = 1 + int(rng.below(6)); i < n; ++i) b.push_back(edge += rng.uniform(0.1, 3.0));
    Vec v = bucketize(rng.uniform(0, 30), b);
    int ones = 0;
    for (double x : v) {
      CHECK((x == 0.0 || x == 1.0));
      ones += x == 1.0;
    }
    CHECK(ones == 1);
    CHECK(v.size() == b.size() + 1);
  }
}

TEST_CASE("exposure action encoding") {
  FeatureConfig fc;  // 8 boundaries per numeric feature
  ExposureAction a;  // all-zero activity
  Vec v = encode_exposure_action(a, fc);
  CHECK(int(v.size()) == fc.exposure_action_dim());
  CHECK(v.size() == 6 * 9 + 5);  // 59: six bucketized features + 5-way delete one-hot
  CHECK(v[0] == 1.0);
  // delete one-hot block sits before the final decay block
  std::size_t del = v.size() - 9 - 5;
  CHECK(Vec(v.begin() + del, v.begin() + del + 5) == Vec{1, 0, 0, 0, 0});

  a.delete_reason = DeleteReason::kNotInterested;
  Vec v2 = encode_exposure_action(a, fc);
  CHECK(Vec(v2.begin() + del, v2.begin() + del + 5) == Vec{0, 1, 0, 0, 0});
}

TEST_CASE("exposure decay moves monotonically through buckets") {
  FeatureConfig fc;
  auto hot = [&](std::int64_t decay) {
    ExposureAction a;
    a.expose_decay_ms = decay;
    Vec v = encode_exposure_action(a, fc);
    std::size_t base = v.size() - 9;
    for (std::size_t i = 0; i < 9; ++i)
      if (v[base + i] == 1.0) return int(i);
    return -1;
  };
  int prev = -1;
  for (std::int64_t d : {0, 500, 5000, 50000, 500000, 5000000}) {
    int h = hot(d);
    CHECK(h >= prev);
    prev = h;
  }
}

TEST_CASE("pageview action encoding") {
  FeatureConfig fc;
  PageViewAction a;
  Vec v = encode_pageview_action(a, fc);
  CHECK(int(v.size()) == fc.pageview_action_dim());
  CHECK(v.size() == 2 * 9 + 10);  // 28
  CHECK(v[0] == 1.0);             // zero duration in bucket 0
  for (int i = 0; i < 10; ++i) CHECK(v[9 + i] == 0.0);

  a.flags[0] = 1;  // cart
  a.flags[1] = 1;  // buy
  Vec v2 = encode_pageview_action(a, fc);
  CHECK(v2[9 + 0] == 1.0);
  CHECK(v2[9 + 1] == 1.0);
  a.flags[2] = 2;
  CHECK_THROWS(encode_pageview_action(a, fc));
}

namespace {
FeatureConfig paper_like_dims() {
  FeatureConfig fc;
  fc.category_dim = 16;
  fc.brand_dim = 40;
  fc.gender_dim = fc.price_dim = fc.age_dim = fc.bc_dim = 8;
  fc.score_count = 4;
  return fc;
}
}  // namespace

TEST_CASE("item encoding concatenates embedding rows and raw scores") {
  FeatureConfig fc = paper_like_dims();
  CHECK(fc.item_dim() == 16 + 40 + 4 * 8 + 4);  // 92

  std::vector<Tensor> tabs;
  for (const auto& spec : fc.tables())
    tabs.push_back(Tensor::zeros({std::size_t(spec.vocab), std::size_t(spec.dim)}));
  EmbeddingTables emb(fc, std::move(tabs));

  ItemAttributes attrs;
  attrs.scores = {0.25, 0.5, 0.75, 1.0};
  Vec v = encode_item(attrs, emb, fc);
  CHECK(int(v.size()) == fc.item_dim());
  for (std::size_t i = 0; i + 4 < v.size(); ++i) CHECK(v[i] == 0.0);
  CHECK(Vec(v.end() - 4, v.end()) == attrs.scores);

  ItemAttributes attrs2 = attrs;
  attrs2.item_id = 999;  // same indices and scores -> identical vector
  CHECK(encode_item(attrs2, emb, fc) == v);

  attrs2.brand_id = fc.brand_vocab;  // out of vocabulary
  CHECK_THROWS(encode_item(attrs2, emb, fc));
}

TEST_CASE("action json round trip") {
  ExposureAction a;
  a.exposure_duration_ms = 123;
  a.scroll_speed_max = 456.5;
  a.delete_reason = DeleteReason::kSeenSimilar;
  ExposureAction b = ExposureAction::from_json(a.to_json());
  CHECK(b.exposure_duration_ms == 123);
  CHECK(b.scroll_speed_max == 456.5);
  CHECK(b.delete_reason == DeleteReason::kSeenSimilar);

  PageViewAction p;
  p.ipv_duration_ms = 9000;
  p.flags[3] = 1;
  PageViewAction q = PageViewAction::from_json(p.to_json());
  CHECK(q.ipv_duration_ms == 9000);
  CHECK(q.flags == p.flags);
}
