#include <doctest.h>

#include "edgerec/metrics.hpp"

using namespace edgerec;

namespace {

// O(n^2) pair-counting oracle, ties worth one half.
double auc_pairs(const std::vector<int>& labels, const Vec& scores) {
  double num = 0;
  long long pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / double(pairs);
}

}  // namespace

TEST_CASE("auc basics") {
  CHECK(auc({1, 0}, {0.9, 0.1}) == 1.0);
  CHECK(auc({1, 0}, {0.1, 0.9}) == 0.0);
  CHECK(auc({1, 1, 0, 0}, {0.9, 0.8, 0.2, 0.1}) == 1.0);
  CHECK(auc({1, 0}, {0.5, 0.5}) == 0.5);  // tied pair counts one half
  CHECK_THROWS(auc({1, 1}, {0.5, 0.6}));  // one-class
  CHECK_THROWS(auc({0, 0}, {0.5, 0.6}));
}

TEST_CASE("auc matches the pair-counting oracle, including ties") {
  Rng rng(77);
  for (int t = 0; t < 300; ++t) {
    int n = 2 + int(rng.below(20));
    std::vector<int> labels(n);
    Vec scores(n);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      labels[i] = rng.bernoulli(0.4);
      pos += labels[i];
      scores[i] = double(rng.below(6)) / 5.0;  // coarse grid forces ties
    }
    if (pos == 0 || pos == n) continue;
    CHECK(auc(labels, scores) == doctest::Approx(auc_pairs(labels, scores)).epsilon(1e-12));
  }
}

TEST_CASE("random scores give auc near one half") {
  Rng rng(99);
  double sum = 0;
  int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    int n = 40;
    std::vector<int> labels(n);
    Vec scores(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = i < n / 2 ? 1 : 0;
      scores[i] = rng.u01();
    }
    sum += auc(labels, scores);
  }
  CHECK(sum / trials == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("gauc weighted average and exclusions") {
  CHECK(gauc({{{1, 0}, {0.9, 0.1}, 0}}) == 1.0);

  // two requests, impressions 2 and 3, AUCs 1.0 and 0.5 -> 0.7 exactly
  std::vector<RequestEval> reqs;
  reqs.push_back({{1, 0}, {0.9, 0.1}, 2});
  reqs.push_back({{1, 0}, {0.5, 0.5}, 3});
  CHECK(gauc(reqs) == doctest::Approx(0.7).epsilon(1e-15));

  // one-class requests are excluded from numerator and denominator
  reqs.push_back({{0, 0, 0}, {0.4, 0.3, 0.2}, 50});
  reqs.push_back({{1, 1}, {0.4, 0.3}, 50});
  CHECK(gauc(reqs) == doctest::Approx(0.7).epsilon(1e-15));

  CHECK_THROWS(gauc({{{1, 1}, {0.9, 0.8}, 0}}));  // nothing left after exclusion
  CHECK_THROWS(gauc({}));
}

TEST_CASE("gauc is invariant under per-request monotone transforms") {
  Rng rng(13);
  std::vector<RequestEval> a, b;
  for (int r = 0; r < 20; ++r) {
    int n = 3 + int(rng.below(8));
    RequestEval ra, rb;
    for (int i = 0; i < n; ++i) {
      int y = rng.bernoulli(0.5);
      double s = rng.u01();
      ra.labels.push_back(y);
      ra.scores.push_back(s);
      rb.labels.push_back(y);
      rb.scores.push_back(std::exp(3.0 * s) + double(r));  // strictly monotone per request
    }
    a.push_back(ra);
    b.push_back(rb);
  }
  CHECK(gauc(a) == doctest::Approx(gauc(b)).epsilon(1e-12));
}
