#include <doctest.h>

#include <cmath>

#include "edgerec/nn.hpp"
#include "test_util.hpp"

using namespace edgerec;
using namespace edgerec::nn;

namespace {

GruStack zero_stack(ParamStore& store, int in, int hidden, int layers) {
  return make_gru_stack(store, "z", in, hidden, layers);  // store not initialised: all zero
}

}  // namespace

TEST_CASE("gru_step with zero parameters") {
  ParamStore store;
  GruStack s = zero_stack(store, 3, 2, 1);
  Vec x{0.3, -0.7, 1.0};

  Vec h{0, 0}, out(2);
  gru_layer_step(s.layers[0], x.data(), h.data(), out.data());
  CHECK(out == Vec{0, 0});  // htilde = 0, blend of zeros

  h = {1, 1};
  gru_layer_step(s.layers[0], x.data(), h.data(), out.data());
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));  // z = 0.5, htilde = 0
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gru_step matches the scalar reference") {
  ParamStore store;
  GruStack s = make_gru_stack(store, "g", 5, 4, 1);
  store.init(11);
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vec x = testutil::random_vec(5, rng), h = testutil::random_vec(4, rng);
    Vec out(4);
    gru_layer_step(s.layers[0], x.data(), h.data(), out.data());
    Vec ref = testutil::gru_step_reference(s.layers[0], x, h);
    for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("gru_sequence basics and reference") {
  ParamStore store;
  GruStack s = make_gru_stack(store, "g", 4, 3, 2);
  store.init(5);
  Rng rng(9);
  std::vector<Vec> xs;
  for (int t = 0; t < 7; ++t) xs.push_back(testutil::random_vec(4, rng));

  std::vector<Vec> out, fin;
  gru_sequence_forward(s, xs, {}, out, fin, nullptr);
  CHECK(out.size() == 7);
  CHECK(fin.size() == 2);
  CHECK(out.back() == fin.back());  // top-layer final state is the last output

  std::vector<Vec> ref = testutil::gru_sequence_reference(s, xs);
  for (int t = 0; t < 7; ++t)
    for (int i = 0; i < 3; ++i) CHECK(out[t][i] == doctest::Approx(ref[t][i]).epsilon(1e-12));

  // empty sequence: outputs empty, state = h0
  std::vector<Vec> out2, fin2;
  std::vector<Vec> h0(2, Vec{0.1, 0.2, 0.3});
  gru_sequence_forward(s, {}, h0, out2, fin2, nullptr);
  CHECK(out2.empty());
  CHECK(fin2 == h0);
}

TEST_CASE("gru_sequence split/resume equals one-shot encoding") {
  ParamStore store;
  GruStack s = make_gru_stack(store, "g", 6, 5, 3);
  store.init(21);
  Rng rng(77);
  std::vector<Vec> xs;
  for (int t = 0; t < 10; ++t) xs.push_back(testutil::random_vec(6, rng));

  std::vector<Vec> full, full_fin;
  gru_sequence_forward(s, xs, {}, full, full_fin, nullptr);

  for (std::size_t split = 0; split <= xs.size(); ++split) {
    std::vector<Vec> a(xs.begin(), xs.begin() + split), b(xs.begin() + split, xs.end());
    std::vector<Vec> out1, fin1, out2, fin2;
    gru_sequence_forward(s, a, {}, out1, fin1, nullptr);
    gru_sequence_forward(s, b, fin1, out2, fin2, nullptr);
    out1.insert(out1.end(), out2.begin(), out2.end());
    REQUIRE(out1.size() == full.size());
    for (std::size_t t = 0; t < full.size(); ++t)
      for (int i = 0; i < 5; ++i) CHECK(out1[t][i] == doctest::Approx(full[t][i]).epsilon(1e-9));
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 5; ++i) CHECK(fin2[l][i] == doctest::Approx(full_fin[l][i]).epsilon(1e-9));
  }
}

TEST_CASE("zero-padded tail with zero parameters keeps zero state") {
  ParamStore store;
  GruStack s = zero_stack(store, 3, 2, 2);
  std::vector<Vec> xs(4, Vec{0, 0, 0});
  std::vector<Vec> out, fin;
  gru_sequence_forward(s, xs, {}, out, fin, nullptr);
  for (const auto& o : out) CHECK(o == Vec{0, 0});
}

TEST_CASE("additive attention contracts") {
  ParamStore store;
  Attention at = make_attention(store, "a", 3, 3, 4);
  store.init(13);
  Rng rng(1);

  SUBCASE("single unmasked position") {
    Vec q = testutil::random_vec(3, rng);
    std::vector<Vec> keys{testutil::random_vec(3, rng)};
    std::vector<Vec> values{testutil::random_vec(5, rng)};
    auto [w, ctx] = additive_attention(at, q, keys, values, {1});
    CHECK(w == Vec{1.0});
    CHECK(ctx == values[0]);
  }

  SUBCASE("identical keys give uniform weights") {
    Vec q = testutil::random_vec(3, rng);
    Vec k = testutil::random_vec(3, rng);
    std::vector<Vec> keys(4, k), values;
    for (int i = 0; i < 4; ++i) values.push_back(testutil::random_vec(5, rng));
    auto [w, ctx] = additive_attention(at, q, keys, values, {1, 1, 1, 1});
    for (double x : w) CHECK(x == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("random case matches the direct-summation oracle") {
    for (int t = 0; t < 30; ++t) {
      Vec q = testutil::random_vec(3, rng);
      std::vector<Vec> keys, values;
      std::vector<std::uint8_t> mask;
      int J = 1 + int(rng.below(6));
      for (int j = 0; j < J; ++j) {
        keys.push_back(testutil::random_vec(3, rng));
        values.push_back(testutil::random_vec(5, rng));
        mask.push_back(rng.bernoulli(0.7) ? 1 : 0);
      }
      auto [w, ctx] = additive_attention(at, q, keys, values, mask);
      double sum = 0.0;
      bool any = false;
      for (int j = 0; j < J; ++j) {
        sum += w[j];
        if (mask[j]) any = true;
        if (!mask[j]) CHECK(w[j] == 0.0);
        CHECK(w[j] >= 0.0);
      }
      if (any)
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      else
        CHECK(sum == 0.0);
      Vec brute(5, 0.0);
      for (int j = 0; j < J; ++j)
        for (int i = 0; i < 5; ++i) brute[i] += w[j] * values[j][i];
      for (int i = 0; i < 5; ++i) CHECK(ctx[i] == doctest::Approx(brute[i]).epsilon(1e-12));
    }
  }

  SUBCASE("fully masked yields zero weights and zero context") {
    Vec q = testutil::random_vec(3, rng);
    std::vector<Vec> keys{testutil::random_vec(3, rng), testutil::random_vec(3, rng)};
    std::vector<Vec> values{testutil::random_vec(5, rng), testutil::random_vec(5, rng)};
    auto [w, ctx] = additive_attention(at, q, keys, values, {0, 0});
    CHECK(w == Vec{0, 0});
    CHECK(ctx == Vec(5, 0.0));
  }

  SUBCASE("masking padded positions equals dropping them") {
    Vec q = testutil::random_vec(3, rng);
    std::vector<Vec> keys{testutil::random_vec(3, rng), Vec(3, 0.0), testutil::random_vec(3, rng)};
    std::vector<Vec> values{testutil::random_vec(5, rng), Vec(5, 0.0), testutil::random_vec(5, rng)};
    auto [w_masked, ctx_masked] = additive_attention(at, q, keys, values, {1, 0, 1});
    auto [w_dropped, ctx_dropped] =
        additive_attention(at, q, {keys[0], keys[2]}, {values[0], values[2]}, {1, 1});
    CHECK(w_masked[0] == doctest::Approx(w_dropped[0]).epsilon(1e-12));
    CHECK(w_masked[2] == doctest::Approx(w_dropped[1]).epsilon(1e-12));
    for (int i = 0; i < 5; ++i)
      CHECK(ctx_masked[i] == doctest::Approx(ctx_dropped[i]).epsilon(1e-12));
  }
}

TEST_CASE("bce and mlp basics") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS(bce_loss(0.5, 2));

  ParamStore store;
  Mlp m = make_mlp(store, "m", 6, {4, 3});  // zero weights
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    double z = mlp_forward(m, testutil::random_vec(6, rng), nullptr);
    CHECK(sigmoid(z) == 0.5);
  }
}

TEST_CASE("gradient check: GRU stack") {
  ParamStore store;
  GruStack s = make_gru_stack(store, "g", 4, 3, 2);
  store.init(31);
  Rng rng(8);
  std::vector<Vec> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(testutil::random_vec(4, rng));
  std::vector<Vec> proj;
  for (int t = 0; t < 5; ++t) proj.push_back(testutil::random_vec(3, rng));

  auto loss = [&] {
    std::vector<Vec> out, fin;
    gru_sequence_forward(s, xs, {}, out, fin, nullptr);
    double l = 0;
    for (int t = 0; t < 5; ++t)
      for (int i = 0; i < 3; ++i) l += proj[t][i] * out[t][i];
    return l;
  };
  auto backward = [&] {
    GruSeqCache cache;
    std::vector<Vec> out, fin;
    gru_sequence_forward(s, xs, {}, out, fin, &cache);
    gru_sequence_backward(s, cache, proj);
  };
  CHECK(testutil::gradcheck(store, loss, backward) < 1e-7);
}

TEST_CASE("gradient check: attention including input grads") {
  ParamStore store;
  Attention at = make_attention(store, "a", 3, 4, 5);
  store.init(17);
  Rng rng(4);
  Vec q = testutil::random_vec(3, rng);
  std::vector<Vec> keys, values;
  for (int j = 0; j < 6; ++j) {
    keys.push_back(testutil::random_vec(4, rng));
    values.push_back(testutil::random_vec(7, rng));
  }
  Vec proj = testutil::random_vec(7, rng);

  auto loss = [&] {
    Vec ctx = attention_forward(at, q, keys, values, nullptr, nullptr, nullptr);
    double l = 0;
    for (int i = 0; i < 7; ++i) l += proj[i] * ctx[i];
    return l;
  };
  auto backward = [&] {
    AttentionCache cache;
    attention_forward(at, q, keys, values, nullptr, nullptr, &cache);
    Vec dq;
    std::vector<Vec> dk(keys.size(), Vec(4, 0.0)), dv(values.size(), Vec(7, 0.0));
    attention_backward(at, cache, q, keys, values, proj, dq, &dk, &dv);
  };
  CHECK(testutil::gradcheck(store, loss, backward) < 1e-7);

  // finite differences on the query input as well
  AttentionCache cache;
  attention_forward(at, q, keys, values, nullptr, nullptr, &cache);
  Vec dq;
  std::vector<Vec> dk(keys.size(), Vec(4, 0.0)), dv(values.size(), Vec(7, 0.0));
  store.zero_grads();
  attention_backward(at, cache, q, keys, values, proj, dq, &dk, &dv);
  double eps = 1e-6;
  for (int i = 0; i < 3; ++i) {
    double keep = q[i];
    q[i] = keep + eps;
    double up = loss();
    q[i] = keep - eps;
    double dn = loss();
    q[i] = keep;
    CHECK(dq[i] == doctest::Approx((up - dn) / (2 * eps)).epsilon(1e-5));
  }
}

TEST_CASE("gradient check: MLP with bce head") {
  ParamStore store;
  Mlp m = make_mlp(store, "m", 5, {4, 3});
  store.init(23);
  Rng rng(6);
  Vec x = testutil::random_vec(5, rng);

  auto loss = [&] { return bce_loss(sigmoid(mlp_forward(m, x, nullptr)), 1); };
  auto backward = [&] {
    MlpCache cache;
    double z = mlp_forward(m, x, &cache);
    mlp_backward(m, cache, bce_dlogit(sigmoid(z), 1));
  };
  CHECK(testutil::gradcheck(store, loss, backward) < 1e-7);
}

TEST_CASE("adam flags non-finite gradients with the tensor name") {
  ParamStore store;
  Param* p = store.add_matrix("w.bad", 2, 2);
  p->grad[1] = std::numeric_limits<double>::quiet_NaN();
  AdamConfig cfg;
  CHECK_THROWS_WITH_AS(adam_step(store, cfg, 1, 1.0), doctest::Contains("w.bad"),
                       std::runtime_error);
}

TEST_CASE("adam converges on a quadratic") {
  ParamStore store;
  Param* p = store.add_vector("x", 3);
  store.init(1);
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (long t = 1; t <= 400; ++t) {
    for (int i = 0; i < 3; ++i) p->grad[i] = 2.0 * (p->value[i] - double(i));
    adam_step(store, cfg, t, 1.0);
  }
  for (int i = 0; i < 3; ++i) CHECK(p->value[i] == doctest::Approx(double(i)).epsilon(1e-2));
}
