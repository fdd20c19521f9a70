#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "edgerec/config.hpp"
#include "edgerec/model.hpp"
#include "edgerec/nn.hpp"

namespace testutil {

using edgerec::Vec;

// Independent scalar reference for one GRU layer step, written directly from
// the gate equations with explicit index loops.
inline Vec gru_step_reference(const edgerec::nn::GruLayer& L, const Vec& x, const Vec& h) {
  const int H = L.hidden, D = L.in;
  auto matrow = [](const std::vector<double>& W, int row, int cols, const Vec& v) {
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += W[std::size_t(row) * cols + j] * v[j];
    return acc;
  };
  Vec z(H), r(H), hh(H), out(H);
  for (int i = 0; i < H; ++i) {
    double az = L.bz->value[i] + matrow(L.Wz->value, i, D, x) + matrow(L.Uz->value, i, H, h);
    double ar = L.br->value[i] + matrow(L.Wr->value, i, D, x) + matrow(L.Ur->value, i, H, h);
    z[i] = 1.0 / (1.0 + std::exp(-az));
    r[i] = 1.0 / (1.0 + std::exp(-ar));
  }
  Vec rh(H);
  for (int i = 0; i < H; ++i) rh[i] = r[i] * h[i];
  for (int i = 0; i < H; ++i) {
    double ah = L.bh->value[i] + matrow(L.Wh->value, i, D, x) + matrow(L.Uh->value, i, H, rh);
    hh[i] = std::tanh(ah);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * hh[i];
  }
  return out;
}

// Reference run of a whole stack over a sequence (scalar loops only).
inline std::vector<Vec> gru_sequence_reference(const edgerec::nn::GruStack& stack,
                                               const std::vector<Vec>& xs) {
  std::vector<Vec> state(stack.layers.size(), Vec(stack.hidden, 0.0));
  std::vector<Vec> out;
  for (const auto& x : xs) {
    Vec cur = x;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
      state[l] = gru_step_reference(stack.layers[l], cur, state[l]);
      cur = state[l];
    }
    out.push_back(cur);
  }
  return out;
}

// Central finite differences over every parameter of the store; returns the
// worst relative error against the accumulated analytic grads.
inline double gradcheck(edgerec::nn::ParamStore& store, const std::function<double()>& loss_fn,
                        const std::function<void()>& backward_fn, double eps = 1e-5) {
  store.zero_grads();
  backward_fn();
  double worst = 0.0;
  for (const auto& p : store.all()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      double keep = p->value[i];
      p->value[i] = keep + eps;
      double up = loss_fn();
      p->value[i] = keep - eps;
      double dn = loss_fn();
      p->value[i] = keep;
      double fd = (up - dn) / (2.0 * eps);
      double an = p->grad[i];
      double rel = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline Vec random_vec(std::size_t n, edgerec::Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

// Small configuration used across the runtime tests.
inline edgerec::Config tiny_config() {
  edgerec::Config cfg;
  cfg.users = 4;
  cfg.catalog_items = 60;
  cfg.features.category_vocab = 8;
  cfg.features.brand_vocab = 12;
  cfg.gru_layers = 1;
  cfg.gru_hidden = 6;
  cfg.attn_hidden = 6;
  cfg.mlp_hidden = {8};
  cfg.max_ie = 8;
  cfg.max_ipv = 4;
  cfg.max_candidates = 16;
  cfg.page_size = 5;
  cfg.return_count = 10;
  cfg.k_expose = 4;
  cfg.mean_exposures = 12;
  cfg.max_exposures = 24;
  cfg.batch_size = 32;
  cfg.max_epochs = 3;
  return cfg;
}

inline edgerec::EdgeRecModel tiny_model(const edgerec::Config& cfg,
                                        edgerec::Variant v = edgerec::Variant::kCrbanHubsmIeIpv,
                                        std::uint64_t seed = 7) {
  return edgerec::EdgeRecModel::build(edgerec::ModelConfig::from(cfg, v), seed);
}

}  // namespace testutil
