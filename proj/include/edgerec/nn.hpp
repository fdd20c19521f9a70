#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgerec/common.hpp"
#include "edgerec/tensor.hpp"

namespace edgerec::nn {

// Named parameter tensor with gradient and optimizer state.
struct Param {
  std::string name;
  std::size_t rows = 0, cols = 1;  // cols==1 may still mean shape [rows]
  bool is_vector = false;
  bool is_bias = false;
  Vec value, grad, adam_m, adam_v;

  std::size_t size() const { return rows * cols; }
  std::vector<std::size_t> shape() const {
    return is_vector ? std::vector<std::size_t>{rows} : std::vector<std::size_t>{rows, cols};
  }
};

class ParamStore {
 public:
  Param* add_matrix(const std::string& name, std::size_t rows, std::size_t cols);
  Param* add_vector(const std::string& name, std::size_t n, bool bias = false);
  Param* find(const std::string& name) const;

  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }
  std::size_t total_size() const;
  void zero_grads();

  // uniform(-0.08, 0.08) weights, zero biases; per-parameter streams keyed by
  // name so registration order does not matter.
  void init(std::uint64_t seed);

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, Param*> by_name_;
};

// ---------------------------------------------------------------------------
// GRU

struct GruLayer {
  Param *Wz, *Uz, *bz, *Wr, *Ur, *br, *Wh, *Uh, *bh;
  int in = 0, hidden = 0;
};

struct GruStack {
  std::vector<GruLayer> layers;
  int input_dim = 0, hidden = 0;
  bool empty() const { return layers.empty(); }
};

GruStack make_gru_stack(ParamStore& store, const std::string& prefix, int input_dim, int hidden,
                        int layers);

// Counts single-layer forward steps; the incremental-cost property tests read it.
std::atomic<std::uint64_t>& gru_step_count();

// h' = (1-z) (*) h + z (*) hh, the convention recorded in the bundle manifest.
void gru_layer_step(const GruLayer& L, const double* x, const double* h, double* h_out);

// Flat per-sequence caches for backpropagation through time.
struct GruSeqCache {
  int T = 0;
  std::vector<Vec> x, hprev, z, r, hh, rh;  // per layer, each T*dim flat
};

// Runs the stack over xs starting from state h0 (per layer, zeros when empty).
// outputs[t] = top-layer state after step t; final = per-layer states after the
// last step. cache may be null for inference.
void gru_sequence_forward(const GruStack& stack, const std::vector<Vec>& xs,
                          const std::vector<Vec>& h0, std::vector<Vec>& outputs,
                          std::vector<Vec>& final_state, GruSeqCache* cache);

// d_outputs aligns with outputs (zeros allowed); accumulates parameter grads
// and returns gradients w.r.t. the inputs.
std::vector<Vec> gru_sequence_backward(const GruStack& stack, const GruSeqCache& cache,
                                       const std::vector<Vec>& d_outputs);

// ---------------------------------------------------------------------------
// Additive attention (Bahdanau): score_j = v . tanh(Wq q + Wk k_j).

struct Attention {
  Param *Wq, *Wk, *v;
  int att = 0, q_dim = 0, k_dim = 0;
};

Attention make_attention(ParamStore& store, const std::string& prefix, int q_dim, int k_dim,
                         int att);

struct AttentionCache {
  Vec qproj;           // Wq q
  std::vector<Vec> u;  // tanh per key
  Vec weights;
};

// Optional kproj holds precomputed Wk k_j rows shared across queries of one
// request. Empty keys (or a fully false mask) yield zero weights and a zero
// context, the cold-start contract.
Vec attention_forward(const Attention& at, const Vec& q, const std::vector<Vec>& keys,
                      const std::vector<Vec>& values, const std::vector<Vec>* kproj,
                      Vec* weights_out, AttentionCache* cache);

void attention_backward(const Attention& at, const AttentionCache& cache, const Vec& q,
                        const std::vector<Vec>& keys, const std::vector<Vec>& values,
                        const Vec& d_context, Vec& d_q, std::vector<Vec>* d_keys,
                        std::vector<Vec>* d_values);

// Spec-shaped convenience entry point with an explicit mask.
std::pair<Vec, Vec> additive_attention(const Attention& at, const Vec& q,
                                       const std::vector<Vec>& keys,
                                       const std::vector<Vec>& values,
                                       const std::vector<std::uint8_t>& mask);

// ---------------------------------------------------------------------------
// MLP: tanh hidden layers, linear scalar head.

struct Mlp {
  std::vector<Param*> W, b;
  int input_dim = 0;
};

Mlp make_mlp(ParamStore& store, const std::string& prefix, int input_dim,
             const std::vector<int>& hidden);

struct MlpCache {
  std::vector<Vec> acts;  // layer inputs, acts[0] = x
};

double mlp_forward(const Mlp& m, const Vec& x, MlpCache* cache);
Vec mlp_backward(const Mlp& m, const MlpCache& cache, double d_out);

// ---------------------------------------------------------------------------
// Loss and optimizer.

inline constexpr double kProbClamp = 1e-7;

double bce_loss(double p, int label);
// dL/dz for p = sigmoid(z); zero in the clamped region.
double bce_dlogit(double p, int label);

struct AdamConfig {
  double lr = 0.005, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Applies one update from accumulated grads scaled by grad_scale, then clears
// them. Throws naming the offending tensor when a non-finite value appears.
void adam_step(ParamStore& store, const AdamConfig& cfg, long step, double grad_scale);

void check_finite(const ParamStore& store, bool values, bool grads);

}  // namespace edgerec::nn
