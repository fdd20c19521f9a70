#include "edgerec/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace edgerec::nn {

Param* ParamStore::add_matrix(const std::string& name, std::size_t rows, std::size_t cols) {
  EDGEREC_CHECK(!by_name_.count(name), "duplicate parameter: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->rows = rows;
  p->cols = cols;
  p->value.assign(rows * cols, 0.0);
  p->grad.assign(rows * cols, 0.0);
  p->adam_m.assign(rows * cols, 0.0);
  p->adam_v.assign(rows * cols, 0.0);
  Param* raw = p.get();
  by_name_[name] = raw;
  params_.push_back(std::move(p));
  return raw;
}

Param* ParamStore::add_vector(const std::string& name, std::size_t n, bool bias) {
  Param* p = add_matrix(name, n, 1);
  p->is_vector = true;
  p->is_bias = bias;
  return p;
}

Param* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParamStore::zero_grads() {
  for (const auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

void ParamStore::init(std::uint64_t seed) {
  for (const auto& p : params_) {
    if (p->is_bias) {
      std::fill(p->value.begin(), p->value.end(), 0.0);
      continue;
    }
    Rng rng(hash_mix(seed, hash_str(p->name)));
    for (double& v : p->value) v = rng.uniform(-0.08, 0.08);
  }
}

// ---------------------------------------------------------------------------

namespace {

// y += W x, W is rows x cols row-major.
inline void matvec_acc(const double* W, int rows, int cols, const double* x, double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* w = W + std::size_t(i) * cols;
    double acc = 0.0;
    for (int j = 0; j < cols; ++j) acc += w[j] * x[j];
    y[i] += acc;
  }
}

// y += W^T d.
inline void matvec_t_acc(const double* W, int rows, int cols, const double* d, double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* w = W + std::size_t(i) * cols;
    double di = d[i];
    for (int j = 0; j < cols; ++j) y[j] += w[j] * di;
  }
}

// G += d (x) x.
inline void outer_acc(double* G, int rows, int cols, const double* d, const double* x) {
  for (int i = 0; i < rows; ++i) {
    double* g = G + std::size_t(i) * cols;
    double di = d[i];
    for (int j = 0; j < cols; ++j) g[j] += di * x[j];
  }
}

inline void add_acc(double* y, const double* d, int n) {
  for (int i = 0; i < n; ++i) y[i] += d[i];
}

}  // namespace

GruStack make_gru_stack(ParamStore& store, const std::string& prefix, int input_dim, int hidden,
                        int layers) {
  GruStack s;
  s.input_dim = input_dim;
  s.hidden = hidden;
  for (int l = 0; l < layers; ++l) {
    int in = l == 0 ? input_dim : hidden;
    std::string base = prefix + ".l" + std::to_string(l) + ".";
    GruLayer layer;
    layer.in = in;
    layer.hidden = hidden;
    layer.Wz = store.add_matrix(base + "Wz", hidden, in);
    layer.Uz = store.add_matrix(base + "Uz", hidden, hidden);
    layer.bz = store.add_vector(base + "bz", hidden, true);
    layer.Wr = store.add_matrix(base + "Wr", hidden, in);
    layer.Ur = store.add_matrix(base + "Ur", hidden, hidden);
    layer.br = store.add_vector(base + "br", hidden, true);
    layer.Wh = store.add_matrix(base + "Wh", hidden, in);
    layer.Uh = store.add_matrix(base + "Uh", hidden, hidden);
    layer.bh = store.add_vector(base + "bh", hidden, true);
    s.layers.push_back(layer);
  }
  return s;
}

std::atomic<std::uint64_t>& gru_step_count() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

namespace {

// Shared kernel; when cache pointers are given they receive the gate values.
inline void gru_step_kernel(const GruLayer& L, const double* x, const double* h, double* h_out,
                            double* cz, double* cr, double* chh, double* crh) {
  const int H = L.hidden;
  Vec z(H), r(H), hh(H), rh(H);
  for (int i = 0; i < H; ++i) {
    z[i] = L.bz->value[i];
    r[i] = L.br->value[i];
    hh[i] = L.bh->value[i];
  }
  matvec_acc(L.Wz->value.data(), H, L.in, x, z.data());
  matvec_acc(L.Uz->value.data(), H, H, h, z.data());
  matvec_acc(L.Wr->value.data(), H, L.in, x, r.data());
  matvec_acc(L.Ur->value.data(), H, H, h, r.data());
  for (int i = 0; i < H; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
    rh[i] = r[i] * h[i];
  }
  matvec_acc(L.Wh->value.data(), H, L.in, x, hh.data());
  matvec_acc(L.Uh->value.data(), H, H, rh.data(), hh.data());
  for (int i = 0; i < H; ++i) {
    hh[i] = std::tanh(hh[i]);
    h_out[i] = (1.0 - z[i]) * h[i] + z[i] * hh[i];
  }
  if (cz) {
    std::memcpy(cz, z.data(), H * sizeof(double));
    std::memcpy(cr, r.data(), H * sizeof(double));
    std::memcpy(chh, hh.data(), H * sizeof(double));
    std::memcpy(crh, rh.data(), H * sizeof(double));
  }
  gru_step_count().fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

void gru_layer_step(const GruLayer& L, const double* x, const double* h, double* h_out) {
  gru_step_kernel(L, x, h, h_out, nullptr, nullptr, nullptr, nullptr);
}

void gru_sequence_forward(const GruStack& stack, const std::vector<Vec>& xs,
                          const std::vector<Vec>& h0, std::vector<Vec>& outputs,
                          std::vector<Vec>& final_state, GruSeqCache* cache) {
  const int T = int(xs.size());
  const int Lc = int(stack.layers.size());
  const int H = stack.hidden;

  std::vector<Vec> state(Lc, Vec(H, 0.0));
  if (!h0.empty()) {
    EDGEREC_CHECK(int(h0.size()) == Lc, "resume state layer count mismatch");
    for (int l = 0; l < Lc; ++l) {
      EDGEREC_CHECK(int(h0[l].size()) == H, "resume state width mismatch");
      state[l] = h0[l];
    }
  }

  if (cache) {
    cache->T = T;
    cache->x.assign(Lc, {});
    cache->hprev.assign(Lc, {});
    cache->z.assign(Lc, {});
    cache->r.assign(Lc, {});
    cache->hh.assign(Lc, {});
    cache->rh.assign(Lc, {});
    for (int l = 0; l < Lc; ++l) {
      cache->x[l].resize(std::size_t(T) * stack.layers[l].in);
      cache->hprev[l].resize(std::size_t(T) * H);
      cache->z[l].resize(std::size_t(T) * H);
      cache->r[l].resize(std::size_t(T) * H);
      cache->hh[l].resize(std::size_t(T) * H);
      cache->rh[l].resize(std::size_t(T) * H);
    }
  }

  outputs.assign(T, Vec(H, 0.0));
  Vec cur;
  for (int t = 0; t < T; ++t) {
    EDGEREC_CHECK(int(xs[t].size()) == stack.input_dim, "gru input width mismatch");
    cur = xs[t];
    for (int l = 0; l < Lc; ++l) {
      const GruLayer& L = stack.layers[l];
      double *cz = nullptr, *cr = nullptr, *chh = nullptr, *crh = nullptr;
      if (cache) {
        std::memcpy(cache->x[l].data() + std::size_t(t) * L.in, cur.data(),
                    L.in * sizeof(double));
        std::memcpy(cache->hprev[l].data() + std::size_t(t) * H, state[l].data(),
                    H * sizeof(double));
        cz = cache->z[l].data() + std::size_t(t) * H;
        cr = cache->r[l].data() + std::size_t(t) * H;
        chh = cache->hh[l].data() + std::size_t(t) * H;
        crh = cache->rh[l].data() + std::size_t(t) * H;
      }
      Vec next(H);
      gru_step_kernel(L, cur.data(), state[l].data(), next.data(), cz, cr, chh, crh);
      state[l] = next;
      cur = state[l];
    }
    outputs[t] = state[Lc - 1];
  }
  final_state = std::move(state);
}

namespace {

// One step of BPTT for a single layer. dh_out is the incoming gradient on
// h'; accumulates parameter grads, writes dx and the gradient on h.
void gru_layer_step_backward(const GruLayer& L, const double* x, const double* hprev,
                             const double* z, const double* r, const double* hh, const double* rh,
                             const double* dh_out, double* dx, double* dh_prev) {
  const int H = L.hidden;
  Vec daz(H), dar(H), dah(H);
  for (int i = 0; i < H; ++i) {
    double dz = dh_out[i] * (hh[i] - hprev[i]);
    double dhh = dh_out[i] * z[i];
    dh_prev[i] = dh_out[i] * (1.0 - z[i]);
    daz[i] = dz * z[i] * (1.0 - z[i]);
    dah[i] = dhh * (1.0 - hh[i] * hh[i]);
  }
  outer_acc(L.Wh->grad.data(), H, L.in, dah.data(), x);
  outer_acc(L.Uh->grad.data(), H, H, dah.data(), rh);
  add_acc(L.bh->grad.data(), dah.data(), H);

  Vec drh(H, 0.0);
  matvec_t_acc(L.Uh->value.data(), H, H, dah.data(), drh.data());
  for (int i = 0; i < H; ++i) {
    double dr = drh[i] * hprev[i];
    dh_prev[i] += drh[i] * r[i];
    dar[i] = dr * r[i] * (1.0 - r[i]);
  }
  outer_acc(L.Wz->grad.data(), H, L.in, daz.data(), x);
  outer_acc(L.Uz->grad.data(), H, H, daz.data(), hprev);
  add_acc(L.bz->grad.data(), daz.data(), H);
  outer_acc(L.Wr->grad.data(), H, L.in, dar.data(), x);
  outer_acc(L.Ur->grad.data(), H, H, dar.data(), hprev);
  add_acc(L.br->grad.data(), dar.data(), H);

  matvec_t_acc(L.Uz->value.data(), H, H, daz.data(), dh_prev);
  matvec_t_acc(L.Ur->value.data(), H, H, dar.data(), dh_prev);

  std::fill(dx, dx + L.in, 0.0);
  matvec_t_acc(L.Wz->value.data(), H, L.in, daz.data(), dx);
  matvec_t_acc(L.Wr->value.data(), H, L.in, dar.data(), dx);
  matvec_t_acc(L.Wh->value.data(), H, L.in, dah.data(), dx);
}

}  // namespace

std::vector<Vec> gru_sequence_backward(const GruStack& stack, const GruSeqCache& cache,
                                       const std::vector<Vec>& d_outputs) {
  const int T = cache.T;
  const int Lc = int(stack.layers.size());
  const int H = stack.hidden;
  EDGEREC_CHECK(int(d_outputs.size()) == T, "d_outputs length mismatch");

  // d_in[t]: gradient flowing into layer l's output at step t from the layer
  // above (initialised from d_outputs for the top layer).
  std::vector<Vec> d_in(T);
  for (int t = 0; t < T; ++t) d_in[t] = d_outputs[t];

  for (int l = Lc - 1; l >= 0; --l) {
    const GruLayer& L = stack.layers[l];
    std::vector<Vec> dx(T, Vec(L.in, 0.0));
    Vec dh(H, 0.0);
    Vec dh_prev(H);
    for (int t = T - 1; t >= 0; --t) {
      for (int i = 0; i < H; ++i) dh[i] += d_in[t][i];
      gru_layer_step_backward(L, cache.x[l].data() + std::size_t(t) * L.in,
                              cache.hprev[l].data() + std::size_t(t) * H,
                              cache.z[l].data() + std::size_t(t) * H,
                              cache.r[l].data() + std::size_t(t) * H,
                              cache.hh[l].data() + std::size_t(t) * H,
                              cache.rh[l].data() + std::size_t(t) * H, dh.data(), dx[t].data(),
                              dh_prev.data());
      dh = dh_prev;
    }
    d_in = std::move(dx);
  }
  return d_in;
}

// ---------------------------------------------------------------------------

Attention make_attention(ParamStore& store, const std::string& prefix, int q_dim, int k_dim,
                         int att) {
  Attention a;
  a.att = att;
  a.q_dim = q_dim;
  a.k_dim = k_dim;
  a.Wq = store.add_matrix(prefix + ".Wq", att, q_dim);
  a.Wk = store.add_matrix(prefix + ".Wk", att, k_dim);
  a.v = store.add_vector(prefix + ".v", att);
  return a;
}

Vec attention_forward(const Attention& at, const Vec& q, const std::vector<Vec>& keys,
                      const std::vector<Vec>& values, const std::vector<Vec>* kproj,
                      Vec* weights_out, AttentionCache* cache) {
  EDGEREC_CHECK(keys.size() == values.size(), "attention keys/values length mismatch");
  const int A = at.att;
  const std::size_t J = keys.size();
  const std::size_t vdim = values.empty() ? 0 : values[0].size();

  Vec qproj(A, 0.0);
  matvec_acc(at.Wq->value.data(), A, at.q_dim, q.data(), qproj.data());

  Vec scores(J);
  std::vector<Vec> u(J, Vec(A));
  for (std::size_t j = 0; j < J; ++j) {
    Vec a = qproj;
    if (kproj) {
      add_acc(a.data(), (*kproj)[j].data(), A);
    } else {
      matvec_acc(at.Wk->value.data(), A, at.k_dim, keys[j].data(), a.data());
    }
    double s = 0.0;
    for (int i = 0; i < A; ++i) {
      a[i] = std::tanh(a[i]);
      s += at.v->value[i] * a[i];
    }
    u[j] = std::move(a);
    scores[j] = s;
  }

  Vec weights(J, 0.0);
  if (J > 0) {
    double mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      weights[j] = std::exp(scores[j] - mx);
      sum += weights[j];
    }
    for (std::size_t j = 0; j < J; ++j) weights[j] /= sum;
  }

  Vec context(vdim, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double w = weights[j];
    const double* vj = values[j].data();
    for (std::size_t i = 0; i < vdim; ++i) context[i] += w * vj[i];
  }

  if (weights_out) *weights_out = weights;
  if (cache) {
    cache->qproj = std::move(qproj);
    cache->u = std::move(u);
    cache->weights = std::move(weights);
  }
  return context;
}

void attention_backward(const Attention& at, const AttentionCache& cache, const Vec& q,
                        const std::vector<Vec>& keys, const std::vector<Vec>& values,
                        const Vec& d_context, Vec& d_q, std::vector<Vec>* d_keys,
                        std::vector<Vec>* d_values) {
  const int A = at.att;
  const std::size_t J = keys.size();
  d_q.assign(at.q_dim, 0.0);
  if (J == 0) return;  // fully masked: context is constant zero

  const std::size_t vdim = values[0].size();
  Vec dw(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const double* vj = values[j].data();
    double acc = 0.0;
    for (std::size_t i = 0; i < vdim; ++i) acc += vj[i] * d_context[i];
    dw[j] = acc;
    if (d_values) {
      double w = cache.weights[j];
      double* dv = (*d_values)[j].data();
      for (std::size_t i = 0; i < vdim; ++i) dv[i] += w * d_context[i];
    }
  }

  // Softmax backward.
  double wd = 0.0;
  for (std::size_t j = 0; j < J; ++j) wd += cache.weights[j] * dw[j];
  Vec ds(J);
  for (std::size_t j = 0; j < J; ++j) ds[j] = cache.weights[j] * (dw[j] - wd);

  Vec da_sum(A, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    const Vec& uj = cache.u[j];
    Vec da(A);
    for (int i = 0; i < A; ++i) {
      at.v->grad[i] += ds[j] * uj[i];
      da[i] = ds[j] * at.v->value[i] * (1.0 - uj[i] * uj[i]);
      da_sum[i] += da[i];
    }
    outer_acc(at.Wk->grad.data(), A, at.k_dim, da.data(), keys[j].data());
    if (d_keys) matvec_t_acc(at.Wk->value.data(), A, at.k_dim, da.data(), (*d_keys)[j].data());
  }
  outer_acc(at.Wq->grad.data(), A, at.q_dim, da_sum.data(), q.data());
  matvec_t_acc(at.Wq->value.data(), A, at.q_dim, da_sum.data(), d_q.data());
}

std::pair<Vec, Vec> additive_attention(const Attention& at, const Vec& q,
                                       const std::vector<Vec>& keys,
                                       const std::vector<Vec>& values,
                                       const std::vector<std::uint8_t>& mask) {
  EDGEREC_CHECK(keys.size() == values.size() && keys.size() == mask.size(),
                "additive_attention: keys, values and mask must align");
  std::vector<Vec> k2, v2;
  std::vector<std::size_t> pos;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) {
      k2.push_back(keys[j]);
      v2.push_back(values[j]);
      pos.push_back(j);
    }
  }
  Vec w2;
  const std::size_t vdim = values.empty() ? 0 : values[0].size();
  Vec ctx = attention_forward(at, q, k2, v2, nullptr, &w2, nullptr);
  if (k2.empty()) ctx.assign(vdim, 0.0);
  Vec weights(keys.size(), 0.0);
  for (std::size_t i = 0; i < pos.size(); ++i) weights[pos[i]] = w2[i];
  return {weights, ctx};
}

// ---------------------------------------------------------------------------

Mlp make_mlp(ParamStore& store, const std::string& prefix, int input_dim,
             const std::vector<int>& hidden) {
  Mlp m;
  m.input_dim = input_dim;
  int in = input_dim;
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    std::string base = prefix + ".l" + std::to_string(l) + ".";
    m.W.push_back(store.add_matrix(base + "W", hidden[l], in));
    m.b.push_back(store.add_vector(base + "b", hidden[l], true));
    in = hidden[l];
  }
  m.W.push_back(store.add_matrix(prefix + ".out.W", 1, in));
  m.b.push_back(store.add_vector(prefix + ".out.b", 1, true));
  return m;
}

double mlp_forward(const Mlp& m, const Vec& x, MlpCache* cache) {
  EDGEREC_CHECK(int(x.size()) == m.input_dim, "mlp input width mismatch");
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Vec cur = x;
  for (std::size_t l = 0; l + 1 < m.W.size(); ++l) {
    const Param* W = m.W[l];
    Vec next(W->rows);
    for (std::size_t i = 0; i < W->rows; ++i) next[i] = m.b[l]->value[i];
    matvec_acc(W->value.data(), int(W->rows), int(W->cols), cur.data(), next.data());
    for (double& v : next) v = std::tanh(v);
    cur = std::move(next);
    if (cache) cache->acts.push_back(cur);
  }
  const Param* W = m.W.back();
  double out = m.b.back()->value[0];
  for (std::size_t j = 0; j < W->cols; ++j) out += W->value[j] * cur[j];
  return out;
}

Vec mlp_backward(const Mlp& m, const MlpCache& cache, double d_out) {
  Param* Wl = m.W.back();
  const Vec& last = cache.acts.back();
  Vec d(last.size(), 0.0);
  for (std::size_t j = 0; j < Wl->cols; ++j) {
    Wl->grad[j] += d_out * last[j];
    d[j] = d_out * Wl->value[j];
  }
  m.b.back()->grad[0] += d_out;

  for (int l = int(m.W.size()) - 2; l >= 0; --l) {
    const Vec& act = cache.acts[l + 1];  // tanh outputs of layer l
    const Vec& in = cache.acts[l];
    Vec da(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) da[i] = d[i] * (1.0 - act[i] * act[i]);
    outer_acc(m.W[l]->grad.data(), int(m.W[l]->rows), int(m.W[l]->cols), da.data(), in.data());
    add_acc(m.b[l]->grad.data(), da.data(), int(da.size()));
    Vec dn(in.size(), 0.0);
    matvec_t_acc(m.W[l]->value.data(), int(m.W[l]->rows), int(m.W[l]->cols), da.data(), dn.data());
    d = std::move(dn);
  }
  return d;
}

// ---------------------------------------------------------------------------

double bce_loss(double p, int label) {
  EDGEREC_CHECK(label == 0 || label == 1, "label must be 0 or 1");
  double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return label ? -std::log(pc) : -std::log(1.0 - pc);
}

double bce_dlogit(double p, int label) {
  if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
  return p - double(label);
}

void adam_step(ParamStore& store, const AdamConfig& cfg, long step, double grad_scale) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
  for (const auto& p : store.all()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      double g = p->grad[i] * grad_scale;
      if (!std::isfinite(g)) fail("non-finite gradient in tensor " + p->name);
      p->adam_m[i] = cfg.beta1 * p->adam_m[i] + (1.0 - cfg.beta1) * g;
      p->adam_v[i] = cfg.beta2 * p->adam_v[i] + (1.0 - cfg.beta2) * g * g;
      double mhat = p->adam_m[i] / bc1;
      double vhat = p->adam_v[i] / bc2;
      p->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      if (!std::isfinite(p->value[i])) fail("non-finite value in tensor " + p->name);
    }
    std::fill(p->grad.begin(), p->grad.end(), 0.0);
  }
}

void check_finite(const ParamStore& store, bool values, bool grads) {
  for (const auto& p : store.all()) {
    if (values && !all_finite(p->value)) fail("non-finite value in tensor " + p->name);
    if (grads && !all_finite(p->grad)) fail("non-finite gradient in tensor " + p->name);
  }
}

}  // namespace edgerec::nn
