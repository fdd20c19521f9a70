#include "edgerec/crban.hpp"

#include <algorithm>

namespace edgerec {

namespace {

std::vector<Vec> project_keys(const nn::Attention& at, const std::deque<Vec>& keys) {
  std::vector<Vec> kproj;
  kproj.reserve(keys.size());
  for (const auto& k : keys) {
    Vec p(at.att, 0.0);
    for (int i = 0; i < at.att; ++i) {
      const double* w = at.Wk->value.data() + std::size_t(i) * at.k_dim;
      double acc = 0.0;
      for (int j = 0; j < at.k_dim; ++j) acc += w[j] * k[j];
      p[i] = acc;
    }
    kproj.push_back(std::move(p));
  }
  return kproj;
}

struct BranchView {
  std::vector<Vec> keys, values, kproj;
};

BranchView branch_view(const nn::Attention& at, const SequenceContext& seq) {
  BranchView b;
  b.keys.assign(seq.keys.begin(), seq.keys.end());
  b.values.assign(seq.values.begin(), seq.values.end());
  b.kproj = project_keys(at, seq.keys);
  return b;
}

ScoredCandidate score_one(const EdgeRecModel& model, int index,
                          const std::vector<Candidate>& candidates, const CandidateEncoding& enc,
                          const BranchView* ie, const BranchView* ipv) {
  const Vec& cand_enc =
      model.has_candidate_encoder() ? enc.encodings[index] : candidates[index].features;

  Vec c_ie, c_ipv;
  ScoredCandidate out;
  out.item_id = candidates[index].item_id;
  out.initial_rank = index;
  if (model.has_ie()) {
    c_ie = nn::attention_forward(model.attn_ie(), cand_enc, ie->keys, ie->values, &ie->kproj,
                                 &out.ie_weights, nullptr);
    if (ie->keys.empty()) c_ie.assign(model.value_dim(), 0.0);
  }
  if (model.has_ipv()) {
    c_ipv = nn::attention_forward(model.attn_ipv(), cand_enc, ipv->keys, ipv->values, &ipv->kproj,
                                  &out.ipv_weights, nullptr);
    if (ipv->keys.empty()) c_ipv.assign(model.value_dim(), 0.0);
  }

  Vec in = model.assemble_mlp_input(c_ie, c_ipv, cand_enc, enc.s);
  out.score = sigmoid(nn::mlp_forward(model.mlp(), in, nullptr));
  return out;
}

}  // namespace

CandidateEncoding encode_candidates(const EdgeRecModel& model,
                                    const std::vector<Candidate>& candidates) {
  EDGEREC_CHECK(!candidates.empty(), "encode_candidates: empty candidate list");
  CandidateEncoding enc;
  if (!model.has_candidate_encoder()) return enc;
  std::vector<Vec> xs;
  xs.reserve(candidates.size());
  for (const auto& c : candidates) xs.push_back(c.features);
  std::vector<Vec> finals;
  nn::gru_sequence_forward(model.cnd(), xs, {}, enc.encodings, finals, nullptr);
  enc.s = enc.encodings.back();
  return enc;
}

ScoredCandidate score_candidate(const EdgeRecModel& model, int index,
                                const std::vector<Candidate>& candidates,
                                const CandidateEncoding& enc, const BehaviorContext& ctx) {
  EDGEREC_CHECK(index >= 0 && index < int(candidates.size()), "candidate index out of range");
  BranchView ie, ipv;
  if (model.has_ie()) ie = branch_view(model.attn_ie(), ctx.ie);
  if (model.has_ipv()) ipv = branch_view(model.attn_ipv(), ctx.ipv);
  return score_one(model, index, candidates, enc, &ie, &ipv);
}

std::vector<ScoredCandidate> rerank(const EdgeRecModel& model,
                                    const std::vector<Candidate>& candidates,
                                    const BehaviorContext& ctx) {
  std::vector<ScoredCandidate> scored;
  if (candidates.empty()) return scored;

  CandidateEncoding enc = encode_candidates(model, candidates);
  BranchView ie, ipv;
  if (model.has_ie()) ie = branch_view(model.attn_ie(), ctx.ie);
  if (model.has_ipv()) ipv = branch_view(model.attn_ipv(), ctx.ipv);

  scored.reserve(candidates.size());
  for (int t = 0; t < int(candidates.size()); ++t) {
    ScoredCandidate sc = score_one(model, t, candidates, enc, &ie, &ipv);
    EDGEREC_CHECK(std::isfinite(sc.score), "non-finite candidate score");
    scored.push_back(std::move(sc));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.score > b.score;  // ties keep initial rank (stable)
  });
  return scored;
}

}  // namespace edgerec
