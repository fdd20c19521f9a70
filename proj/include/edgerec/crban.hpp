#pragma once

#include <cstdint>
#include <vector>

#include "edgerec/hubsm.hpp"
#include "edgerec/model.hpp"

namespace edgerec {

// One unexposed item entering the reranker, in initial cloud order.
struct Candidate {
  std::int64_t item_id = 0;
  Vec features;  // p vector (x_i)
};

struct ScoredCandidate {
  std::int64_t item_id = 0;
  int initial_rank = 0;
  double score = 0.0;
  Vec ie_weights;   // attention trace over the IE window
  Vec ipv_weights;  // over the IPV window
};

// GRU over the candidate list in initial order; s is the local ranking
// context (top-layer final state).
struct CandidateEncoding {
  std::vector<Vec> encodings;
  Vec s;
};

CandidateEncoding encode_candidates(const EdgeRecModel& model,
                                    const std::vector<Candidate>& candidates);

ScoredCandidate score_candidate(const EdgeRecModel& model, int index,
                                const std::vector<Candidate>& candidates,
                                const CandidateEncoding& enc, const BehaviorContext& ctx);

// Scores every candidate against the context snapshot and sorts by score
// descending, ties broken by initial rank. The result is a permutation of the
// input.
std::vector<ScoredCandidate> rerank(const EdgeRecModel& model,
                                    const std::vector<Candidate>& candidates,
                                    const BehaviorContext& ctx);

}  // namespace edgerec
