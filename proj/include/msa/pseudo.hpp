#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "msa/corpus.hpp"
#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/logistic.hpp"

namespace msa {

// Mean representation of the target domain's unlabelled instances.
struct TargetCentroid {
  Vec vector;
};

inline TargetCentroid compute_centroid(const std::vector<Instance>& targets) {
  if (targets.empty()) throw ArgumentError("compute_centroid: empty target list");
  for (const Instance& ins : targets)
    if (!ins.has_repr())
      throw ArgumentError("compute_centroid: instance '" + ins.id + "' has no representation");
  Vec sum(targets.front().repr.size(), 0.0);
  for (const Instance& ins : targets) {
    if (ins.repr.size() != sum.size())
      throw ArgumentError("compute_centroid: inconsistent dimensions");
    axpy(1.0, ins.repr, sum);
  }
  scale(sum, 1.0 / static_cast<double>(targets.size()));
  return {std::move(sum)};
}

inline double similarity(const Instance& x, const TargetCentroid& c) {
  if (!x.has_repr()) throw ArgumentError("similarity: instance has no representation");
  return cosine_similarity(x.repr, c.vector);
}

// A target instance annotated with the voter's pseudo-label and confidence
// plus its cosine similarity to the target centroid.
struct ScoredTarget {
  Instance instance;
  Label pseudo_label = Label::negative;
  double prob = 0.0;
  double sim = 0.0;
};

inline std::vector<ScoredTarget> score_targets(const MajorityVoter& voter,
                                               const std::vector<Instance>& targets,
                                               const TargetCentroid& centroid) {
  std::vector<ScoredTarget> out;
  out.reserve(targets.size());
  for (const Instance& ins : targets) {
    const Prediction pred = voter.vote(ins);
    out.push_back({ins, pred.label, pred.confidence, similarity(ins, centroid)});
  }
  return out;
}

enum class SelectionKind {
  prob_only,
  sim_only,
  prob_sim,  // rank by prob first, ties and final cut by sim
  sim_prob,
  prob_times_sim,
  prob_plus_sim,
};

enum class SortOrder { asc, dsc };

inline std::string to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::prob_only: return "prob_only";
    case SelectionKind::sim_only: return "sim_only";
    case SelectionKind::prob_sim: return "prob_sim";
    case SelectionKind::sim_prob: return "sim_prob";
    case SelectionKind::prob_times_sim: return "prob_x_sim";
    case SelectionKind::prob_plus_sim: return "prob_plus_sim";
  }
  return "?";
}

inline SelectionKind selection_kind_from_string(const std::string& s) {
  if (s == "prob_only") return SelectionKind::prob_only;
  if (s == "sim_only") return SelectionKind::sim_only;
  if (s == "prob_sim") return SelectionKind::prob_sim;
  if (s == "sim_prob") return SelectionKind::sim_prob;
  if (s == "prob_x_sim" || s == "prob_times_sim") return SelectionKind::prob_times_sim;
  if (s == "prob_plus_sim" || s == "prob+sim") return SelectionKind::prob_plus_sim;
  throw ArgumentError("unknown selection strategy '" + s + "'");
}

// Similarity is always ranked descending; `order` applies only to the
// prob-based keys.
struct SelectionStrategy {
  SelectionKind kind = SelectionKind::sim_only;
  SortOrder order = SortOrder::dsc;
  std::size_t k = 2000;
};

inline std::string to_string(const SelectionStrategy& s) {
  std::string name = to_string(s.kind);
  const bool prob_ordered = s.kind == SelectionKind::prob_only ||
                            s.kind == SelectionKind::prob_sim ||
                            s.kind == SelectionKind::sim_prob;
  if (prob_ordered) name += s.order == SortOrder::asc ? "_asc" : "_dsc";
  return name;
}

inline std::vector<ScoredTarget> select(const std::vector<ScoredTarget>& scored,
                                        const SelectionStrategy& strategy) {
  if (strategy.k == 0) throw ArgumentError("select: k must be positive");
  if (scored.empty()) throw ArgumentError("select: empty scored list");

  // Comparator keys: (primary, secondary) descending, prob negated for asc.
  const double flip = strategy.order == SortOrder::asc ? -1.0 : 1.0;
  auto keys = [&](const ScoredTarget& t) -> std::pair<double, double> {
    switch (strategy.kind) {
      case SelectionKind::prob_only: return {flip * t.prob, 0.0};
      case SelectionKind::sim_only: return {t.sim, 0.0};
      case SelectionKind::prob_sim: return {flip * t.prob, t.sim};
      case SelectionKind::sim_prob: return {t.sim, flip * t.prob};
      case SelectionKind::prob_times_sim: return {t.prob * t.sim, 0.0};
      case SelectionKind::prob_plus_sim: return {t.prob + t.sim, 0.0};
    }
    throw ArgumentError("unknown selection kind");
  };

  std::vector<const ScoredTarget*> ptrs;
  ptrs.reserve(scored.size());
  for (const ScoredTarget& t : scored) ptrs.push_back(&t);
  std::sort(ptrs.begin(), ptrs.end(), [&](const ScoredTarget* a, const ScoredTarget* b) {
    const auto ka = keys(*a);
    const auto kb = keys(*b);
    if (ka.first != kb.first) return ka.first > kb.first;
    if (ka.second != kb.second) return ka.second > kb.second;
    return a->instance.id < b->instance.id;  // stable tie-break
  });

  const std::size_t n = std::min(strategy.k, ptrs.size());
  std::vector<ScoredTarget> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(*ptrs[i]);
  return out;
}

}  // namespace msa
