#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "msa/corpus.hpp"
#include "msa/error.hpp"
#include "msa/logistic.hpp"
#include "msa/rng.hpp"

namespace msa {

enum class SelfTrainVariant { per_domain, union_self, tri, tri_disagreement, none };

inline std::string to_string(SelfTrainVariant v) {
  switch (v) {
    case SelfTrainVariant::per_domain: return "alg1";
    case SelfTrainVariant::union_self: return "uni";
    case SelfTrainVariant::tri: return "tri";
    case SelfTrainVariant::tri_disagreement: return "tri-d";
    case SelfTrainVariant::none: return "none";
  }
  return "?";
}

inline SelfTrainVariant selftrain_variant_from_string(const std::string& s) {
  if (s == "alg1") return SelfTrainVariant::per_domain;
  if (s == "uni") return SelfTrainVariant::union_self;
  if (s == "tri") return SelfTrainVariant::tri;
  if (s == "tri-d") return SelfTrainVariant::tri_disagreement;
  if (s == "none") return SelfTrainVariant::none;
  throw ArgumentError("unknown self-training variant '" + s + "'");
}

struct SelfTrainConfig {
  double tau = 0.8;  // confidence threshold; instances append when conf > tau
  double reg = 1.0;
  std::uint64_t seed = 0;
  SelfTrainVariant variant = SelfTrainVariant::per_domain;
  int max_rounds = 10;  // tri-training only
};

struct AuditEntry {
  DomainId domain;  // domain of the appended instance
  std::string id;
  Label pseudo_label;
  double confidence;
  int member = -1;  // tri-training classifier the instance was added to

  bool operator==(const AuditEntry&) const = default;
};

struct SelfTrainResult {
  std::vector<DomainId> member_domains;  // one entry per voter member
  MajorityVoter voter;
  std::map<DomainId, std::size_t> augmentation_counts;  // distinct appended ids
  std::vector<AuditEntry> log;  // ordered by (member, domain, id)
};

namespace detail {

inline std::vector<Instance> union_labelled(const Corpus& corpus) {
  std::vector<Instance> all;
  for (const DomainSet& s : corpus.sources)
    all.insert(all.end(), s.labelled.begin(), s.labelled.end());
  return all;
}

inline std::vector<const Instance*> union_unlabelled(const Corpus& corpus) {
  std::vector<const Instance*> all;
  for (const DomainSet& s : corpus.sources)
    for (const Instance& ins : s.unlabelled) all.push_back(&ins);
  return all;
}

inline void sort_log(std::vector<AuditEntry>& log) {
  std::sort(log.begin(), log.end(), [](const AuditEntry& a, const AuditEntry& b) {
    if (a.member != b.member) return a.member < b.member;
    if (a.domain != b.domain) return a.domain < b.domain;
    return a.id < b.id;
  });
}

inline Instance with_label(const Instance& ins, Label pseudo) {
  Instance copy = ins;
  copy.label = pseudo;
  return copy;
}

// Single self-training pass: score the unlabelled pool with the given fixed
// classifier, append everything above tau, retrain once on the augmented
// set. Additions retrain in (domain, id) order so the pass is independent
// of pool order.
inline ProbClassifier self_train_pass(const std::vector<Instance>& labelled,
                                      const std::vector<const Instance*>& pool,
                                      const SelfTrainConfig& cfg,
                                      std::vector<AuditEntry>& log) {
  const ProbClassifier initial = train_logistic(labelled, cfg.reg, cfg.seed);
  std::vector<AuditEntry> added;
  for (const Instance* x : pool) {
    const Prediction pred = initial.predict(*x);
    if (pred.confidence > cfg.tau)
      added.push_back({x->domain, x->id, pred.label, pred.confidence, -1});
  }
  sort_log(added);
  if (added.empty()) {
    log.insert(log.end(), added.begin(), added.end());
    return train_logistic(labelled, cfg.reg, cfg.seed);
  }
  std::vector<Instance> augmented = labelled;
  std::map<std::string, const Instance*> by_id;
  for (const Instance* x : pool) by_id[x->id] = x;
  for (const AuditEntry& e : added)
    augmented.push_back(with_label(*by_id.at(e.id), e.pseudo_label));
  log.insert(log.end(), added.begin(), added.end());
  return train_logistic(augmented, cfg.reg, cfg.seed);
}

}  // namespace detail

inline void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw ArgumentError("confidence threshold tau must lie in [0,1]");
}

// Multi-source self-training: each source domain self-trains independently
// on its own unlabelled pool; the result is the majority voter over the
// per-domain classifiers.
inline SelfTrainResult run_algorithm1(const Corpus& corpus, const SelfTrainConfig& cfg) {
  check_tau(cfg.tau);
  SelfTrainResult result;
  std::vector<ProbClassifier> members;
  for (const DomainSet& s : corpus.sources) {
    std::vector<const Instance*> pool;
    for (const Instance& ins : s.unlabelled) pool.push_back(&ins);
    std::vector<AuditEntry> log;
    members.push_back(detail::self_train_pass(s.labelled, pool, cfg, log));
    result.member_domains.push_back(s.domain);
    result.augmentation_counts[s.domain] = log.size();
    result.log.insert(result.log.end(), log.begin(), log.end());
  }
  detail::sort_log(result.log);
  result.voter = MajorityVoter(std::move(members));
  return result;
}

// A single classifier over the union of all source labelled sets,
// self-trained over the union of the unlabelled pools.
inline SelfTrainResult run_union_self(const Corpus& corpus, const SelfTrainConfig& cfg) {
  check_tau(cfg.tau);
  SelfTrainResult result;
  const std::vector<Instance> labelled = detail::union_labelled(corpus);
  const std::vector<const Instance*> pool = detail::union_unlabelled(corpus);
  std::vector<AuditEntry> log;
  ProbClassifier model = detail::self_train_pass(labelled, pool, cfg, log);
  result.member_domains.push_back("union");
  for (const AuditEntry& e : log) result.augmentation_counts[e.domain] += 1;
  result.log = std::move(log);
  detail::sort_log(result.log);
  result.voter = MajorityVoter({std::move(model)});
  return result;
}

// Tri-training: three classifiers initialized on bootstrap resamples of the
// union labelled set; an unlabelled instance joins classifier c's pool when
// the other two agree on its label (and, in the disagreement variant, c
// itself disagrees). Rounds repeat until the pools stop changing or
// max_rounds is hit; prediction is the majority over the three.
inline SelfTrainResult run_tri_training(const Corpus& corpus, const SelfTrainConfig& cfg,
                                        bool disagreement) {
  check_tau(cfg.tau);
  const std::vector<Instance> labelled = detail::union_labelled(corpus);
  const std::vector<const Instance*> pool = detail::union_unlabelled(corpus);
  if (labelled.empty()) throw TrainError("tri-training: no labelled instances");

  Rng root(cfg.seed);
  std::vector<ProbClassifier> members;
  for (int m = 0; m < 3; ++m) {
    Rng boot = root.substream("tri/bootstrap", static_cast<std::uint64_t>(m));
    std::vector<Instance> sample;
    sample.reserve(labelled.size());
    for (std::size_t i = 0; i < labelled.size(); ++i)
      sample.push_back(labelled[boot.below(labelled.size())]);
    members.push_back(train_logistic(sample, cfg.reg, cfg.seed));
  }

  using Pool = std::map<std::string, Label>;  // id -> agreed label
  std::array<Pool, 3> prev{};
  std::array<std::vector<AuditEntry>, 3> final_log{};
  for (int round = 0; round < cfg.max_rounds; ++round) {
    std::array<Pool, 3> agreed{};
    std::array<std::vector<AuditEntry>, 3> log{};
    for (int m = 0; m < 3; ++m) {
      const ProbClassifier& a = members[(m + 1) % 3];
      const ProbClassifier& b = members[(m + 2) % 3];
      for (const Instance* x : pool) {
        const Prediction pa = a.predict(*x);
        const Prediction pb = b.predict(*x);
        if (pa.label != pb.label) continue;
        if (disagreement && members[m].predict(*x).label == pa.label) continue;
        agreed[m].emplace(x->id, pa.label);
        log[m].push_back({x->domain, x->id, pa.label,
                          0.5 * (pa.confidence + pb.confidence), m});
      }
    }
    if (agreed == prev) break;  // fixed point
    std::map<std::string, const Instance*> by_id;
    for (const Instance* x : pool) by_id[x->id] = x;
    for (int m = 0; m < 3; ++m) {
      std::vector<Instance> augmented = labelled;
      detail::sort_log(log[m]);
      for (const AuditEntry& e : log[m])
        augmented.push_back(detail::with_label(*by_id.at(e.id), e.pseudo_label));
      members[m] = train_logistic(augmented, cfg.reg, cfg.seed);
    }
    prev = agreed;
    final_log = log;
  }

  SelfTrainResult result;
  result.member_domains = {"tri-0", "tri-1", "tri-2"};
  std::map<DomainId, std::set<std::string>> distinct;
  for (auto& log : final_log) {
    for (const AuditEntry& e : log) distinct[e.domain].insert(e.id);
    result.log.insert(result.log.end(), log.begin(), log.end());
  }
  for (const auto& [dom, ids] : distinct) result.augmentation_counts[dom] = ids.size();
  detail::sort_log(result.log);
  result.voter = MajorityVoter(std::move(members));
  return result;
}

inline SelfTrainResult run_selftrain(const Corpus& corpus, const SelfTrainConfig& cfg) {
  switch (cfg.variant) {
    case SelfTrainVariant::per_domain: return run_algorithm1(corpus, cfg);
    case SelfTrainVariant::union_self: return run_union_self(corpus, cfg);
    case SelfTrainVariant::tri: return run_tri_training(corpus, cfg, false);
    case SelfTrainVariant::tri_disagreement: return run_tri_training(corpus, cfg, true);
    case SelfTrainVariant::none: {
      SelfTrainResult r;
      std::vector<ProbClassifier> members;
      for (const DomainSet& s : corpus.sources) {
        members.push_back(train_logistic(s.labelled, cfg.reg, cfg.seed));
        r.member_domains.push_back(s.domain);
        r.augmentation_counts[s.domain] = 0;
      }
      r.voter = MajorityVoter(std::move(members));
      return r;
    }
  }
  throw ArgumentError("unknown self-training variant");
}

}  // namespace msa
