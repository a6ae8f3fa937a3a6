#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/rng.hpp"

namespace msa {

enum class Label : int { negative = 0, positive = 1 };

inline std::string to_string(Label l) {
  return l == Label::positive ? "positive" : "negative";
}

inline Label label_from_string(const std::string& s) {
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  throw ValidationError("unknown label '" + s + "' (expected positive|negative)");
}

// {0,1} encoding for cross-entropy targets.
inline double label01(Label l) { return l == Label::positive ? 1.0 : 0.0; }

// {-1,+1} encoding for evidence weights in the attention predictor.
inline double label_sign(Label l) { return l == Label::positive ? 1.0 : -1.0; }

using DomainId = std::string;
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;  // index -> weight

// One document. `tokens` may be empty only for pre-featurized input;
// `features` indices are strictly increasing; `repr` is set by the embed
// stage.
struct Instance {
  std::string id;
  DomainId domain;
  std::vector<std::string> tokens;
  SparseVec features;
  std::optional<Label> label;
  Vec repr;  // empty = not embedded yet

  bool has_repr() const { return !repr.empty(); }
};

struct DomainSet {
  DomainId domain;
  std::vector<Instance> labelled;
  std::vector<Instance> unlabelled;
  std::vector<Instance> test;  // used by the target domain
};

enum class CorpusSchema { raw_text, featurized };

inline std::string to_string(CorpusSchema s) {
  return s == CorpusSchema::raw_text ? "raw-text" : "featurized";
}

inline CorpusSchema schema_from_string(const std::string& s) {
  if (s == "raw-text") return CorpusSchema::raw_text;
  if (s == "featurized") return CorpusSchema::featurized;
  throw ArgumentError("unknown schema '" + s + "' (expected raw-text|featurized)");
}

struct CorpusMeta {
  std::string name;
  std::string representation = "none";  // none | sif | tfidf | precomputed
  std::size_t dim = 0;
};

// N source domains plus one target. In the unsupervised configuration the
// target has no labelled training partition; its gold labels live in `test`.
struct Corpus {
  std::vector<DomainSet> sources;
  DomainSet target;
  CorpusMeta meta;

  std::size_t num_sources() const { return sources.size(); }
};

struct TokenizerConfig {
  bool lowercase = true;
  bool split_non_alnum = true;  // false: split on whitespace only
};

inline std::vector<std::string> tokenize(const std::string& text,
                                         const TokenizerConfig& cfg = {}) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (const char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    const bool keep = cfg.split_non_alnum
                          ? (std::isalnum(uc) != 0 || uc >= 0x80)  // keep UTF-8 bytes
                          : (std::isspace(uc) == 0);
    if (keep) {
      cur.push_back(cfg.lowercase && uc < 0x80
                        ? static_cast<char>(std::tolower(uc))
                        : ch);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace detail {

inline void check_instances(const std::vector<Instance>& list, const DomainId& domain,
                            bool must_have_label,
                            std::unordered_set<std::string>& seen_ids) {
  for (const Instance& ins : list) {
    if (ins.id.empty()) throw ValidationError("instance with empty id");
    if (!seen_ids.insert(ins.id).second)
      throw ValidationError("duplicate instance id '" + ins.id + "'");
    if (ins.domain != domain)
      throw ValidationError("instance '" + ins.id + "' has domain '" + ins.domain +
                            "' but lives in domain set '" + domain + "'");
    if (must_have_label && !ins.label)
      throw ValidationError("instance '" + ins.id + "' in a labelled partition has no label");
    if (!must_have_label && ins.label)
      throw ValidationError("instance '" + ins.id + "' in an unlabelled partition has a label");
    for (std::size_t i = 1; i < ins.features.size(); ++i)
      if (ins.features[i].first <= ins.features[i - 1].first)
        throw ValidationError("instance '" + ins.id +
                              "': feature indices not strictly increasing");
    if (!ins.repr.empty() && !all_finite(ins.repr))
      throw ValidationError("instance '" + ins.id + "': non-finite representation");
  }
}

}  // namespace detail

// Enforces the corpus invariants: ids unique corpus-wide, labels present
// exactly on labelled partitions, feature indices strictly increasing,
// every source has a non-empty labelled partition.
inline void validate(const Corpus& corpus) {
  if (corpus.sources.empty()) throw ValidationError("corpus has no source domains");
  std::unordered_set<std::string> ids;
  for (const DomainSet& s : corpus.sources) {
    if (s.labelled.empty())
      throw ValidationError("empty labelled source partition (domain '" + s.domain + "')");
    detail::check_instances(s.labelled, s.domain, true, ids);
    detail::check_instances(s.unlabelled, s.domain, false, ids);
    if (!s.test.empty())
      throw ValidationError("source domain '" + s.domain + "' has a test partition");
  }
  if (!corpus.target.labelled.empty())
    throw ValidationError("target labelled partition must be empty in the UDA configuration");
  detail::check_instances(corpus.target.unlabelled, corpus.target.domain, false, ids);
  detail::check_instances(corpus.target.test, corpus.target.domain, true, ids);
  for (const DomainSet& s : corpus.sources)
    if (s.domain == corpus.target.domain)
      throw ValidationError("target domain '" + s.domain + "' also appears as a source");
}

// Seed-deterministic disjoint split; validation size = round(fraction * n).
// Both parts keep the original relative order.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> holdout_split(const std::vector<T>& items,
                                                        double fraction,
                                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ArgumentError("holdout fraction must lie in (0,1)");
  if (items.empty()) throw ArgumentError("holdout_split: empty input");
  const auto n = items.size();
  const auto val_n = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (val_n == 0 || val_n >= n)
    throw ValidationError("holdout_split cannot produce two non-empty parts (n=" +
                          std::to_string(n) + ", fraction=" + std::to_string(fraction) + ")");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.substream("holdout").shuffle(idx);
  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < val_n; ++i) in_val[idx[i]] = true;
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(n - val_n);
  out.second.reserve(val_n);
  for (std::size_t i = 0; i < n; ++i)
    (in_val[i] ? out.second : out.first).push_back(items[i]);
  return out;
}

}  // namespace msa
