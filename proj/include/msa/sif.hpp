#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "msa/corpus.hpp"
#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/word_vectors.hpp"

namespace msa {

// Smoothed-inverse-frequency document representer: documents embed as the
// average of word vectors weighted by a/(a + p(w)), optionally with the
// corpus' dominant principal component projected out.
class SifRepresenter {
 public:
  SifRepresenter() = default;

  double a() const { return a_; }
  std::size_t dim() const { return vectors_ ? vectors_->dw : 0; }
  bool fitted() const { return static_cast<bool>(vectors_); }
  const std::unordered_map<std::string, double>& word_weights() const { return weights_; }
  const Vec& principal_component() const { return pc_; }
  bool removes_pc() const { return !pc_.empty(); }

  double weight(const std::string& word) const {
    const auto it = weights_.find(word);
    return it == weights_.end() ? 1.0 : it->second;  // unseen word: p(w)=0
  }

  // Weighted average over in-vocabulary tokens; all-OOV documents embed to
  // the zero vector (callers count those via embed_documents).
  Vec embed(const Instance& ins) const {
    if (!fitted()) throw StateError("SIF representer is not fitted");
    Vec v(dim(), 0.0);
    std::size_t hits = 0;
    for (const std::string& tok : ins.tokens) {
      const float* row = vectors_->find(tok);
      if (!row) continue;
      const double w = weight(tok);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += w * static_cast<double>(row[k]);
      ++hits;
    }
    if (hits == 0) return v;
    scale(v, 1.0 / static_cast<double>(hits));
    if (!pc_.empty()) {
      const double proj = dot(v, pc_);
      axpy(-proj, pc_, v);
    }
    return v;
  }

  friend SifRepresenter fit_sif(const Corpus&, std::shared_ptr<const WordVectors>,
                                double, bool);

 private:
  std::shared_ptr<const WordVectors> vectors_;
  std::unordered_map<std::string, double> weights_;  // a/(a + p(w))
  double a_ = 1e-3;
  Vec pc_;  // unit vector, empty when removal is off
};

namespace detail {

// Dominant right singular direction of the stacked document vectors, by
// power iteration on X^T X. Sign fixed by the first non-zero component.
inline Vec dominant_component(const std::vector<Vec>& docs, std::size_t d) {
  Matrix gram(d, d);
  for (const Vec& x : docs)
    for (std::size_t i = 0; i < d; ++i) {
      if (x[i] == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) gram[i][j] += x[i] * x[j];
    }
  Vec v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  Vec next(d);
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < d; ++i) next[i] = dot(gram.row(i), v);
    const double n = norm2(next);
    if (n == 0.0) break;
    scale(next, 1.0 / n);
    double close = std::abs(dot(next, v));
    v = next;
    if (1.0 - close < 1e-12) break;
  }
  for (const double c : v) {
    if (c == 0.0) continue;
    if (c < 0.0) scale(v, -1.0);
    break;
  }
  return v;
}

template <typename Fn>
void for_each_training_instance(const Corpus& corpus, Fn&& fn) {
  for (const DomainSet& s : corpus.sources) {
    for (const Instance& ins : s.labelled) fn(ins);
    for (const Instance& ins : s.unlabelled) fn(ins);
  }
  for (const Instance& ins : corpus.target.unlabelled) fn(ins);
}

}  // namespace detail

// Word frequencies p(w) are estimated over the labelled and unlabelled text
// of every domain (unlabelled text is plentiful and the statistic is
// label-free); test documents never enter the fit.
inline SifRepresenter fit_sif(const Corpus& corpus,
                              std::shared_ptr<const WordVectors> vectors,
                              double a = 1e-3, bool remove_pc = true) {
  if (!vectors || vectors->size() == 0) throw ArgumentError("fit_sif: no word vectors");
  if (!(a > 0.0)) throw ArgumentError("fit_sif: smoothing constant must be positive");

  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  bool overlap = false;
  detail::for_each_training_instance(corpus, [&](const Instance& ins) {
    for (const std::string& tok : ins.tokens) {
      ++counts[tok];
      ++total;
      if (!overlap && vectors->find(tok)) overlap = true;
    }
  });
  if (!overlap)
    throw TrainError("fit_sif: corpus vocabulary does not overlap the word vectors");

  SifRepresenter rep;
  rep.vectors_ = std::move(vectors);
  rep.a_ = a;
  rep.weights_.reserve(counts.size());
  for (const auto& [word, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    rep.weights_.emplace(word, a / (a + p));
  }

  if (remove_pc) {
    std::vector<Vec> docs;
    detail::for_each_training_instance(corpus, [&](const Instance& ins) {
      Vec v = rep.embed(ins);
      if (norm2(v) > 0.0) docs.push_back(std::move(v));
    });
    if (!docs.empty()) rep.pc_ = detail::dominant_component(docs, rep.dim());
  }
  return rep;
}

// Applies a fitted representer to every instance; returns the number of
// documents that had no in-vocabulary token (embedded as the zero vector).
template <typename Representer>
std::size_t embed_documents(const Representer& rep, std::vector<Instance>& instances) {
  if (!rep.fitted()) throw StateError("representer is not fitted");
  std::size_t oov_docs = 0;
  for (Instance& ins : instances) {
    ins.repr = rep.embed(ins);
    if (norm2(ins.repr) == 0.0) ++oov_docs;
  }
  return oov_docs;
}

template <typename Representer>
std::size_t embed_corpus(const Representer& rep, Corpus& corpus, std::string kind) {
  std::size_t oov = 0;
  for (DomainSet& s : corpus.sources) {
    oov += embed_documents(rep, s.labelled);
    oov += embed_documents(rep, s.unlabelled);
  }
  oov += embed_documents(rep, corpus.target.unlabelled);
  oov += embed_documents(rep, corpus.target.test);
  corpus.meta.representation = std::move(kind);
  corpus.meta.dim = rep.dim();
  return oov;
}

}  // namespace msa
