#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "msa/adam.hpp"
#include "msa/corpus.hpp"
#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/rng.hpp"

namespace msa {

inline constexpr std::size_t kTfidfVocabCap = 5000;
inline constexpr std::size_t kEncoderHidden = 500;

// Sparse tf-idf features: top-document-frequency vocabulary capped at 5000
// terms, sublinear tf, L2-normalized rows. A pre-featurized corpus passes
// its vectors straight through.
class TfidfVectorizer {
 public:
  static TfidfVectorizer fit(const Corpus& corpus) {
    TfidfVectorizer v;
    if (corpus.meta.representation == "none" && has_text(corpus)) {
      std::map<std::string, std::size_t> df;
      std::size_t n_docs = 0;
      for_each_fit_doc(corpus, [&](const Instance& ins) {
        ++n_docs;
        std::unordered_set<std::string> seen;
        for (const std::string& t : ins.tokens)
          if (seen.insert(t).second) ++df[t];
      });
      std::vector<std::pair<std::string, std::size_t>> terms(df.begin(), df.end());
      std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      if (terms.size() > kTfidfVocabCap) terms.resize(kTfidfVocabCap);
      v.idf_.reserve(terms.size());
      for (std::uint32_t i = 0; i < terms.size(); ++i) {
        v.vocab_.emplace(terms[i].first, i);
        v.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + terms[i].second)) + 1.0);
      }
      v.input_dim_ = terms.size();
      v.passthrough_ = false;
    } else {
      // featurized input: dimension from the largest feature index present
      std::uint32_t max_idx = 0;
      bool any = false;
      for_each_fit_doc(corpus, [&](const Instance& ins) {
        for (const auto& [idx, w] : ins.features) {
          max_idx = std::max(max_idx, idx);
          any = true;
        }
      });
      if (!any) throw TrainError("tfidf fit: corpus has neither text nor features");
      v.input_dim_ = static_cast<std::size_t>(max_idx) + 1;
      v.passthrough_ = true;
    }
    return v;
  }

  std::size_t input_dim() const { return input_dim_; }
  bool passthrough() const { return passthrough_; }
  const std::unordered_map<std::string, std::uint32_t>& vocabulary() const { return vocab_; }
  double idf(std::uint32_t term) const { return idf_.at(term); }

  SparseVec vectorize(const Instance& ins) const {
    if (passthrough_) return ins.features;
    std::map<std::uint32_t, double> counts;
    for (const std::string& t : ins.tokens) {
      const auto it = vocab_.find(t);
      if (it != vocab_.end()) counts[it->second] += 1.0;
    }
    SparseVec out;
    out.reserve(counts.size());
    double sq = 0.0;
    for (const auto& [idx, c] : counts) {
      const double w = (1.0 + std::log(c)) * idf_[idx];
      out.emplace_back(idx, w);
      sq += w * w;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& [idx, w] : out) w *= inv;
    }
    return out;
  }

 private:
  static bool has_text(const Corpus& corpus) {
    for (const DomainSet& s : corpus.sources)
      for (const Instance& ins : s.labelled)
        if (!ins.tokens.empty()) return true;
    return false;
  }

  template <typename Fn>
  static void for_each_fit_doc(const Corpus& corpus, Fn&& fn) {
    for (const DomainSet& s : corpus.sources) {
      for (const Instance& ins : s.labelled) fn(ins);
      for (const Instance& ins : s.unlabelled) fn(ins);
    }
    for (const Instance& ins : corpus.target.unlabelled) fn(ins);
  }

  std::unordered_map<std::string, std::uint32_t> vocab_;
  std::vector<double> idf_;
  std::size_t input_dim_ = 0;
  bool passthrough_ = true;
};

// Feed-forward encoder, input -> 500 -> 500 -> 500 -> 500. The first three
// layers are ReLU, the final output layer is linear and serves as the
// instance representation. During fitting a logistic head sits on top so
// the stack trains as a union-of-sources classifier; afterwards the head is
// dropped and the weights freeze.
class MlpClassifier {
 public:
  MlpClassifier() = default;

  MlpClassifier(std::size_t input_dim, const Rng& seed_rng) {
    std::vector<std::size_t> dims{input_dim, kEncoderHidden, kEncoderHidden,
                                  kEncoderHidden, kEncoderHidden};
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      Matrix w(dims[l + 1], dims[l]);
      Rng r = seed_rng.substream("mlp/init", l);
      const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
      for (double& x : w.data) x = r.uniform(-bound, bound);
      weights_.push_back(std::move(w));
      biases_.emplace_back(dims[l + 1], 0.0);
    }
    Rng r = seed_rng.substream("mlp/init/head");
    const double bound = std::sqrt(6.0 / static_cast<double>(kEncoderHidden + 1));
    head_w_.resize(kEncoderHidden);
    for (double& x : head_w_) x = r.uniform(-bound, bound);
    head_b_ = 0.0;
  }

  std::size_t input_dim() const { return weights_.empty() ? 0 : weights_[0].cols; }
  std::size_t output_dim() const { return weights_.empty() ? 0 : weights_.back().rows; }

  Vec representation(const SparseVec& x) const {
    std::vector<Vec> acts;
    return forward(x, acts);
  }

  double predict_prob(const SparseVec& x) const {
    std::vector<Vec> acts;
    const Vec r = forward(x, acts);
    return sigmoid(dot(r, head_w_) + head_b_);
  }

  struct Example {
    SparseVec x;
    double y01;
  };

  double loss(const std::vector<Example>& batch) const {
    double total = 0.0;
    for (const Example& ex : batch) {
      const double p = clamp_prob(predict_prob(ex.x));
      total += -(ex.y01 * std::log(p) + (1.0 - ex.y01) * std::log(1.0 - p));
    }
    return total / static_cast<double>(batch.size());
  }

  // Mean binary cross-entropy and its gradient in flat-parameter order
  // (W0,b0,...,W3,b3,head_w,head_b).
  double loss_and_gradient(const std::vector<Example>& batch, Vec& grad) const {
    grad.assign(num_params(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    const std::size_t L = weights_.size();
    for (const Example& ex : batch) {
      std::vector<Vec> pre;  // pre-activations z1..zL
      const Vec repr = forward(ex.x, pre);
      const double s = dot(repr, head_w_) + head_b_;
      const double p = clamp_prob(sigmoid(s));
      total += -(ex.y01 * std::log(p) + (1.0 - ex.y01) * std::log(1.0 - p));

      const double ds = (p - ex.y01) * inv_b;
      std::size_t off = head_offset();
      for (std::size_t i = 0; i < head_w_.size(); ++i) grad[off + i] += ds * repr[i];
      grad[off + head_w_.size()] += ds;

      Vec delta(head_w_.size());
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = ds * head_w_[i];
      for (std::size_t l = L; l-- > 0;) {
        if (l + 1 != L)  // hidden layers are ReLU; the output layer is linear
          for (std::size_t i = 0; i < delta.size(); ++i)
            if (pre[l][i] <= 0.0) delta[i] = 0.0;
        const std::size_t w_off = layer_offset(l);
        const std::size_t b_off = w_off + weights_[l].data.size();
        if (l == 0) {
          for (std::size_t i = 0; i < delta.size(); ++i) {
            if (delta[i] == 0.0) continue;
            for (const auto& [idx, xv] : ex.x)
              grad[w_off + i * weights_[0].cols + idx] += delta[i] * xv;
          }
        } else {
          const Vec h = activated(pre[l - 1], l - 1 + 1 != L);
          for (std::size_t i = 0; i < delta.size(); ++i) {
            if (delta[i] == 0.0) continue;
            const std::size_t row = w_off + i * weights_[l].cols;
            for (std::size_t j = 0; j < h.size(); ++j) grad[row + j] += delta[i] * h[j];
          }
        }
        for (std::size_t i = 0; i < delta.size(); ++i) grad[b_off + i] += delta[i];
        if (l > 0) {
          Vec prev(weights_[l].cols, 0.0);
          for (std::size_t i = 0; i < delta.size(); ++i) {
            if (delta[i] == 0.0) continue;
            const double* wrow = weights_[l][i];
            for (std::size_t j = 0; j < prev.size(); ++j) prev[j] += delta[i] * wrow[j];
          }
          delta = std::move(prev);
        }
      }
    }
    return total * inv_b;
  }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += weights_[l].data.size() + biases_[l].size();
    return n + head_w_.size() + 1;
  }

  Vec flat_params() const {
    Vec out;
    out.reserve(num_params());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.insert(out.end(), weights_[l].data.begin(), weights_[l].data.end());
      out.insert(out.end(), biases_[l].begin(), biases_[l].end());
    }
    out.insert(out.end(), head_w_.begin(), head_w_.end());
    out.push_back(head_b_);
    return out;
  }

  void set_flat_params(const Vec& p) {
    if (p.size() != num_params()) throw ArgumentError("parameter vector size mismatch");
    std::size_t off = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      std::copy_n(p.begin() + off, weights_[l].data.size(), weights_[l].data.begin());
      off += weights_[l].data.size();
      std::copy_n(p.begin() + off, biases_[l].size(), biases_[l].begin());
      off += biases_[l].size();
    }
    std::copy_n(p.begin() + off, head_w_.size(), head_w_.begin());
    off += head_w_.size();
    head_b_ = p[off];
  }

 private:
  static double clamp_prob(double p) {
    constexpr double eps = 1e-12;
    return std::min(1.0 - eps, std::max(eps, p));
  }

  static Vec activated(const Vec& pre, bool relu) {
    Vec h = pre;
    if (relu)
      for (double& v : h) v = std::max(0.0, v);
    return h;
  }

  std::size_t layer_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += weights_[l].data.size() + biases_[l].size();
    return off;
  }

  std::size_t head_offset() const { return layer_offset(weights_.size()); }

  Vec forward(const SparseVec& x, std::vector<Vec>& pre_out) const {
    if (weights_.empty()) throw StateError("encoder is not fitted");
    pre_out.clear();
    Vec h;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Vec z = biases_[l];
      if (l == 0) {
        for (const auto& [idx, xv] : x) {
          if (idx >= weights_[0].cols) continue;
          for (std::size_t i = 0; i < z.size(); ++i)
            z[i] += weights_[0][i][idx] * xv;
        }
      } else {
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += dot(weights_[l].row(i), h);
      }
      pre_out.push_back(z);
      if (l + 1 < weights_.size())
        for (double& v : z) v = std::max(0.0, v);
      h = std::move(z);
    }
    return h;
  }

  std::vector<Matrix> weights_;
  std::vector<Vec> biases_;
  Vec head_w_;
  double head_b_ = 0.0;
};

class TfidfEncoder {
 public:
  TfidfEncoder() = default;
  TfidfEncoder(TfidfVectorizer v, MlpClassifier net)
      : vectorizer_(std::move(v)), net_(std::move(net)) {}

  bool fitted() const { return net_.input_dim() != 0; }
  std::size_t dim() const { return net_.output_dim(); }
  const TfidfVectorizer& vectorizer() const { return vectorizer_; }
  const MlpClassifier& network() const { return net_; }

  // Documents with no in-vocabulary term embed to the zero vector, like the
  // SIF path, rather than to the encoder's bias response.
  Vec embed(const Instance& ins) const {
    if (!fitted()) throw StateError("tf-idf encoder is not fitted");
    const SparseVec x = vectorizer_.vectorize(ins);
    if (x.empty()) return Vec(dim(), 0.0);
    return net_.representation(x);
  }

 private:
  TfidfVectorizer vectorizer_;
  MlpClassifier net_;
};

struct TfidfFitResult {
  TfidfEncoder encoder;
  std::vector<double> epoch_loss;  // full training loss at each epoch end
  bool vocab_truncated = false;    // vocabulary smaller than the 5000 cap
};

struct TfidfFitConfig {
  std::uint64_t seed = 0;
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
};

inline TfidfFitResult fit_tfidf_encoder(const Corpus& corpus, const TfidfFitConfig& cfg) {
  TfidfVectorizer vec = TfidfVectorizer::fit(corpus);

  std::vector<MlpClassifier::Example> data;
  for (const DomainSet& s : corpus.sources)
    for (const Instance& ins : s.labelled)
      data.push_back({vec.vectorize(ins), label01(*ins.label)});
  if (data.empty()) throw TrainError("tfidf fit: no labelled source instances");

  Rng root(cfg.seed);
  MlpClassifier net(vec.input_dim(), root);

  Vec params = net.flat_params();
  Adam opt(params.size(), {.learning_rate = cfg.learning_rate});
  Vec grad;
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TfidfFitResult result;
  result.vocab_truncated = !vec.passthrough() && vec.input_dim() < kTfidfVocabCap;
  std::vector<MlpClassifier::Example> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffler = root.substream("tfidf/shuffle", epoch);
    shuffler.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      net.loss_and_gradient(batch, grad);
      opt.step(params, grad);
      net.set_flat_params(params);
    }
    result.epoch_loss.push_back(net.loss(data));
  }
  result.encoder = TfidfEncoder(std::move(vec), std::move(net));
  return result;
}

}  // namespace msa
