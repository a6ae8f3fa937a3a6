#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "msa/corpus.hpp"
#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/word_vectors.hpp"

namespace msa {

struct Prediction {
  Label label;
  double confidence;  // probability of the predicted class
};

// L2-regularized binary logistic regression over dense representations.
// Trained full-batch with a deterministic quasi-Newton method, so refitting
// the same data reproduces the same parameters bit for bit.
class ProbClassifier {
 public:
  ProbClassifier() = default;
  ProbClassifier(Vec weights, double bias, double reg)
      : w_(std::move(weights)), b_(bias), reg_(reg) {}

  std::size_t dim() const { return w_.size(); }
  const Vec& weights() const { return w_; }
  double bias() const { return b_; }
  double regularization() const { return reg_; }

  double decision(std::span<const double> x) const {
    if (x.size() != w_.size())
      throw ArgumentError("predict: representation dimension " +
                          std::to_string(x.size()) + " != model dimension " +
                          std::to_string(w_.size()));
    return dot(w_, x) + b_;
  }

  double prob_positive(std::span<const double> x) const { return sigmoid(decision(x)); }

  Prediction predict(std::span<const double> x) const {
    const double p = prob_positive(x);
    return p >= 0.5 ? Prediction{Label::positive, p} : Prediction{Label::negative, 1.0 - p};
  }

  Prediction predict(const Instance& ins) const {
    if (!ins.has_repr()) throw ArgumentError("predict: instance has no representation");
    return predict(ins.repr);
  }

 private:
  Vec w_;
  double b_ = 0.0;
  double reg_ = 1.0;
};

namespace detail {

// Limited-memory BFGS with Armijo backtracking. Deterministic: fixed zero
// start, fixed history, fixed step schedule.
template <typename Objective>
void lbfgs_minimize(Vec& x, Objective&& fg, double tol = 1e-6, int max_iter = 500) {
  const std::size_t n = x.size();
  Vec g(n), x_new(n), g_new(n);
  double f = fg(x, g);

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  constexpr std::size_t history = 10;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (norm2(g) < tol) return;

    // two-loop recursion
    Vec q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * dot(s_hist[i], q);
      axpy(-alpha[i], y_hist[i], q);
    }
    if (!s_hist.empty()) {
      const double gamma =
          dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      scale(q, gamma);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], q);
      axpy(alpha[i] - beta, s_hist[i], q);
    }
    for (double& v : q) v = -v;  // descent direction

    double slope = dot(g, q);
    if (slope >= 0.0) {  // fall back to steepest descent
      for (std::size_t i = 0; i < n; ++i) q[i] = -g[i];
      slope = -dot(g, g);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * q[i];
      f_new = fg(x_new, g_new);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return;  // line search exhausted: gradient is numerically flat

    Vec s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    g = g_new;
    f = f_new;
  }
}

}  // namespace detail

// Objective: mean logistic loss + (reg / 2n) * ||w||^2, bias unregularized.
// The seed is accepted for interface uniformity; the optimizer is
// deterministic from a zero start and does not consume it.
inline ProbClassifier train_logistic(const std::vector<Instance>& instances, double reg = 1.0,
                                     std::uint64_t /*seed*/ = 0) {
  if (instances.empty()) throw TrainError("train: empty training set");
  std::size_t d = 0;
  std::size_t pos = 0, neg = 0;
  for (const Instance& ins : instances) {
    if (!ins.has_repr()) throw TrainError("train: instance '" + ins.id + "' has no representation");
    if (!ins.label) throw TrainError("train: instance '" + ins.id + "' has no label");
    if (d == 0)
      d = ins.repr.size();
    else if (ins.repr.size() != d)
      throw TrainError("train: inconsistent representation dimensions");
    (*ins.label == Label::positive ? pos : neg) += 1;
  }
  if (pos == 0) throw TrainError("train: training set has no positive instances");
  if (neg == 0) throw TrainError("train: training set has no negative instances");

  const double inv_n = 1.0 / static_cast<double>(instances.size());
  Vec params(d + 1, 0.0);  // weights then bias
  auto objective = [&](const Vec& p, Vec& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const std::span<const double> w(p.data(), d);
    const double b = p[d];
    double loss = 0.0;
    for (const Instance& ins : instances) {
      const double ysign = label_sign(*ins.label);
      const double m = -ysign * (dot(w, ins.repr) + b);
      // log(1 + e^m), stable on both tails
      loss += m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      const double coeff = -ysign * sigmoid(m) * inv_n;
      axpy(coeff, ins.repr, std::span<double>(grad.data(), d));
      grad[d] += coeff;
    }
    loss *= inv_n;
    for (std::size_t i = 0; i < d; ++i) {
      loss += 0.5 * reg * inv_n * p[i] * p[i];
      grad[i] += reg * inv_n * p[i];
    }
    return loss;
  };
  detail::lbfgs_minimize(params, objective);
  Vec w(params.begin(), params.begin() + d);
  return ProbClassifier(std::move(w), params[d], reg);
}

inline ProbClassifier train_logistic(const std::vector<const Instance*>& instances,
                                     double reg = 1.0, std::uint64_t seed = 0) {
  std::vector<Instance> copy;
  copy.reserve(instances.size());
  for (const Instance* p : instances) copy.push_back(*p);
  return train_logistic(copy, reg, seed);
}

// Ensemble that labels an instance by the mode of the members' predicted
// labels. Even splits go to the class with the higher mean probability over
// all members; the reported confidence is the mean probability the members
// assign to the winning class.
class MajorityVoter {
 public:
  MajorityVoter() = default;
  explicit MajorityVoter(std::vector<ProbClassifier> members)
      : members_(std::move(members)) {}

  const std::vector<ProbClassifier>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

  Prediction vote(std::span<const double> x) const {
    if (members_.empty()) throw StateError("vote: voter has no members");
    std::size_t pos_votes = 0;
    double mean_pos = 0.0;
    for (const ProbClassifier& m : members_) {
      const double p = m.prob_positive(x);
      mean_pos += p;
      if (p >= 0.5) ++pos_votes;
    }
    mean_pos /= static_cast<double>(members_.size());
    const std::size_t neg_votes = members_.size() - pos_votes;
    Label winner;
    if (pos_votes != neg_votes)
      winner = pos_votes > neg_votes ? Label::positive : Label::negative;
    else
      winner = mean_pos >= 0.5 ? Label::positive : Label::negative;
    const double conf = winner == Label::positive ? mean_pos : 1.0 - mean_pos;
    return {winner, conf};
  }

  Prediction vote(const Instance& ins) const {
    if (!ins.has_repr()) throw ArgumentError("vote: instance has no representation");
    return vote(ins.repr);
  }

 private:
  std::vector<ProbClassifier> members_;
};

// --- serialization: versioned binary (magic, d, weights, bias, reg) -------

inline constexpr char kClassifierMagic[8] = {'M', 'S', 'A', 'L', 'O', 'G', 'R', '1'};
inline constexpr char kVoterMagic[8] = {'M', 'S', 'A', 'V', 'O', 'T', 'E', '1'};

inline void write_classifier(std::ostream& out, const ProbClassifier& m) {
  out.write(kClassifierMagic, 8);
  detail::write_u64_le(out, m.dim());
  for (const double v : m.weights()) detail::write_f64_le(out, v);
  detail::write_f64_le(out, m.bias());
  detail::write_f64_le(out, m.regularization());
}

inline ProbClassifier read_classifier(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kClassifierMagic, 8) != 0)
    throw ParseError("bad classifier magic", 1);
  const std::uint64_t d = detail::read_u64_le(in);
  Vec w(d);
  for (double& v : w) v = detail::read_f64_le(in);
  const double bias = detail::read_f64_le(in);
  const double reg = detail::read_f64_le(in);
  if (!in) throw ParseError("truncated classifier", 1);
  return ProbClassifier(std::move(w), bias, reg);
}

inline void save_classifier(const ProbClassifier& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_classifier(out, m);
}

inline ProbClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_classifier(in);
}

inline void save_voter(const MajorityVoter& voter, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kVoterMagic, 8);
  detail::write_u64_le(out, voter.size());
  for (const ProbClassifier& m : voter.members()) write_classifier(out, m);
}

inline MajorityVoter load_voter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kVoterMagic, 8) != 0)
    throw ParseError("bad voter magic", 1);
  const std::uint64_t n = detail::read_u64_le(in);
  std::vector<ProbClassifier> members;
  members.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) members.push_back(read_classifier(in));
  return MajorityVoter(std::move(members));
}

}  // namespace msa
