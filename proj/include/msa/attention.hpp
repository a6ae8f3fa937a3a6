#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msa/adam.hpp"
#include "msa/corpus.hpp"
#include "msa/dense.hpp"
#include "msa/error.hpp"
#include "msa/pseudo.hpp"
#include "msa/rng.hpp"
#include "msa/word_vectors.hpp"

namespace msa {

struct AttentionTrainConfig {
  double learning_rate = 1e-3;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;  // 0 = full batch
  double validation_fraction = 0.1;
};

// One source instance's contribution to a prediction. `score` is the
// non-negative attention mass psi * theta; the sign convention is carried
// by the label.
struct Evidence {
  std::string instance_id;
  DomainId domain;
  Label label;
  double score;
};

struct Explanation {
  std::vector<DomainId> domains;
  std::vector<double> theta;  // per source domain, sums to 1
  std::vector<Evidence> evidences;  // ranked by score, descending
};

struct AttentionPrediction {
  double score;  // sigma of the signed attention sum, in (0,1)
  Label label;
  Explanation explanation;
};

struct AttentionTrainTrace {
  std::vector<double> train_loss;  // full training loss per epoch
  std::vector<double> validation_loss;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

// Instance-conditioned mixture over source domains. Each source domain i
// carries a learned embedding phi_i; a target instance attends over domains
// through softmax(x . phi_i) and over each domain's labelled instances
// through softmax(x . x'), and the prediction is the sigmoid of the
// attention-weighted sum of signed source labels.
class AttentionModel {
 public:
  AttentionModel() = default;

  static AttentionModel build(const Corpus& corpus, std::uint64_t seed) {
    AttentionModel m;
    if (corpus.sources.empty()) throw ArgumentError("attention model needs source domains");
    for (const DomainSet& s : corpus.sources) {
      if (s.labelled.empty())
        throw ValidationError("source domain '" + s.domain + "' has no labelled instances");
      const std::size_t d = s.labelled.front().repr.size();
      Matrix x(s.labelled.size(), d);
      Vec y(s.labelled.size());
      std::vector<std::string> ids(s.labelled.size());
      for (std::size_t j = 0; j < s.labelled.size(); ++j) {
        const Instance& ins = s.labelled[j];
        if (!ins.has_repr() || ins.repr.size() != d)
          throw ValidationError("instance '" + ins.id + "' has no/mismatched representation");
        std::copy(ins.repr.begin(), ins.repr.end(), x.row(j).begin());
        y[j] = label_sign(*ins.label);
        ids[j] = ins.id;
      }
      m.domains_.push_back(s.domain);
      m.source_x_.push_back(std::move(x));
      m.source_y_.push_back(std::move(y));
      m.source_ids_.push_back(std::move(ids));
    }
    m.dim_ = m.source_x_.front().cols;
    for (const Matrix& x : m.source_x_)
      if (x.cols != m.dim_)
        throw ValidationError("source domains disagree on representation dimension");
    m.init_phi(seed);
    return m;
  }

  std::size_t num_domains() const { return domains_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<DomainId>& domains() const { return domains_; }
  const Matrix& phi() const { return phi_; }
  Matrix& phi() { return phi_; }
  const Matrix& source_matrix(std::size_t i) const { return source_x_[i]; }
  const Vec& source_labels(std::size_t i) const { return source_y_[i]; }
  bool trained() const { return trained_; }

  // Xavier-scaled uniform init of the domain embeddings.
  void init_phi(std::uint64_t seed) {
    phi_ = Matrix(domains_.size(), dim_);
    Rng rng = Rng(seed).substream("attention/init");
    const double bound =
        std::sqrt(6.0 / static_cast<double>(dim_ + domains_.size()));
    for (double& v : phi_.data) v = rng.uniform(-bound, bound);
    trained_ = false;
  }

  // Softmax over one source domain's labelled instances of their dot
  // products with x; entries sum to 1.
  Vec relatedness(std::span<const double> x, std::size_t domain) const {
    check_dim(x);
    const Matrix& m = source_x_.at(domain);
    if (m.rows == 0) throw StateError("relatedness: domain has no labelled instances");
    Vec psi(m.rows);
    for (std::size_t j = 0; j < m.rows; ++j) psi[j] = dot(m.row(j), x);
    softmax_inplace(psi);
    return psi;
  }

  // Softmax over domains of x . phi_i.
  Vec domain_attention(std::span<const double> x) const {
    check_dim(x);
    Vec theta(domains_.size());
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = dot(phi_.row(i), x);
    softmax_inplace(theta);
    return theta;
  }

  double predict_score(std::span<const double> x) const {
    const Vec theta = domain_attention(x);
    double z = 0.0;
    for (std::size_t i = 0; i < domains_.size(); ++i)
      z += theta[i] * signed_relatedness_sum(x, i);
    return sigmoid(z);
  }

  AttentionPrediction predict(std::span<const double> x, std::size_t top_evidences = 5) const {
    const Vec theta = domain_attention(x);
    double z = 0.0;
    std::vector<Evidence> all;
    for (std::size_t i = 0; i < domains_.size(); ++i) {
      const Vec psi = relatedness(x, i);
      for (std::size_t j = 0; j < psi.size(); ++j) {
        z += source_y_[i][j] * psi[j] * theta[i];
        all.push_back({source_ids_[i][j], domains_[i],
                       source_y_[i][j] > 0.0 ? Label::positive : Label::negative,
                       psi[j] * theta[i]});
      }
    }
    std::sort(all.begin(), all.end(), [](const Evidence& a, const Evidence& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.domain != b.domain) return a.domain < b.domain;
      return a.instance_id < b.instance_id;
    });
    if (all.size() > top_evidences) all.resize(top_evidences);
    const double yhat = sigmoid(z);
    return {yhat, yhat >= 0.5 ? Label::positive : Label::negative,
            Explanation{domains_, theta, std::move(all)}};
  }

  AttentionPrediction predict(const Instance& ins, std::size_t top_evidences = 5) const {
    if (!ins.has_repr()) throw ArgumentError("predict: instance has no representation");
    return predict(ins.repr, top_evidences);
  }

  // Loss rescaling weights over the full pseudo-labelled training pool:
  // lambda(x) = max(sim,0) / sum over the pool. Negative cosines clamp to
  // zero so the weights stay non-negative; the normalization pool is the
  // whole training set, never the mini-batch.
  void set_training_pool(const std::vector<ScoredTarget>& pool) {
    if (pool.empty()) throw ArgumentError("set_training_pool: empty pool");
    double total = 0.0;
    for (const ScoredTarget& t : pool) total += std::max(t.sim, 0.0);
    if (total <= 0.0)
      throw StateError("set_training_pool: no positive similarity mass in the pool");
    lambda_.clear();
    for (const ScoredTarget& t : pool)
      lambda_[t.instance.id] = std::max(t.sim, 0.0) / total;
  }

  bool lambda_ready() const { return !lambda_.empty(); }

  double lambda(const std::string& id) const {
    const auto it = lambda_.find(id);
    if (it == lambda_.end())
      throw StateError("lambda not precomputed for instance '" + id + "'");
    return it->second;
  }

  // Rescaled cross-entropy over a batch; requires set_training_pool first.
  double loss(const std::vector<ScoredTarget>& batch) const {
    if (!lambda_ready()) throw StateError("loss: lambda weights not precomputed");
    double total = 0.0;
    for (const ScoredTarget& t : batch) {
      const double yhat = predict_score(t.instance.repr);
      total += ce_term(lambda(t.instance.id), label01(t.pseudo_label), yhat);
    }
    return total;
  }

  // Single weighted cross-entropy term with eps-clamped logs.
  static double ce_term(double lambda, double y01, double yhat) {
    constexpr double eps = 1e-12;
    const double p = std::min(1.0 - eps, std::max(eps, yhat));
    return -lambda * (y01 * std::log(p) + (1.0 - y01) * std::log(1.0 - p));
  }

  // Analytic d loss / d phi for a batch, same conventions as loss().
  std::pair<double, Matrix> loss_and_gradient(const std::vector<ScoredTarget>& batch) const {
    if (!lambda_ready()) throw StateError("loss: lambda weights not precomputed");
    Matrix grad(phi_.rows, phi_.cols);
    double total = 0.0;
    const std::size_t n_dom = domains_.size();
    for (const ScoredTarget& t : batch) {
      const Vec& x = t.instance.repr;
      const Vec theta = domain_attention(x);
      Vec a(n_dom);
      double z = 0.0;
      for (std::size_t i = 0; i < n_dom; ++i) {
        a[i] = signed_relatedness_sum(x, i);
        z += theta[i] * a[i];
      }
      const double yhat = sigmoid(z);
      const double lam = lambda(t.instance.id);
      total += ce_term(lam, label01(t.pseudo_label), yhat);
      // d z / d phi_k = theta_k (a_k - z) x;  d E / d z = lambda (yhat - y*)
      const double dz = lam * (yhat - label01(t.pseudo_label));
      for (std::size_t k = 0; k < n_dom; ++k)
        axpy(dz * theta[k] * (a[k] - z), x, grad.row(k));
    }
    return {total, std::move(grad)};
  }

  AttentionTrainTrace train(const std::vector<ScoredTarget>& train_set,
                            const AttentionTrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (train_set.empty()) throw ArgumentError("train: empty training set");
    set_training_pool(train_set);
    init_phi(cfg.seed);

    // Validation split per the holdout contract; tiny pools fall back to
    // monitoring the training loss itself.
    std::vector<ScoredTarget> train_part, val_part;
    try {
      auto [tr, va] = holdout_split(train_set, cfg.validation_fraction,
                                    Rng(cfg.seed).substream("attention/holdout").next());
      train_part = std::move(tr);
      val_part = std::move(va);
    } catch (const Error&) {
      train_part = train_set;
    }

    // psi does not depend on phi: cache the per-domain signed relatedness
    // sums once and train on those.
    const std::size_t n_dom = domains_.size();
    auto cache = [&](const std::vector<ScoredTarget>& set) {
      struct Row {
        const Vec* x;
        Vec a;
        double lam;
        double y01;
      };
      std::vector<Row> rows;
      rows.reserve(set.size());
      for (const ScoredTarget& t : set) {
        Row r{&t.instance.repr, Vec(n_dom), lambda(t.instance.id),
              label01(t.pseudo_label)};
        for (std::size_t i = 0; i < n_dom; ++i)
          r.a[i] = signed_relatedness_sum(*r.x, i);
        rows.push_back(std::move(r));
      }
      return rows;
    };
    const auto train_rows = cache(train_part);
    const auto val_rows = val_part.empty() ? cache(train_part) : cache(val_part);

    auto set_loss = [&](const auto& rows) {
      double total = 0.0;
      for (const auto& r : rows) {
        const Vec theta = domain_attention(*r.x);
        double z = 0.0;
        for (std::size_t i = 0; i < n_dom; ++i) z += theta[i] * r.a[i];
        total += ce_term(r.lam, r.y01, sigmoid(z));
      }
      return total;
    };

    Adam opt(phi_.data.size(), {.learning_rate = cfg.learning_rate});
    Rng root(cfg.seed);
    std::vector<std::size_t> order(train_rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch = cfg.batch_size == 0 ? train_rows.size() : cfg.batch_size;

    AttentionTrainTrace trace;
    Vec best_phi = phi_.data;
    double best_val = set_loss(val_rows);
    std::size_t best_epoch = 0;
    std::size_t since_best = 0;
    Matrix grad(n_dom, dim_);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
      Rng shuffler = root.substream("attention/shuffle", epoch);
      shuffler.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        std::fill(grad.data.begin(), grad.data.end(), 0.0);
        const std::size_t end = std::min(order.size(), start + batch);
        for (std::size_t idx = start; idx < end; ++idx) {
          const auto& r = train_rows[order[idx]];
          const Vec theta = domain_attention(*r.x);
          double z = 0.0;
          for (std::size_t i = 0; i < n_dom; ++i) z += theta[i] * r.a[i];
          const double dz = r.lam * (sigmoid(z) - r.y01);
          for (std::size_t k = 0; k < n_dom; ++k)
            axpy(dz * theta[k] * (r.a[k] - z), *r.x, grad.row(k));
        }
        opt.step(phi_.data, grad.data);
      }
      const double train_loss = set_loss(train_rows);
      const double val_loss = set_loss(val_rows);
      if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
        throw TrainError("attention training diverged (lr=" +
                         std::to_string(cfg.learning_rate) + ", epoch=" +
                         std::to_string(epoch) + ")");
      trace.train_loss.push_back(train_loss);
      trace.validation_loss.push_back(val_loss);
      trace.epochs_run = epoch + 1;
      if (val_loss < best_val) {
        best_val = val_loss;
        best_phi = phi_.data;
        best_epoch = epoch + 1;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
    phi_.data = best_phi;
    trace.best_epoch = best_epoch;
    trained_ = true;
    return trace;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(kAttentionMagic, 8);
    detail::write_u64_le(out, dim_);
    detail::write_u64_le(out, domains_.size());
    for (std::size_t i = 0; i < domains_.size(); ++i) {
      write_string(out, domains_[i]);
      detail::write_u64_le(out, source_x_[i].rows);
      for (const double v : source_x_[i].data) detail::write_f64_le(out, v);
      for (const double v : source_y_[i]) detail::write_f64_le(out, v);
      for (const std::string& id : source_ids_[i]) write_string(out, id);
    }
    for (const double v : phi_.data) detail::write_f64_le(out, v);
    out.put(trained_ ? 1 : 0);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
  }

  static AttentionModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kAttentionMagic, 8) != 0)
      throw ParseError("bad attention model magic", 1);
    AttentionModel m;
    m.dim_ = detail::read_u64_le(in);
    const std::uint64_t n = detail::read_u64_le(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      m.domains_.push_back(read_string(in));
      const std::uint64_t rows = detail::read_u64_le(in);
      Matrix x(rows, m.dim_);
      for (double& v : x.data) v = detail::read_f64_le(in);
      Vec y(rows);
      for (double& v : y) v = detail::read_f64_le(in);
      std::vector<std::string> ids(rows);
      for (std::string& id : ids) id = read_string(in);
      m.source_x_.push_back(std::move(x));
      m.source_y_.push_back(std::move(y));
      m.source_ids_.push_back(std::move(ids));
    }
    m.phi_ = Matrix(n, m.dim_);
    for (double& v : m.phi_.data) v = detail::read_f64_le(in);
    m.trained_ = in.get() == 1;
    if (!in) throw ParseError("truncated attention model", 1);
    return m;
  }

  // Test hook: models assembled from raw parts.
  static AttentionModel from_parts(std::vector<DomainId> domains, std::vector<Matrix> xs,
                                   std::vector<Vec> ys, std::vector<std::vector<std::string>> ids,
                                   std::uint64_t seed) {
    AttentionModel m;
    m.domains_ = std::move(domains);
    m.source_x_ = std::move(xs);
    m.source_y_ = std::move(ys);
    m.source_ids_ = std::move(ids);
    if (m.source_x_.empty()) throw ArgumentError("from_parts: no domains");
    m.dim_ = m.source_x_.front().cols;
    m.init_phi(seed);
    return m;
  }

 private:
  inline static constexpr char kAttentionMagic[8] = {'M', 'S', 'A', 'A', 'T', 'T', 'N', '1'};

  static void write_string(std::ostream& out, const std::string& s) {
    detail::write_u64_le(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  static std::string read_string(std::istream& in) {
    const std::uint64_t len = detail::read_u64_le(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
  }

  void check_dim(std::span<const double> x) const {
    if (x.size() != dim_)
      throw ArgumentError("attention: representation dimension " +
                          std::to_string(x.size()) + " != model dimension " +
                          std::to_string(dim_));
  }

  // sum_j y_j psi_j for one domain; psi does not depend on phi.
  double signed_relatedness_sum(std::span<const double> x, std::size_t i) const {
    const Vec psi = relatedness(x, i);
    return dot(psi, source_y_[i]);
  }

  std::vector<DomainId> domains_;
  std::vector<Matrix> source_x_;
  std::vector<Vec> source_y_;  // signed labels, -1 or +1
  std::vector<std::vector<std::string>> source_ids_;
  Matrix phi_;
  std::size_t dim_ = 0;
  bool trained_ = false;
  std::unordered_map<std::string, double> lambda_;
};

}  // namespace msa
