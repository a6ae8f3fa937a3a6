// Acceptance suite: one line per criterion, exit code 0 only when every
// non-skipped criterion passes within its runtime budget.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

#include "msa/experiment.hpp"
#include "msa/synthetic.hpp"
#include "oracles.hpp"

using namespace msa;

namespace {

int g_failures = 0;

void run_criterion(int number, const std::string& name, double budget_seconds,
                   const std::function<std::optional<std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::string> failure;
  try {
    failure = body();
  } catch (const std::exception& e) {
    failure = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!failure && elapsed > budget_seconds)
    failure = "runtime " + std::to_string(elapsed) + "s exceeds budget " +
              std::to_string(budget_seconds) + "s";
  if (failure) {
    ++g_failures;
    std::printf("[FAIL] criterion %d: %s (%.2fs) — %s\n", number, name.c_str(), elapsed,
                failure->c_str());
  } else {
    std::printf("[PASS] criterion %d: %s (%.2fs)\n", number, name.c_str(), elapsed);
  }
  std::fflush(stdout);
}

void skip_criterion(int number, const std::string& name, const std::string& why) {
  std::printf("[SKIP] criterion %d: %s — %s\n", number, name.c_str(), why.c_str());
  std::fflush(stdout);
}

std::vector<ScoredTarget> fixture_pool(const Corpus& corpus, std::uint64_t seed) {
  SelfTrainConfig cfg{.tau = 0.8, .reg = 1.0, .seed = seed};
  const SelfTrainResult st = run_algorithm1(corpus, cfg);
  const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
  return score_targets(st.voter, corpus.target.unlabelled, centroid);
}

}  // namespace

// 1. Normalization: theta and psi sum to 1 (1e-6) on 1000 random vectors;
//    lambda over the training pool sums to 1 (1e-9).
static std::optional<std::string> criterion_normalization() {
  const Corpus corpus = make_synthetic_corpus({});
  AttentionModel model = AttentionModel::build(corpus, 2026);
  Rng rng(404);
  for (int i = 0; i < 1000; ++i) {
    Vec x(model.dim());
    for (double& v : x) v = rng.uniform(-2.5, 2.5);
    const Vec theta = model.domain_attention(x);
    double ts = 0.0;
    for (const double t : theta) ts += t;
    if (std::abs(ts - 1.0) > 1e-6)
      return "sum theta = " + std::to_string(ts) + " at vector " + std::to_string(i);
    for (std::size_t dom = 0; dom < model.num_domains(); ++dom) {
      const Vec psi = model.relatedness(x, dom);
      double ps = 0.0;
      for (const double p : psi) ps += p;
      if (std::abs(ps - 1.0) > 1e-6)
        return "sum psi[" + std::to_string(dom) + "] = " + std::to_string(ps);
    }
  }
  const auto pool = fixture_pool(corpus, 2026);
  const auto selected = select(pool, {SelectionKind::sim_only, SortOrder::dsc, 2000});
  model.set_training_pool(selected);
  double lsum = 0.0;
  for (const ScoredTarget& t : selected) lsum += model.lambda(t.instance.id);
  if (std::abs(lsum - 1.0) > 1e-9) return "sum lambda = " + std::to_string(lsum);
  return std::nullopt;
}

// 2. Vectorized prediction equals a naive double-loop oracle to 1e-12 on
//    100 random small fixtures.
static std::optional<std::string> criterion_oracle_equivalence() {
  Rng rng(505);
  for (int fixture = 0; fixture < 100; ++fixture) {
    const std::size_t n_dom = 1 + rng.below(4);
    const std::size_t d = 2 + rng.below(7);
    std::vector<DomainId> domains;
    std::vector<Matrix> xs;
    std::vector<Vec> ys;
    std::vector<std::vector<std::string>> ids;
    for (std::size_t i = 0; i < n_dom; ++i) {
      const std::size_t n = 1 + rng.below(10);
      Matrix m(n, d);
      for (double& v : m.data) v = rng.uniform(-2, 2);
      Vec y(n);
      for (double& v : y) v = rng.bernoulli(0.5) ? 1.0 : -1.0;
      std::vector<std::string> id_list;
      for (std::size_t j = 0; j < n; ++j)
        id_list.push_back("f" + std::to_string(fixture) + "-" + std::to_string(i) + "-" +
                          std::to_string(j));
      domains.push_back("D" + std::to_string(i));
      xs.push_back(std::move(m));
      ys.push_back(std::move(y));
      ids.push_back(std::move(id_list));
    }
    AttentionModel model = AttentionModel::from_parts(domains, xs, ys, ids, rng.next());
    const oracle::ModelParts parts = oracle::dissect(model);
    for (int probe = 0; probe < 5; ++probe) {
      Vec x(d);
      for (double& v : x) v = rng.uniform(-2, 2);
      const double vectorized = model.predict_score(x);
      const double naive =
          oracle::naive_attention_predict(parts.source_x, parts.source_y, parts.phi, x);
      if (std::abs(vectorized - naive) > 1e-12)
        return "fixture " + std::to_string(fixture) + ": |" + std::to_string(vectorized) +
               " - " + std::to_string(naive) + "| > 1e-12";
    }
  }
  return std::nullopt;
}

// 3. Analytic dE/dphi matches central finite differences (rel. 1e-4).
static std::optional<std::string> criterion_gradient_check() {
  Rng rng(606);
  AttentionModel model = AttentionModel::from_parts(
      {"A", "B"},
      {[&] {
         Matrix m(3, 4);
         for (double& v : m.data) v = rng.uniform(-1.5, 1.5);
         return m;
       }(),
       [&] {
         Matrix m(3, 4);
         for (double& v : m.data) v = rng.uniform(-1.5, 1.5);
         return m;
       }()},
      {{1.0, -1.0, 1.0}, {-1.0, 1.0, -1.0}},
      {{"a0", "a1", "a2"}, {"b0", "b1", "b2"}}, rng.next());
  std::vector<ScoredTarget> batch;
  for (int i = 0; i < 6; ++i) {
    ScoredTarget t;
    Vec x(4);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    t.instance = oracle::make_instance("t" + std::to_string(i), "t", std::move(x));
    t.pseudo_label = i % 2 ? Label::negative : Label::positive;
    t.sim = rng.uniform(0.1, 1.0);
    batch.push_back(std::move(t));
  }
  model.set_training_pool(batch);
  const auto [loss, grad] = model.loss_and_gradient(batch);
  (void)loss;
  for (std::size_t k = 0; k < model.phi().data.size(); ++k) {
    const double fd = oracle::central_difference([&] { return model.loss(batch); },
                                                 model.phi().data[k], 1e-5);
    const double rel = std::abs(grad.data[k] - fd) /
                       std::max({std::abs(grad.data[k]), std::abs(fd), 1e-10});
    if (rel > 1e-4)
      return "phi[" + std::to_string(k) + "]: rel err " + std::to_string(rel);
  }
  return std::nullopt;
}

// 4. Algorithm 1 degenerate thresholds, exact.
static std::optional<std::string> criterion_algorithm1_degenerate() {
  SyntheticParams p;
  p.labelled_per_source = 80;
  p.unlabelled_per_source = 60;
  p.target_unlabelled = 50;
  p.target_test = 40;
  const Corpus corpus = make_synthetic_corpus(p);

  SelfTrainConfig high{.tau = 1.0, .reg = 1.0, .seed = 3};
  const SelfTrainResult none = run_algorithm1(corpus, high);
  if (!none.log.empty()) return "tau=1.0 appended " + std::to_string(none.log.size());
  for (std::size_t i = 0; i < corpus.sources.size(); ++i) {
    const ProbClassifier fresh = train_logistic(corpus.sources[i].labelled, 1.0, 3);
    if (fresh.weights() != none.voter.members()[i].weights() ||
        fresh.bias() != none.voter.members()[i].bias())
      return "tau=1.0 classifier " + std::to_string(i) + " differs from its initial fit";
  }

  SelfTrainConfig low{.tau = 0.0, .reg = 1.0, .seed = 3};
  const SelfTrainResult all = run_algorithm1(corpus, low);
  std::size_t unlabelled = 0;
  for (const DomainSet& s : corpus.sources) unlabelled += s.unlabelled.size();
  if (all.log.size() != unlabelled)
    return "tau=0.0 appended " + std::to_string(all.log.size()) + " of " +
           std::to_string(unlabelled);
  return std::nullopt;
}

// 5. Softmax shift invariance (1e-9) and exact uniformity for zero logits
//    (1e-12).
static std::optional<std::string> criterion_softmax_properties() {
  Rng rng(707);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    Vec logits(n);
    for (double& v : logits) v = rng.uniform(-30, 30);
    Vec shifted = logits;
    const double c = rng.uniform(-50, 50);
    for (double& v : shifted) v += c;
    Vec a = logits, b = shifted;
    softmax_inplace(a);
    softmax_inplace(b);
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(a[i] - b[i]) > 1e-9)
        return "shift invariance violated by " + std::to_string(std::abs(a[i] - b[i]));
  }
  for (const std::size_t n : {2UL, 3UL, 7UL, 64UL}) {
    Vec zeros(n, 0.0);
    softmax_inplace(zeros);
    for (const double v : zeros)
      if (std::abs(v - 1.0 / static_cast<double>(n)) > 1e-12)
        return "zero-logit softmax not uniform for n = " + std::to_string(n);
  }
  // the two model softmaxes inherit the property
  const Corpus corpus = make_synthetic_corpus({});
  const AttentionModel model = AttentionModel::build(corpus, 1);
  const Vec theta = model.domain_attention(Vec(model.dim(), 0.0));
  for (const double t : theta)
    if (std::abs(t - 1.0 / static_cast<double>(model.num_domains())) > 1e-12)
      return "zero-query domain attention is not uniform";
  return std::nullopt;
}

// 6. Closed-form spot values of the prediction under unanimous labels.
static std::optional<std::string> criterion_spot_values() {
  Rng rng(808);
  for (const bool positive : {true, false}) {
    std::vector<Matrix> xs;
    std::vector<Vec> ys;
    std::vector<std::vector<std::string>> ids;
    std::vector<DomainId> domains;
    for (int i = 0; i < 3; ++i) {
      Matrix m(4, 5);
      for (double& v : m.data) v = rng.uniform(-2, 2);
      xs.push_back(std::move(m));
      ys.emplace_back(4, positive ? 1.0 : -1.0);
      domains.push_back("D" + std::to_string(i));
      ids.push_back({"i0", "i1", "i2", "i3"});
      for (auto& id : ids.back()) id = domains.back() + id;
    }
    const AttentionModel model =
        AttentionModel::from_parts(domains, xs, ys, ids, rng.next());
    for (int probe = 0; probe < 20; ++probe) {
      Vec x(5);
      for (double& v : x) v = rng.uniform(-3, 3);
      const double yhat = model.predict_score(x);
      const double expect = positive ? 0.73106 : 0.26894;
      if (std::abs(yhat - expect) > 1e-5)
        return "unanimous " + std::string(positive ? "+1" : "-1") + " labels: yhat = " +
               std::to_string(yhat);
    }
  }
  return std::nullopt;
}

// 7. Synthetic end-to-end: Att beats uni-MS by >= 2.0 points and the
//    unrelated source carries the lowest mean attention.
static std::optional<std::string> criterion_synthetic_end_to_end() {
  const SyntheticParams p;  // frozen fixture
  const Corpus corpus = make_synthetic_corpus(p);
  const StepResult uni = run_uni_ms(corpus, 1.0, p.seed);

  SelfTrainConfig st_cfg{.tau = 0.8, .reg = 1.0, .seed = p.seed};
  const SelfTrainResult st = run_algorithm1(corpus, st_cfg);
  const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
  const auto scored = score_targets(st.voter, corpus.target.unlabelled, centroid);
  const auto selected = select(scored, {SelectionKind::sim_only, SortOrder::dsc, 2000});

  AttentionModel att = AttentionModel::build(corpus, p.seed);
  AttentionTrainConfig cfg;
  cfg.seed = p.seed;
  att.train(selected, cfg);

  Vec theta_sum(att.num_domains(), 0.0);
  const StepResult att_res = evaluate_on_test(corpus, [&](const Instance& ins) {
    axpy(1.0, att.domain_attention(ins.repr), theta_sum);
    return att.predict_score(ins.repr) >= 0.5 ? Label::positive : Label::negative;
  });

  const double margin = att_res.accuracy - uni.accuracy;
  if (margin < 2.0)
    return "Att " + std::to_string(att_res.accuracy) + " vs uni-MS " +
           std::to_string(uni.accuracy) + " (margin " + std::to_string(margin) + " < 2.0)";
  const std::size_t unrelated = p.unrelated_source();
  for (std::size_t i = 0; i < theta_sum.size(); ++i)
    if (i != unrelated && theta_sum[unrelated] >= theta_sum[i])
      return "unrelated source does not carry the lowest mean attention (theta[" +
             std::to_string(unrelated) + "] = " + std::to_string(theta_sum[unrelated] / 1000) +
             " vs theta[" + std::to_string(i) + "] = " + std::to_string(theta_sum[i] / 1000) +
             ")";
  return std::nullopt;
}

// 8. Benchmark reproduction on the public Amazon reviews data; skipped
//    when the corpus is absent.
static std::optional<std::string> criterion_benchmark_scale(const char* amazon_dir,
                                                        const char* glove_path) {
  auto wv = std::make_shared<WordVectors>(load_word_vectors_text(glove_path));
  const std::vector<std::string> domains{"books", "dvd", "electronics", "kitchen"};

  double att_b = 0.0;
  int ordered = 0;
  for (const std::string& target : domains) {
    IngestOptions opt;
    opt.target = target;
    opt.schema = CorpusSchema::raw_text;
    Corpus corpus = ingest_directory(amazon_dir, opt);
    const SifRepresenter sif = fit_sif(corpus, wv, 1e-3, true);
    embed_corpus(sif, corpus, "sif");

    const StepResult uni = run_uni_ms(corpus, 1.0, 2026);
    SelfTrainConfig st_cfg{.tau = 0.8, .reg = 1.0, .seed = 2026};
    const SelfTrainResult st = run_algorithm1(corpus, st_cfg);
    const StepResult self = evaluate_on_test(
        corpus, [&](const Instance& ins) { return st.voter.vote(ins).label; });
    const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
    const auto scored = score_targets(st.voter, corpus.target.unlabelled, centroid);
    const auto selected = select(scored, {SelectionKind::sim_only, SortOrder::dsc, 2000});
    const ProbClassifier pl = train_pl_classifier(selected, 1.0, 2026);
    const StepResult pl_res = evaluate_on_test(
        corpus, [&](const Instance& ins) { return pl.predict(ins).label; });
    AttentionModel att = AttentionModel::build(corpus, 2026);
    AttentionTrainConfig cfg;
    cfg.seed = 2026;
    att.train(selected, cfg);
    const StepResult att_res = evaluate_on_test(corpus, [&](const Instance& ins) {
      return att.predict_score(ins.repr) >= 0.5 ? Label::positive : Label::negative;
    });
    std::printf("         target %s: uni-MS %.2f Self %.2f PL %.2f Att %.2f\n",
                target.c_str(), uni.accuracy, self.accuracy, pl_res.accuracy,
                att_res.accuracy);
    std::fflush(stdout);
    if (target == "books") att_b = att_res.accuracy;
    const bool chain = self.accuracy >= uni.accuracy - 0.5 &&
                       pl_res.accuracy >= self.accuracy - 0.5 &&
                       att_res.accuracy >= pl_res.accuracy - 0.5;
    ordered += chain;
  }
  if (att_b < 80.5 || att_b > 86.5)
    return "target B attention accuracy " + std::to_string(att_b) +
           " outside [80.5, 86.5]";
  if (ordered < 3)
    return "step ordering holds on only " + std::to_string(ordered) + " of 4 targets";
  return std::nullopt;
}

// 9. Selection-strategy study on the frozen synthetic corpus.
static std::optional<std::string> criterion_selection_study() {
  const SyntheticParams p;
  const Corpus corpus = make_synthetic_corpus(p);
  const auto scored = fixture_pool(corpus, p.seed);
  std::vector<std::size_t> ks;
  for (std::size_t k = 100; k <= 2000; k += 100) ks.push_back(k);
  const auto rows = sweep_k(corpus, scored, ks,
                            {{SelectionKind::sim_only, SortOrder::dsc, 0},
                             {SelectionKind::prob_only, SortOrder::dsc, 0}},
                            1.0, p.seed);
  double sim_at_1000 = 0.0, sim_max = 0.0, prob_at_1000 = 0.0;
  for (const SweepRow& row : rows) {
    if (row.strategy == "sim_only") {
      sim_max = std::max(sim_max, row.accuracy);
      if (row.k == 1000) sim_at_1000 = row.accuracy;
    } else if (row.k == 1000) {
      prob_at_1000 = row.accuracy;
    }
  }
  if (sim_max - sim_at_1000 > 0.5)
    return "sim_only at k=1000 (" + std::to_string(sim_at_1000) + ") trails its max (" +
           std::to_string(sim_max) + ") by more than 0.5";
  if (!(prob_at_1000 < sim_at_1000))
    return "prob_only dsc at k=1000 (" + std::to_string(prob_at_1000) +
           ") is not strictly below sim_only (" + std::to_string(sim_at_1000) + ")";
  return std::nullopt;
}

int main() {
  std::printf("acceptance suite\n================\n");
  run_criterion(1, "normalization sums (theta, psi, lambda)", 5.0, criterion_normalization);
  run_criterion(2, "naive double-loop oracle equivalence", 5.0, criterion_oracle_equivalence);
  run_criterion(3, "attention gradient vs finite differences", 5.0, criterion_gradient_check);
  run_criterion(4, "self-training degenerate thresholds", 60.0, criterion_algorithm1_degenerate);
  run_criterion(5, "softmax shift invariance and uniformity", 5.0, criterion_softmax_properties);
  run_criterion(6, "closed-form prediction spot values", 5.0, criterion_spot_values);
  run_criterion(7, "synthetic end-to-end attention gain", 120.0, criterion_synthetic_end_to_end);
  const char* amazon = std::getenv("MSA_AMAZON_DIR");
  const char* glove = std::getenv("MSA_GLOVE");
  if (amazon && glove) {
    run_criterion(8, "benchmark reproduction (Amazon reviews)", 1800.0,
                  [&] { return criterion_benchmark_scale(amazon, glove); });
  } else {
    skip_criterion(8, "benchmark reproduction (Amazon reviews)",
                   "set MSA_AMAZON_DIR and MSA_GLOVE to enable");
  }
  run_criterion(9, "selection-strategy study (sim vs prob)", 300.0, criterion_selection_study);

  if (g_failures) {
    std::printf("================\n%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("================\nall criteria passed\n");
  return 0;
}
