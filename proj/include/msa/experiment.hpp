#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msa/attention.hpp"
#include "msa/corpus.hpp"
#include "msa/corpus_io.hpp"
#include "msa/error.hpp"
#include "msa/logistic.hpp"
#include "msa/pseudo.hpp"
#include "msa/selftrain.hpp"
#include "msa/sif.hpp"
#include "msa/tfidf.hpp"

namespace msa {

// --- representation stage ---------------------------------------------------

struct RepConfig {
  std::string kind = "precomputed";  // precomputed | sif | tfidf
  std::filesystem::path vectors_path;
  double a = 1e-3;
  bool remove_pc = true;
  std::size_t epochs = 5;
};

inline void apply_representation(Corpus& corpus, const RepConfig& rep, std::uint64_t seed) {
  if (rep.kind == "precomputed") {
    for (const DomainSet& s : corpus.sources)
      for (const Instance& ins : s.labelled)
        if (!ins.has_repr())
          throw StateError("corpus is not embedded but representation kind is 'precomputed'");
    return;
  }
  if (rep.kind == "sif") {
    auto vectors = std::make_shared<WordVectors>(load_word_vectors_text(rep.vectors_path));
    const SifRepresenter sif = fit_sif(corpus, std::move(vectors), rep.a, rep.remove_pc);
    embed_corpus(sif, corpus, "sif");
    return;
  }
  if (rep.kind == "tfidf") {
    TfidfFitResult fit = fit_tfidf_encoder(corpus, {.seed = seed, .epochs = rep.epochs});
    embed_corpus(fit.encoder, corpus, "tfidf");
    return;
  }
  throw ArgumentError("unknown representation kind '" + rep.kind + "'");
}

// --- experiment spec ---------------------------------------------------------

struct ExperimentSpec {
  std::filesystem::path corpus_path;
  CorpusSchema schema = CorpusSchema::raw_text;
  DomainId target;
  RepConfig representation;
  SelfTrainConfig selftrain;
  SelectionStrategy selection;
  AttentionTrainConfig attention;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad spec file: ") + e.what(), 1);
  }
  ExperimentSpec spec;
  spec.corpus_path = j.at("corpus").get<std::string>();
  spec.schema = schema_from_string(j.value("schema", std::string{"raw-text"}));
  spec.target = j.value("target", std::string{});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.out_dir = j.value("out_dir", std::string{"run-out"});
  if (j.contains("representation")) {
    const auto& r = j["representation"];
    spec.representation.kind = r.value("kind", std::string{"precomputed"});
    spec.representation.vectors_path = r.value("vectors", std::string{});
    spec.representation.a = r.value("a", 1e-3);
    spec.representation.remove_pc = r.value("remove_pc", true);
    spec.representation.epochs = r.value("epochs", std::size_t{5});
  }
  if (j.contains("selftrain")) {
    const auto& s = j["selftrain"];
    spec.selftrain.variant = selftrain_variant_from_string(s.value("variant", std::string{"alg1"}));
    spec.selftrain.tau = s.value("tau", 0.8);
    spec.selftrain.reg = s.value("reg", 1.0);
  }
  spec.selftrain.seed = spec.seed;
  if (j.contains("selection")) {
    const auto& s = j["selection"];
    spec.selection.kind = selection_kind_from_string(s.value("strategy", std::string{"sim_only"}));
    spec.selection.order =
        s.value("order", std::string{"dsc"}) == "asc" ? SortOrder::asc : SortOrder::dsc;
    spec.selection.k = s.value("k", std::size_t{2000});
  }
  if (j.contains("attention")) {
    const auto& a = j["attention"];
    spec.attention.learning_rate = a.value("learning_rate", 1e-3);
    spec.attention.max_epochs = a.value("max_epochs", std::size_t{200});
    spec.attention.patience = a.value("patience", std::size_t{5});
    spec.attention.batch_size = a.value("batch_size", std::size_t{64});
    spec.attention.validation_fraction = a.value("validation_fraction", 0.1);
  }
  spec.attention.seed = spec.seed;
  return spec;
}

inline std::string spec_echo(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["corpus"] = spec.corpus_path.string();
  j["schema"] = to_string(spec.schema);
  j["target"] = spec.target;
  j["representation"] = {{"kind", spec.representation.kind},
                         {"vectors", spec.representation.vectors_path.string()},
                         {"a", spec.representation.a},
                         {"remove_pc", spec.representation.remove_pc},
                         {"epochs", spec.representation.epochs}};
  j["selftrain"] = {{"variant", to_string(spec.selftrain.variant)},
                    {"tau", spec.selftrain.tau},
                    {"reg", spec.selftrain.reg}};
  j["selection"] = {{"strategy", to_string(spec.selection.kind)},
                    {"order", spec.selection.order == SortOrder::asc ? "asc" : "dsc"},
                    {"k", spec.selection.k}};
  j["attention"] = {{"learning_rate", spec.attention.learning_rate},
                    {"max_epochs", spec.attention.max_epochs},
                    {"patience", spec.attention.patience},
                    {"batch_size", spec.attention.batch_size},
                    {"validation_fraction", spec.attention.validation_fraction}};
  j["seed"] = spec.seed;
  j["out_dir"] = spec.out_dir.string();
  return j.dump();
}

// --- evaluation ---------------------------------------------------------------

struct PredRecord {
  std::string id;
  Label gold;
  Label predicted;
};

inline double accuracy_percent(const std::vector<PredRecord>& records) {
  if (records.empty()) throw ArgumentError("accuracy: no predictions");
  std::size_t correct = 0;
  for (const PredRecord& r : records) correct += r.gold == r.predicted;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

struct StepResult {
  double accuracy = 0.0;
  std::vector<PredRecord> predictions;
};

template <typename PredictFn>
StepResult evaluate_on_test(const Corpus& corpus, PredictFn&& predict) {
  if (corpus.target.test.empty()) throw ValidationError("target test partition is empty");
  StepResult out;
  out.predictions.reserve(corpus.target.test.size());
  for (const Instance& ins : corpus.target.test)
    out.predictions.push_back({ins.id, *ins.label, predict(ins)});
  out.accuracy = accuracy_percent(out.predictions);
  return out;
}

// No-adaptation baseline: one classifier on the union of all source
// labelled sets, tested directly on the target.
inline StepResult run_uni_ms(const Corpus& corpus, double reg = 1.0, std::uint64_t seed = 0) {
  const ProbClassifier model = train_logistic(detail::union_labelled(corpus), reg, seed);
  return evaluate_on_test(corpus, [&](const Instance& ins) { return model.predict(ins).label; });
}

// --- significance -------------------------------------------------------------

// Exact two-sided sign test on discordant pairs under Binomial(n, 1/2).
inline double binomial_test(const std::vector<Label>& predictions_a,
                            const std::vector<Label>& predictions_b,
                            const std::vector<Label>& gold) {
  if (predictions_a.size() != gold.size() || predictions_b.size() != gold.size())
    throw ArgumentError("binomial_test: length mismatch");
  if (gold.empty()) throw ArgumentError("binomial_test: empty inputs");
  std::size_t a_only = 0, b_only = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool ca = predictions_a[i] == gold[i];
    const bool cb = predictions_b[i] == gold[i];
    a_only += ca && !cb;
    b_only += cb && !ca;
  }
  const std::size_t n = a_only + b_only;
  if (n == 0) return 1.0;
  const auto log_pmf = [n](std::size_t i) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(i) + 1.0) -
           std::lgamma(static_cast<double>(n - i) + 1.0) -
           static_cast<double>(n) * std::log(2.0);
  };
  const std::size_t k = a_only;
  double lower = 0.0, upper = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double p = std::exp(log_pmf(i));
    if (i <= k) lower += p;
    if (i >= k) upper += p;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

inline std::string significance_stars(double p) {
  if (p < 0.001) return "**";
  if (p < 0.01) return "*";
  return "";
}

// --- pipeline ------------------------------------------------------------------

struct SweepRow {
  std::string strategy;
  std::size_t k = 0;
  double accuracy = 0.0;
};

struct EvidenceRow {
  DomainId domain;
  std::string label;  // "+" / "-"
  double score = 0.0;
  std::string text;
};

struct EvidenceSample {
  std::string instance_id;
  std::string text;
  std::string gold;
  std::string predicted;
  std::vector<EvidenceRow> rows;
};

struct RunReport {
  std::vector<std::pair<std::string, double>> step_accuracy;  // uni-MS, Self, PL, Att
  std::map<std::string, double> p_value_vs_uni_ms;
  std::vector<SweepRow> sweep;
  std::vector<EvidenceSample> evidence;
  std::map<DomainId, double> mean_theta;  // over target test instances
  std::string config_echo;
  double wall_ms = 0.0;
};

namespace detail {

inline void write_predictions(const std::vector<PredRecord>& records,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "id,gold,predicted\n";
  for (const PredRecord& r : records)
    out << r.id << ',' << to_string(r.gold) << ',' << to_string(r.predicted) << '\n';
}

inline std::vector<PredRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);  // header
  std::vector<PredRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError("bad prediction row", line_no);
    out.push_back({line.substr(0, c1), label_from_string(line.substr(c1 + 1, c2 - c1 - 1)),
                   label_from_string(line.substr(c2 + 1))});
  }
  return out;
}

inline std::vector<Label> column(const std::vector<PredRecord>& r, bool gold) {
  std::vector<Label> out;
  out.reserve(r.size());
  for (const PredRecord& p : r) out.push_back(gold ? p.gold : p.predicted);
  return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens,
                               std::size_t max_tokens = 40) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size() && i < max_tokens; ++i) {
    if (i) text += ' ';
    text += tokens[i];
  }
  if (tokens.size() > max_tokens) text += " ...";
  return text;
}

inline void save_audit_log(const std::vector<AuditEntry>& log,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const AuditEntry& e : log) {
    nlohmann::json j;
    j["domain"] = e.domain;
    j["id"] = e.id;
    j["label"] = to_string(e.pseudo_label);
    j["confidence"] = e.confidence;
    if (e.member >= 0) j["member"] = e.member;
    out << j.dump() << '\n';
  }
}

}  // namespace detail

// The selected pseudo-labelled set as line-oriented records carrying
// (id, domain, pseudo_label, prob, sim).
inline void save_selected(const std::vector<ScoredTarget>& selected,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const ScoredTarget& t : selected) {
    nlohmann::json j;
    j["id"] = t.instance.id;
    j["domain"] = t.instance.domain;
    j["pseudo_label"] = to_string(t.pseudo_label);
    j["prob"] = t.prob;
    j["sim"] = t.sim;
    out << j.dump() << '\n';
  }
}

// Rejoins a selected-set file with the corpus it was drawn from; instances
// must still exist in the target's unlabelled partition.
inline std::vector<ScoredTarget> load_selected(const std::filesystem::path& path,
                                               const Corpus& corpus) {
  std::unordered_map<std::string, const Instance*> by_id;
  for (const Instance& ins : corpus.target.unlabelled) by_id[ins.id] = &ins;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<ScoredTarget> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed selected record", line_no);
    ScoredTarget t;
    const std::string id = j.at("id").get<std::string>();
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw ValidationError("selected instance '" + id + "' is not in the corpus target");
    t.instance = *it->second;
    t.pseudo_label = label_from_string(j.at("pseudo_label").get<std::string>());
    t.prob = j.at("prob").get<double>();
    t.sim = j.at("sim").get<double>();
    out.push_back(std::move(t));
  }
  if (out.empty()) throw ValidationError("selected set '" + path.string() + "' is empty");
  return out;
}

// PL-step classifier: plain logistic regression fitted to the selected
// pseudo-labelled target instances.
inline ProbClassifier train_pl_classifier(const std::vector<ScoredTarget>& selected,
                                          double reg, std::uint64_t seed) {
  std::vector<Instance> data;
  data.reserve(selected.size());
  for (const ScoredTarget& t : selected) {
    Instance ins = t.instance;
    ins.label = t.pseudo_label;
    data.push_back(std::move(ins));
  }
  return train_logistic(data, reg, seed);
}

inline std::vector<SweepRow> sweep_k(const Corpus& corpus,
                                     const std::vector<ScoredTarget>& scored,
                                     const std::vector<std::size_t>& ks,
                                     const std::vector<SelectionStrategy>& strategies,
                                     double reg, std::uint64_t seed) {
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1]) throw ArgumentError("sweep_k: k values must be sorted ascending");
  std::vector<SweepRow> rows;
  for (const SelectionStrategy& base : strategies) {
    for (const std::size_t k : ks) {
      SelectionStrategy strat = base;
      strat.k = k;
      const std::vector<ScoredTarget> chosen = select(scored, strat);
      const ProbClassifier model = train_pl_classifier(chosen, reg, seed);
      const StepResult res = evaluate_on_test(
          corpus, [&](const Instance& ins) { return model.predict(ins).label; });
      rows.push_back({to_string(strat), k, res.accuracy});
    }
  }
  return rows;
}

// Runs the four pipeline steps in order, persisting each step's artifacts
// and per-instance predictions under spec.out_dir before moving on.
inline RunReport run_pipeline(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.config_echo = spec_echo(spec);

  std::string step = "load";
  try {
    Corpus corpus = load_corpus(spec.corpus_path, spec.schema);
    if (!spec.target.empty() && corpus.target.domain != spec.target)
      throw ValidationError("spec target '" + spec.target + "' but corpus target is '" +
                            corpus.target.domain + "'");
    fs::create_directories(spec.out_dir);

    step = "representation";
    apply_representation(corpus, spec.representation, spec.seed);

    step = "uni-MS";
    const StepResult uni = run_uni_ms(corpus, spec.selftrain.reg, spec.seed);
    detail::write_predictions(uni.predictions, spec.out_dir / "predictions_uni-ms.csv");
    report.step_accuracy.emplace_back("uni-MS", uni.accuracy);

    step = "Self";
    const SelfTrainResult st = run_selftrain(corpus, spec.selftrain);
    save_voter(st.voter, spec.out_dir / "voter.bin");
    detail::save_audit_log(st.log, spec.out_dir / "selftrain_audit.jsonl");
    const StepResult self = evaluate_on_test(
        corpus, [&](const Instance& ins) { return st.voter.vote(ins).label; });
    detail::write_predictions(self.predictions, spec.out_dir / "predictions_self.csv");
    report.step_accuracy.emplace_back("Self", self.accuracy);

    step = "PL";
    const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
    const std::vector<ScoredTarget> scored =
        score_targets(st.voter, corpus.target.unlabelled, centroid);
    const std::vector<ScoredTarget> selected = select(scored, spec.selection);
    save_selected(selected, spec.out_dir / "selected.jsonl");
    const ProbClassifier pl = train_pl_classifier(selected, spec.selftrain.reg, spec.seed);
    const StepResult pl_res = evaluate_on_test(
        corpus, [&](const Instance& ins) { return pl.predict(ins).label; });
    detail::write_predictions(pl_res.predictions, spec.out_dir / "predictions_pl.csv");
    report.step_accuracy.emplace_back("PL", pl_res.accuracy);

    step = "Att";
    AttentionModel att = AttentionModel::build(corpus, spec.seed);
    att.train(selected, spec.attention);
    att.save(spec.out_dir / "attention.bin");
    Vec theta_sum(att.num_domains(), 0.0);
    const StepResult att_res = evaluate_on_test(corpus, [&](const Instance& ins) {
      const Vec theta = att.domain_attention(ins.repr);
      axpy(1.0, theta, theta_sum);
      return att.predict_score(ins.repr) >= 0.5 ? Label::positive : Label::negative;
    });
    detail::write_predictions(att_res.predictions, spec.out_dir / "predictions_att.csv");
    report.step_accuracy.emplace_back("Att", att_res.accuracy);
    for (std::size_t i = 0; i < att.num_domains(); ++i)
      report.mean_theta[att.domains()[i]] =
          theta_sum[i] / static_cast<double>(corpus.target.test.size());

    step = "report";
    const std::vector<Label> gold = detail::column(uni.predictions, true);
    report.p_value_vs_uni_ms["Self"] = binomial_test(
        detail::column(self.predictions, false), detail::column(uni.predictions, false), gold);
    report.p_value_vs_uni_ms["PL"] = binomial_test(
        detail::column(pl_res.predictions, false), detail::column(uni.predictions, false), gold);
    report.p_value_vs_uni_ms["Att"] = binomial_test(
        detail::column(att_res.predictions, false), detail::column(uni.predictions, false), gold);

    // Evidence samples: first positive and first negative gold test instance.
    std::unordered_map<std::string, const Instance*> source_by_id;
    for (const DomainSet& s : corpus.sources)
      for (const Instance& ins : s.labelled) source_by_id[ins.id] = &ins;
    for (const Label want : {Label::positive, Label::negative}) {
      for (const Instance& ins : corpus.target.test) {
        if (*ins.label != want) continue;
        const AttentionPrediction pred = att.predict(ins, 5);
        EvidenceSample sample;
        sample.instance_id = ins.id;
        sample.text = detail::join_tokens(ins.tokens);
        sample.gold = to_string(*ins.label);
        sample.predicted = to_string(pred.label);
        for (const Evidence& ev : pred.explanation.evidences) {
          const Instance* src = source_by_id.at(ev.instance_id);
          sample.rows.push_back({ev.domain, ev.label == Label::positive ? "+" : "-",
                                 ev.score, detail::join_tokens(src->tokens)});
        }
        report.evidence.push_back(std::move(sample));
        break;
      }
    }
  } catch (const Error& e) {
    throw Error("pipeline step '" + step + "' failed: " + e.what());
  }

  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

// --- report emission -----------------------------------------------------------

namespace detail {

inline std::string fmt_acc(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

inline std::string fmt_p(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace detail

inline nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json j;
  for (const auto& [name, acc] : report.step_accuracy) j["steps"][name] = acc;
  j["step_order"] = nlohmann::json::array();
  for (const auto& [name, acc] : report.step_accuracy) j["step_order"].push_back(name);
  j["p_value_vs_uni_ms"] = report.p_value_vs_uni_ms;
  j["mean_theta"] = report.mean_theta;
  j["wall_ms"] = report.wall_ms;
  j["config"] = nlohmann::json::parse(report.config_echo.empty() ? "{}" : report.config_echo);
  j["sweep"] = nlohmann::json::array();
  for (const SweepRow& row : report.sweep)
    j["sweep"].push_back({{"strategy", row.strategy}, {"k", row.k}, {"accuracy", row.accuracy}});
  j["evidence"] = nlohmann::json::array();
  for (const EvidenceSample& s : report.evidence) {
    nlohmann::json rows = nlohmann::json::array();
    for (const EvidenceRow& r : s.rows)
      rows.push_back({{"domain", r.domain}, {"label", r.label}, {"score", r.score},
                      {"text", r.text}});
    j["evidence"].push_back({{"instance", s.instance_id}, {"text", s.text},
                             {"gold", s.gold}, {"predicted", s.predicted},
                             {"evidences", rows}});
  }
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport report;
  for (const auto& name : j.at("step_order"))
    report.step_accuracy.emplace_back(name.get<std::string>(),
                                      j["steps"][name.get<std::string>()].get<double>());
  if (j.contains("p_value_vs_uni_ms"))
    report.p_value_vs_uni_ms = j["p_value_vs_uni_ms"].get<std::map<std::string, double>>();
  if (j.contains("mean_theta"))
    report.mean_theta = j["mean_theta"].get<std::map<std::string, double>>();
  report.wall_ms = j.value("wall_ms", 0.0);
  if (j.contains("config")) report.config_echo = j["config"].dump();
  for (const auto& row : j.value("sweep", nlohmann::json::array()))
    report.sweep.push_back({row["strategy"].get<std::string>(), row["k"].get<std::size_t>(),
                            row["accuracy"].get<double>()});
  for (const auto& s : j.value("evidence", nlohmann::json::array())) {
    EvidenceSample sample;
    sample.instance_id = s.value("instance", std::string{});
    sample.text = s.value("text", std::string{});
    sample.gold = s.value("gold", std::string{});
    sample.predicted = s.value("predicted", std::string{});
    for (const auto& r : s.value("evidences", nlohmann::json::array()))
      sample.rows.push_back({r["domain"].get<std::string>(), r["label"].get<std::string>(),
                             r["score"].get<double>(), r.value("text", std::string{})});
    report.evidence.push_back(std::move(sample));
  }
  return report;
}

// Writes the machine-readable tables plus a human-readable summary.
// Emission is a pure function of the report, so re-emitting the same report
// reproduces byte-identical files.
inline void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory '" + dir.string() + "'");

  {
    std::ofstream out(dir / "results.csv");
    if (!out) throw IoError("cannot write results.csv");
    out << "step,accuracy,p_value_vs_uni_ms,stars\n";
    for (const auto& [name, acc] : report.step_accuracy) {
      out << name << ',' << detail::fmt_acc(acc) << ',';
      const auto it = report.p_value_vs_uni_ms.find(name);
      if (it != report.p_value_vs_uni_ms.end())
        out << detail::fmt_p(it->second) << ',' << significance_stars(it->second);
      else
        out << ',';
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "ksweep.csv");
    if (!out) throw IoError("cannot write ksweep.csv");
    out << "strategy,k,accuracy\n";
    for (const SweepRow& row : report.sweep)
      out << row.strategy << ',' << row.k << ',' << detail::fmt_acc(row.accuracy) << '\n';
  }
  {
    std::ofstream out(dir / "evidence.csv");
    if (!out) throw IoError("cannot write evidence.csv");
    out << "instance,gold,predicted,domain,label,score,text\n";
    for (const EvidenceSample& s : report.evidence)
      for (const EvidenceRow& r : s.rows)
        out << s.instance_id << ',' << s.gold << ',' << s.predicted << ',' << r.domain
            << ',' << r.label << ',' << detail::fmt_p(r.score) << ",\"" << r.text << "\"\n";
  }
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot write report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "summary.txt");
    if (!out) throw IoError("cannot write summary.txt");
    out << "Run summary\n===========\n\n";
    out << "config: " << report.config_echo << "\n\n";
    out << "step accuracies (%):\n";
    for (const auto& [name, acc] : report.step_accuracy) {
      out << "  " << name << ": " << detail::fmt_acc(acc);
      const auto it = report.p_value_vs_uni_ms.find(name);
      if (it != report.p_value_vs_uni_ms.end())
        out << "  (p=" << detail::fmt_p(it->second) << significance_stars(it->second)
            << " vs uni-MS)";
      out << '\n';
    }
    if (!report.mean_theta.empty()) {
      out << "\nmean domain attention over test instances:\n";
      for (const auto& [dom, theta] : report.mean_theta)
        out << "  " << dom << ": " << detail::fmt_p(theta) << '\n';
    }
    if (!report.sweep.empty())
      out << "\nk-sweep rows: " << report.sweep.size() << " (see ksweep.csv)\n";
    out << "\nwall clock: " << detail::fmt_acc(report.wall_ms) << " ms\n";
  }
}

}  // namespace msa
