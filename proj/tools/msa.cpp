// Command-line front end for the multi-source domain-attention pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msa/experiment.hpp"
#include "msa/synthetic.hpp"

namespace fs = std::filesystem;
using namespace msa;

namespace {

std::shared_ptr<WordVectors> load_vectors_any(const fs::path& path) {
  // binary caches start with the cache magic; anything else is text
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open word-vector file '" + path.string() + "'");
  char magic[8] = {};
  probe.read(magic, 8);
  probe.close();
  if (std::memcmp(magic, kWordVectorMagic, 8) == 0)
    return std::make_shared<WordVectors>(load_word_vectors_cache(path));
  return std::make_shared<WordVectors>(load_word_vectors_text(path));
}

void print_summary(const RunReport& report) {
  std::printf("step accuracies (%%):\n");
  for (const auto& [name, acc] : report.step_accuracy) {
    std::printf("  %-7s %6.2f", name.c_str(), acc);
    const auto it = report.p_value_vs_uni_ms.find(name);
    if (it != report.p_value_vs_uni_ms.end())
      std::printf("  p=%g%s vs uni-MS", it->second,
                  significance_stars(it->second).c_str());
    std::printf("\n");
  }
  if (!report.mean_theta.empty()) {
    std::printf("mean domain attention over test instances:\n");
    for (const auto& [dom, theta] : report.mean_theta)
      std::printf("  %-10s %.4f\n", dom.c_str(), theta);
  }
  std::printf("wall clock: %.0f ms\n", report.wall_ms);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"msa — multi-source domain attention for unsupervised domain adaptation"};
  app.require_subcommand(1);

  // ---- ingest ----
  auto* ingest = app.add_subcommand("ingest", "build a corpus file from a directory");
  std::string ingest_input, ingest_schema = "raw-text", ingest_target, ingest_out,
              ingest_name;
  bool no_lowercase = false, whitespace_tok = false;
  ingest->add_option("--input", ingest_input, "directory with one subdirectory per domain")
      ->required();
  ingest->add_option("--schema", ingest_schema, "raw-text | featurized")
      ->check(CLI::IsMember({"raw-text", "featurized"}));
  ingest->add_option("--target", ingest_target, "target domain name")->required();
  ingest->add_option("--out", ingest_out, "output corpus.jsonl")->required();
  ingest->add_option("--name", ingest_name, "corpus name (defaults to the directory)");
  ingest->add_flag("--no-lowercase", no_lowercase, "keep original casing");
  ingest->add_flag("--whitespace-tokenizer", whitespace_tok,
                   "split on whitespace instead of non-alphanumerics");
  ingest->callback([&] {
    IngestOptions opt;
    opt.schema = schema_from_string(ingest_schema);
    opt.target = ingest_target;
    opt.corpus_name = ingest_name;
    opt.tokenizer.lowercase = !no_lowercase;
    opt.tokenizer.split_non_alnum = !whitespace_tok;
    const Corpus corpus = ingest_directory(ingest_input, opt);
    save_corpus(corpus, ingest_out);
    std::printf("%s", counts_table(corpus).c_str());
    std::printf("wrote %s\n", ingest_out.c_str());
  });

  // ---- embed ----
  auto* embed = app.add_subcommand("embed", "fit a representer and embed a corpus");
  std::string embed_corpus_path, embed_out, embed_rep = "sif", embed_vectors,
              embed_cache_out;
  double sif_a = 1e-3;
  bool remove_pc = true;
  std::uint64_t embed_seed = 0;
  std::size_t embed_epochs = 5;
  embed->add_option("--corpus", embed_corpus_path, "input corpus.jsonl")->required();
  embed->add_option("--out", embed_out, "output embedded corpus.jsonl")->required();
  embed->add_option("--rep", embed_rep, "sif | tfidf")
      ->check(CLI::IsMember({"sif", "tfidf"}));
  embed->add_option("--vectors", embed_vectors, "word-vector file (text or binary cache)");
  embed->add_option("--a", sif_a, "SIF smoothing constant (default 1e-3)");
  embed->add_flag("--remove-pc,!--no-remove-pc", remove_pc,
                  "remove the dominant principal component (SIF, default on)");
  embed->add_option("--save-cache", embed_cache_out,
                    "also write the word vectors as a binary cache");
  embed->add_option("--seed", embed_seed, "encoder training seed (tfidf)");
  embed->add_option("--epochs", embed_epochs, "encoder training epochs (tfidf)");
  embed->callback([&] {
    Corpus corpus = load_corpus(embed_corpus_path);
    std::size_t oov = 0;
    if (embed_rep == "sif") {
      if (embed_vectors.empty())
        throw ArgumentError("embed --rep sif requires --vectors");
      auto vectors = load_vectors_any(embed_vectors);
      if (!embed_cache_out.empty()) save_word_vectors_cache(*vectors, embed_cache_out);
      const SifRepresenter rep = fit_sif(corpus, vectors, sif_a, remove_pc);
      oov = embed_corpus(rep, corpus, "sif");
    } else {
      const TfidfFitResult fit =
          fit_tfidf_encoder(corpus, {.seed = embed_seed, .epochs = embed_epochs});
      if (fit.vocab_truncated)
        std::fprintf(stderr,
                     "warning: vocabulary below the 5000-term cap; using %zu terms\n",
                     fit.encoder.vectorizer().input_dim());
      oov = embed_corpus(fit.encoder, corpus, "tfidf");
    }
    if (oov > 0)
      std::fprintf(stderr, "warning: %zu document(s) with no in-vocabulary token\n", oov);
    save_corpus(corpus, embed_out);
    std::printf("embedded corpus (d=%zu) -> %s\n", corpus.meta.dim, embed_out.c_str());
  });

  // ---- selftrain ----
  auto* selftrain = app.add_subcommand("selftrain", "run a self-training variant");
  std::string st_corpus, st_variant = "alg1", st_voter_out = "voter.bin",
              st_audit_out = "selftrain_audit.jsonl";
  SelfTrainConfig st_cfg;
  selftrain->add_option("--corpus", st_corpus, "embedded corpus.jsonl")->required();
  selftrain->add_option("--variant", st_variant, "alg1 | uni | tri | tri-d")
      ->check(CLI::IsMember({"alg1", "uni", "tri", "tri-d", "none"}));
  selftrain->add_option("--tau", st_cfg.tau, "confidence threshold (default 0.8)");
  selftrain->add_option("--reg", st_cfg.reg, "L2 regularization (default 1.0)");
  selftrain->add_option("--seed", st_cfg.seed, "random seed");
  selftrain->add_option("--out-voter", st_voter_out, "voter output file");
  selftrain->add_option("--audit", st_audit_out, "audit log output (jsonl)");
  selftrain->callback([&] {
    const Corpus corpus = load_corpus(st_corpus);
    st_cfg.variant = selftrain_variant_from_string(st_variant);
    const SelfTrainResult res = run_selftrain(corpus, st_cfg);
    save_voter(res.voter, st_voter_out);
    detail::save_audit_log(res.log, st_audit_out);
    std::printf("variant %s: %zu appended pseudo-labelled instance(s)\n",
                st_variant.c_str(), res.log.size());
    for (const auto& [dom, count] : res.augmentation_counts)
      std::printf("  %-10s %zu\n", dom.c_str(), count);
    std::printf("voter -> %s\naudit -> %s\n", st_voter_out.c_str(), st_audit_out.c_str());
  });

  // ---- select ----
  auto* select_cmd = app.add_subcommand("select", "score and select pseudo-labelled targets");
  std::string sel_corpus, sel_voter, sel_strategy = "sim_only", sel_order = "dsc",
              sel_out = "selected.jsonl";
  std::size_t sel_k = 2000;
  select_cmd->add_option("--corpus", sel_corpus, "embedded corpus.jsonl")->required();
  select_cmd->add_option("--voter", sel_voter, "voter file from selftrain")->required();
  select_cmd->add_option("--strategy", sel_strategy,
                         "prob_only | sim_only | prob_sim | sim_prob | prob_x_sim | prob_plus_sim");
  select_cmd->add_option("--order", sel_order, "asc | dsc (prob-based keys only)")
      ->check(CLI::IsMember({"asc", "dsc"}));
  select_cmd->add_option("--k", sel_k, "number of instances to keep (default 2000)");
  select_cmd->add_option("--out", sel_out, "output selected.jsonl");
  select_cmd->callback([&] {
    const Corpus corpus = load_corpus(sel_corpus);
    const MajorityVoter voter = load_voter(sel_voter);
    const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
    const auto scored = score_targets(voter, corpus.target.unlabelled, centroid);
    std::size_t zero_sim = 0;
    for (const auto& t : scored) zero_sim += t.sim == 0.0;
    if (zero_sim)
      std::fprintf(stderr, "warning: %zu target(s) with zero similarity\n", zero_sim);
    SelectionStrategy strat;
    strat.kind = selection_kind_from_string(sel_strategy);
    strat.order = sel_order == "asc" ? SortOrder::asc : SortOrder::dsc;
    strat.k = sel_k;
    const auto selected = select(scored, strat);
    save_selected(selected, sel_out);
    std::printf("selected %zu of %zu target instances (%s) -> %s\n", selected.size(),
                scored.size(), to_string(strat).c_str(), sel_out.c_str());
  });

  // ---- train-att ----
  auto* train_att = app.add_subcommand("train-att", "train the domain-attention model");
  std::string att_corpus, att_selected, att_out = "attention.bin";
  AttentionTrainConfig att_cfg;
  train_att->add_option("--corpus", att_corpus, "embedded corpus.jsonl")->required();
  train_att->add_option("--selected", att_selected, "selected.jsonl from select")
      ->required();
  train_att->add_option("--lr", att_cfg.learning_rate, "learning rate (default 1e-3)");
  train_att->add_option("--seed", att_cfg.seed, "random seed");
  train_att->add_option("--patience", att_cfg.patience, "early-stopping patience");
  train_att->add_option("--max-epochs", att_cfg.max_epochs, "epoch cap (default 200)");
  train_att->add_option("--batch", att_cfg.batch_size, "batch size (0 = full batch)");
  train_att->add_option("--val-fraction", att_cfg.validation_fraction,
                        "held-out validation fraction (default 0.1)");
  train_att->add_option("--out", att_out, "model output file");
  train_att->callback([&] {
    const Corpus corpus = load_corpus(att_corpus);
    const auto selected = load_selected(att_selected, corpus);
    AttentionModel model = AttentionModel::build(corpus, att_cfg.seed);
    const AttentionTrainTrace trace = model.train(selected, att_cfg);
    model.save(att_out);
    std::printf("trained %zu epoch(s); best validation loss at epoch %zu\n",
                trace.epochs_run, trace.best_epoch);
    if (!trace.train_loss.empty())
      std::printf("final train loss %.6f, validation loss %.6f\n",
                  trace.train_loss.back(), trace.validation_loss.back());
    std::printf("model -> %s\n", att_out.c_str());
  });

  // ---- explain ----
  auto* explain = app.add_subcommand("explain", "evidence for attention predictions");
  std::string ex_model, ex_corpus;
  std::vector<std::string> ex_ids;
  std::size_t ex_top = 5, ex_first = 2;
  explain->add_option("--model", ex_model, "attention model file")->required();
  explain->add_option("--corpus", ex_corpus, "embedded corpus.jsonl")->required();
  explain->add_option("--top", ex_top, "evidences per instance (default 5)");
  explain->add_option("--id", ex_ids, "explain specific test instance id(s)");
  explain->add_option("--first", ex_first,
                      "explain the first N test instances when no --id given");
  explain->callback([&] {
    const AttentionModel model = AttentionModel::load(ex_model);
    const Corpus corpus = load_corpus(ex_corpus);
    std::unordered_map<std::string, const Instance*> sources;
    for (const DomainSet& s : corpus.sources)
      for (const Instance& ins : s.labelled) sources[ins.id] = &ins;
    std::vector<const Instance*> todo;
    if (!ex_ids.empty()) {
      std::unordered_map<std::string, const Instance*> tests;
      for (const Instance& ins : corpus.target.test) tests[ins.id] = &ins;
      for (const Instance& ins : corpus.target.unlabelled) tests[ins.id] = &ins;
      for (const std::string& id : ex_ids) {
        const auto it = tests.find(id);
        if (it == tests.end())
          throw ArgumentError("instance '" + id + "' not found in the target domain");
        todo.push_back(it->second);
      }
    } else {
      for (std::size_t i = 0; i < corpus.target.test.size() && i < ex_first; ++i)
        todo.push_back(&corpus.target.test[i]);
    }
    std::printf("instance,prediction,score,domain,label,evidence_score,text\n");
    for (const Instance* ins : todo) {
      const AttentionPrediction pred = model.predict(*ins, ex_top);
      for (const Evidence& ev : pred.explanation.evidences) {
        const auto it = sources.find(ev.instance_id);
        std::string text;
        if (it != sources.end()) text = detail::join_tokens(it->second->tokens);
        std::printf("%s,%s,%.5f,%s,%s,%.5f,\"%s\"\n", ins->id.c_str(),
                    to_string(pred.label).c_str(), pred.score, ev.domain.c_str(),
                    ev.label == Label::positive ? "+" : "-", ev.score, text.c_str());
      }
    }
  });

  // ---- run ----
  auto* run = app.add_subcommand("run", "run the full pipeline from a spec file");
  std::string run_spec;
  run->add_option("--spec", run_spec, "experiment spec (json)")->required();
  run->callback([&] {
    const ExperimentSpec spec = load_experiment_spec(run_spec);
    const RunReport report = run_pipeline(spec);
    emit_report(report, spec.out_dir);
    print_summary(report);
    std::printf("report -> %s\n", spec.out_dir.c_str());
  });

  // ---- sweep-k ----
  auto* sweep = app.add_subcommand("sweep-k", "PL accuracy per (strategy, k)");
  std::string sweep_spec;
  std::size_t k_min = 100, k_max = 2000, k_step = 100;
  std::vector<std::string> sweep_strategies{"sim_only"};
  std::string sweep_order = "dsc";
  sweep->add_option("--spec", sweep_spec, "experiment spec (json)")->required();
  sweep->add_option("--k-min", k_min, "smallest k (default 100)");
  sweep->add_option("--k-max", k_max, "largest k (default 2000)");
  sweep->add_option("--k-step", k_step, "k increment (default 100)");
  sweep->add_option("--strategies", sweep_strategies, "strategy names");
  sweep->add_option("--order", sweep_order, "asc | dsc for prob-based keys")
      ->check(CLI::IsMember({"asc", "dsc"}));
  sweep->callback([&] {
    const ExperimentSpec spec = load_experiment_spec(sweep_spec);
    Corpus corpus = load_corpus(spec.corpus_path, spec.schema);
    apply_representation(corpus, spec.representation, spec.seed);
    const SelfTrainResult st = run_selftrain(corpus, spec.selftrain);
    const TargetCentroid centroid = compute_centroid(corpus.target.unlabelled);
    const auto scored = score_targets(st.voter, corpus.target.unlabelled, centroid);
    std::vector<std::size_t> ks;
    for (std::size_t k = k_min; k <= k_max; k += k_step) ks.push_back(k);
    std::vector<SelectionStrategy> strategies;
    for (const std::string& name : sweep_strategies) {
      SelectionStrategy s;
      s.kind = selection_kind_from_string(name);
      s.order = sweep_order == "asc" ? SortOrder::asc : SortOrder::dsc;
      strategies.push_back(s);
    }
    const auto rows =
        sweep_k(corpus, scored, ks, strategies, spec.selftrain.reg, spec.seed);
    RunReport report;
    report.sweep = rows;
    report.config_echo = spec_echo(spec);
    std::filesystem::create_directories(spec.out_dir);
    {
      std::ofstream out(spec.out_dir / "ksweep.csv");
      out << "strategy,k,accuracy\n";
      for (const SweepRow& row : rows)
        out << row.strategy << ',' << row.k << ',' << detail::fmt_acc(row.accuracy)
            << '\n';
    }
    std::printf("strategy,k,accuracy\n");
    for (const SweepRow& row : rows)
      std::printf("%s,%zu,%.2f\n", row.strategy.c_str(), row.k, row.accuracy);
    std::printf("table -> %s\n", (spec.out_dir / "ksweep.csv").string().c_str());
  });

  // ---- report ----
  auto* report_cmd = app.add_subcommand("report", "re-emit a stored run report");
  std::string report_dir;
  report_cmd->add_option("--run", report_dir, "run directory with report.json")
      ->required();
  report_cmd->callback([&] {
    std::ifstream in(fs::path(report_dir) / "report.json");
    if (!in) throw IoError("no report.json under '" + report_dir + "'");
    nlohmann::json j;
    in >> j;
    const RunReport report = report_from_json(j);
    emit_report(report, report_dir);
    print_summary(report);
  });

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark corpus");
  std::string synth_out = "synthetic.jsonl";
  SyntheticParams synth_params;
  synth->add_option("--out", synth_out, "output corpus.jsonl");
  synth->add_option("--seed", synth_params.seed, "generator seed (default 2026)");
  synth->add_option("--dim", synth_params.dim, "representation dimension");
  synth->callback([&] {
    const Corpus corpus = make_synthetic_corpus(synth_params);
    save_corpus(corpus, synth_out);
    std::printf("%s", counts_table(corpus).c_str());
    std::printf("wrote %s\n", synth_out.c_str());
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
}
