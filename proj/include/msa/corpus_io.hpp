#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msa/corpus.hpp"
#include "msa/error.hpp"

namespace msa {

// Corpus file format: UTF-8, one JSON object per line. The first line is a
// meta object ({"meta": {...}}); every following line is an instance record
// with fields id, domain, partition, and text | features, plus optional
// label and repr. Line-oriented so corpora stream and diff cleanly.

namespace detail {

inline nlohmann::json instance_to_json(const Instance& ins, const char* partition) {
  nlohmann::json j;
  j["id"] = ins.id;
  j["domain"] = ins.domain;
  j["partition"] = partition;
  if (!ins.tokens.empty()) j["text"] = ins.tokens;
  if (!ins.features.empty()) {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& [idx, w] : ins.features) f.push_back({idx, w});
    j["features"] = std::move(f);
  }
  if (ins.label) j["label"] = to_string(*ins.label);
  if (ins.has_repr()) j["repr"] = ins.repr;
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j, std::size_t line) {
  Instance ins;
  try {
    ins.id = j.at("id").get<std::string>();
    ins.domain = j.at("domain").get<std::string>();
    if (j.contains("text")) ins.tokens = j["text"].get<std::vector<std::string>>();
    if (j.contains("features")) {
      for (const auto& pair : j["features"]) {
        if (!pair.is_array() || pair.size() != 2)
          throw ParseError("feature entry is not an [index, weight] pair", line);
        ins.features.emplace_back(pair[0].get<std::uint32_t>(), pair[1].get<double>());
      }
    }
    if (j.contains("label")) ins.label = label_from_string(j["label"].get<std::string>());
    if (j.contains("repr")) ins.repr = j["repr"].get<Vec>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad instance record: ") + e.what(), line);
  }
  return ins;
}

}  // namespace detail

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  nlohmann::json meta;
  meta["meta"] = {{"name", corpus.meta.name},
                  {"target", corpus.target.domain},
                  {"representation", corpus.meta.representation},
                  {"dim", corpus.meta.dim}};
  out << meta.dump() << '\n';
  auto emit = [&](const std::vector<Instance>& list, const char* partition) {
    for (const Instance& ins : list)
      out << detail::instance_to_json(ins, partition).dump() << '\n';
  };
  for (const DomainSet& s : corpus.sources) {
    emit(s.labelled, "labelled");
    emit(s.unlabelled, "unlabelled");
  }
  emit(corpus.target.unlabelled, "unlabelled");
  emit(corpus.target.test, "test");
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline Corpus load_corpus(const std::filesystem::path& path,
                          CorpusSchema schema = CorpusSchema::raw_text) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty corpus file", 1);
  ++line_no;
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.contains("meta"))
    throw ParseError("first line must be the corpus meta object", 1);

  Corpus corpus;
  try {
    const auto& m = header["meta"];
    corpus.meta.name = m.value("name", std::string{});
    corpus.target.domain = m.at("target").get<std::string>();
    corpus.meta.representation = m.value("representation", std::string{"none"});
    corpus.meta.dim = m.value("dim", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad meta object: ") + e.what(), 1);
  }

  std::map<DomainId, DomainSet> sources;  // ordered by domain id
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON record", line_no);
    Instance ins = detail::instance_from_json(j, line_no);
    if (!ins.has_repr()) {
      if (schema == CorpusSchema::raw_text && ins.tokens.empty() && ins.features.empty())
        throw ParseError("raw-text record without text", line_no);
      if (schema == CorpusSchema::featurized && ins.features.empty())
        throw ParseError("featurized record without features", line_no);
    }
    const std::string partition = j.value("partition", std::string{});
    const bool is_target = ins.domain == corpus.target.domain;
    DomainSet& set = is_target
                         ? corpus.target
                         : [&]() -> DomainSet& {
                             DomainSet& s = sources[ins.domain];
                             s.domain = ins.domain;
                             return s;
                           }();
    if (partition == "labelled")
      set.labelled.push_back(std::move(ins));
    else if (partition == "unlabelled")
      set.unlabelled.push_back(std::move(ins));
    else if (partition == "test")
      set.test.push_back(std::move(ins));
    else
      throw ParseError("unknown partition '" + partition + "'", line_no);
  }
  corpus.sources.reserve(sources.size());
  for (auto& [id, set] : sources) corpus.sources.push_back(std::move(set));
  validate(corpus);
  return corpus;
}

// ---------------------------------------------------------------------------
// Directory ingest. Layout: DIR/<domain>/ holding either
//   labelled.jsonl / unlabelled.jsonl / test.jsonl   records {id?, text, label?}
// or the classic sentiment-review dump
//   positive.review / negative.review / unlabeled.review
// where each line is "tok:count ... #label#:positive|negative". The target
// domain's labelled data becomes its test partition.
// ---------------------------------------------------------------------------

struct IngestOptions {
  CorpusSchema schema = CorpusSchema::raw_text;
  DomainId target;
  TokenizerConfig tokenizer;
  std::string corpus_name;
};

namespace detail {

struct RawRecord {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::string, double>> term_counts;
  std::optional<Label> label;
};

inline RawRecord parse_review_line(const std::string& line, std::size_t line_no,
                                   std::optional<Label> forced_label) {
  RawRecord rec;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) {
    const auto colon = tok.rfind(':');
    if (colon == std::string::npos || colon == 0)
      throw ParseError("expected 'token:count' but got '" + tok + "'", line_no);
    const std::string term = tok.substr(0, colon);
    const std::string value = tok.substr(colon + 1);
    if (term == "#label#") {
      rec.label = label_from_string(value);
      continue;
    }
    double count = 0;
    try {
      count = std::stod(value);
    } catch (...) {
      throw ParseError("bad count in '" + tok + "'", line_no);
    }
    rec.term_counts.emplace_back(term, count);
    // unigram features only feed the token stream; bigrams are marked a_b
    if (term.find('_') == std::string::npos)
      for (int i = 0; i < static_cast<int>(count); ++i) rec.tokens.push_back(term);
  }
  if (forced_label) rec.label = forced_label;
  return rec;
}

inline void read_review_file(const std::filesystem::path& file,
                             std::optional<Label> forced_label, bool keep_label,
                             std::vector<RawRecord>& out) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RawRecord rec = parse_review_line(line, line_no, forced_label);
    if (!keep_label) rec.label.reset();
    out.push_back(std::move(rec));
  }
}

inline void read_record_file(const std::filesystem::path& file, bool expect_label,
                             const TokenizerConfig& tok, std::vector<RawRecord>& out) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON record in " + file.string(), line_no);
    RawRecord rec;
    if (j.contains("text")) {
      if (j["text"].is_array())
        for (const auto& t : j["text"]) rec.tokens.push_back(t.get<std::string>());
      else
        rec.tokens = tokenize(j["text"].get<std::string>(), tok);
    }
    if (j.contains("label")) rec.label = label_from_string(j["label"].get<std::string>());
    if (expect_label && !rec.label)
      throw ParseError("labelled record without label in " + file.string(), line_no);
    if (!expect_label) rec.label.reset();
    for (const std::string& t : rec.tokens) rec.term_counts.emplace_back(t, 1.0);
    out.push_back(std::move(rec));
  }
}

}  // namespace detail

inline Corpus ingest_directory(const std::filesystem::path& dir, const IngestOptions& opt) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  if (opt.target.empty()) throw ArgumentError("ingest requires a target domain");

  struct RawDomain {
    std::vector<detail::RawRecord> labelled, unlabelled, test;
  };
  std::map<DomainId, RawDomain> raw;

  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const DomainId domain = entry.path().filename().string();
    RawDomain rd;
    const fs::path p = entry.path();
    if (fs::exists(p / "positive.review") || fs::exists(p / "negative.review")) {
      if (fs::exists(p / "positive.review"))
        detail::read_review_file(p / "positive.review", Label::positive, true, rd.labelled);
      if (fs::exists(p / "negative.review"))
        detail::read_review_file(p / "negative.review", Label::negative, true, rd.labelled);
      if (fs::exists(p / "unlabeled.review"))
        detail::read_review_file(p / "unlabeled.review", std::nullopt, false, rd.unlabelled);
    } else {
      if (fs::exists(p / "labelled.jsonl"))
        detail::read_record_file(p / "labelled.jsonl", true, opt.tokenizer, rd.labelled);
      if (fs::exists(p / "unlabelled.jsonl"))
        detail::read_record_file(p / "unlabelled.jsonl", false, opt.tokenizer, rd.unlabelled);
      if (fs::exists(p / "test.jsonl"))
        detail::read_record_file(p / "test.jsonl", true, opt.tokenizer, rd.test);
    }
    if (rd.labelled.empty() && rd.unlabelled.empty() && rd.test.empty()) continue;
    raw.emplace(domain, std::move(rd));
  }
  if (!raw.count(opt.target))
    throw ValidationError("target domain '" + opt.target + "' not found under '" +
                          dir.string() + "'");

  // Shared feature vocabulary over every domain, ordered by document
  // frequency (ties by term) so featurized corpora are reproducible.
  std::map<std::string, std::size_t> df;
  auto count_df = [&](const std::vector<detail::RawRecord>& recs) {
    for (const auto& r : recs) {
      std::unordered_set<std::string> seen;
      for (const auto& [term, c] : r.term_counts)
        if (seen.insert(term).second) ++df[term];
    }
  };
  std::unordered_map<std::string, std::uint32_t> vocab;
  if (opt.schema == CorpusSchema::featurized) {
    for (const auto& [dom, rd] : raw) {
      count_df(rd.labelled);
      count_df(rd.unlabelled);
      count_df(rd.test);
    }
    std::vector<std::pair<std::string, std::size_t>> terms(df.begin(), df.end());
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    for (std::uint32_t i = 0; i < terms.size(); ++i) vocab.emplace(terms[i].first, i);
  }

  Corpus corpus;
  corpus.meta.name = opt.corpus_name.empty() ? dir.filename().string() : opt.corpus_name;
  std::size_t next_id = 0;
  auto materialize = [&](const std::vector<detail::RawRecord>& recs, const DomainId& dom,
                         bool keep_label) {
    std::vector<Instance> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
      Instance ins;
      ins.id = dom + "-" + std::to_string(next_id++);
      ins.domain = dom;
      ins.tokens = r.tokens;
      if (keep_label) ins.label = r.label;
      if (opt.schema == CorpusSchema::featurized) {
        std::map<std::uint32_t, double> acc;
        for (const auto& [term, c] : r.term_counts) acc[vocab.at(term)] += c;
        ins.features.assign(acc.begin(), acc.end());
      }
      out.push_back(std::move(ins));
    }
    return out;
  };

  for (auto& [dom, rd] : raw) {
    if (dom == opt.target) {
      corpus.target.domain = dom;
      corpus.target.unlabelled = materialize(rd.unlabelled, dom, false);
      // labelled target data is the evaluation set in the UDA configuration
      auto test = materialize(rd.test.empty() ? rd.labelled : rd.test, dom, true);
      corpus.target.test = std::move(test);
    } else {
      DomainSet set;
      set.domain = dom;
      set.labelled = materialize(rd.labelled, dom, true);
      set.unlabelled = materialize(rd.unlabelled, dom, false);
      corpus.sources.push_back(std::move(set));
    }
  }
  validate(corpus);
  return corpus;
}

inline std::string counts_table(const Corpus& corpus) {
  std::ostringstream os;
  os << "domain        role    labelled  unlabelled      test\n";
  auto row = [&](const DomainSet& s, const char* role) {
    os << std::left;
    os.width(14);
    os << s.domain;
    os.width(8);
    os << role;
    os << std::right;
    os.width(10);
    os << s.labelled.size();
    os.width(12);
    os << s.unlabelled.size();
    os.width(10);
    os << s.test.size() << '\n';
  };
  for (const DomainSet& s : corpus.sources) row(s, "source");
  row(corpus.target, "target");
  return os.str();
}

}  // namespace msa
