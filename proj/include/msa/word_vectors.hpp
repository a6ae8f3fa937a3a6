#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "msa/error.hpp"

namespace msa {

// Pre-trained word vectors, stored single precision. Text format: one line
// per word, "word v1 ... v_dw" with space-separated decimals.
struct WordVectors {
  std::unordered_map<std::string, std::uint32_t> vocabulary;
  std::vector<float> matrix;  // row-major |V| x dw
  std::size_t dw = 0;

  std::size_t size() const { return vocabulary.size(); }

  const float* row(std::uint32_t r) const { return matrix.data() + r * dw; }

  const float* find(const std::string& word) const {
    const auto it = vocabulary.find(word);
    return it == vocabulary.end() ? nullptr : row(it->second);
  }
};

namespace detail {

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f32_le(std::ostream& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline float read_f32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

inline void write_f64_le(std::ostream& out, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  write_u64_le(out, u);
}

inline double read_f64_le(std::istream& in) {
  const std::uint64_t u = read_u64_le(in);
  double d;
  std::memcpy(&d, &u, 8);
  return d;
}

}  // namespace detail

inline WordVectors load_word_vectors_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-vector file '" + path.string() + "'");
  WordVectors wv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t pos = line.find(' ');
    if (pos == std::string::npos || pos == 0)
      throw ParseError("expected 'word v1 ... v_dw'", line_no);
    const std::string word = line.substr(0, pos);
    std::vector<float> values;
    const char* p = line.c_str() + pos;
    char* end = nullptr;
    for (;;) {
      const float v = std::strtof(p, &end);
      if (end == p) break;
      values.push_back(v);
      p = end;
    }
    if (values.empty()) throw ParseError("no vector components", line_no);
    if (wv.dw == 0) wv.dw = values.size();
    if (values.size() != wv.dw)
      throw ParseError("inconsistent dimension (" + std::to_string(values.size()) +
                           " vs " + std::to_string(wv.dw) + ")",
                       line_no);
    if (wv.vocabulary.emplace(word, static_cast<std::uint32_t>(wv.size())).second)
      wv.matrix.insert(wv.matrix.end(), values.begin(), values.end());
  }
  if (wv.size() == 0) throw ParseError("empty word-vector file", line_no ? line_no : 1);
  return wv;
}

// Binary cache: 8-byte magic, u64 rows, u64 cols, rows*cols little-endian
// f32 payload, then the vocabulary as newline-separated words in row order.
inline constexpr char kWordVectorMagic[8] = {'M', 'S', 'A', 'W', 'V', 'E', 'C', '1'};

inline void save_word_vectors_cache(const WordVectors& wv,
                                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kWordVectorMagic, 8);
  detail::write_u64_le(out, wv.size());
  detail::write_u64_le(out, wv.dw);
  for (const float f : wv.matrix) detail::write_f32_le(out, f);
  std::vector<const std::string*> words(wv.size());
  for (const auto& [w, i] : wv.vocabulary) words[i] = &w;
  for (const std::string* w : words) out << *w << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline WordVectors load_word_vectors_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache '" + path.string() + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kWordVectorMagic, 8) != 0)
    throw ParseError("bad word-vector cache magic", 1);
  WordVectors wv;
  const std::uint64_t rows = detail::read_u64_le(in);
  wv.dw = detail::read_u64_le(in);
  wv.matrix.resize(rows * wv.dw);
  for (float& f : wv.matrix) f = detail::read_f32_le(in);
  std::string word;
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (!std::getline(in, word)) throw ParseError("truncated vocabulary section", r + 1);
    wv.vocabulary.emplace(word, static_cast<std::uint32_t>(r));
  }
  return wv;
}

}  // namespace msa
