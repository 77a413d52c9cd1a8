#pragma once

// Treebank files on disk, gold-tree preparation, and sentence files.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "mbrparse/common.hpp"
#include "mbrparse/tree.hpp"

namespace mbrparse {

inline constexpr std::size_t kDefaultMaxSymbols = 40;

inline std::vector<ParseTree> read_treebank_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open treebank file " + path.string());
  try {
    return read_bracketed(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// Each path is a file or a directory; directories contribute their regular
// files in name order.
inline std::vector<ParseTree> load_treebank(const std::vector<std::filesystem::path>& paths) {
  std::vector<ParseTree> trees;
  for (const auto& path : paths) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
      for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(path);
    }
    for (const auto& f : files) {
      auto more = read_treebank_file(f);
      std::move(more.begin(), more.end(), std::back_inserter(trees));
    }
  }
  return trees;
}

struct PreparedTreebank {
  std::vector<ParseTree> trees;  // binarized, in input order
  std::size_t skipped = 0;       // over the symbol cap
};

// Binarizes every tree and drops those with more than `max_symbols` symbols
// (words plus nonterminal nodes, counted after binarization). 0 disables the cap.
inline PreparedTreebank prepare_treebank(const std::vector<ParseTree>& raw, std::size_t max_symbols) {
  PreparedTreebank out;
  for (const auto& t : raw) {
    ParseTree b = binarize(t);
    if (max_symbols != 0 && symbol_count(b) > max_symbols) {
      ++out.skipped;
      continue;
    }
    out.trees.push_back(std::move(b));
  }
  return out;
}

using Sentence = std::vector<std::string>;

// One space-tokenized sentence per line; blank lines are errors.
inline std::vector<Sentence> read_sentences(std::istream& in) {
  std::vector<Sentence> sentences;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    Sentence words;
    for (std::string w; fields >> w;) words.push_back(w);
    if (words.empty()) throw Error("empty sentence at line " + std::to_string(line_no));
    sentences.push_back(std::move(words));
  }
  return sentences;
}

inline std::vector<Sentence> read_sentences_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sentence file " + path.string());
  return read_sentences(in);
}

}  // namespace mbrparse
