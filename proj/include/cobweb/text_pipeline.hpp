#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "cobweb/instance.hpp"
#include "cobweb/vocabulary.hpp"

namespace cobweb {

// Optional token -> lemma rewrite applied after lowercasing.
using LemmaTable = std::unordered_map<std::string, std::string>;

struct Sentence {
  std::vector<std::string> tokens;
  std::size_t offset = 0;  // byte offset of the first token in the source
};

struct TokenStream {
  std::vector<Sentence> sentences;
};

inline constexpr const char* kMaskMarker = "____";

// Lowercased word tokens split into sentences at . ! ? boundaries. Tokens
// are runs of ASCII alphanumerics, keeping apostrophes between letters;
// everything else separates. Input must be valid UTF-8.
TokenStream normalize(const std::string& text, const LemmaTable* lemmas = nullptr);

// Tokens occurring at least min_count times across the streams, with dense
// ids in order of first occurrence.
Vocabulary build_vocab(const std::vector<TokenStream>& streams, int min_count);

// One instance per in-vocabulary token: the token anchors the instance and
// the in-vocabulary words within `window` positions on each side join the
// context slots with weight 1/(d+1), d being the number of tokens (of any
// kind) between word and anchor. Windows do not cross sentence boundaries.
std::vector<Instance> generate_instances(const TokenStream& stream,
                                         const Vocabulary& vocab, int window);

// A masked test sentence: `tokens` excludes the mask itself, which sits at
// position mask_index; exactly one of the five options fills it correctly.
struct ClozeItem {
  std::vector<std::string> tokens;
  std::size_t mask_index = 0;
  std::array<std::string, 5> options;
  int answer = 0;

  bool operator==(const ClozeItem&) const = default;
};

// Reads items from line-delimited JSON records {"sentence": ..with one
// ____.., "options": [5 words], "answer": 0-4}, normalizing text the same
// way training does. Malformed lines raise Error naming the line number.
std::vector<ClozeItem> load_cloze_items(const std::filesystem::path& path,
                                        const LemmaTable* lemmas = nullptr);
std::vector<ClozeItem> parse_cloze_items(std::istream& in,
                                         const LemmaTable* lemmas = nullptr);

void write_cloze_items(const std::vector<ClozeItem>& items,
                       const std::filesystem::path& path);
std::string render_cloze_sentence(const ClozeItem& item);

// Masked-anchor instance for an item: the anchor slot stays empty and the
// context slots are filled exactly as generate_instances would around the
// mask position. Errors when no context word is in the vocabulary.
Instance cloze_to_instance(const ClozeItem& item, const Vocabulary& vocab,
                           int window);

// Deterministic in-place shuffle (seeded linear walk, stable across
// platforms and standard library versions).
void shuffle_instances(std::vector<Instance>& instances, std::uint64_t seed);

// Regular files under `dir`, recursively, sorted by path.
std::vector<std::filesystem::path> discover_corpus_files(
    const std::filesystem::path& dir);

}  // namespace cobweb
