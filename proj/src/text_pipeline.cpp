#include "cobweb/text_pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace cobweb {

namespace {

bool is_token_char(unsigned char c) { return std::isalnum(c) != 0; }

// Validates UTF-8 and reports the byte offset of the first bad sequence.
void require_utf8(const std::string& text) {
  std::size_t i = 0;
  const auto fail = [&](std::size_t at) {
    throw Error("invalid UTF-8 at byte " + std::to_string(at));
  };
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      if (c < 0xC2) fail(i);  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      if (c > 0xF4) fail(i);
    } else {
      fail(i);
      return;
    }
    if (i + extra >= text.size()) fail(i);
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) fail(i);
    i += extra + 1;
  }
}

std::string apply_lemma(std::string token, const LemmaTable* lemmas) {
  if (lemmas) {
    auto it = lemmas->find(token);
    if (it != lemmas->end()) return it->second;
  }
  return token;
}

}  // namespace

TokenStream normalize(const std::string& text, const LemmaTable* lemmas) {
  require_utf8(text);
  TokenStream out;
  Sentence sentence;
  std::string token;
  std::size_t token_start = 0;

  const auto flush_token = [&]() {
    if (token.empty()) return;
    if (sentence.tokens.empty()) sentence.offset = token_start;
    sentence.tokens.push_back(apply_lemma(std::move(token), lemmas));
    token.clear();
  };
  const auto flush_sentence = [&]() {
    flush_token();
    if (!sentence.tokens.empty()) out.sentences.push_back(std::move(sentence));
    sentence = Sentence{};
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_token_char(c)) {
      if (token.empty()) token_start = i;
      token.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !token.empty() && i + 1 < text.size() &&
               is_token_char(static_cast<unsigned char>(text[i + 1]))) {
      token.push_back('\'');
    } else if (c == '.' || c == '!' || c == '?') {
      flush_sentence();
    } else {
      flush_token();
    }
  }
  flush_sentence();
  return out;
}

Vocabulary build_vocab(const std::vector<TokenStream>& streams, int min_count) {
  if (min_count < 1) throw Error("min_count must be at least 1");
  std::unordered_map<std::string, std::int64_t> freq;
  for (const TokenStream& stream : streams)
    for (const Sentence& s : stream.sentences)
      for (const std::string& tok : s.tokens) ++freq[tok];

  Vocabulary vocab;
  for (const TokenStream& stream : streams)
    for (const Sentence& s : stream.sentences)
      for (const std::string& tok : s.tokens)
        if (freq[tok] >= min_count) vocab.intern(tok);
  return vocab;
}

namespace {

// Shared by training instances and masked test instances: gathers the
// in-vocabulary words lying within `window` positions of `center` into the
// context slots. `tokens[center]` itself is ignored (it is the anchor slot).
void fill_context(Instance& inst, const std::vector<std::string>& tokens,
                  std::size_t center, const Vocabulary& vocab, int window) {
  const std::size_t lo =
      center >= static_cast<std::size_t>(window) ? center - window : 0;
  for (std::size_t q = lo; q < center; ++q) {
    if (auto id = vocab.find(tokens[q])) {
      const std::size_t d = center - q - 1;  // tokens in between
      inst.add(Attr::context_before, *id, 1.0 / static_cast<double>(d + 1));
    }
  }
  const std::size_t hi =
      std::min(tokens.size(), center + static_cast<std::size_t>(window) + 1);
  for (std::size_t q = center + 1; q < hi; ++q) {
    if (auto id = vocab.find(tokens[q])) {
      const std::size_t d = q - center - 1;
      inst.add(Attr::context_after, *id, 1.0 / static_cast<double>(d + 1));
    }
  }
}

}  // namespace

std::vector<Instance> generate_instances(const TokenStream& stream,
                                         const Vocabulary& vocab, int window) {
  if (window < 1) throw Error("window must be at least 1");
  std::vector<Instance> out;
  for (const Sentence& s : stream.sentences) {
    for (std::size_t p = 0; p < s.tokens.size(); ++p) {
      const auto anchor = vocab.find(s.tokens[p]);
      if (!anchor) continue;
      Instance inst;
      inst.set_anchor(*anchor);
      fill_context(inst, s.tokens, p, vocab, window);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

namespace {

ClozeItem parse_cloze_line(const std::string& line, std::size_t line_no,
                           const LemmaTable* lemmas) {
  const auto fail = [&](const std::string& why) {
    throw Error("line " + std::to_string(line_no) + ": " + why);
  };

  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("not a valid record (") + e.what() + ")");
  }
  if (!record.is_object()) fail("record must be an object");
  if (!record.contains("sentence") || !record["sentence"].is_string())
    fail("missing string field 'sentence'");
  if (!record.contains("options") || !record["options"].is_array())
    fail("missing array field 'options'");
  if (!record.contains("answer") || !record["answer"].is_number_integer())
    fail("missing integer field 'answer'");

  const std::string sentence = record["sentence"].get<std::string>();
  const auto& options = record["options"];
  if (options.size() != 5) fail("expected exactly 5 options, got " +
                                std::to_string(options.size()));
  const int answer = record["answer"].get<int>();
  if (answer < 0 || answer > 4) fail("answer index must be in [0, 4]");

  const std::size_t mask = sentence.find(kMaskMarker);
  if (mask == std::string::npos) fail("sentence has no ____ mask");
  if (sentence.find(kMaskMarker, mask + 4) != std::string::npos)
    fail("sentence has more than one ____ mask");

  ClozeItem item;
  const TokenStream left = normalize(sentence.substr(0, mask), lemmas);
  const TokenStream right = normalize(sentence.substr(mask + 4), lemmas);
  for (const Sentence& s : left.sentences)
    item.tokens.insert(item.tokens.end(), s.tokens.begin(), s.tokens.end());
  item.mask_index = item.tokens.size();
  for (const Sentence& s : right.sentences)
    item.tokens.insert(item.tokens.end(), s.tokens.begin(), s.tokens.end());

  for (std::size_t i = 0; i < 5; ++i) {
    if (!options[i].is_string()) fail("options must be strings");
    const TokenStream ts = normalize(options[i].get<std::string>(), lemmas);
    if (ts.sentences.size() == 1 && ts.sentences[0].tokens.size() == 1) {
      item.options[i] = ts.sentences[0].tokens[0];
    } else {
      // Options that do not normalize to a single token can never match the
      // vocabulary; keep the raw text so reports stay readable.
      item.options[i] = options[i].get<std::string>();
    }
  }
  item.answer = answer;
  return item;
}

}  // namespace

std::vector<ClozeItem> parse_cloze_items(std::istream& in,
                                         const LemmaTable* lemmas) {
  std::vector<ClozeItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    items.push_back(parse_cloze_line(line, line_no, lemmas));
  }
  return items;
}

std::vector<ClozeItem> load_cloze_items(const std::filesystem::path& path,
                                        const LemmaTable* lemmas) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cloze file " + path.string());
  return parse_cloze_items(in, lemmas);
}

std::string render_cloze_sentence(const ClozeItem& item) {
  std::string out;
  for (std::size_t i = 0; i <= item.tokens.size(); ++i) {
    if (i == item.mask_index) {
      if (!out.empty()) out.push_back(' ');
      out += kMaskMarker;
    }
    if (i < item.tokens.size()) {
      if (!out.empty()) out.push_back(' ');
      out += item.tokens[i];
    }
  }
  return out;
}

void write_cloze_items(const std::vector<ClozeItem>& items,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cloze file " + path.string());
  for (const ClozeItem& item : items) {
    nlohmann::json record;
    record["sentence"] = render_cloze_sentence(item);
    record["options"] = item.options;
    record["answer"] = item.answer;
    out << record.dump() << "\n";
  }
  if (!out) throw Error("failed writing cloze file " + path.string());
}

Instance cloze_to_instance(const ClozeItem& item, const Vocabulary& vocab,
                           int window) {
  if (window < 1) throw Error("window must be at least 1");
  if (item.mask_index > item.tokens.size())
    throw Error("mask position lies outside the sentence");

  // Rebuild the sentence with the mask occupying its own position so the
  // distances match generate_instances on the unmasked sentence.
  Instance inst;
  const auto& toks = item.tokens;
  const std::size_t center = item.mask_index;
  const std::size_t lo =
      center >= static_cast<std::size_t>(window) ? center - window : 0;
  for (std::size_t q = lo; q < center; ++q) {
    if (auto id = vocab.find(toks[q])) {
      const std::size_t d = center - q - 1;
      inst.add(Attr::context_before, *id, 1.0 / static_cast<double>(d + 1));
    }
  }
  const std::size_t hi = std::min(
      toks.size(), center + static_cast<std::size_t>(window));
  for (std::size_t q = center; q < hi; ++q) {
    // token index q sits at sentence position q + 1 once the mask is counted
    const std::size_t d = q - center;
    if (auto id = vocab.find(toks[q]))
      inst.add(Attr::context_after, *id, 1.0 / static_cast<double>(d + 1));
  }
  if (inst.empty())
    throw Error("unanswerable: no context word is in the vocabulary");
  return inst;
}

void shuffle_instances(std::vector<Instance>& instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (instances.size() < 2) return;
  for (std::size_t i = instances.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(instances[i], instances[j]);
  }
}

std::vector<std::filesystem::path> discover_corpus_files(
    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (!fs::exists(dir) || !fs::is_directory(dir))
    throw Error("corpus directory " + dir.string() + " does not exist");
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace cobweb
