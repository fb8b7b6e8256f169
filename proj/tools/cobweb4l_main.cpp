// Command-line front end: trains concept hierarchies from plain-text
// corpora, evaluates them on masked-word items, and pokes at saved models.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <span>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "cobweb/eval_harness.hpp"
#include "cobweb/learner.hpp"
#include "cobweb/predictor.hpp"
#include "cobweb/serialization.hpp"
#include "cobweb/text_pipeline.hpp"

namespace {

using namespace cobweb;

LemmaTable load_lemmas(const std::string& path) {
  LemmaTable table;
  std::ifstream in(path);
  if (!in) throw Error("cannot open lemma table " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token, lemma;
    if (!(row >> token >> lemma))
      throw Error("lemma table line " + std::to_string(line_no) +
                  ": expected 'token lemma'");
    table[token] = lemma;
  }
  return table;
}

struct CorpusData {
  std::vector<TokenStream> streams;
  Vocabulary vocab;
};

CorpusData read_corpus(const std::string& dir, int min_count,
                       const LemmaTable* lemmas) {
  const auto files = discover_corpus_files(dir);
  if (files.empty()) throw Error("no corpus files found in " + dir);
  CorpusData data;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    data.streams.push_back(normalize(text.str(), lemmas));
  }
  data.vocab = build_vocab(data.streams, min_count);
  return data;
}

int cmd_train(const std::string& corpus_dir, int window, int min_count,
              int checkpoints, std::int64_t per_checkpoint, std::uint64_t seed,
              const std::string& cu, const std::string& softmax_sign,
              double alpha, const std::string& lemma_path,
              const std::string& out_prefix) {
  LemmaTable lemmas;
  if (!lemma_path.empty()) lemmas = load_lemmas(lemma_path);
  const LemmaTable* lemma_ptr = lemma_path.empty() ? nullptr : &lemmas;

  CorpusData data = read_corpus(corpus_dir, min_count, lemma_ptr);

  std::vector<Instance> instances;
  for (const TokenStream& stream : data.streams) {
    auto batch = generate_instances(stream, data.vocab, window);
    std::move(batch.begin(), batch.end(), std::back_inserter(instances));
  }
  shuffle_instances(instances, seed);
  std::cerr << "vocabulary " << data.vocab.size() << " words, "
            << instances.size() << " instances\n";

  TreeConfig cfg;
  cfg.window = window;
  cfg.min_count = min_count;
  cfg.cu_variant = cu_variant_from_string(cu);
  cfg.softmax_sign = softmax_sign_from_string(softmax_sign);
  cfg.alpha = alpha;
  cfg.seed = seed;
  ConceptTree tree(cfg, std::move(data.vocab));

  CheckpointSchedule schedule{per_checkpoint, checkpoints};
  FileCheckpointSink sink(out_prefix);
  const TrainResult result =
      train_with_checkpoints(tree, instances, schedule, sink);
  if (result.ended_early)
    std::cerr << "warning: corpus exhausted after " << result.instances_learned
              << " instances; wrote " << result.checkpoints_written << " of "
              << checkpoints << " checkpoints\n";
  std::cout << "trained " << result.instances_learned << " instances into "
            << tree.node_count() << " nodes; " << result.checkpoints_written
            << " checkpoints under " << out_prefix << "\n";
  return 0;
}

int checkpoint_index_from_path(const std::string& model_path) {
  // model.ckpt-<k>.json contributes its index to reports; anything else is 0.
  const std::string name = std::filesystem::path(model_path).filename().string();
  const std::string prefix = "model.ckpt-";
  const auto at = name.rfind(prefix);
  if (at == std::string::npos) return 0;
  const auto end = name.find(".json", at);
  if (end == std::string::npos) return 0;
  try {
    return std::stoi(name.substr(at + prefix.size(), end - at - prefix.size()));
  } catch (const std::exception&) {
    return 0;
  }
}

void merge_report(const std::string& report_path,
                  std::vector<EvalRecord> fresh) {
  std::vector<EvalRecord> records;
  if (std::filesystem::exists(report_path))
    records = parse_curves(report_path);
  for (EvalRecord& r : fresh) {
    // replace any stale row for the same configuration
    records.erase(std::remove_if(records.begin(), records.end(),
                                 [&](const EvalRecord& old) {
                                   return old.checkpoint == r.checkpoint &&
                                          old.mode == r.mode &&
                                          old.n_max == r.n_max;
                                 }),
                  records.end());
    records.push_back(std::move(r));
  }
  emit_curves(records, report_path);
}

int cmd_eval(const std::string& model_path, const std::string& test_path,
             const std::string& mode_name, int n_max,
             const std::string& report_path, bool compare_reference,
             const std::string& lemma_path) {
  LemmaTable lemmas;
  if (!lemma_path.empty()) lemmas = load_lemmas(lemma_path);
  const ConceptTree tree = load(model_path);
  const auto items =
      load_cloze_items(test_path, lemma_path.empty() ? nullptr : &lemmas);
  const PredictionMode mode = prediction_mode_from_string(mode_name);

  const EvalRecord record = evaluate_checkpoint(
      tree, items, mode, n_max, checkpoint_index_from_path(model_path));
  std::cout << "checkpoint " << record.checkpoint << " mode " << record.mode;
  if (mode == PredictionMode::multi) std::cout << " n_max " << record.n_max;
  std::cout << ": accuracy " << record.accuracy << " over " << record.answered
            << " items (" << record.unanswerable << " unanswerable) in "
            << record.seconds << "s\n";

  if (!report_path.empty()) {
    merge_report(report_path, {record});
    if (compare_reference)
      std::cout << reference_comparison(parse_curves(report_path));
  } else if (compare_reference) {
    std::cout << reference_comparison(std::vector<EvalRecord>{record});
  }
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& sentence,
                std::vector<std::string> options, const std::string& mode_name,
                int n_max, const std::string& lemma_path) {
  if (options.size() != 5) throw Error("exactly 5 options are required");
  LemmaTable lemmas;
  if (!lemma_path.empty()) lemmas = load_lemmas(lemma_path);
  const LemmaTable* lemma_ptr = lemma_path.empty() ? nullptr : &lemmas;
  const ConceptTree tree = load(model_path);

  // Reuse the cloze line parser by building a record for the sentence.
  std::ostringstream line;
  nlohmann::json record;
  record["sentence"] = sentence;
  record["options"] = options;
  record["answer"] = 0;
  line << record.dump() << "\n";
  std::istringstream in(line.str());
  const std::vector<ClozeItem> items = parse_cloze_items(in, lemma_ptr);
  const ClozeItem& item = items.at(0);

  const Instance inst =
      cloze_to_instance(item, tree.vocabulary(), tree.config().window);
  PredictionResult result;
  const PredictionMode mode = prediction_mode_from_string(mode_name);
  switch (mode) {
    case PredictionMode::multi:
      result = predict_multi(tree, inst, Attr::anchor, n_max);
      break;
    case PredictionMode::leaf:
      result = predict_single(tree, categorize_greedy(tree, inst).back(),
                              Attr::anchor);
      break;
    case PredictionMode::basic: {
      const auto path = categorize_greedy(tree, inst);
      result = predict_single(tree, basic_level(tree, path), Attr::anchor);
      break;
    }
  }
  const std::span<const std::string> opts(item.options.data(),
                                          item.options.size());
  const std::size_t chosen = score_options(result, opts, tree.vocabulary());
  for (std::size_t i = 0; i < opts.size(); ++i) {
    double p = 0.0;
    if (auto id = tree.vocabulary().find(opts[i])) {
      auto it = result.distribution.find(*id);
      if (it != result.distribution.end()) p = it->second;
    }
    std::cout << (i == chosen ? "> " : "  ") << opts[i] << "  " << p << "\n";
  }
  std::cout << "chosen: " << opts[chosen] << " (option " << chosen << ")\n";
  return 0;
}

int cmd_sweep(const std::string& model_path, const std::string& test_path,
              std::vector<int> values, const std::string& report_path,
              bool compare_reference, const std::string& lemma_path) {
  LemmaTable lemmas;
  if (!lemma_path.empty()) lemmas = load_lemmas(lemma_path);
  const ConceptTree tree = load(model_path);
  const auto items =
      load_cloze_items(test_path, lemma_path.empty() ? nullptr : &lemmas);

  const std::vector<EvalRecord> records =
      sweep_nmax(tree, items, values, checkpoint_index_from_path(model_path));
  for (const EvalRecord& r : records)
    std::cout << "n_max " << r.n_max << ": accuracy " << r.accuracy << " ("
              << r.seconds << "s, " << r.seconds / std::max<std::int64_t>(r.answered, 1)
              << "s/item)\n";
  if (!report_path.empty()) {
    merge_report(report_path, records);
    if (compare_reference)
      std::cout << reference_comparison(parse_curves(report_path));
  } else if (compare_reference) {
    std::cout << reference_comparison(records);
  }
  return 0;
}

int cmd_inspect(const std::string& model_path, NodeId node_id, int top) {
  const ConceptTree tree = load(model_path);
  if (!tree.has_node(node_id))
    throw Error("model has no node " + std::to_string(node_id));
  const ConceptNode& n = tree.node(node_id);

  std::cout << "node " << n.id;
  if (n.parent == kNoNode)
    std::cout << " (root)";
  else
    std::cout << " parent " << n.parent;
  std::cout << " instances " << n.count << "\n";
  if (n.parent != kNoNode) {
    std::cout << "P(node|parent) " << tree.node_prob(node_id) << "  cu-info "
              << tree.cu_info(node_id) << "  cu-prob "
              << tree.cu_probabilistic(node_id) << "\n";
  }
  std::cout << "uncertainty " << tree.node_uncertainty(node_id) << "\n";
  std::cout << "children:";
  if (n.is_leaf()) std::cout << " (leaf)";
  for (NodeId c : n.children)
    std::cout << " " << c << "(n=" << tree.node(c).count << ")";
  std::cout << "\n";

  for (Attr a : kAllAttrs) {
    const AttrStats& s = n.attr(a);
    std::cout << attr_name(a) << ": presence " << s.presence << ", "
              << s.distinct() << " words";
    std::vector<std::pair<double, WordId>> ranked;
    ranked.reserve(s.tallies.size());
    for (const auto& [w, t] : s.tallies) ranked.push_back({t, w});
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
      return x.first > y.first;
    });
    if (ranked.size() > static_cast<std::size_t>(top)) ranked.resize(top);
    for (const auto& [t, w] : ranked)
      std::cout << "  " << tree.vocabulary().token(w) << ":" << t;
    std::cout << "\n";
  }
  return 0;
}

int cmd_make_cloze(const std::string& corpus_dir, const std::string& out_path,
                   int count, std::uint64_t seed, int min_count,
                   const std::string& lemma_path) {
  LemmaTable lemmas;
  if (!lemma_path.empty()) lemmas = load_lemmas(lemma_path);
  const LemmaTable* lemma_ptr = lemma_path.empty() ? nullptr : &lemmas;
  CorpusData data = read_corpus(corpus_dir, min_count, lemma_ptr);

  // Corpus frequency per vocabulary word, for picking distractors of
  // similar frequency to the masked word.
  std::vector<std::int64_t> freq(data.vocab.size(), 0);
  for (const TokenStream& stream : data.streams)
    for (const Sentence& s : stream.sentences)
      for (const std::string& tok : s.tokens)
        if (auto id = data.vocab.find(tok)) ++freq[*id];

  std::vector<const Sentence*> sentences;
  for (const TokenStream& stream : data.streams)
    for (const Sentence& s : stream.sentences)
      if (s.tokens.size() >= 3) sentences.push_back(&s);
  if (sentences.empty()) throw Error("corpus has no usable sentences");

  std::mt19937_64 rng(seed);
  std::vector<ClozeItem> items;
  std::size_t attempts = 0;
  const std::size_t max_attempts = static_cast<std::size_t>(count) * 200 + 1000;
  while (items.size() < static_cast<std::size_t>(count) &&
         attempts < max_attempts) {
    ++attempts;
    const Sentence& s = *sentences[rng() % sentences.size()];
    const std::size_t pos = rng() % s.tokens.size();
    const auto anchor = data.vocab.find(s.tokens[pos]);
    if (!anchor) continue;

    // any other in-vocabulary context word keeps the item answerable
    bool has_context = false;
    for (std::size_t q = 0; q < s.tokens.size() && !has_context; ++q)
      if (q != pos && data.vocab.find(s.tokens[q])) has_context = true;
    if (!has_context) continue;

    // distractors: nearest log corpus frequencies, excluding sentence words
    const double log_anchor = std::log(static_cast<double>(freq[*anchor]));
    std::vector<std::pair<double, WordId>> candidates;
    for (WordId w = 0; w < data.vocab.size(); ++w) {
      if (w == *anchor) continue;
      const std::string& tok = data.vocab.token(w);
      if (std::find(s.tokens.begin(), s.tokens.end(), tok) != s.tokens.end())
        continue;
      candidates.push_back(
          {std::abs(std::log(static_cast<double>(freq[w])) - log_anchor), w});
    }
    if (candidates.size() < 4) continue;
    std::nth_element(candidates.begin(), candidates.begin() + 3,
                     candidates.end());
    candidates.resize(4);
    std::sort(candidates.begin(), candidates.end());

    ClozeItem item;
    item.tokens = s.tokens;
    item.tokens.erase(item.tokens.begin() + static_cast<std::ptrdiff_t>(pos));
    item.mask_index = pos;
    std::array<std::string, 5> opts;
    opts[0] = data.vocab.token(*anchor);
    for (std::size_t i = 0; i < 4; ++i)
      opts[i + 1] = data.vocab.token(candidates[i].second);
    // place the answer at a seeded random slot
    const std::size_t slot = rng() % 5;
    std::swap(opts[0], opts[slot]);
    item.options = opts;
    item.answer = static_cast<int>(slot);
    items.push_back(std::move(item));
  }
  if (items.size() < static_cast<std::size_t>(count))
    std::cerr << "warning: built only " << items.size() << " of " << count
              << " items\n";
  if (items.empty()) throw Error("could not build any cloze items");
  write_cloze_items(items, out_path);
  std::cout << "wrote " << items.size() << " items to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental concept-hierarchy language model"};
  app.require_subcommand(1);

  // train
  std::string corpus_dir, out_prefix, cu = "info", softmax_sign = "positive";
  std::string lemma_path;
  int window = 10, min_count = 3, checkpoints = 12;
  std::int64_t per_checkpoint = 416667;
  std::uint64_t seed = 123;
  double alpha = 0.001;
  auto* train = app.add_subcommand("train", "build a model from a text corpus");
  train->add_option("--corpus", corpus_dir, "directory of plain-text files")
      ->required();
  train->add_option("--window", window, "context window on each side");
  train->add_option("--min-count", min_count, "minimum corpus frequency");
  train->add_option("--checkpoints", checkpoints, "number of checkpoints");
  train->add_option("--per-checkpoint", per_checkpoint,
                    "instances per checkpoint");
  train->add_option("--seed", seed, "shuffle seed");
  train->add_option("--cu", cu, "category utility variant: info|prob")
      ->check(CLI::IsMember({"info", "prob"}));
  train->add_option("--softmax-sign", softmax_sign,
                    "mixture weighting sign: positive|negative")
      ->check(CLI::IsMember({"positive", "negative"}));
  train->add_option("--alpha", alpha, "smoothing constant");
  train->add_option("--lemmas", lemma_path, "token->lemma table (two columns)");
  train->add_option("--out", out_prefix, "checkpoint path prefix")->required();

  // eval
  std::string model_path, test_path, mode = "multi", report_path;
  int n_max = 0;
  bool compare_reference = false;
  auto* eval = app.add_subcommand("eval", "score a model on cloze items");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--test", test_path, "cloze items file")->required();
  eval->add_option("--mode", mode, "multi|leaf|basic")
      ->check(CLI::IsMember({"multi", "leaf", "basic"}));
  auto* eval_nmax = eval->add_option("--nmax", n_max, "expansion budget");
  eval->add_option("--report", report_path, "CSV report to write/update");
  eval->add_flag("--compare-reference", compare_reference,
                 "print the comparison against published accuracies");
  eval->add_option("--lemmas", lemma_path, "token->lemma table");

  // predict
  std::string sentence;
  std::vector<std::string> options;
  auto* predict = app.add_subcommand("predict", "score options for one sentence");
  predict->add_option("--model", model_path, "model file")->required();
  predict->add_option("--sentence", sentence, "sentence with one ____ mask")
      ->required();
  predict->add_option("--options", options, "five comma-separated words")
      ->required()
      ->delimiter(',');
  predict->add_option("--mode", mode, "multi|leaf|basic")
      ->check(CLI::IsMember({"multi", "leaf", "basic"}));
  auto* predict_nmax = predict->add_option("--nmax", n_max, "expansion budget");
  predict->add_option("--lemmas", lemma_path, "token->lemma table");

  // sweep-nmax
  std::vector<int> sweep_values(kDefaultSweepValues.begin(),
                                kDefaultSweepValues.end());
  auto* sweep = app.add_subcommand("sweep-nmax",
                                   "evaluate across expansion budgets");
  sweep->add_option("--model", model_path, "model file")->required();
  sweep->add_option("--test", test_path, "cloze items file")->required();
  sweep->add_option("--values", sweep_values, "ascending n_max values")
      ->delimiter(',');
  sweep->add_option("--report", report_path, "CSV report to write/update");
  sweep->add_flag("--compare-reference", compare_reference,
                  "print the comparison against published accuracies");
  sweep->add_option("--lemmas", lemma_path, "token->lemma table");

  // inspect
  NodeId node_id = 0;
  int top = 12;
  auto* inspect = app.add_subcommand("inspect", "print one node of a model");
  inspect->add_option("--model", model_path, "model file")->required();
  inspect->add_option("--node", node_id, "node id")->required();
  inspect->add_option("--top", top, "tallies to print per attribute");

  // make-cloze
  std::string out_path;
  int count = 1040;
  auto* make_cloze = app.add_subcommand(
      "make-cloze", "sample five-option masked items from a corpus");
  make_cloze->add_option("--corpus", corpus_dir, "directory of plain-text files")
      ->required();
  make_cloze->add_option("--out", out_path, "items file to write")->required();
  make_cloze->add_option("--count", count, "number of items");
  make_cloze->add_option("--seed", seed, "sampling seed");
  make_cloze->add_option("--min-count", min_count, "minimum corpus frequency");
  make_cloze->add_option("--lemmas", lemma_path, "token->lemma table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(corpus_dir, window, min_count, checkpoints,
                       per_checkpoint, seed, cu, softmax_sign, alpha,
                       lemma_path, out_prefix);
    if (eval->parsed()) {
      const bool is_multi = mode == "multi";
      if (is_multi && eval_nmax->count() == 0)
        throw CLI::ValidationError("eval", "--nmax is required for --mode multi");
      if (!is_multi && eval_nmax->count() > 0)
        throw CLI::ValidationError(
            "eval", "--nmax only applies to --mode multi, not " + mode);
      return cmd_eval(model_path, test_path, mode, n_max, report_path,
                      compare_reference, lemma_path);
    }
    if (predict->parsed()) {
      const bool is_multi = mode == "multi";
      if (is_multi && predict_nmax->count() == 0)
        throw CLI::ValidationError("predict",
                                   "--nmax is required for --mode multi");
      if (!is_multi && predict_nmax->count() > 0)
        throw CLI::ValidationError(
            "predict", "--nmax only applies to --mode multi, not " + mode);
      return cmd_predict(model_path, sentence, options, mode, n_max, lemma_path);
    }
    if (sweep->parsed())
      return cmd_sweep(model_path, test_path, sweep_values, report_path,
                       compare_reference, lemma_path);
    if (inspect->parsed()) return cmd_inspect(model_path, node_id, top);
    if (make_cloze->parsed())
      return cmd_make_cloze(corpus_dir, out_path, count, seed, min_count,
                            lemma_path);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
