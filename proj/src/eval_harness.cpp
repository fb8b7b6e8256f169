#include "cobweb/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cobweb/learner.hpp"
#include "cobweb/predictor.hpp"
#include "cobweb/serialization.hpp"

namespace cobweb {

const char* to_string(PredictionMode m) {
  switch (m) {
    case PredictionMode::multi: return "multi";
    case PredictionMode::leaf: return "leaf";
    case PredictionMode::basic: return "basic";
  }
  return "?";
}

PredictionMode prediction_mode_from_string(const std::string& s) {
  if (s == "multi") return PredictionMode::multi;
  if (s == "leaf") return PredictionMode::leaf;
  if (s == "basic") return PredictionMode::basic;
  throw Error("unknown prediction mode: " + s);
}

std::filesystem::path FileCheckpointSink::checkpoint_path(
    const std::string& prefix, int index) {
  return prefix + "model.ckpt-" + std::to_string(index) + ".json";
}

void FileCheckpointSink::write(int index, ConceptTree& tree) {
  const std::filesystem::path path = checkpoint_path(prefix_, index);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save(tree, path);
  paths_.push_back(path);
}

TrainResult train_with_checkpoints(ConceptTree& tree,
                                   std::span<const Instance> instances,
                                   const CheckpointSchedule& schedule,
                                   CheckpointSink& sink) {
  if (schedule.examples_per_checkpoint < 1)
    throw Error("examples_per_checkpoint must be positive");
  if (schedule.num_checkpoints < 1)
    throw Error("num_checkpoints must be positive");

  TrainResult result;
  std::size_t next = 0;
  for (int k = 1; k <= schedule.num_checkpoints; ++k) {
    std::int64_t taken = 0;
    while (taken < schedule.examples_per_checkpoint && next < instances.size()) {
      learn(tree, instances[next]);
      ++next;
      ++taken;
    }
    result.instances_learned += taken;
    if (taken > 0) {
      sink.write(k, tree);
      result.checkpoints_written = k;
    }
    if (next >= instances.size()) {
      result.ended_early = k < schedule.num_checkpoints ||
                           taken < schedule.examples_per_checkpoint;
      break;
    }
  }
  return result;
}

namespace {

int worker_count(std::size_t items) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("COBWEB4L_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = static_cast<unsigned>(cap);
  }
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(items, 1)));
}

enum class ItemOutcome : std::uint8_t { correct, incorrect, unanswerable };

ItemOutcome evaluate_item(const ConceptTree& tree, const ClozeItem& item,
                          PredictionMode mode, int n_max) {
  try {
    const Instance inst =
        cloze_to_instance(item, tree.vocabulary(), tree.config().window);
    PredictionResult result;
    switch (mode) {
      case PredictionMode::multi:
        result = predict_multi(tree, inst, Attr::anchor, n_max);
        break;
      case PredictionMode::leaf: {
        const std::vector<NodeId> path = categorize_greedy(tree, inst);
        result = predict_single(tree, path.back(), Attr::anchor);
        break;
      }
      case PredictionMode::basic: {
        const std::vector<NodeId> path = categorize_greedy(tree, inst);
        result = predict_single(tree, basic_level(tree, path), Attr::anchor);
        break;
      }
    }
    const std::span<const std::string> options(item.options.data(),
                                               item.options.size());
    const std::size_t chosen = score_options(result, options, tree.vocabulary());
    return chosen == static_cast<std::size_t>(item.answer)
               ? ItemOutcome::correct
               : ItemOutcome::incorrect;
  } catch (const Error&) {
    return ItemOutcome::unanswerable;
  }
}

}  // namespace

EvalRecord evaluate_checkpoint(const ConceptTree& tree,
                               std::span<const ClozeItem> items,
                               PredictionMode mode, int n_max,
                               int checkpoint_index) {
  if (mode == PredictionMode::multi && n_max < 1)
    throw Error("multi-node prediction needs n_max >= 1");

  const auto started = std::chrono::steady_clock::now();
  std::vector<ItemOutcome> outcomes(items.size(), ItemOutcome::incorrect);

  const int workers = worker_count(items.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i)
      outcomes[i] = evaluate_item(tree, items[i], mode, n_max);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= items.size()) return;
          outcomes[i] = evaluate_item(tree, items[i], mode, n_max);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  EvalRecord record;
  record.checkpoint = checkpoint_index;
  record.mode = to_string(mode);
  record.n_max = mode == PredictionMode::multi ? n_max : 0;
  record.answered = static_cast<std::int64_t>(items.size());
  std::int64_t correct = 0;
  for (ItemOutcome o : outcomes) {
    if (o == ItemOutcome::correct) ++correct;
    if (o == ItemOutcome::unanswerable) ++record.unanswerable;
  }
  record.accuracy = record.answered == 0
                        ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(record.answered);
  record.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return record;
}

std::vector<EvalRecord> sweep_nmax(const ConceptTree& tree,
                                   std::span<const ClozeItem> items,
                                   std::span<const int> values,
                                   int checkpoint_index) {
  if (values.empty()) throw Error("sweep needs at least one n_max value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 1) throw Error("sweep values must be positive");
    if (i > 0 && values[i] <= values[i - 1])
      throw Error("sweep values must be strictly ascending");
  }
  std::vector<EvalRecord> records;
  records.reserve(values.size());
  for (int v : values)
    records.push_back(
        evaluate_checkpoint(tree, items, PredictionMode::multi, v, checkpoint_index));
  return records;
}

namespace {

bool record_order(const EvalRecord& a, const EvalRecord& b) {
  if (a.checkpoint != b.checkpoint) return a.checkpoint < b.checkpoint;
  if (a.mode != b.mode) return a.mode < b.mode;
  return a.n_max < b.n_max;
}

}  // namespace

void emit_curves(const std::vector<EvalRecord>& records,
                 const std::filesystem::path& path) {
  if (records.empty()) throw Error("no evaluation records to write");
  std::vector<EvalRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), record_order);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write report " + path.string());
  out << "checkpoint,mode,n_max,accuracy,answered,seconds\n";
  for (const EvalRecord& r : sorted) {
    out << r.checkpoint << ',' << r.mode << ',' << r.n_max << ','
        << format_double(r.accuracy) << ',' << r.answered << ','
        << format_double(r.seconds) << "\n";
  }
  if (!out) throw Error("failed writing report " + path.string());
}

std::vector<EvalRecord> parse_curves(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "checkpoint,mode,n_max,accuracy,answered,seconds")
    throw Error("report " + path.string() + " has an unexpected header");

  std::vector<EvalRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    EvalRecord r;
    std::string cell;
    try {
      std::getline(row, cell, ',');
      r.checkpoint = std::stoi(cell);
      std::getline(row, r.mode, ',');
      std::getline(row, cell, ',');
      r.n_max = std::stoi(cell);
      std::getline(row, cell, ',');
      r.accuracy = std::stod(cell);
      std::getline(row, cell, ',');
      r.answered = std::stoll(cell);
      if (!std::getline(row, cell)) throw Error("short row");
      r.seconds = std::stod(cell);
    } catch (const std::exception&) {
      throw Error("report line " + std::to_string(line_no) + " is malformed");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::span<const ReferencePoint> reference_points() {
  static constexpr std::array<ReferencePoint, 5> points = {{
      {PredictionMode::multi, 1000, 0.3510},
      {PredictionMode::multi, 2000, 0.3712},
      {PredictionMode::multi, 3000, 0.3808},
      {PredictionMode::leaf, 0, 0.1875},
      {PredictionMode::basic, 0, 0.2356},
  }};
  return points;
}

std::string reference_comparison(std::span<const EvalRecord> records,
                                 double tolerance) {
  if (records.empty()) throw Error("no evaluation records to compare");
  int final_checkpoint = records[0].checkpoint;
  for (const EvalRecord& r : records)
    final_checkpoint = std::max(final_checkpoint, r.checkpoint);

  std::ostringstream out;
  out << "configuration        accuracy   reference  delta      within "
      << format_double(tolerance) << "\n";
  for (const ReferencePoint& ref : reference_points()) {
    const EvalRecord* match = nullptr;
    for (const EvalRecord& r : records) {
      if (r.checkpoint != final_checkpoint) continue;
      if (r.mode != to_string(ref.mode)) continue;
      if (ref.mode == PredictionMode::multi && r.n_max != ref.n_max) continue;
      match = &r;
      break;
    }
    std::string name = to_string(ref.mode);
    if (ref.mode == PredictionMode::multi)
      name += "@" + std::to_string(ref.n_max);
    name.resize(20, ' ');
    out << name << ' ';
    if (!match) {
      char row[96];
      std::snprintf(row, sizeof(row), "%-10s %-10.4f %-10s %s\n", "-",
                    ref.accuracy, "-", "no record");
      out << row;
      continue;
    }
    char row[96];
    const double delta = match->accuracy - ref.accuracy;
    std::snprintf(row, sizeof(row), "%-10.4f %-10.4f %+-10.4f %s\n",
                  match->accuracy, ref.accuracy, delta,
                  std::abs(delta) <= tolerance ? "yes" : "NO");
    out << row;
  }
  return out.str();
}

}  // namespace cobweb
