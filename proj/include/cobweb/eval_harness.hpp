#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cobweb/concept_tree.hpp"
#include "cobweb/text_pipeline.hpp"

namespace cobweb {

enum class PredictionMode : std::uint8_t { multi, leaf, basic };

const char* to_string(PredictionMode m);
PredictionMode prediction_mode_from_string(const std::string& s);

struct CheckpointSchedule {
  std::int64_t examples_per_checkpoint = 416667;
  int num_checkpoints = 12;
};

// One accuracy measurement. Unanswerable items (no usable context, or no
// option in the vocabulary) score as incorrect and are also counted on the
// side; n_max is 0 for the modes that take no expansion budget.
struct EvalRecord {
  int checkpoint = 0;
  std::string mode;
  int n_max = 0;
  double accuracy = 0.0;
  std::int64_t answered = 0;
  std::int64_t unanswerable = 0;
  double seconds = 0.0;
};

class CheckpointSink {
 public:
  virtual ~CheckpointSink() = default;
  virtual void write(int index, ConceptTree& tree) = 0;
};

// Saves checkpoints as <prefix>model.ckpt-<index>.json.
class FileCheckpointSink : public CheckpointSink {
 public:
  explicit FileCheckpointSink(std::string prefix) : prefix_(std::move(prefix)) {}
  void write(int index, ConceptTree& tree) override;
  const std::vector<std::filesystem::path>& paths() const { return paths_; }
  static std::filesystem::path checkpoint_path(const std::string& prefix,
                                               int index);

 private:
  std::string prefix_;
  std::vector<std::filesystem::path> paths_;
};

struct TrainResult {
  std::int64_t instances_learned = 0;
  int checkpoints_written = 0;
  bool ended_early = false;  // ran out of instances before the full schedule
};

// Learns instances in order, handing the tree to `sink` after every
// examples_per_checkpoint of them. When the supply runs short the remaining
// portion is trained, a final checkpoint is written, and ended_early is set.
TrainResult train_with_checkpoints(ConceptTree& tree,
                                   std::span<const Instance> instances,
                                   const CheckpointSchedule& schedule,
                                   CheckpointSink& sink);

// Accuracy of `mode` over the items against a fixed tree. Items are
// independent, so they fan out across worker threads (capped by the
// COBWEB4L_THREADS environment variable); totals do not depend on the
// schedule. n_max only applies to multi-node prediction.
EvalRecord evaluate_checkpoint(const ConceptTree& tree,
                               std::span<const ClozeItem> items,
                               PredictionMode mode, int n_max,
                               int checkpoint_index);

// evaluate_checkpoint per expansion budget, multi-node mode. Values must be
// positive and strictly ascending.
std::vector<EvalRecord> sweep_nmax(const ConceptTree& tree,
                                   std::span<const ClozeItem> items,
                                   std::span<const int> values,
                                   int checkpoint_index);

inline constexpr std::array<int, 8> kDefaultSweepValues = {
    50, 100, 250, 500, 1000, 2000, 3000, 4000};

// Writes records as a CSV table (checkpoint, mode, n_max, accuracy,
// answered, seconds) in deterministic row order. Errors on an empty list.
void emit_curves(const std::vector<EvalRecord>& records,
                 const std::filesystem::path& path);
std::vector<EvalRecord> parse_curves(const std::filesystem::path& path);

// Published full-scale accuracy targets on the standard sentence-completion
// benchmark, used to position a user's own run.
struct ReferencePoint {
  PredictionMode mode;
  int n_max;  // 0 when not applicable
  double accuracy;
};
std::span<const ReferencePoint> reference_points();

// Side-by-side table of the final checkpoint's records against the
// reference accuracies, flagging deltas beyond `tolerance`.
std::string reference_comparison(std::span<const EvalRecord> records,
                                 double tolerance = 0.02);

}  // namespace cobweb
