#pragma once

// Training loop, inference over datasets, evaluation and hyperparameter sweeps.

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slt/dataset.hpp"
#include "slt/metrics.hpp"
#include "slt/model.hpp"

namespace slt {

// One line of telemetry per optimizer step.
struct StepTelemetry {
  std::size_t step = 0;   // 1-based update number
  std::size_t epoch = 0;  // 0-based
  double lr = 0.0;
  double loss = 0.0;
  double l_ce = 0.0;
  double l_itl = 0.0;
  std::size_t triplets = 0;
  std::size_t skipped = 0;
  std::size_t anchors = 0;  // distinct anchors in the batch
  double grad_norm = 0.0;   // before clipping
  double pos_sim = 0.0;     // mean over the step's triplets
  double neg_sim = 0.0;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // checkpoint/ and telemetry.jsonl; empty = none
  std::optional<std::filesystem::path> resume_from;
  // Stop after this many total updates (0 = run every epoch).
  std::size_t max_steps = 0;
  // Worker threads for the per-sample forward passes; 0 reads SLT_NUM_THREADS
  // (default 1).
  std::size_t threads = 0;
  std::ostream* log = nullptr;  // one progress line per epoch
  std::function<void(const StepTelemetry&)> on_step;
};

struct TrainResult {
  std::vector<StepTelemetry> telemetry;  // steps run in this call
  std::size_t step = 0;                  // total updates so far
  std::size_t epoch = 0;                 // completed epochs
};

// Subword model over the training translations and the anchor vocabulary
// selected from them by the configured preset.
BpeModel build_bpe(const TrainConfig& config, const std::vector<std::string>& texts);
AnchorVocab build_anchors(const TrainConfig& config, const std::vector<std::string>& texts,
                          const Lexicon& lexicon = Lexicon::builtin());

// Runs mini-batch training on `model` in place. With `resume_from` the model
// parameters, optimizer state and step counter are restored first (the
// checkpoint's config must match the model's). Throws NumericError on a
// non-finite loss.
TrainResult train(SignTranslator& model, const std::vector<Sample>& samples,
                  const TrainOptions& options = {});

// Per-sample training objective terms without an update, for checks and
// probes. Uses dropout off.
struct LossBreakdown {
  double loss = 0.0;
  double l_ce = 0.0;
  double l_itl = 0.0;
  std::size_t triplets = 0;
};
LossBreakdown evaluate_loss(const SignTranslator& model, const std::vector<Sample>& batch,
                            std::uint64_t triplet_seed);

// Mean positive and negative cosine similarity of anchor query results over
// every (anchor, positive, negative) combination inside consecutive batches.
struct ConceptProbe {
  double pos_sim = 0.0;
  double neg_sim = 0.0;
  std::size_t pairs = 0;
};
ConceptProbe probe_concepts(const SignTranslator& model, const std::vector<Sample>& samples,
                            std::size_t batch_size);

struct Translation {
  std::string id;
  std::string hypothesis;
  std::vector<std::size_t> tokens;
  double score = 0.0;
  bool finished = false;
};
std::vector<Translation> translate_all(const SignTranslator& model,
                                       const std::vector<Sample>& samples, std::size_t beam_size,
                                       std::size_t threads = 0);

struct Evaluation {
  EvalReport report;
  std::vector<Translation> translations;
};
// Throws ParameterError on an empty sample list.
Evaluation evaluate(const SignTranslator& model, const std::vector<Sample>& samples,
                    std::size_t beam_size, std::size_t threads = 0);
// report.json plus hypotheses.tsv (id, hypothesis, reference).
void write_evaluation(const Evaluation& eval, const std::vector<Sample>& samples,
                      const std::filesystem::path& out_dir);

struct SweepRun {
  double lambda = 0.0;
  double margin = 0.0;
  double final_l_ce = 0.0;   // mean over the last epoch
  double final_l_itl = 0.0;
  double initial_l_itl = 0.0;  // first step
  std::filesystem::path telemetry;
};

// Trains one fresh model per (lambda, margin) pair from `base` and records
// each run's telemetry under out_dir/lambda_<l>_margin_<m>/.
std::vector<SweepRun> sweep(const TrainConfig& base, const std::vector<Sample>& samples,
                            const std::vector<double>& lambdas, const std::vector<double>& margins,
                            const std::filesystem::path& out_dir,
                            const std::optional<std::filesystem::path>& embeddings = std::nullopt,
                            std::ostream* log = nullptr);

std::size_t resolve_threads(std::size_t requested);

}  // namespace slt
