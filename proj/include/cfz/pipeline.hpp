#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfz/config.hpp"
#include "cfz/datasets.hpp"
#include "cfz/evalmetrics.hpp"
#include "cfz/objectives.hpp"
#include "cfz/zslmodel.hpp"

namespace cfz {

/// Fine-tune map F and its Gaussian-similarity class matrix W′.
struct FinetuneResult {
  Mlp finetune;
  Matrix class_matrix;                    // d_f × K_seen
  std::vector<std::uint32_t> seen_classes;
  std::vector<double> loss_trace;         // mean batch loss per epoch
};

/// Minimises L_GAU(F(x), W′) over the seen training rows. With fine-tuning
/// disabled F stays at the identity and W′ holds the class means.
FinetuneResult stage_finetune_gaussian(const Dataset& data, const TrainConfig& config);

struct CvaeResult {
  ZslModelParams params;
  std::vector<double> loss_trace;          // mean total loss per epoch
  std::vector<LossValue> component_trace;  // mean components per epoch
};

/// Joint training of E, G, M and C on seen rows with F frozen.
CvaeResult stage_train_cvae(const Dataset& data, const FinetuneResult& finetune,
                            const TrainConfig& config);

/// `n_synth_per_unseen` decoder samples per unseen class (and per seen class
/// when `include_seen`), labelled with dataset class ids.
LabeledRows stage_synthesize_unseen(const ZslModelParams& params, const Matrix& attributes,
                                    const SplitSpec& split, const TrainConfig& config,
                                    bool include_seen = false);

/// Linear softmax head over an explicit class list.
struct SoftmaxClassifier {
  Mlp net;
  std::vector<std::uint32_t> classes;  // logit slot -> class id

  Matrix logits(const Matrix& features) const;
  std::vector<std::uint32_t> predict(const Matrix& features) const;
};

SoftmaxClassifier train_softmax_classifier(const Matrix& features,
                                           std::span<const std::uint32_t> labels,
                                           std::span<const std::uint32_t> classes,
                                           std::size_t epochs, std::size_t batch_size,
                                           double learning_rate, std::uint64_t seed);

/// Final classifier over `classes` (the unseen set for ZSL, seen ∪ unseen for GZSL).
SoftmaxClassifier stage_train_final_classifier(const Matrix& features,
                                               std::span<const std::uint32_t> labels,
                                               std::span<const std::uint32_t> classes,
                                               const TrainConfig& config);

/// Per-class top-1 after mapping test features through M(F(x)).
PerClassAccuracy evaluate_zsl(const SoftmaxClassifier& classifier, const ZslModelParams& params,
                              const LabeledRows& test);

struct GzslResult {
  double unseen = 0.0;  // U
  double seen = 0.0;    // S
  double harmonic = 0.0;
};
GzslResult evaluate_gzsl(const SoftmaxClassifier& classifier, const ZslModelParams& params,
                         const LabeledRows& seen_test, const LabeledRows& unseen_test);

/// Everything a full run produces.
struct PipelineResult {
  FinetuneResult finetune;
  CvaeResult cvae;
  double zsl_accuracy = 0.0;
  GzslResult gzsl;
  double nmi_raw = 0.0;        // k-means NMI of unseen test rows, raw features
  double nmi_embedded = 0.0;   // same rows after M(F(x))
  VarianceStats synthesized_variance;  // of synthesized unseen features
  std::map<std::string, double> stage_seconds;
};

struct PipelineOptions {
  bool run_gzsl = true;
  bool run_clusterability = true;
};

PipelineResult run_pipeline(const Dataset& data, const TrainConfig& config,
                            const PipelineOptions& options = {});

/// Synthesises, trains the ZSL/GZSL heads and scores a trained model.
struct EvaluationResult {
  double zsl_accuracy = 0.0;
  PerClassAccuracy zsl_per_class;
  GzslResult gzsl;
};
EvaluationResult evaluate_model(const ZslModelParams& params, const Dataset& data,
                                const TrainConfig& config, bool run_gzsl = true);

/// NMI of k-means (k = class count) on the unseen test rows in the model's embedding.
double embedded_nmi(const ZslModelParams& params, const Dataset& data, const TrainConfig& config);

struct AblationRow {
  std::string name;  // NA, CLS, CLS-GAUSSIAN, CLS-GAUSSIAN-NOISE
  TrainConfig config;
  double accuracy = 0.0;
  double nmi = 0.0;
};

/// The four component settings, each run end to end.
std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& config);
/// Flag settings of one ablation row, derived from `base`.
TrainConfig ablation_config(const TrainConfig& base, std::string_view row);
const std::vector<std::string>& ablation_row_names();

/// Sub-seed of each randomised stage, derived from `config.seed`.
std::map<std::string, std::uint64_t> stage_seeds(const TrainConfig& config);

struct EpisodeSpec {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t n_query = 15;
  std::size_t n_episodes = 200;
  std::uint64_t seed = 7;
};

struct FewShotResult {
  double mean_accuracy = 0.0;
  double ci95 = 0.0;  // normal-approximation half-width
  std::vector<double> episode_accuracy;
};

/// Base classes are the seen set, novel classes the unseen set. With
/// `config.use_gaussian_finetune` F is trained on the base classes first;
/// otherwise episodes use raw features.
FewShotResult run_fewshot(const Dataset& data, const EpisodeSpec& spec, const TrainConfig& config);
/// Episodes scored in the space given by `finetune` (identity for the baseline).
FewShotResult run_fewshot_episodes(const Dataset& data, const Mlp& finetune,
                                   const EpisodeSpec& spec, const TrainConfig& config);

}  // namespace cfz
