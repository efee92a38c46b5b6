#include "cfz/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cfz/adam.hpp"

namespace cfz {
namespace {

// Labels for sub-seeds derived from TrainConfig::seed.
enum SeedLabel : std::uint64_t {
  kSeedFinetune = 1,
  kSeedModelInit = 2,
  kSeedCvaeBatches = 3,
  kSeedTargetNoise = 4,
  kSeedSynthesis = 5,
  kSeedClassifier = 6,
  kSeedKMeans = 7,
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::uint32_t> sorted_ids(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::uint32_t, std::size_t> slot_map(std::span<const std::uint32_t> classes) {
  std::map<std::uint32_t, std::size_t> slots;
  for (std::size_t i = 0; i < classes.size(); ++i) slots[classes[i]] = i;
  return slots;
}

std::vector<std::size_t> to_slots(std::span<const std::uint32_t> labels,
                                  const std::map<std::uint32_t, std::size_t>& slots) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (std::uint32_t y : labels) {
    const auto it = slots.find(y);
    if (it == slots.end()) throw std::invalid_argument("label " + std::to_string(y) + " is not a target class");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Matrix attribute_rows(const Matrix& attributes, std::span<const std::uint32_t> labels) {
  std::vector<std::size_t> rows(labels.begin(), labels.end());
  return select_rows(attributes, rows);
}

template <typename T>
std::vector<T> pick(const std::vector<T>& values, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(values[i]);
  return out;
}

Matrix class_means(const Matrix& features, std::span<const std::size_t> slots, std::size_t k) {
  Matrix means(k, features.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto m = means.row(slots[i]);
    const auto x = features.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += x[j];
    counts[slots[i]] += 1;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (double& v : means.row(c)) v /= static_cast<double>(counts[c]);
  }
  return means;
}

template <typename Fn>
void for_each_batch(std::size_t n, std::size_t batch_size, Rng& rng, Fn&& fn) {
  std::vector<std::size_t> order = iota_rows(n);
  rng.shuffle(order);
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    fn(std::span<const std::size_t>(order.data() + begin, end - begin));
  }
}

}  // namespace

FinetuneResult stage_finetune_gaussian(const Dataset& data, const TrainConfig& config) {
  config.validate();
  const std::vector<std::size_t> rows = data.train_rows();
  if (rows.empty()) throw std::invalid_argument("stage_finetune_gaussian: empty training set");
  const LabeledRows train = gather(data, rows);

  FinetuneResult r;
  r.seen_classes = sorted_ids(data.split.seen);
  const auto slots = slot_map(r.seen_classes);
  const std::vector<std::size_t> y = to_slots(train.labels, slots);
  const std::size_t k = r.seen_classes.size();

  r.finetune = identity_affine(data.feature_dim());
  r.class_matrix = transpose(class_means(train.features, y, k));
  if (!config.use_gaussian_finetune) return r;

  const double gamma = config.gamma_for(data.feature_dim());
  AdamState adam(config.adam());
  Rng rng(derive_seed(config.seed, kSeedFinetune));
  for (std::size_t epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for_each_batch(train.features.rows(), config.batch_size, rng, [&](std::span<const std::size_t> idx) {
      const Matrix x = select_rows(train.features, idx);
      const std::vector<std::size_t> yb = pick(y, idx);
      MlpForward fw = mlp_forward(r.finetune, x);
      SimilarityLossResult loss = gaussian_similarity_loss(fw.output, r.class_matrix, yb, gamma);
      MlpGradients g = mlp_backward(r.finetune, fw.cache, loss.d_features);
      std::vector<Matrix*> params = r.finetune.parameters();
      params.push_back(&r.class_matrix);
      std::vector<const Matrix*> grads = g.flat();
      grads.push_back(&loss.d_weights);
      adam.update(params, grads);
      loss_sum += loss.loss.total;
      ++batches;
    });
    r.loss_trace.push_back(loss_sum / static_cast<double>(batches));
  }
  return r;
}

CvaeResult stage_train_cvae(const Dataset& data, const FinetuneResult& finetune,
                            const TrainConfig& config) {
  config.validate();
  const std::vector<std::size_t> rows = data.train_rows();
  if (rows.empty()) throw std::invalid_argument("stage_train_cvae: empty training set");
  if (finetune.finetune.input_dim() != data.feature_dim() ||
      finetune.class_matrix.rows() != data.feature_dim()) {
    throw ShapeError("stage_train_cvae: fine-tune map expects " +
                     std::to_string(finetune.finetune.input_dim()) + " features, dataset has " +
                     std::to_string(data.feature_dim()));
  }
  const LabeledRows train = gather(data, rows);
  const std::vector<std::uint32_t> seen = sorted_ids(data.split.seen);
  if (seen != finetune.seen_classes) {
    throw std::invalid_argument("stage_train_cvae: fine-tune stage used a different seen-class set");
  }
  const auto slots = slot_map(seen);
  const std::vector<std::size_t> y = to_slots(train.labels, slots);

  ModelDims dims;
  dims.feature_dim = data.feature_dim();
  dims.projected_dim = config.use_projection ? config.projected_dim : data.feature_dim();
  dims.attribute_dim = data.attribute_dim();
  dims.num_seen = seen.size();
  dims.hidden_dim = config.hidden_dim;
  ModelOptions options;
  options.use_projection = config.use_projection;
  options.use_finetune = config.use_gaussian_finetune;
  // Without M the target is the raw feature, which may be negative; a rectified
  // output could not reach it.
  options.decoder_output = config.use_projection ? config.decoder_output : Activation::linear;

  Rng init_rng(derive_seed(config.seed, kSeedModelInit));
  CvaeResult r;
  r.params = ZslModelParams::create(dims, options, seen, init_rng);
  r.params.finetune = finetune.finetune;
  r.params.gaussian_classes = finetune.class_matrix;

  // F is frozen for this stage, so its output is computed once.
  const Matrix features = mlp_apply(r.params.finetune, train.features);
  const Matrix attributes = attribute_rows(data.attributes, train.labels);
  const ObjectiveWeights weights{config.lambda_cls, config.lambda_cls_prime, config.effective_alpha(),
                                     config.kl_weight};
  Rng batch_rng(derive_seed(config.seed, kSeedCvaeBatches));
  Rng noise_rng(derive_seed(config.seed, kSeedTargetNoise));
  const std::size_t dp = dims.projected_dim;
  Matrix fixed_noise;
  if (!config.resample_noise) fixed_noise = sample_standard_normal(noise_rng, features.rows(), dp);

  AdamState adam(config.adam());
  for (std::size_t epoch = 0; epoch < config.cvae_epochs; ++epoch) {
    std::map<std::string, double> sums;
    std::map<std::string, double> component_weights;
    std::size_t batches = 0;
    for_each_batch(features.rows(), config.batch_size, batch_rng, [&](std::span<const std::size_t> idx) {
      JointBatch batch;
      batch.features = select_rows(features, idx);
      batch.attributes = select_rows(attributes, idx);
      batch.labels = pick(y, idx);
      batch.latent_noise = sample_standard_normal(batch_rng, idx.size(), dims.latent_dim());
      batch.target_noise = config.resample_noise ? sample_standard_normal(noise_rng, idx.size(), dp)
                                                 : select_rows(fixed_noise, idx);
      JointResult jr = joint_objective(r.params, batch, weights);

      std::vector<Matrix*> params;
      std::vector<const Matrix*> grads;
      auto append = [&](Mlp& net, const MlpGradients& g) {
        for (Matrix* p : net.parameters()) params.push_back(p);
        for (const Matrix* q : g.flat()) grads.push_back(q);
      };
      append(r.params.encoder, jr.grads.encoder);
      append(r.params.decoder, jr.grads.decoder);
      if (config.use_projection) append(r.params.mapping, jr.grads.mapping);
      append(r.params.classifier, jr.grads.classifier);
      adam.update(params, grads);

      for (const auto& [name, value] : jr.loss.components) {
        sums[name] += value;
        component_weights[name] = jr.loss.weights.at(name);
      }
      ++batches;
    });
    LossValue mean;
    for (const auto& [name, total] : sums) {
      mean.add(name, total / static_cast<double>(batches), component_weights.at(name));
    }
    r.loss_trace.push_back(mean.total);
    r.component_trace.push_back(std::move(mean));
  }
  if (!r.params.all_finite()) throw std::runtime_error("stage_train_cvae: parameters diverged to non-finite values");
  return r;
}


LabeledRows stage_synthesize_unseen(const ZslModelParams& params, const Matrix& attributes,
                                    const SplitSpec& split, const TrainConfig& config,
                                    bool include_seen) {
  if (split.unseen.empty()) throw std::invalid_argument("stage_synthesize_unseen: unseen set is empty");
  if (attributes.cols() != params.dims.attribute_dim) {
    throw ShapeError("stage_synthesize_unseen: attribute table " + attributes.shape_string() +
                     " does not match model attribute width " + std::to_string(params.dims.attribute_dim));
  }
  std::vector<std::uint32_t> classes = sorted_ids(split.unseen);
  if (include_seen) {
    classes.insert(classes.end(), split.seen.begin(), split.seen.end());
    classes = sorted_ids(std::move(classes));
  }
  LabeledRows out;
  for (std::uint32_t c : classes) {
    if (c >= attributes.rows()) throw std::out_of_range("stage_synthesize_unseen: class " + std::to_string(c) + " has no attribute row");
    // One stream per class keeps each class's samples independent of the class list.
    Rng rng(derive_seed(derive_seed(config.seed, kSeedSynthesis), c));
    out.features = vstack(out.features, synthesize_features(params, attributes.row(c), config.n_synth_per_unseen, rng));
    out.labels.insert(out.labels.end(), config.n_synth_per_unseen, c);
  }
  return out;
}

Matrix SoftmaxClassifier::logits(const Matrix& features) const { return mlp_apply(net, features); }

std::vector<std::uint32_t> SoftmaxClassifier::predict(const Matrix& features) const {
  const Matrix z = logits(features);
  std::vector<std::uint32_t> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    out[i] = classes[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
  }
  return out;
}

SoftmaxClassifier train_softmax_classifier(const Matrix& features,
                                           std::span<const std::uint32_t> labels,
                                           std::span<const std::uint32_t> classes,
                                           std::size_t epochs, std::size_t batch_size,
                                           double learning_rate, std::uint64_t seed) {
  if (features.rows() != labels.size()) throw std::invalid_argument("train_softmax_classifier: label count mismatch");
  if (classes.empty()) throw std::invalid_argument("train_softmax_classifier: no target classes");
  const auto slots = slot_map(classes);
  const std::vector<std::size_t> y = to_slots(labels, slots);
  std::vector<std::size_t> per_class(classes.size(), 0);
  for (std::size_t s : y) per_class[s] += 1;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (per_class[c] == 0) {
      throw std::invalid_argument("train_softmax_classifier: class " + std::to_string(classes[c]) + " has no training samples");
    }
  }

  SoftmaxClassifier clf;
  clf.classes.assign(classes.begin(), classes.end());
  std::vector<DenseLayer> layers;
  layers.push_back(DenseLayer{Matrix(features.cols(), classes.size()), Matrix(1, classes.size()), Activation::linear});
  clf.net = Mlp(std::move(layers));

  AdamState adam(AdamConfig{learning_rate, 0.9, 0.999, 1e-8});
  Rng rng(seed);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for_each_batch(features.rows(), batch_size, rng, [&](std::span<const std::size_t> idx) {
      MlpForward fw = mlp_forward(clf.net, select_rows(features, idx));
      const SoftmaxCrossEntropy ce = softmax_cross_entropy(fw.output, pick(y, idx));
      const MlpGradients g = mlp_backward(clf.net, fw.cache, ce.d_logits);
      adam.update(clf.net.parameters(), g.flat());
    });
  }
  return clf;
}

SoftmaxClassifier stage_train_final_classifier(const Matrix& features,
                                               std::span<const std::uint32_t> labels,
                                               std::span<const std::uint32_t> classes,
                                               const TrainConfig& config) {
  return train_softmax_classifier(features, labels, classes, config.classifier_epochs, config.batch_size,
                                  config.classifier_learning_rate, derive_seed(config.seed, kSeedClassifier));
}

PerClassAccuracy evaluate_zsl(const SoftmaxClassifier& classifier, const ZslModelParams& params,
                              const LabeledRows& test) {
  if (test.labels.empty()) throw std::invalid_argument("evaluate_zsl: empty test set");
  const std::set<std::uint32_t> known(classifier.classes.begin(), classifier.classes.end());
  for (std::uint32_t y : test.labels) {
    if (!known.count(y)) throw std::invalid_argument("evaluate_zsl: test label " + std::to_string(y) + " is unknown to the classifier");
  }
  const std::vector<std::uint32_t> pred = classifier.predict(embed(params, test.features));
  return per_class_top1(pred, test.labels);
}

GzslResult evaluate_gzsl(const SoftmaxClassifier& classifier, const ZslModelParams& params,
                         const LabeledRows& seen_test, const LabeledRows& unseen_test) {
  if (seen_test.labels.empty() || unseen_test.labels.empty()) {
    throw std::invalid_argument("evaluate_gzsl: both seen and unseen test sets must be non-empty");
  }
  GzslResult r;
  r.seen = evaluate_zsl(classifier, params, seen_test).mean;
  r.unseen = evaluate_zsl(classifier, params, unseen_test).mean;
  r.harmonic = r.seen + r.unseen == 0.0 ? 0.0 : harmonic_mean(r.seen, r.unseen);
  return r;
}

EvaluationResult evaluate_model(const ZslModelParams& params, const Dataset& data,
                                const TrainConfig& config, bool run_gzsl) {
  params.validate();
  if (params.dims.feature_dim != data.feature_dim() || params.dims.attribute_dim != data.attribute_dim()) {
    throw ShapeError("evaluate_model: checkpoint dims (d_f=" + std::to_string(params.dims.feature_dim) +
                     ", d_a=" + std::to_string(params.dims.attribute_dim) + ") do not match dataset (d_f=" +
                     std::to_string(data.feature_dim()) + ", d_a=" + std::to_string(data.attribute_dim()) + ")");
  }
  EvaluationResult r;
  const std::vector<std::uint32_t> unseen = sorted_ids(data.split.unseen);
  const LabeledRows synth = stage_synthesize_unseen(params, data.attributes, data.split, config,
                                                    run_gzsl && config.gzsl_synthesize_seen);
  // ZSL head sees only the unseen-class samples.
  {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < synth.labels.size(); ++i) {
      if (std::binary_search(unseen.begin(), unseen.end(), synth.labels[i])) rows.push_back(i);
    }
    const Matrix x = select_rows(synth.features, rows);
    const std::vector<std::uint32_t> y = pick(synth.labels, rows);
    const SoftmaxClassifier zsl = stage_train_final_classifier(x, y, unseen, config);
    r.zsl_per_class = evaluate_zsl(zsl, params, gather(data, data.test_rows_unseen()));
    r.zsl_accuracy = r.zsl_per_class.mean;
  }
  if (run_gzsl) {
    // Seen classes come from real training rows unless they are synthesized too.
    Matrix x = synth.features;
    std::vector<std::uint32_t> y = synth.labels;
    if (!config.gzsl_synthesize_seen) {
      const LabeledRows seen_train = gather(data, data.train_rows());
      x = vstack(embed(params, seen_train.features), synth.features);
      y = seen_train.labels;
      y.insert(y.end(), synth.labels.begin(), synth.labels.end());
    }
    std::vector<std::uint32_t> all = data.split.seen;
    all.insert(all.end(), unseen.begin(), unseen.end());
    all = sorted_ids(std::move(all));
    const SoftmaxClassifier gzsl = stage_train_final_classifier(x, y, all, config);
    r.gzsl = evaluate_gzsl(gzsl, params, gather(data, data.test_rows_seen()), gather(data, data.test_rows_unseen()));
  }
  return r;
}

double embedded_nmi(const ZslModelParams& params, const Dataset& data, const TrainConfig& config) {
  const LabeledRows test = gather(data, data.test_rows_unseen());
  KMeansOptions km;
  km.restarts = config.kmeans_restarts;
  return clusterability_nmi(embed(params, test.features), test.labels, derive_seed(config.seed, kSeedKMeans), km);
}

PipelineResult run_pipeline(const Dataset& data, const TrainConfig& config, const PipelineOptions& options) {
  config.validate();
  data.validate();
  PipelineResult r;
  auto t0 = Clock::now();
  r.finetune = stage_finetune_gaussian(data, config);
  r.stage_seconds["finetune"] = seconds_since(t0);

  t0 = Clock::now();
  r.cvae = stage_train_cvae(data, r.finetune, config);
  r.stage_seconds["cvae"] = seconds_since(t0);

  t0 = Clock::now();
  const EvaluationResult eval = evaluate_model(r.cvae.params, data, config, options.run_gzsl);
  r.zsl_accuracy = eval.zsl_accuracy;
  r.gzsl = eval.gzsl;
  const LabeledRows synth = stage_synthesize_unseen(r.cvae.params, data.attributes, data.split, config);
  r.synthesized_variance = variance_stats(synth.features, synth.labels);
  r.stage_seconds["evaluate"] = seconds_since(t0);

  if (options.run_clusterability) {
    t0 = Clock::now();
    const LabeledRows test = gather(data, data.test_rows_unseen());
    KMeansOptions km;
    km.restarts = config.kmeans_restarts;
    r.nmi_raw = clusterability_nmi(test.features, test.labels, derive_seed(config.seed, kSeedKMeans), km);
    r.nmi_embedded = embedded_nmi(r.cvae.params, data, config);
    r.stage_seconds["clusterability"] = seconds_since(t0);
  }
  return r;
}

std::map<std::string, std::uint64_t> stage_seeds(const TrainConfig& config) {
  return {{"master", config.seed},
          {"finetune", derive_seed(config.seed, kSeedFinetune)},
          {"model-init", derive_seed(config.seed, kSeedModelInit)},
          {"cvae-batches", derive_seed(config.seed, kSeedCvaeBatches)},
          {"target-noise", derive_seed(config.seed, kSeedTargetNoise)},
          {"synthesis", derive_seed(config.seed, kSeedSynthesis)},
          {"classifier", derive_seed(config.seed, kSeedClassifier)},
          {"kmeans", derive_seed(config.seed, kSeedKMeans)}};
}

const std::vector<std::string>& ablation_row_names() {
  static const std::vector<std::string> names = {"NA", "CLS", "CLS-GAUSSIAN", "CLS-GAUSSIAN-NOISE"};
  return names;
}

TrainConfig ablation_config(const TrainConfig& base, std::string_view row) {
  TrainConfig c = base;
  if (row == "NA") {
    c.use_projection = false;
    c.use_gaussian_finetune = false;
    c.use_noise = false;
    c.lambda_cls = 0.0;
    c.lambda_cls_prime = 0.0;
  } else if (row == "CLS") {
    c.use_projection = true;
    c.use_gaussian_finetune = false;
    c.use_noise = false;
  } else if (row == "CLS-GAUSSIAN") {
    c.use_projection = true;
    c.use_gaussian_finetune = true;
    c.use_noise = false;
  } else if (row == "CLS-GAUSSIAN-NOISE") {
    c.use_projection = true;
    c.use_gaussian_finetune = true;
    c.use_noise = true;
  } else {
    throw std::invalid_argument("unknown ablation row '" + std::string(row) + "'");
  }
  return c;
}

std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& config) {
  std::vector<AblationRow> rows;
  for (const std::string& name : ablation_row_names()) {
    AblationRow row;
    row.name = name;
    row.config = ablation_config(config, name);
    PipelineOptions opts;
    opts.run_gzsl = false;
    opts.run_clusterability = false;
    const PipelineResult r = run_pipeline(data, row.config, opts);
    row.accuracy = r.zsl_accuracy;
    row.nmi = embedded_nmi(r.cvae.params, data, row.config);
    rows.push_back(std::move(row));
  }
  return rows;
}

FewShotResult run_fewshot(const Dataset& data, const EpisodeSpec& spec, const TrainConfig& config) {
  Mlp finetune = identity_affine(data.feature_dim());
  if (config.use_gaussian_finetune) finetune = stage_finetune_gaussian(data, config).finetune;
  return run_fewshot_episodes(data, finetune, spec, config);
}

FewShotResult run_fewshot_episodes(const Dataset& data, const Mlp& finetune,
                                   const EpisodeSpec& spec, const TrainConfig& config) {
  if (spec.n_way < 1 || spec.k_shot < 1 || spec.n_query < 1 || spec.n_episodes < 1) {
    throw std::invalid_argument("run_fewshot: n_way, k_shot, n_query and n_episodes must be >= 1");
  }
  const std::set<std::uint32_t> base(data.split.seen.begin(), data.split.seen.end());
  for (std::uint32_t c : data.split.unseen) {
    if (base.count(c)) throw std::invalid_argument("run_fewshot: base and novel classes overlap");
  }
  std::map<std::uint32_t, std::vector<std::size_t>> novel_rows;
  for (std::uint32_t c : data.split.unseen) novel_rows[c];
  for (std::size_t r = 0; r < data.labels.size(); ++r) {
    auto it = novel_rows.find(data.labels[r]);
    if (it != novel_rows.end()) it->second.push_back(r);
  }
  std::vector<std::uint32_t> eligible;
  for (const auto& [c, rows] : novel_rows) {
    if (rows.size() >= spec.k_shot + spec.n_query) eligible.push_back(c);
  }
  if (eligible.size() < spec.n_way) {
    throw std::invalid_argument("run_fewshot: only " + std::to_string(eligible.size()) +
                                " novel classes have " + std::to_string(spec.k_shot + spec.n_query) +
                                " rows; episode needs " + std::to_string(spec.n_way));
  }

  const Matrix mapped = mlp_apply(finetune, data.features);
  FewShotResult result;
  for (std::size_t e = 0; e < spec.n_episodes; ++e) {
    Rng rng(derive_seed(spec.seed, e));
    std::vector<std::uint32_t> classes = eligible;
    rng.shuffle(classes);
    classes.resize(spec.n_way);
    std::sort(classes.begin(), classes.end());
    std::vector<std::size_t> support, query;
    std::vector<std::uint32_t> support_y, query_y;
    for (std::uint32_t c : classes) {
      std::vector<std::size_t> rows = novel_rows.at(c);
      rng.shuffle(rows);
      for (std::size_t i = 0; i < spec.k_shot; ++i) {
        support.push_back(rows[i]);
        support_y.push_back(c);
      }
      for (std::size_t i = spec.k_shot; i < spec.k_shot + spec.n_query; ++i) {
        query.push_back(rows[i]);
        query_y.push_back(c);
      }
    }
    const SoftmaxClassifier clf = train_softmax_classifier(
        select_rows(mapped, support), support_y, classes, config.fewshot_steps, support.size(),
        config.fewshot_learning_rate, derive_seed(spec.seed, e + 0x5eed));
    const std::vector<std::uint32_t> pred = clf.predict(select_rows(mapped, query));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == query_y[i] ? 1 : 0;
    result.episode_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(pred.size()));
  }
  const double n = static_cast<double>(result.episode_accuracy.size());
  double mean = 0.0;
  for (double a : result.episode_accuracy) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : result.episode_accuracy) var += (a - mean) * (a - mean);
  var = n > 1 ? var / (n - 1) : 0.0;
  result.mean_accuracy = mean;
  result.ci95 = 1.96 * std::sqrt(var / n);
  return result;
}

}  // namespace cfz
