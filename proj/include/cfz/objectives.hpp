#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfz/matrix.hpp"
#include "cfz/mlp.hpp"
#include "cfz/rng.hpp"
#include "cfz/zslmodel.hpp"

namespace cfz {

/// A scalar objective with its named parts. `total` is Σ weight·component.
struct LossValue {
  double total = 0.0;
  std::map<std::string, double> components;
  std::map<std::string, double> weights;

  void add(const std::string& name, double value, double weight = 1.0);
  double weighted_sum() const;
};

/// Mean over rows of ½ Σ_d (μ² + σ² − 1 − log σ²).
double kl_to_standard_normal(const Matrix& mu, const Matrix& log_variance);

struct KlGradient {
  double value = 0.0;
  Matrix d_mu;
  Matrix d_log_variance;
};
KlGradient kl_to_standard_normal_grad(const Matrix& mu, const Matrix& log_variance);

/// Mean squared error over all entries.
double reconstruction_loss(const Matrix& target, const Matrix& output);
/// d/d(output); the gradient with respect to `target` is its negation.
Matrix reconstruction_loss_grad(const Matrix& target, const Matrix& output);

/// Mean negative log-likelihood of `labels` under softmax(logits), and its logit gradient.
struct SoftmaxCrossEntropy {
  double value = 0.0;
  Matrix d_logits;
};
SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

struct SimilarityLossResult {
  LossValue loss;
  Matrix d_features;
  Matrix d_weights;
};

/// Dot-product softmax loss; `weights` has one column per class.
SimilarityLossResult cce_loss(const Matrix& features, const Matrix& weights,
                              std::span<const std::size_t> labels);

/// −γ‖h − w‖².
double gaussian_similarity(std::span<const double> h, std::span<const double> w, double gamma);

/// Mean over rows of γ‖h − w_y‖² + log Σ_k exp(−γ‖h − w_k‖²).
SimilarityLossResult gaussian_similarity_loss(const Matrix& features, const Matrix& weights,
                                              std::span<const std::size_t> labels, double gamma);

struct ClassifierLossResult {
  LossValue loss;
  Matrix d_input;
  MlpGradients d_classifier;
};

/// Cross-entropy of classifier C on projected features x′.
ClassifierLossResult classification_loss_projected(const Matrix& projected, const Mlp& classifier,
                                                   std::span<const std::size_t> labels);
/// Same loss applied to decoder outputs x̂′, sharing C with the projected loss.
ClassifierLossResult classification_loss_reconstructed(const Matrix& reconstructed,
                                                       const Mlp& classifier,
                                                       std::span<const std::size_t> labels);

struct NoiseSpec {
  double alpha = 0.0;
  Rng rng;
};

/// x′ + α·ε with fresh ε ~ N(0, 1) per entry. Draws are consumed even when α = 0,
/// so runs that differ only in α see the same noise stream.
Matrix inject_noise(const Matrix& projected, NoiseSpec& spec);
Matrix inject_noise(const Matrix& projected, double alpha, const Matrix& epsilon);

struct ObjectiveWeights {
  double lambda_cls = 1.0;
  double lambda_cls_prime = 0.1;
  double alpha = 0.2;
  double kl_weight = 1.0;
};

/// One batch for the joint objective. `features` are already passed through
/// the frozen fine-tune map; the two noise matrices fix every random draw.
struct JointBatch {
  Matrix features;                  // n × d_f
  Matrix attributes;                // n × d_a, class attribute of each row
  std::vector<std::size_t> labels;  // classifier slot of each row
  Matrix latent_noise;              // n × d_z, ε for the reparameterisation
  Matrix target_noise;              // n × d_p, ε for the noisy target
};

struct ZslGradients {
  MlpGradients encoder;
  MlpGradients decoder;
  MlpGradients mapping;
  MlpGradients classifier;
};

struct JointResult {
  LossValue loss;
  ZslGradients grads;
  Matrix projected;      // x′
  Matrix reconstructed;  // x̂′
};

/// L_CVAE(noisy target) + λ_cls·L_cls + λ_cls′·L_cls′ with gradients for E, G, M and C.
JointResult joint_objective(const ZslModelParams& params, const JointBatch& batch,
                            const ObjectiveWeights& weights);

}  // namespace cfz
