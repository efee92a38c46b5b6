#include "cfz/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace cfz {
namespace {

void check_labels(std::span<const std::size_t> labels, std::size_t rows, std::size_t classes,
                  const char* where) {
  if (labels.size() != rows) {
    throw ShapeError(std::string(where) + ": " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(rows) + " rows");
  }
  for (std::size_t y : labels) {
    if (y >= classes) {
      throw std::out_of_range(std::string(where) + ": label " + std::to_string(y) +
                              " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

ClassifierLossResult classifier_loss(const Matrix& input, const Mlp& classifier,
                                     std::span<const std::size_t> labels, const char* name) {
  MlpForward fw = mlp_forward(classifier, input);
  check_labels(labels, input.rows(), fw.output.cols(), name);
  SoftmaxCrossEntropy ce = softmax_cross_entropy(fw.output, labels);
  ClassifierLossResult r;
  r.loss.add(name, ce.value);
  r.d_classifier = mlp_backward(classifier, fw.cache, ce.d_logits);
  r.d_input = std::move(r.d_classifier.input);
  r.d_classifier.input = Matrix();
  return r;
}

}  // namespace

void LossValue::add(const std::string& name, double value, double weight) {
  components[name] = value;
  weights[name] = weight;
  total += weight * value;
}

double LossValue::weighted_sum() const {
  double s = 0.0;
  for (const auto& [name, value] : components) s += weights.at(name) * value;
  return s;
}

double kl_to_standard_normal(const Matrix& mu, const Matrix& log_variance) {
  return kl_to_standard_normal_grad(mu, log_variance).value;
}

KlGradient kl_to_standard_normal_grad(const Matrix& mu, const Matrix& log_variance) {
  if (!mu.same_shape(log_variance)) {
    throw ShapeError("kl_to_standard_normal: mu " + mu.shape_string() + " vs log_variance " +
                     log_variance.shape_string());
  }
  const double inv_n = mu.rows() == 0 ? 0.0 : 1.0 / static_cast<double>(mu.rows());
  KlGradient g{0.0, Matrix(mu.rows(), mu.cols()), Matrix(mu.rows(), mu.cols())};
  const auto m = mu.values();
  const auto lv = log_variance.values();
  auto dm = g.d_mu.values();
  auto dlv = g.d_log_variance.values();
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double var = std::exp(lv[i]);
    total += 0.5 * (m[i] * m[i] + var - 1.0 - lv[i]);
    dm[i] = m[i] * inv_n;
    dlv[i] = 0.5 * (var - 1.0) * inv_n;
  }
  g.value = total * inv_n;
  return g;
}

double reconstruction_loss(const Matrix& target, const Matrix& output) {
  if (!target.same_shape(output)) {
    throw ShapeError("reconstruction_loss: target " + target.shape_string() + " vs output " +
                     output.shape_string());
  }
  if (target.empty()) return 0.0;
  const auto t = target.values();
  const auto o = output.values();
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = o[i] - t[i];
    s += d * d;
  }
  return s / static_cast<double>(t.size());
}

Matrix reconstruction_loss_grad(const Matrix& target, const Matrix& output) {
  if (!target.same_shape(output)) {
    throw ShapeError("reconstruction_loss_grad: target " + target.shape_string() +
                     " vs output " + output.shape_string());
  }
  Matrix g = subtract(output, target);
  if (!g.empty()) g = scaled(g, 2.0 / static_cast<double>(g.size()));
  return g;
}

SoftmaxCrossEntropy softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  check_labels(labels, logits.rows(), logits.cols(), "softmax_cross_entropy");
  SoftmaxCrossEntropy r;
  r.d_logits = softmax_rows(logits);
  const std::vector<double> lse = logsumexp_rows(logits);
  const double inv_n = logits.rows() == 0 ? 0.0 : 1.0 / static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    total += lse[i] - logits(i, labels[i]);
    r.d_logits(i, labels[i]) -= 1.0;
  }
  for (double& v : r.d_logits.values()) v *= inv_n;
  r.value = total * inv_n;
  return r;
}

SimilarityLossResult cce_loss(const Matrix& features, const Matrix& weights,
                              std::span<const std::size_t> labels) {
  const Matrix logits = matmul(features, weights);
  SoftmaxCrossEntropy ce = softmax_cross_entropy(logits, labels);
  SimilarityLossResult r;
  r.loss.add("cls", ce.value);
  r.d_features = matmul_nt(ce.d_logits, weights);
  r.d_weights = matmul_tn(features, ce.d_logits);
  return r;
}

double gaussian_similarity(std::span<const double> h, std::span<const double> w, double gamma) {
  if (h.size() != w.size()) {
    throw ShapeError("gaussian_similarity: lengths " + std::to_string(h.size()) + " and " +
                     std::to_string(w.size()));
  }
  return -gamma * squared_distance(h, w);
}

SimilarityLossResult gaussian_similarity_loss(const Matrix& features, const Matrix& weights,
                                              std::span<const std::size_t> labels, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gaussian_similarity_loss: gamma must be > 0");
  if (features.cols() != weights.rows()) {
    throw ShapeError("gaussian_similarity_loss: features " + features.shape_string() +
                     " vs class matrix " + weights.shape_string());
  }
  const std::size_t n = features.rows();
  const std::size_t k = weights.cols();
  const std::size_t d = features.cols();
  check_labels(labels, n, k, "gaussian_similarity_loss");

  const Matrix centers = transpose(weights);  // K × d, row k is w_k
  Matrix sim(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) sim(i, c) = -gamma * squared_distance(features.row(i), centers.row(c));

  const std::vector<double> lse = logsumexp_rows(sim);
  Matrix g = softmax_rows(sim);
  const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += -sim(i, labels[i]) + lse[i];
    g(i, labels[i]) -= 1.0;
  }

  SimilarityLossResult r;
  r.loss.add("gaussian", total * inv_n);
  r.d_features = Matrix(n, d);
  Matrix d_centers(k, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = features.row(i);
    auto dh = r.d_features.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const double coef = 2.0 * gamma * g(i, c) * inv_n;
      if (coef == 0.0) continue;
      const auto w = centers.row(c);
      auto dw = d_centers.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = h[j] - w[j];
        dh[j] -= coef * diff;
        dw[j] += coef * diff;
      }
    }
  }
  r.d_weights = transpose(d_centers);
  return r;
}

ClassifierLossResult classification_loss_projected(const Matrix& projected, const Mlp& classifier,
                                                   std::span<const std::size_t> labels) {
  return classifier_loss(projected, classifier, labels, "cls");
}

ClassifierLossResult classification_loss_reconstructed(const Matrix& reconstructed,
                                                       const Mlp& classifier,
                                                       std::span<const std::size_t> labels) {
  return classifier_loss(reconstructed, classifier, labels, "cls_prime");
}

Matrix inject_noise(const Matrix& projected, NoiseSpec& spec) {
  if (spec.alpha < 0.0) throw std::invalid_argument("inject_noise: alpha must be >= 0");
  const Matrix eps = sample_standard_normal(spec.rng, projected.rows(), projected.cols());
  return inject_noise(projected, spec.alpha, eps);
}

Matrix inject_noise(const Matrix& projected, double alpha, const Matrix& epsilon) {
  if (alpha < 0.0) throw std::invalid_argument("inject_noise: alpha must be >= 0");
  if (alpha == 0.0) return projected;
  if (!projected.same_shape(epsilon)) {
    throw ShapeError("inject_noise: features " + projected.shape_string() + " vs noise " +
                     epsilon.shape_string());
  }
  Matrix out = projected;
  add_in_place(out, epsilon, alpha);
  return out;
}

JointResult joint_objective(const ZslModelParams& params, const JointBatch& batch,
                            const ObjectiveWeights& weights) {
  if (weights.lambda_cls < 0.0 || weights.lambda_cls_prime < 0.0 || weights.alpha < 0.0 ||
      weights.kl_weight < 0.0) {
    throw std::invalid_argument("joint_objective: loss weights and alpha must be >= 0");
  }
  const ModelDims& dims = params.dims;
  const std::size_t n = batch.features.rows();
  const std::size_t dz = dims.latent_dim();
  if (batch.features.cols() != dims.feature_dim || batch.attributes.rows() != n ||
      batch.attributes.cols() != dims.attribute_dim || batch.latent_noise.rows() != n ||
      batch.latent_noise.cols() != dz || batch.labels.size() != n) {
    throw ShapeError("joint_objective: batch shapes inconsistent with model (features " +
                     batch.features.shape_string() + ", attributes " +
                     batch.attributes.shape_string() + ", latent noise " +
                     batch.latent_noise.shape_string() + ")");
  }

  JointResult out;

  // x -> M -> x′
  MlpForward map_fw;
  if (params.options.use_projection) {
    map_fw = mlp_forward(params.mapping, batch.features);
    out.projected = map_fw.output;
  } else {
    out.projected = batch.features;
  }

  // x -> E -> (mu, log σ²) -> z
  MlpForward enc_fw = mlp_forward(params.encoder, batch.features);
  const Matrix mu = slice_cols(enc_fw.output, 0, dz);
  const Matrix log_var = slice_cols(enc_fw.output, dz, dz);
  const Matrix z = reparameterize(mu, log_var, batch.latent_noise);

  // [z ‖ a] -> G -> x̂′
  MlpForward dec_fw = mlp_forward(params.decoder, hconcat(z, batch.attributes));
  out.reconstructed = dec_fw.output;

  const Matrix target = inject_noise(out.projected, weights.alpha, batch.target_noise);
  const double rec = reconstruction_loss(target, out.reconstructed);
  const KlGradient kl = kl_to_standard_normal_grad(mu, log_var);
  ClassifierLossResult cls = classification_loss_projected(out.projected, params.classifier, batch.labels);
  ClassifierLossResult cls_prime =
      classification_loss_reconstructed(out.reconstructed, params.classifier, batch.labels);

  out.loss.add("reconstruction", rec);
  out.loss.add("kl", kl.value, weights.kl_weight);
  out.loss.add("cls", cls.loss.total, weights.lambda_cls);
  out.loss.add("cls_prime", cls_prime.loss.total, weights.lambda_cls_prime);

  // Backward through G.
  const Matrix d_rec = reconstruction_loss_grad(target, out.reconstructed);
  Matrix d_recon = d_rec;
  add_in_place(d_recon, cls_prime.d_input, weights.lambda_cls_prime);
  out.grads.decoder = mlp_backward(params.decoder, dec_fw.cache, d_recon);
  const Matrix d_z = slice_cols(out.grads.decoder.input, 0, dz);

  // Backward through the reparameterisation and E.
  Matrix d_mu = d_z;
  add_in_place(d_mu, kl.d_mu, weights.kl_weight);
  Matrix d_log_var = scaled(kl.d_log_variance, weights.kl_weight);
  {
    auto dlv = d_log_var.values();
    const auto dzv = d_z.values();
    const auto eps = batch.latent_noise.values();
    const auto lv = log_var.values();
    for (std::size_t i = 0; i < dlv.size(); ++i) dlv[i] += dzv[i] * eps[i] * 0.5 * std::exp(0.5 * lv[i]);
  }
  out.grads.encoder = mlp_backward(params.encoder, enc_fw.cache, hconcat(d_mu, d_log_var));

  // The noisy target depends on M, as do the classifier losses on x′.
  if (params.options.use_projection) {
    Matrix d_proj = scaled(d_rec, -1.0);
    add_in_place(d_proj, cls.d_input, weights.lambda_cls);
    out.grads.mapping = mlp_backward(params.mapping, map_fw.cache, d_proj);
  }

  out.grads.classifier = zero_gradients(params.classifier);
  out.grads.classifier.accumulate(cls.d_classifier, weights.lambda_cls);
  out.grads.classifier.accumulate(cls_prime.d_classifier, weights.lambda_cls_prime);
  return out;
}

}  // namespace cfz
