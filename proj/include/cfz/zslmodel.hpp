#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cfz/matrix.hpp"
#include "cfz/mlp.hpp"
#include "cfz/rng.hpp"

namespace cfz {

/// Layer widths shared by the five networks. The latent width always equals
/// the attribute width.
struct ModelDims {
  std::size_t feature_dim = 0;    // d_f
  std::size_t projected_dim = 0;  // d_p
  std::size_t attribute_dim = 0;  // d_a
  std::size_t num_seen = 0;       // K_seen
  std::size_t hidden_dim = 4096;

  std::size_t latent_dim() const noexcept { return attribute_dim; }
};

struct ModelOptions {
  bool use_projection = true;  // M present; otherwise the CVAE reconstructs F(x) directly
  bool use_finetune = true;    // F trained; otherwise F stays at identity
  Activation decoder_output = Activation::relu;
};

/// Encoder E, decoder G, mapping M, fine-tune map F, classifier C and the
/// Gaussian-similarity class matrix W′.
struct ZslModelParams {
  ModelDims dims;
  ModelOptions options;
  std::vector<std::uint32_t> seen_classes;  // classifier slot -> dataset class id

  Mlp encoder;     // d_f -> hidden -> 2·d_z (mu | log-variance)
  Mlp decoder;     // d_z + d_a -> hidden -> d_p
  Mlp mapping;     // d_f -> d_p, sigmoid; empty when projection is disabled
  Mlp finetune;    // d_f -> d_f, affine, identity-initialised
  Mlp classifier;  // d_p -> K_seen, linear
  Matrix gaussian_classes;  // d_f × K_seen, columns are w′_k

  static ZslModelParams create(const ModelDims& dims, const ModelOptions& options,
                               std::vector<std::uint32_t> seen_classes, Rng& rng);

  /// Throws ShapeError when any network disagrees with `dims`.
  void validate() const;
  bool all_finite() const;

  bool operator==(const ZslModelParams& other) const;
};

struct Posterior {
  Matrix mu;
  Matrix log_variance;
};

struct LatentSample {
  Matrix mu;
  Matrix log_variance;
  Matrix epsilon;
  Matrix z;
};

Mlp identity_affine(std::size_t dim);

Posterior encode(const ZslModelParams& params, const Matrix& x);
/// z = mu + exp(log_variance / 2) ⊙ epsilon
Matrix reparameterize(const Matrix& mu, const Matrix& log_variance, const Matrix& epsilon);
LatentSample sample_latent(const Posterior& posterior, Rng& rng);
/// G([z ‖ a]).
Matrix decode(const ZslModelParams& params, const Matrix& z, const Matrix& attributes);
/// M(x); the identity when projection is disabled.
Matrix project(const ZslModelParams& params, const Matrix& x);
Matrix finetune_transform(const ZslModelParams& params, const Matrix& x);
/// M(F(x)), the map applied to real features at both train and test time.
Matrix embed(const ZslModelParams& params, const Matrix& x);
/// n decoder outputs for z ~ N(0, I) conditioned on one attribute vector.
Matrix synthesize_features(const ZslModelParams& params, std::span<const double> attribute,
                           std::size_t n, Rng& rng);

// Checkpoint container: "CFZM", u32 version, manifest (dims, flags, seen class
// ids, block shapes), then every parameter block as little-endian f64 in
// declaration order: encoder, decoder, mapping, finetune, classifier, W′.
std::vector<std::uint8_t> serialize_checkpoint(const ZslModelParams& params);
ZslModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const ZslModelParams& params);
ZslModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cfz
