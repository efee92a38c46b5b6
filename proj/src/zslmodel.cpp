#include "cfz/zslmodel.hpp"

#include <array>
#include <cmath>

#include "cfz/binary_io.hpp"

namespace cfz {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::string_view kCheckpointMagic = "CFZM";

void require_cols(const Matrix& m, std::size_t cols, const char* what) {
  if (m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(cols) +
                     " columns, got " + m.shape_string());
  }
}

void require_net(const Mlp& net, std::size_t in, std::size_t out, const char* what) {
  if (net.empty() || net.input_dim() != in || net.output_dim() != out) {
    throw ShapeError(std::string(what) + ": network does not map " + std::to_string(in) +
                     " -> " + std::to_string(out));
  }
}

std::vector<Matrix*> all_blocks(ZslModelParams& p) {
  std::vector<Matrix*> blocks;
  for (Mlp* net : {&p.encoder, &p.decoder, &p.mapping, &p.finetune, &p.classifier}) {
    for (Matrix* m : net->parameters()) blocks.push_back(m);
  }
  blocks.push_back(&p.gaussian_classes);
  return blocks;
}

std::vector<const Matrix*> all_blocks(const ZslModelParams& p) {
  std::vector<const Matrix*> blocks;
  for (const Mlp* net : {&p.encoder, &p.decoder, &p.mapping, &p.finetune, &p.classifier}) {
    for (const Matrix* m : net->parameters()) blocks.push_back(m);
  }
  blocks.push_back(&p.gaussian_classes);
  return blocks;
}

std::uint32_t activation_code(Activation a) { return static_cast<std::uint32_t>(a); }

Activation activation_from_code(std::uint32_t code) {
  if (code > static_cast<std::uint32_t>(Activation::sigmoid)) {
    throw DataError(DataErrc::validation, "checkpoint: unknown activation code " +
                                              std::to_string(code));
  }
  return static_cast<Activation>(code);
}

}  // namespace

Mlp identity_affine(std::size_t dim) {
  std::vector<DenseLayer> layers;
  layers.push_back(DenseLayer{Matrix::identity(dim), Matrix(1, dim), Activation::linear});
  return Mlp(std::move(layers));
}

ZslModelParams ZslModelParams::create(const ModelDims& dims, const ModelOptions& options,
                                      std::vector<std::uint32_t> seen_classes, Rng& rng) {
  if (dims.feature_dim == 0 || dims.projected_dim == 0 || dims.attribute_dim == 0 ||
      dims.num_seen == 0 || dims.hidden_dim == 0) {
    throw ShapeError("ZslModelParams: every dimension must be positive");
  }
  if (!options.use_projection && dims.projected_dim != dims.feature_dim) {
    throw ShapeError("ZslModelParams: without projection the reconstruction width must equal "
                     "the feature width (" + std::to_string(dims.projected_dim) + " vs " +
                     std::to_string(dims.feature_dim) + ")");
  }
  if (seen_classes.size() != dims.num_seen) {
    throw ShapeError("ZslModelParams: " + std::to_string(seen_classes.size()) +
                     " seen class ids for " + std::to_string(dims.num_seen) + " classifier slots");
  }
  ZslModelParams p;
  p.dims = dims;
  p.options = options;
  p.seen_classes = std::move(seen_classes);

  const std::size_t dz = dims.latent_dim();
  {
    const std::array<std::size_t, 3> w{dims.feature_dim, dims.hidden_dim, 2 * dz};
    const std::array<Activation, 2> a{Activation::leaky_relu, Activation::linear};
    p.encoder = Mlp::glorot(w, a, rng);
  }
  {
    const std::array<std::size_t, 3> w{dz + dims.attribute_dim, dims.hidden_dim,
                                       dims.projected_dim};
    const std::array<Activation, 2> a{Activation::leaky_relu, options.decoder_output};
    p.decoder = Mlp::glorot(w, a, rng);
  }
  if (options.use_projection) {
    const std::array<std::size_t, 2> w{dims.feature_dim, dims.projected_dim};
    const std::array<Activation, 1> a{Activation::sigmoid};
    p.mapping = Mlp::glorot(w, a, rng);
  }
  p.finetune = identity_affine(dims.feature_dim);
  {
    const std::array<std::size_t, 2> w{dims.projected_dim, dims.num_seen};
    const std::array<Activation, 1> a{Activation::linear};
    p.classifier = Mlp::glorot(w, a, rng);
  }
  p.gaussian_classes = Matrix(dims.feature_dim, dims.num_seen);
  return p;
}

void ZslModelParams::validate() const {
  const std::size_t dz = dims.latent_dim();
  require_net(encoder, dims.feature_dim, 2 * dz, "encoder");
  require_net(decoder, dz + dims.attribute_dim, dims.projected_dim, "decoder");
  if (options.use_projection) {
    require_net(mapping, dims.feature_dim, dims.projected_dim, "mapping");
  } else if (!mapping.empty()) {
    throw ShapeError("mapping: present although projection is disabled");
  }
  require_net(finetune, dims.feature_dim, dims.feature_dim, "finetune");
  require_net(classifier, dims.projected_dim, dims.num_seen, "classifier");
  if (gaussian_classes.rows() != dims.feature_dim || gaussian_classes.cols() != dims.num_seen) {
    throw ShapeError("gaussian_classes: expected " +
                     shape_string(dims.feature_dim, dims.num_seen) + ", got " +
                     gaussian_classes.shape_string());
  }
  if (seen_classes.size() != dims.num_seen) {
    throw ShapeError("seen_classes: size does not match classifier width");
  }
}

bool ZslModelParams::all_finite() const {
  for (const Matrix* m : all_blocks(*this)) {
    if (!cfz::all_finite(*m)) return false;
  }
  return true;
}

bool ZslModelParams::operator==(const ZslModelParams& other) const {
  return serialize_checkpoint(*this) == serialize_checkpoint(other);
}

Posterior encode(const ZslModelParams& params, const Matrix& x) {
  require_cols(x, params.dims.feature_dim, "encode");
  const Matrix out = mlp_apply(params.encoder, x);
  const std::size_t dz = params.dims.latent_dim();
  return {slice_cols(out, 0, dz), slice_cols(out, dz, dz)};
}

Matrix reparameterize(const Matrix& mu, const Matrix& log_variance, const Matrix& epsilon) {
  if (!mu.same_shape(log_variance) || !mu.same_shape(epsilon)) {
    throw ShapeError("reparameterize: mu " + mu.shape_string() + ", log_variance " +
                     log_variance.shape_string() + ", epsilon " + epsilon.shape_string());
  }
  Matrix z = mu;
  auto zv = z.values();
  const auto lv = log_variance.values();
  const auto ev = epsilon.values();
  for (std::size_t i = 0; i < zv.size(); ++i) zv[i] += std::exp(0.5 * lv[i]) * ev[i];
  return z;
}

LatentSample sample_latent(const Posterior& posterior, Rng& rng) {
  LatentSample s;
  s.mu = posterior.mu;
  s.log_variance = posterior.log_variance;
  s.epsilon = sample_standard_normal(rng, posterior.mu.rows(), posterior.mu.cols());
  s.z = reparameterize(s.mu, s.log_variance, s.epsilon);
  return s;
}

Matrix decode(const ZslModelParams& params, const Matrix& z, const Matrix& attributes) {
  require_cols(z, params.dims.latent_dim(), "decode (z)");
  require_cols(attributes, params.dims.attribute_dim, "decode (attributes)");
  return mlp_apply(params.decoder, hconcat(z, attributes));
}

Matrix project(const ZslModelParams& params, const Matrix& x) {
  require_cols(x, params.dims.feature_dim, "project");
  if (!params.options.use_projection) return x;
  return mlp_apply(params.mapping, x);
}

Matrix finetune_transform(const ZslModelParams& params, const Matrix& x) {
  require_cols(x, params.dims.feature_dim, "finetune_transform");
  return mlp_apply(params.finetune, x);
}

Matrix embed(const ZslModelParams& params, const Matrix& x) {
  return project(params, finetune_transform(params, x));
}

Matrix synthesize_features(const ZslModelParams& params, std::span<const double> attribute,
                           std::size_t n, Rng& rng) {
  if (n == 0) throw ContractError("synthesize_features: n must be at least 1");
  if (attribute.size() != params.dims.attribute_dim) {
    throw ShapeError("synthesize_features: attribute has " + std::to_string(attribute.size()) +
                     " entries, model expects " + std::to_string(params.dims.attribute_dim));
  }
  const Matrix z = sample_standard_normal(rng, n, params.dims.latent_dim());
  Matrix a(n, attribute.size());
  for (std::size_t i = 0; i < n; ++i) std::copy(attribute.begin(), attribute.end(), a.row(i).begin());
  return decode(params, z, a);
}

std::vector<std::uint8_t> serialize_checkpoint(const ZslModelParams& params) {
  params.validate();
  ByteWriter w;
  w.magic(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.dims.feature_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.projected_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.latent_dim()));
  w.u32(static_cast<std::uint32_t>(params.dims.attribute_dim));
  w.u32(static_cast<std::uint32_t>(params.dims.num_seen));
  w.u32(static_cast<std::uint32_t>(params.dims.hidden_dim));
  w.u32(params.options.use_projection ? 1 : 0);
  w.u32(params.options.use_finetune ? 1 : 0);
  w.u32(activation_code(params.options.decoder_output));
  for (std::uint32_t id : params.seen_classes) w.u32(id);
  const auto blocks = all_blocks(params);
  w.u32(static_cast<std::uint32_t>(blocks.size()));
  for (const Matrix* m : blocks) {
    w.u32(static_cast<std::uint32_t>(m->rows()));
    w.u32(static_cast<std::uint32_t>(m->cols()));
  }
  for (const Matrix* m : blocks) {
    for (double v : m->values()) w.f64(v);
  }
  return std::move(w.bytes());
}

ZslModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  r.expect_magic(kCheckpointMagic);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError(DataErrc::version, "checkpoint: unsupported version " + std::to_string(version));
  }
  ModelDims dims;
  dims.feature_dim = r.u32();
  dims.projected_dim = r.u32();
  const std::uint32_t latent = r.u32();
  dims.attribute_dim = r.u32();
  dims.num_seen = r.u32();
  dims.hidden_dim = r.u32();
  if (latent != dims.attribute_dim) {
    throw DataError(DataErrc::validation, "checkpoint: latent width " + std::to_string(latent) +
                                              " differs from attribute width " +
                                              std::to_string(dims.attribute_dim));
  }
  ModelOptions options;
  options.use_projection = r.u32() != 0;
  options.use_finetune = r.u32() != 0;
  options.decoder_output = activation_from_code(r.u32());
  r.require(4ULL * dims.num_seen, "seen class ids");
  std::vector<std::uint32_t> seen(dims.num_seen);
  for (auto& id : seen) id = r.u32();

  Rng unused(0);
  ZslModelParams p;
  try {
    p = ZslModelParams::create(dims, options, std::move(seen), unused);
  } catch (const ShapeError& e) {
    throw DataError(DataErrc::validation, std::string("checkpoint: ") + e.what());
  }
  auto blocks = all_blocks(p);
  const std::uint32_t count = r.u32();
  if (count != blocks.size()) {
    throw DataError(DataErrc::validation, "checkpoint: " + std::to_string(count) +
                                              " blocks, manifest implies " +
                                              std::to_string(blocks.size()));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != blocks[i]->rows() || cols != blocks[i]->cols()) {
      throw DataError(DataErrc::validation, "checkpoint: block " + std::to_string(i) + " is " +
                                                shape_string(rows, cols) + ", expected " +
                                                blocks[i]->shape_string());
    }
  }
  for (Matrix* m : blocks) {
    r.require(8 * m->size(), "parameter block");
    for (double& v : m->values()) v = r.f64();
  }
  r.expect_end();
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ZslModelParams& params) {
  write_file_bytes(path, serialize_checkpoint(params));
}

ZslModelParams load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return deserialize_checkpoint(bytes);
}

}  // namespace cfz
