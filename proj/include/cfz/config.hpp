#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfz/adam.hpp"
#include "cfz/mlp.hpp"

namespace cfz {

/// Raised for unknown keys, malformed values and out-of-range settings.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Hyperparameters for every stage. Widths default to a desk-scale network;
/// `apply_preset` switches to the published benchmark widths.
struct TrainConfig {
  double lambda_cls = 1.0;
  double lambda_cls_prime = 0.1;
  double alpha = 0.2;
  double kl_weight = 1e-3;  // KL term relative to the per-entry reconstruction error
  double gamma = 0.0;  // <= 0 selects 1 / feature_dim
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t finetune_epochs = 100;
  std::size_t cvae_epochs = 100;
  std::size_t classifier_epochs = 100;
  double classifier_learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t n_synth_per_unseen = 300;
  std::size_t projected_dim = 64;
  std::size_t hidden_dim = 256;
  Activation decoder_output = Activation::relu;  // ignored without projection, where it is linear
  bool use_projection = true;
  bool use_gaussian_finetune = true;
  bool use_noise = true;
  bool gzsl_synthesize_seen = false;
  bool resample_noise = false;  // false: one fixed noise draw per training row
  std::size_t fewshot_steps = 100;
  double fewshot_learning_rate = 0.01;
  std::size_t kmeans_restarts = 10;
  std::uint64_t seed = 7;

  /// Throws ConfigError on negative weights, zero epochs and similar.
  void validate() const;

  double effective_alpha() const noexcept { return use_noise ? alpha : 0.0; }
  double gamma_for(std::size_t feature_dim) const noexcept {
    return gamma > 0.0 ? gamma : 1.0 / static_cast<double>(feature_dim);
  }
  AdamConfig adam() const noexcept { return {learning_rate, beta1, beta2, 1e-8}; }
};

/// Sets d_p, α, and the full 4096 hidden width for cub, sun or awa2.
void apply_preset(TrainConfig& config, std::string_view preset);

/// Lower-kebab-case key names, in canonical order.
const std::vector<std::string>& config_keys();
/// Sets one key; unknown keys and unparsable values raise ConfigError naming the key.
void set_config_value(TrainConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const TrainConfig& config, std::string_view key);
/// (key, value) for every key, in canonical order.
std::vector<std::pair<std::string, std::string>> config_items(const TrainConfig& config);

/// Applies `key = value` lines; '#' starts a comment.
void apply_config_text(TrainConfig& config, std::string_view text, const std::string& source);
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);
std::string format_config(const TrainConfig& config);

}  // namespace cfz
