#include "cfz/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cfz/datasets.hpp"

namespace cfz {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(std::string_view key, std::string_view text) {
  const std::string s(text);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (...) {
  }
  throw ConfigError("config key '" + std::string(key) + "': '" + s + "' is not a number");
}

std::uint64_t parse_count(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) +
                      "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': '" + std::string(text) + "' is not a boolean");
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(TrainConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field real_field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { c.*member = parse_real(k, v); },
          [member](const TrainConfig& c) { return format_real(c.*member); }};
}

template <typename T>
Field count_field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*member = static_cast<T>(parse_count(k, v));
          },
          [member](const TrainConfig& c) { return std::to_string(c.*member); }};
}

Field bool_field(bool TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"lambda-cls", real_field(&TrainConfig::lambda_cls)},
      {"lambda-cls-prime", real_field(&TrainConfig::lambda_cls_prime)},
      {"alpha", real_field(&TrainConfig::alpha)},
      {"kl-weight", real_field(&TrainConfig::kl_weight)},
      {"gamma", real_field(&TrainConfig::gamma)},
      {"learning-rate", real_field(&TrainConfig::learning_rate)},
      {"beta1", real_field(&TrainConfig::beta1)},
      {"beta2", real_field(&TrainConfig::beta2)},
      {"finetune-epochs", count_field(&TrainConfig::finetune_epochs)},
      {"cvae-epochs", count_field(&TrainConfig::cvae_epochs)},
      {"classifier-epochs", count_field(&TrainConfig::classifier_epochs)},
      {"classifier-learning-rate", real_field(&TrainConfig::classifier_learning_rate)},
      {"batch-size", count_field(&TrainConfig::batch_size)},
      {"n-synth-per-unseen", count_field(&TrainConfig::n_synth_per_unseen)},
      {"projected-dim", count_field(&TrainConfig::projected_dim)},
      {"hidden-dim", count_field(&TrainConfig::hidden_dim)},
      {"decoder-output",
       Field{[](TrainConfig& c, std::string_view k, std::string_view v) {
               try {
                 c.decoder_output = parse_activation(v);
               } catch (const std::invalid_argument&) {
                 throw ConfigError("config key '" + std::string(k) + "': unknown activation '" +
                                   std::string(v) + "'");
               }
             },
             [](const TrainConfig& c) { return std::string(to_string(c.decoder_output)); }}},
      {"use-projection", bool_field(&TrainConfig::use_projection)},
      {"use-gaussian-finetune", bool_field(&TrainConfig::use_gaussian_finetune)},
      {"use-noise", bool_field(&TrainConfig::use_noise)},
      {"gzsl-synthesize-seen", bool_field(&TrainConfig::gzsl_synthesize_seen)},
      {"resample-noise", bool_field(&TrainConfig::resample_noise)},
      {"fewshot-steps", count_field(&TrainConfig::fewshot_steps)},
      {"fewshot-learning-rate", real_field(&TrainConfig::fewshot_learning_rate)},
      {"kmeans-restarts", count_field(&TrainConfig::kmeans_restarts)},
      {"seed", count_field(&TrainConfig::seed)},
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& [name, field] : field_table()) {
    if (name == key) return field;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(lambda_cls >= 0.0, "lambda-cls must be >= 0");
  require(lambda_cls_prime >= 0.0, "lambda-cls-prime must be >= 0");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(kl_weight >= 0.0, "kl-weight must be >= 0");
  require(learning_rate > 0.0, "learning-rate must be > 0");
  require(classifier_learning_rate > 0.0, "classifier-learning-rate must be > 0");
  require(fewshot_learning_rate > 0.0, "fewshot-learning-rate must be > 0");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(finetune_epochs >= 1, "finetune-epochs must be >= 1");
  require(cvae_epochs >= 1, "cvae-epochs must be >= 1");
  require(classifier_epochs >= 1, "classifier-epochs must be >= 1");
  require(fewshot_steps >= 1, "fewshot-steps must be >= 1");
  require(batch_size >= 1, "batch-size must be >= 1");
  require(n_synth_per_unseen >= 1, "n-synth-per-unseen must be >= 1");
  require(projected_dim >= 1, "projected-dim must be >= 1");
  require(hidden_dim >= 1, "hidden-dim must be >= 1");
  require(kmeans_restarts >= 1, "kmeans-restarts must be >= 1");
}

void apply_preset(TrainConfig& config, std::string_view preset) {
  const BenchmarkPreset p = benchmark_preset(preset);
  config.projected_dim = p.projected_dim;
  config.alpha = p.alpha;
  config.hidden_dim = 4096;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, field] : field_table()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, key, trim(value));
}

std::string get_config_value(const TrainConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

std::vector<std::pair<std::string, std::string>> config_items(const TrainConfig& config) {
  std::vector<std::pair<std::string, std::string>> items;
  for (const auto& [name, field] : field_table()) items.emplace_back(name, field.get(config));
  return items;
}

void apply_config_text(TrainConfig& config, std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    try {
      set_config_value(config, key, std::string_view(body).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_items(config)) out += key + " = " + value + "\n";
  return out;
}

}  // namespace cfz
