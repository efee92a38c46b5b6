// cfz: data generation, training, synthesis, evaluation, ablation and reports.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfz/config.hpp"
#include "cfz/datasets.hpp"
#include "cfz/evalmetrics.hpp"
#include "cfz/parallel.hpp"
#include "cfz/pipeline.hpp"
#include "cfz/report.hpp"
#include "cfz/zslmodel.hpp"

namespace {

using namespace cfz;

std::string command_line;

// Flags shared by every command that resolves a TrainConfig.
struct ConfigFlags {
  std::string preset;
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> keyed;
  bool no_finetune = false;
  bool no_projection = false;
  bool no_noise = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Benchmark widths: cub, sun or awa2")
        ->check(CLI::IsMember({"cub", "sun", "awa2"}));
    cmd->add_option("--config", config_file, "key = value config file");
    cmd->add_option("--set", sets, "Override as key=value (repeatable)");
    for (const std::string& key : config_keys()) {
      cmd->add_option_function<std::string>("--" + key, [this, key](const std::string& v) { keyed[key] = v; },
                                             "Config key " + key);
    }
    cmd->add_flag("--no-finetune", no_finetune, "Keep F at the identity");
    cmd->add_flag("--no-projection", no_projection, "Reconstruct features without the mapping M");
    cmd->add_flag("--no-noise", no_noise, "Disable target noise");
  }

  // defaults < preset < config file < command-line overrides
  TrainConfig resolve() const {
    TrainConfig c;
    if (!preset.empty()) apply_preset(c, preset);
    if (!config_file.empty()) apply_config_file(c, config_file);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [k, v] : keyed) set_config_value(c, k, v);
    if (no_finetune) c.use_gaussian_finetune = false;
    if (no_projection) c.use_projection = false;
    if (no_noise) c.use_noise = false;
    c.validate();
    return c;
  }
};

RunManifest make_manifest(const TrainConfig& config) {
  RunManifest m;
  m.command_line = command_line;
  m.config = config;
  m.threads = thread_count();
  m.seeds = stage_seeds(config);
  return m;
}

Dataset load_inputs(const std::string& prefix, RunManifest& manifest) {
  const DatasetPaths paths = DatasetPaths::from_prefix(prefix);
  Dataset d = load_dataset(paths);
  for (const auto& p : {paths.features, paths.labels, paths.attributes, paths.split}) manifest.add_input(p);
  return d;
}

std::string default_manifest(const std::string& manifest, const std::string& base) {
  return manifest.empty() ? base + ".manifest" : manifest;
}

void put_gzsl(MetricsFile& m, const GzslResult& g) {
  m.set("gzsl_unseen", g.unseen);
  m.set("gzsl_seen", g.seen);
  m.set("gzsl_harmonic", g.harmonic);
}

// --- commands ----------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  SyntheticSpec spec;
};

void cmd_gen_data(const GenDataArgs& a) {
  a.spec.validate();
  const Dataset d = generate_synthetic(a.spec);
  save_dataset(DatasetPaths::from_prefix(a.out), d);
  std::cout << "wrote dataset " << a.out << " (" << d.features.rows() << " rows, " << d.num_classes()
            << " classes)\n";
}

struct TrainArgs {
  std::string data, out, manifest, metrics;
  ConfigFlags flags;
};

void cmd_train(const TrainArgs& a) {
  const TrainConfig config = a.flags.resolve();
  RunManifest manifest = make_manifest(config);
  const Dataset data = load_inputs(a.data, manifest);
  data.validate();

  auto t0 = std::chrono::steady_clock::now();
  const FinetuneResult ft = stage_finetune_gaussian(data, config);
  manifest.stage_seconds["finetune"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  t0 = std::chrono::steady_clock::now();
  const CvaeResult cvae = stage_train_cvae(data, ft, config);
  manifest.stage_seconds["cvae"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_checkpoint(a.out, cvae.params);
  manifest.traces["finetune-loss"] = ft.loss_trace;
  manifest.traces["cvae-loss"] = cvae.loss_trace;
  if (!cvae.component_trace.empty()) {
    for (const auto& [name, value] : cvae.component_trace.back().components) {
      manifest.metrics.set("final_" + name, value);
    }
  }
  if (!ft.loss_trace.empty()) manifest.metrics.set("final_finetune_loss", ft.loss_trace.back());
  manifest.metrics.set("final_cvae_loss", cvae.loss_trace.back());
  manifest.metrics.set("checkpoint_digest", file_digest(a.out));
  if (!a.metrics.empty()) manifest.metrics.write(a.metrics);
  manifest.write(default_manifest(a.manifest, a.out));
  std::cout << "wrote checkpoint " << a.out << "\n";
}

struct SynthesizeArgs {
  std::string checkpoint, data, out;
  bool include_seen = false;
  ConfigFlags flags;
};

void cmd_synthesize(const SynthesizeArgs& a) {
  const TrainConfig config = a.flags.resolve();
  RunManifest manifest = make_manifest(config);
  const Dataset data = load_inputs(a.data, manifest);
  manifest.add_input(a.checkpoint);
  const ZslModelParams params = load_checkpoint(a.checkpoint);
  const LabeledRows synth = stage_synthesize_unseen(params, data.attributes, data.split, config, a.include_seen);
  save_feature_file(a.out + ".features.cfz", synth.features);
  save_label_file(a.out + ".labels.clz", synth.labels);
  manifest.metrics.set("synthesized_rows", static_cast<double>(synth.labels.size()));
  manifest.write(a.out + ".manifest");
  std::cout << "wrote " << synth.labels.size() << " synthesized rows to " << a.out << "\n";
}

struct EvalArgs {
  std::string checkpoint, data, protocol = "gzsl", metrics, manifest, export_path;
  EpisodeSpec episodes;
  ConfigFlags flags;
};

void cmd_eval(const EvalArgs& a) {
  const TrainConfig config = a.flags.resolve();
  RunManifest manifest = make_manifest(config);
  const Dataset data = load_inputs(a.data, manifest);
  data.validate();
  manifest.add_input(a.checkpoint);
  const ZslModelParams params = load_checkpoint(a.checkpoint);
  params.validate();
  if (params.dims.feature_dim != data.feature_dim() || params.dims.attribute_dim != data.attribute_dim()) {
    throw ShapeError("checkpoint dims (d_f=" + std::to_string(params.dims.feature_dim) +
                     ", d_a=" + std::to_string(params.dims.attribute_dim) + ") do not match dataset (d_f=" +
                     std::to_string(data.feature_dim()) + ", d_a=" + std::to_string(data.attribute_dim()) + ")");
  }
  MetricsFile& m = manifest.metrics;
  m.set("protocol", a.protocol);
  const auto t0 = std::chrono::steady_clock::now();

  if (a.protocol == "zsl" || a.protocol == "gzsl") {
    const EvaluationResult r = evaluate_model(params, data, config, a.protocol == "gzsl");
    m.set("zsl_accuracy", r.zsl_accuracy);
    for (const auto& [c, acc] : r.zsl_per_class.per_class) m.set("zsl_class_" + std::to_string(c), acc);
    if (a.protocol == "gzsl") put_gzsl(m, r.gzsl);
  } else if (a.protocol == "clusterability") {
    const LabeledRows test = gather(data, data.test_rows_unseen());
    KMeansOptions km;
    km.restarts = config.kmeans_restarts;
    const std::uint64_t seed = stage_seeds(config).at("kmeans");
    const Matrix embedded = embed(params, test.features);
    m.set("nmi_raw", clusterability_nmi(test.features, test.labels, seed, km));
    m.set("nmi_embedded", clusterability_nmi(embedded, test.labels, seed, km));
    const LabeledRows synth = stage_synthesize_unseen(params, data.attributes, data.split, config);
    const VarianceStats vs = variance_stats(synth.features, synth.labels);
    m.set("synth_intra_class_variance", vs.intra_class_variance);
    m.set("synth_inter_class_mean_distance", vs.inter_class_mean_distance);
    const VarianceStats rs = variance_stats(embedded, test.labels);
    m.set("real_intra_class_variance", rs.intra_class_variance);
    m.set("real_inter_class_mean_distance", rs.inter_class_mean_distance);
    if (!a.export_path.empty()) {
      const Matrix both = pca_project_2d(vstack(embedded, synth.features));
      std::vector<ProjectionPoint> points;
      for (std::size_t i = 0; i < both.rows(); ++i) {
        const bool real = i < embedded.rows();
        points.push_back({both(i, 0), both(i, 1), real ? test.labels[i] : synth.labels[i - embedded.rows()],
                          real ? "real" : "synthesized"});
      }
      write_projection_export(a.export_path, points);
    }
  } else if (a.protocol == "fewshot") {
    const FewShotResult tuned = run_fewshot_episodes(data, params.finetune, a.episodes, config);
    const FewShotResult base = run_fewshot_episodes(data, identity_affine(data.feature_dim()), a.episodes, config);
    m.set("fewshot_n_way", static_cast<double>(a.episodes.n_way));
    m.set("fewshot_k_shot", static_cast<double>(a.episodes.k_shot));
    m.set("fewshot_episodes", static_cast<double>(a.episodes.n_episodes));
    m.set("fewshot_mean", tuned.mean_accuracy);
    m.set("fewshot_ci95", tuned.ci95);
    m.set("fewshot_baseline_mean", base.mean_accuracy);
    m.set("fewshot_baseline_ci95", base.ci95);
    manifest.seeds["episodes"] = a.episodes.seed;
  } else {
    throw std::invalid_argument("unknown protocol '" + a.protocol + "'");
  }
  manifest.stage_seconds["eval-" + a.protocol] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string metrics_path = a.metrics.empty() ? a.checkpoint + "." + a.protocol + ".metrics" : a.metrics;
  m.write(metrics_path);
  manifest.write(default_manifest(a.manifest, metrics_path));
  std::cout << m.text();
}

struct AblationArgs {
  std::string data, out, manifest;
  ConfigFlags flags;
};

void cmd_ablation(const AblationArgs& a) {
  const TrainConfig config = a.flags.resolve();
  RunManifest manifest = make_manifest(config);
  const Dataset data = load_inputs(a.data, manifest);
  data.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<AblationRow> rows = run_ablation(data, config);
  manifest.stage_seconds["ablation"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream table;
  table << "row\taccuracy\tnmi\tseed\n";
  for (const AblationRow& r : rows) {
    table << r.name << '\t' << format_metric(r.accuracy) << '\t' << format_metric(r.nmi) << '\t' << r.config.seed
          << "\n";
    manifest.seeds["row-" + r.name] = r.config.seed;
    manifest.metrics.set(r.name + "_accuracy", r.accuracy);
    manifest.metrics.set(r.name + "_nmi", r.nmi);
  }
  write_text_file(a.out, table.str());
  manifest.write(default_manifest(a.manifest, a.out));
  std::cout << table.str();
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

// Collects the [metrics] sections of several manifests into one table.
void cmd_report(const ReportArgs& a) {
  std::ostringstream os;
  os << "source\tkey\tvalue\n";
  for (const std::string& path : a.inputs) {
    std::ifstream in(path);
    if (!in) throw DataError(DataErrc::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    for (const ManifestEntry& e : parse_manifest(ss.str())) {
      if (e.section == "metrics" || e.section.empty()) os << path << '\t' << e.key << '\t' << e.value << "\n";
    }
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    write_text_file(a.out, os.str());
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const DataError*>(&e)) return "data";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid-argument";
  return "runtime";
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Clusterable feature synthesis for zero-shot learning"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Write a synthetic dataset");
  g->add_option("--out", gen.out, "Output prefix")->required();
  g->add_option("--k-seen", gen.spec.k_seen);
  g->add_option("--k-unseen", gen.spec.k_unseen);
  g->add_option("--d-a", gen.spec.d_a);
  g->add_option("--d-f", gen.spec.d_f);
  g->add_option("--samples-per-class", gen.spec.samples_per_class);
  g->add_option("--spread", gen.spec.cluster_spread);
  g->add_option("--overlap", gen.spec.overlap);
  g->add_option("--seen-test-fraction", gen.spec.seen_test_fraction);
  g->add_option("--nuisance-rank", gen.spec.nuisance_rank, "Shared class-independent noise directions");
  g->add_option("--nuisance-scale", gen.spec.nuisance_scale, "Their std, in units of --spread");
  g->add_option("--seed", gen.spec.seed);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fine-tune F, then train the CVAE");
  t->add_option("--data", train.data, "Dataset prefix")->required();
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--manifest", train.manifest, "Manifest path (default <out>.manifest)");
  t->add_option("--metrics", train.metrics, "Metrics file path");
  train.flags.attach(t);

  SynthesizeArgs syn;
  auto* s = app.add_subcommand("synthesize", "Generate unseen-class features from a checkpoint");
  s->add_option("--checkpoint", syn.checkpoint)->required();
  s->add_option("--data", syn.data, "Dataset prefix")->required();
  s->add_option("--out", syn.out, "Output prefix")->required();
  s->add_flag("--include-seen", syn.include_seen);
  syn.flags.attach(s);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data, "Dataset prefix")->required();
  e->add_option("--protocol", ev.protocol)->check(CLI::IsMember({"zsl", "gzsl", "clusterability", "fewshot"}));
  e->add_option("--metrics", ev.metrics, "Metrics path (default <checkpoint>.<protocol>.metrics)");
  e->add_option("--manifest", ev.manifest);
  e->add_option("--export", ev.export_path, "2-D projection export (clusterability)");
  e->add_option("--n-way", ev.episodes.n_way);
  e->add_option("--k-shot", ev.episodes.k_shot);
  e->add_option("--n-query", ev.episodes.n_query);
  e->add_option("--episodes", ev.episodes.n_episodes);
  e->add_option("--episode-seed", ev.episodes.seed);
  ev.flags.attach(e);

  AblationArgs abl;
  auto* ab = app.add_subcommand("ablation", "Run the four component settings");
  ab->add_option("--data", abl.data, "Dataset prefix")->required();
  ab->add_option("--out", abl.out, "Table path")->required();
  ab->add_option("--manifest", abl.manifest);
  abl.flags.attach(ab);

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Collect metrics from manifests");
  r->add_option("inputs", rep.inputs, "Manifest or metrics files")->required();
  r->add_option("--out", rep.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "error: usage: " << one_line(ex.what()) << "\n";
    return 2;
  }

  try {
    if (*g) cmd_gen_data(gen);
    else if (*t) cmd_train(train);
    else if (*s) cmd_synthesize(syn);
    else if (*e) cmd_eval(ev);
    else if (*ab) cmd_ablation(abl);
    else if (*r) cmd_report(rep);
  } catch (const std::invalid_argument& ex) {
    // invalid synthetic specs are usage errors
    if (*g) {
      std::cerr << "error: usage: " << one_line(ex.what()) << "\n";
      return 2;
    }
    std::cerr << "error: " << error_kind(ex) << ": " << one_line(ex.what()) << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << error_kind(ex) << ": " << one_line(ex.what()) << "\n";
    return 1;
  }
  return 0;
}
