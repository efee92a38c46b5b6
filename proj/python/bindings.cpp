#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

#include "cfz/config.hpp"
#include "cfz/datasets.hpp"
#include "cfz/evalmetrics.hpp"
#include "cfz/objectives.hpp"
#include "cfz/pipeline.hpp"
#include "cfz/zslmodel.hpp"

namespace py = pybind11;
using namespace cfz;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.values().data(), a.data(), m.values().size() * sizeof(double));
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::memcpy(a.mutable_data(), m.values().data(), m.values().size() * sizeof(double));
  return a;
}

std::vector<std::uint32_t> to_labels(const Labels& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D label array");
  return {a.data(), a.data() + a.size()};
}

Labels to_label_array(const std::vector<std::uint32_t>& v) {
  Labels a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<std::size_t> to_slots(const Labels& a) {
  const auto v = to_labels(a);
  return {v.begin(), v.end()};
}

TrainConfig make_config(const py::kwargs& overrides) {
  TrainConfig c;
  if (overrides.contains("preset")) apply_preset(c, py::str(overrides["preset"]).cast<std::string>());
  for (const auto& [key, value] : overrides) {
    const std::string name = py::str(key);
    if (name == "preset") continue;
    std::string k = name;  // keyword arguments use underscores, config keys use dashes
    std::replace(k.begin(), k.end(), '_', '-');
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + name + "'");
    std::string v = py::str(value);
    if (py::isinstance<py::bool_>(value)) v = value.cast<bool>() ? "true" : "false";
    set_config_value(c, k, v);
  }
  c.validate();
  return c;
}

py::dict gzsl_dict(const GzslResult& g) {
  py::dict d;
  d["seen"] = g.seen;
  d["unseen"] = g.unseen;
  d["harmonic"] = g.harmonic;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cfz, m) {
  m.doc() = "Conditional-VAE feature synthesis for zero-shot learning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  // --- configuration --------------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init(&make_config))
      .def("items", &config_items)
      .def("__getitem__", &get_config_value)
      .def("__setitem__", [](TrainConfig& c, const std::string& k, const std::string& v) {
        set_config_value(c, k, v);
      })
      .def("text", &format_config)
      .def_static("keys", &config_keys)
      .def("__repr__", [](const TrainConfig& c) { return "TrainConfig(seed=" + std::to_string(c.seed) + ")"; });

  // --- data -----------------------------------------------------------------
  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("features", [](const Dataset& d) { return to_array(d.features); })
      .def_property_readonly("labels", [](const Dataset& d) { return to_label_array(d.labels); })
      .def_property_readonly("attributes", [](const Dataset& d) { return to_array(d.attributes); })
      .def_property_readonly("seen", [](const Dataset& d) { return d.split.seen; })
      .def_property_readonly("unseen", [](const Dataset& d) { return d.split.unseen; })
      .def_property_readonly("test_rows", [](const Dataset& d) { return d.split.test_rows; })
      .def("train_rows", &Dataset::train_rows)
      .def("save", [](const Dataset& d, const std::filesystem::path& prefix) {
        save_dataset(DatasetPaths::from_prefix(prefix), d);
      })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("load_dataset", [](const std::filesystem::path& prefix) { return load_dataset(DatasetPaths::from_prefix(prefix)); },
        py::arg("prefix"));
  m.def(
      "generate_synthetic",
      [](std::size_t k_seen, std::size_t k_unseen, std::size_t d_a, std::size_t d_f,
         std::size_t samples_per_class, double cluster_spread, double overlap, std::size_t nuisance_rank,
         double nuisance_scale, std::uint64_t seed) {
        SyntheticSpec s;
        s.k_seen = k_seen;
        s.k_unseen = k_unseen;
        s.d_a = d_a;
        s.d_f = d_f;
        s.samples_per_class = samples_per_class;
        s.cluster_spread = cluster_spread;
        s.overlap = overlap;
        s.nuisance_rank = nuisance_rank;
        s.nuisance_scale = nuisance_scale;
        s.seed = seed;
        return generate_synthetic(s);
      },
      py::kw_only(), py::arg("k_seen") = 15, py::arg("k_unseen") = 5, py::arg("d_a") = 16, py::arg("d_f") = 64,
      py::arg("samples_per_class") = 100, py::arg("cluster_spread") = 0.3, py::arg("overlap") = 0.3,
      py::arg("nuisance_rank") = 4, py::arg("nuisance_scale") = 4.0, py::arg("seed") = 7);

  m.def("encode_feature_file", [](const Array& a) {
    const auto bytes = encode_feature_file(to_matrix(a));
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_feature_file", [](const py::bytes& b) {
    const std::string s = b;
    return to_array(decode_feature_file({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
  });

  // --- model ----------------------------------------------------------------
  py::class_<ZslModelParams>(m, "Model")
      .def_property_readonly("feature_dim", [](const ZslModelParams& p) { return p.dims.feature_dim; })
      .def_property_readonly("projected_dim", [](const ZslModelParams& p) { return p.dims.projected_dim; })
      .def_property_readonly("seen_classes", [](const ZslModelParams& p) { return p.seen_classes; })
      .def("embed", [](const ZslModelParams& p, const Array& x) { return to_array(embed(p, to_matrix(x))); })
      .def("synthesize",
           [](const ZslModelParams& p, const std::vector<double>& attribute, std::size_t n, std::uint64_t seed) {
             Rng rng(seed);
             return to_array(synthesize_features(p, attribute, n, rng));
           },
           py::arg("attribute"), py::arg("n"), py::arg("seed") = 0)
      .def("save", [](const ZslModelParams& p, const std::filesystem::path& path) { save_checkpoint(path, p); })
      .def("__eq__", [](const ZslModelParams& a, const ZslModelParams& b) { return a == b; });
  m.def("load_checkpoint", [](const std::filesystem::path& path) { return load_checkpoint(path); });

  // --- pipeline -------------------------------------------------------------
  m.def(
      "run_pipeline",
      [](const Dataset& data, const TrainConfig& config) {
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(data, config);
        }
        py::dict out;
        out["zsl_accuracy"] = r.zsl_accuracy;
        out["gzsl"] = gzsl_dict(r.gzsl);
        out["nmi_raw"] = r.nmi_raw;
        out["nmi_embedded"] = r.nmi_embedded;
        out["intra_class_variance"] = r.synthesized_variance.intra_class_variance;
        out["inter_class_mean_distance"] = r.synthesized_variance.inter_class_mean_distance;
        out["cvae_loss"] = r.cvae.loss_trace;
        out["finetune_loss"] = r.finetune.loss_trace;
        out["stage_seconds"] = r.stage_seconds;
        out["model"] = r.cvae.params;
        return out;
      },
      py::arg("data"), py::arg("config") = TrainConfig{});

  m.def(
      "run_ablation",
      [](const Dataset& data, const TrainConfig& config) {
        std::vector<AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_ablation(data, config);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["name"] = r.name;
          d["accuracy"] = r.accuracy;
          d["nmi"] = r.nmi;
          out.append(d);
        }
        return out;
      },
      py::arg("data"), py::arg("config") = TrainConfig{});

  m.def(
      "run_fewshot",
      [](const Dataset& data, const TrainConfig& config, std::size_t n_way, std::size_t k_shot,
         std::size_t n_query, std::size_t episodes, std::uint64_t seed) {
        EpisodeSpec e{n_way, k_shot, n_query, episodes, seed};
        FewShotResult r;
        {
          py::gil_scoped_release release;
          r = run_fewshot(data, e, config);
        }
        py::dict out;
        out["mean"] = r.mean_accuracy;
        out["ci95"] = r.ci95;
        out["episodes"] = r.episode_accuracy;
        return out;
      },
      py::arg("data"), py::arg("config") = TrainConfig{}, py::kw_only(), py::arg("n_way") = 5,
      py::arg("k_shot") = 1, py::arg("n_query") = 15, py::arg("episodes") = 200, py::arg("seed") = 7);

  // --- metrics --------------------------------------------------------------
  m.def("harmonic_mean", &harmonic_mean, py::arg("seen"), py::arg("unseen"));
  m.def("normalized_mutual_information", [](const Labels& a, const Labels& b) {
    return normalized_mutual_information(to_labels(a), to_labels(b));
  });
  m.def("per_class_top1", [](const Labels& pred, const Labels& truth) {
    const PerClassAccuracy r = per_class_top1(to_labels(pred), to_labels(truth));
    return py::make_tuple(r.mean, r.per_class);
  });
  m.def("clusterability_nmi", [](const Array& x, const Labels& y, std::uint64_t seed) {
    return clusterability_nmi(to_matrix(x), to_labels(y), seed);
  }, py::arg("features"), py::arg("labels"), py::arg("seed") = 0);
  m.def("variance_stats", [](const Array& x, const Labels& y) {
    const VarianceStats v = variance_stats(to_matrix(x), to_labels(y));
    return py::make_tuple(v.intra_class_variance, v.inter_class_mean_distance);
  });

  // --- losses ---------------------------------------------------------------
  m.def("kl_to_standard_normal", [](const Array& mu, const Array& lv) {
    return kl_to_standard_normal(to_matrix(mu), to_matrix(lv));
  });
  m.def("cce_loss", [](const Array& h, const Array& w, const Labels& y) {
    const auto r = cce_loss(to_matrix(h), to_matrix(w), to_slots(y));
    return py::make_tuple(r.loss.total, to_array(r.d_features), to_array(r.d_weights));
  });
  m.def("gaussian_similarity_loss", [](const Array& h, const Array& w, const Labels& y, double gamma) {
    const auto r = gaussian_similarity_loss(to_matrix(h), to_matrix(w), to_slots(y), gamma);
    return py::make_tuple(r.loss.total, to_array(r.d_features), to_array(r.d_weights));
  }, py::arg("features"), py::arg("weights"), py::arg("labels"), py::arg("gamma"));
}
