#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ecgnet/losses_metrics.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "ecgnet/preprocess.hpp"
#include "ecgnet/qrs_detect.hpp"
#include "ecgnet/segmenter.hpp"
#include "ecgnet/synth.hpp"
#include "ecgnet/training.hpp"

namespace py = pybind11;
using namespace ecgnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> view(const DoubleArray& a) {
  if (a.ndim() != 1) throw Error("expected a one-dimensional array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

ClassLabel parse_label(const std::string& code) {
  if (code == "N") return ClassLabel::Normal;
  if (code == "A") return ClassLabel::AFib;
  if (code == "O") return ClassLabel::Other;
  throw Error("label must be 'N', 'A' or 'O', got '" + code + "'");
}

Rhythm parse_rhythm(const std::string& name) {
  if (name == "regular") return Rhythm::Regular;
  if (name == "irregular") return Rhythm::Irregular;
  if (name == "noisy") return Rhythm::Noisy;
  throw Error("rhythm must be 'regular', 'irregular' or 'noisy', got '" + name + "'");
}

std::vector<std::size_t> label_indices(const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& t) {
  std::vector<std::size_t> out;
  for (py::ssize_t i = 0; i < t.size(); ++i) {
    if (t.data()[i] < 0) throw Error("targets must be non-negative");
    out.push_back(static_cast<std::size_t>(t.data()[i]));
  }
  return out;
}

nn::Tensor<double> probs_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& p) {
  if (p.ndim() != 2) throw Error("probabilities must be a 2-D array");
  return nn::Tensor<double>({static_cast<std::size_t>(p.shape(0)), static_cast<std::size_t>(p.shape(1))},
                            std::vector<double>(p.data(), p.data() + p.size()));
}

ModelConfig make_config(const std::string& scheme, bool tiny) {
  if (tiny) return ModelConfig::tiny(parse_scheme(scheme));
  ModelConfig cfg;
  cfg.scheme = parse_scheme(scheme);
  return cfg;
}

py::dict epoch_dict(const EpochStats& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["train_loss"] = e.train_loss;
  d["val_loss"] = e.val_loss;
  d["val_weighted_f1"] = e.val_weighted_f1;
  d["val_f1"] = e.val_f1;
  d["val_specificity"] = e.val_specificity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ecgnet, m) {
  m.doc() = "ECG rhythm classification: preprocessing, R-peak detection, segmentation and CNN/BiLSTM models";

  py::register_exception<Error>(m, "EcgError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  m.def(
      "design_bandpass",
      [](double low, double high, double fs, std::size_t taps) {
        return to_array(design_bandpass(FilterSpec{low, high, fs, taps}).taps);
      },
      py::arg("low") = 3.0, py::arg("high") = 45.0, py::arg("fs") = 300.0, py::arg("taps") = 601);

  m.def(
      "preprocess",
      [](const DoubleArray& x, double fs, double low, double high, std::size_t taps, std::size_t max_len) {
        Record rec{"r", {view(x).begin(), view(x).end()}, fs, std::nullopt};
        return to_array(preprocess_record(rec, FilterSpec{low, high, fs, taps}, max_len).samples);
      },
      py::arg("samples"), py::arg("fs") = 300.0, py::arg("low") = 3.0, py::arg("high") = 45.0,
      py::arg("taps") = 601, py::arg("max_len") = kDefaultMaxLength);

  m.def(
      "detect_r_peaks",
      [](const DoubleArray& x, double fs, std::size_t k_min, std::size_t k_max, double refractory, double theta) {
        DualSlopeParams p;
        p.k_min = k_min;
        p.k_max = k_max;
        p.refractory = refractory;
        p.theta_init = theta;
        const auto ann = detect_r_peaks(view(x), fs, p);
        std::vector<std::int64_t> peaks(ann.peaks.begin(), ann.peaks.end());
        return py::make_tuple(to_array(peaks), to_array(ann.rr));
      },
      py::arg("samples"), py::arg("fs") = 300.0, py::arg("k_min") = DualSlopeParams{}.k_min,
      py::arg("k_max") = DualSlopeParams{}.k_max, py::arg("refractory") = DualSlopeParams{}.refractory,
      py::arg("theta") = DualSlopeParams{}.theta_init);

  m.def(
      "synth_ecg",
      [](const std::string& rhythm, double mean_hr, double duration, double snr_db, std::uint64_t seed, double fs) {
        SynthSpec s;
        s.rhythm = parse_rhythm(rhythm);
        s.mean_hr = mean_hr;
        s.duration = duration;
        s.snr_db = snr_db;
        s.seed = seed;
        s.fs = fs;
        const auto e = synth_ecg(s);
        std::vector<std::int64_t> peaks(e.peaks.begin(), e.peaks.end());
        return py::make_tuple(to_array(e.record.samples), to_array(peaks),
                              std::string(1, label_code(*e.record.label)));
      },
      py::arg("rhythm") = "regular", py::arg("mean_hr") = 75.0, py::arg("duration") = 30.0, py::arg("snr_db") = 20.0,
      py::arg("seed") = 0, py::arg("fs") = 300.0);

  py::class_<Segment>(m, "Segment")
      .def_property_readonly("record_id", &Segment::record_id)
      .def_property_readonly("samples", [](const Segment& s) { return to_array(s.samples()); })
      .def_property_readonly("peak_offsets",
                             [](const Segment& s) {
                               return std::vector<std::int64_t>(s.peak_offsets().begin(), s.peak_offsets().end());
                             })
      .def_property_readonly("label", [](const Segment& s) { return std::string(1, label_code(s.label())); })
      .def("__repr__", [](const Segment& s) {
        return "<Segment " + s.record_id() + " label=" + label_code(s.label()) +
               " beats=" + std::to_string(s.peak_offsets().size()) + ">";
      });

  m.def(
      "segment_record",
      [](const DoubleArray& x, const std::vector<std::size_t>& peaks, const std::string& label,
         const std::string& record_id, double fs) {
        Record rec{record_id, {view(x).begin(), view(x).end()}, fs, parse_label(label)};
        BeatAnnotations ann;
        ann.peaks = peaks;
        ann.rr = rr_intervals(peaks, fs);
        return segment_record(rec, ann, SegmentConfig{});
      },
      py::arg("samples"), py::arg("peaks"), py::arg("label"), py::arg("record_id") = "r", py::arg("fs") = 300.0);

  m.def(
      "segment_directory",
      [](const std::filesystem::path& dir, double fs, bool preprocessed) {
        auto ds = load_dataset(dir, dir / "REFERENCE.csv", fs);
        PipelineConfig cfg;
        cfg.filter.fs = fs;
        cfg.already_preprocessed = preprocessed;
        return segment_dataset(ds, cfg).segments;
      },
      py::arg("directory"), py::arg("fs") = 300.0, py::arg("preprocessed") = false);

  m.def("read_segment_pack", &read_segment_pack, py::arg("path"));

  m.def(
      "focal_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
         const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& t, double gamma) {
        return focal_loss(probs_tensor(p), label_indices(t), FocalConfig{gamma});
      },
      py::arg("probs"), py::arg("targets"), py::arg("gamma") = 2.0);

  m.def(
      "cross_entropy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p,
         const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& t) {
        return cross_entropy(probs_tensor(p), label_indices(t));
      },
      py::arg("probs"), py::arg("targets"));

  m.def(
      "metrics_json",
      [](const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& pred,
         const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& truth) {
        return to_json(make_report(confusion_matrix(label_indices(pred), label_indices(truth), kNumClasses))).dump();
      },
      py::arg("predicted"), py::arg("truth"));

  py::class_<Classifier<float>>(m, "Classifier")
      .def(py::init([](const std::string& scheme, bool tiny, std::uint64_t seed) {
             return std::make_unique<Classifier<float>>(make_config(scheme, tiny), seed);
           }),
           py::arg("scheme") = "cascade", py::arg("tiny") = false, py::arg("seed") = 0)
      .def_property_readonly("scheme", [](Classifier<float>& c) { return scheme_name(c.config().scheme); })
      .def_property_readonly("parameter_count", [](Classifier<float>& c) { return count_parameters(c); })
      .def_property_readonly("config_json", [](Classifier<float>& c) { return to_json(c.config()).dump(); })
      .def(
          "predict",
          [](Classifier<float>& c, const std::vector<Segment>& segments) {
            const auto p = predict(c, segments);
            py::array_t<float> out({static_cast<py::ssize_t>(segments.size()), static_cast<py::ssize_t>(kNumClasses)});
            std::copy(p.begin(), p.end(), out.mutable_data());
            return out;
          },
          py::arg("segments"))
      .def(
          "evaluate_json",
          [](Classifier<float>& c, const std::vector<Segment>& segments, double gamma) {
            return to_json(evaluate(c, segments, index_segments(segments), FocalConfig{gamma})).dump();
          },
          py::arg("segments"), py::arg("gamma") = 2.0)
      .def(
          "fit",
          [](Classifier<float>& c, const std::vector<Segment>& train_set, const std::vector<Segment>& val,
             std::size_t epochs, std::size_t batch_size, double lr, double gamma, std::uint64_t seed,
             bool keep_best) {
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.adam.lr = lr;
            cfg.focal.gamma = gamma;
            cfg.seed = seed;
            TrainResult r;
            {
              py::gil_scoped_release release;
              r = train(c, train_set, val, cfg);
              if (keep_best) restore(c, r.best);
            }
            py::list history;
            for (const auto& e : r.history.epochs) history.append(epoch_dict(e));
            py::dict out;
            out["history"] = history;
            out["best_epoch"] = r.best_epoch;
            return out;
          },
          py::arg("train"), py::arg("val") = std::vector<Segment>{}, py::arg("epochs") = 5,
          py::arg("batch_size") = 64, py::arg("lr") = 1e-3, py::arg("gamma") = 2.0, py::arg("seed") = 0,
          py::arg("keep_best") = true)
      .def(
          "save",
          [](Classifier<float>& c, const std::filesystem::path& path) { save_snapshot(path, snapshot(c)); },
          py::arg("path"))
      .def(
          "load", [](Classifier<float>& c, const std::filesystem::path& path) { nn::load_checkpoint(path, c.state()); },
          py::arg("path"));
}
