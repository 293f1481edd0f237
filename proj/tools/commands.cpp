#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "ecgnet/nn/checkpoint.hpp"
#include "manifest.hpp"

namespace ecgnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPreprocessMarker = "preprocess.json";

fs::path prepare_out(const RunConfig& cfg) {
  require(!cfg.out.empty(), "--out is required");
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  require(!ec && fs::is_directory(cfg.out), "cannot create output directory '" + cfg.out.string() + "'");
  return cfg.out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// Loads the records named in the reference file and registers them as inputs.
Dataset load_input(const RunConfig& cfg, Manifest& manifest) {
  require(!cfg.data_dir.empty(), "an input directory is required");
  require(fs::is_directory(cfg.data_dir), "input directory not found: '" + cfg.data_dir.string() + "'");
  const auto ref = cfg.reference_path();
  require(cfg.noisy == "drop" || cfg.noisy == "other", "--noisy must be 'drop' or 'other'");
  const auto policy = cfg.noisy == "drop" ? NoisyPolicy::Drop : NoisyPolicy::FoldIntoOther;
  auto ds = load_dataset(cfg.data_dir, ref, cfg.fs, policy);
  require(!ds.empty(), "no records listed in '" + ref.string() + "'");
  manifest.input(ref);
  for (const auto& rec : ds.records()) manifest.input(*find_record_file(cfg.data_dir, rec.id));
  return ds;
}

bool input_preprocessed(const RunConfig& cfg) {
  return cfg.preprocessed || fs::exists(cfg.data_dir / kPreprocessMarker);
}

std::vector<ReferenceEntry> reference_of(const Dataset& ds) {
  std::vector<ReferenceEntry> out;
  for (const auto& rec : ds.records()) out.push_back({rec.id, *rec.label});
  return out;
}

json class_counts(const std::map<ClassLabel, std::size_t>& counts) {
  json j = json::object();
  for (const auto label : kAllLabels) {
    const auto it = counts.find(label);
    j[std::string(1, label_code(label))] = it == counts.end() ? 0 : it->second;
  }
  return j;
}

ModelConfig model_config(const RunConfig& cfg) {
  const auto scheme = parse_scheme(cfg.scheme);
  if (cfg.tiny) return ModelConfig::tiny(scheme);
  ModelConfig m;
  m.scheme = scheme;
  return m;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  t.validate();
  return t;
}

Dataset subset(const Dataset& ds, const std::set<std::string>& ids) {
  Dataset out;
  for (const auto& rec : ds.records())
    if (ids.contains(rec.id)) out.add(rec);
  return out;
}

}  // namespace

void cmd_synth(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  Manifest manifest("synth", options, out);
  CorpusSpec spec = cfg.corpus;
  spec.fs = cfg.fs;
  spec.seed = cfg.seed;
  require(spec.count > 0, "--n must be positive");
  const auto corpus = synth_corpus(spec);
  std::vector<ReferenceEntry> ref;
  for (const auto& e : corpus) {
    const auto rec_path = out / (e.record.id + ".f32");
    save_record_f32(rec_path, e.record.samples);
    manifest.output(rec_path);
    const auto peaks_path = out / (e.record.id + ".peaks.csv");
    {
      auto f = open_out(peaks_path);
      f << "index,time_s\n";
      for (const auto p : e.peaks) f << p << ',' << format_real(static_cast<double>(p) / spec.fs) << '\n';
    }
    manifest.output(peaks_path);
    ref.push_back({e.record.id, *e.record.label});
  }
  save_reference(out / "REFERENCE.csv", ref);
  manifest.output(out / "REFERENCE.csv");
  manifest.note("records", corpus.size());
  manifest.write();
  std::cout << "synth: wrote " << corpus.size() << " records to " << out.string() << '\n';
}

void cmd_preprocess(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  require(fs::absolute(out) != fs::absolute(cfg.data_dir), "--out must differ from the input directory");
  Manifest manifest("preprocess", options, out);
  const auto ds = load_input(cfg, manifest);
  FilterSpec spec = cfg.filter;
  spec.fs = cfg.fs;
  const auto filter = design_bandpass(spec);
  for (const auto& rec : ds.records()) {
    const auto processed = preprocess_record(rec, filter, cfg.max_len);
    const auto path = out / (rec.id + ".f32");
    save_record_f32(path, processed.samples);
    manifest.output(path);
  }
  save_reference(out / "REFERENCE.csv", reference_of(ds));
  manifest.output(out / "REFERENCE.csv");
  write_json(out / kPreprocessMarker, {{"low", spec.low_cut},
                                       {"high", spec.high_cut},
                                       {"taps", spec.num_taps},
                                       {"fs", spec.fs},
                                       {"max_len", cfg.max_len}});
  manifest.output(out / kPreprocessMarker);
  manifest.note("records", ds.size());
  manifest.write();
  std::cout << "preprocess: " << ds.size() << " records\n";
}

void cmd_detect(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  Manifest manifest("detect", options, out);
  const auto ds = load_input(cfg, manifest);
  cfg.detector.validate();
  const bool ready = input_preprocessed(cfg);
  FilterSpec spec = cfg.filter;
  spec.fs = cfg.fs;
  const auto filter = design_bandpass(spec);
  const auto summary_path = out / "detect_summary.csv";
  auto summary = open_out(summary_path);
  summary << "record,beats,mean_rr_s\n";
  std::size_t total = 0;
  for (const auto& rec : ds.records()) {
    const auto signal = ready ? rec : preprocess_record(rec, filter, cfg.max_len);
    const auto ann = detect_r_peaks(signal.samples, signal.fs, cfg.detector);
    const auto peaks_path = out / (rec.id + ".rpeaks.csv");
    {
      auto f = open_out(peaks_path);
      f << "index,time_s\n";
      for (const auto p : ann.peaks) f << p << ',' << format_real(static_cast<double>(p) / signal.fs) << '\n';
    }
    const auto rr_path = out / (rec.id + ".rr.csv");
    {
      auto f = open_out(rr_path);
      f << "rr_s\n";
      for (const auto r : ann.rr) f << format_real(r) << '\n';
    }
    manifest.output(peaks_path);
    manifest.output(rr_path);
    double mean_rr = 0.0;
    for (const auto r : ann.rr) mean_rr += r;
    if (!ann.rr.empty()) mean_rr /= static_cast<double>(ann.rr.size());
    summary << rec.id << ',' << ann.peaks.size() << ',' << format_real(mean_rr) << '\n';
    total += ann.peaks.size();
  }
  summary.close();
  manifest.output(summary_path);
  manifest.note("records", ds.size());
  manifest.note("beats", total);
  manifest.write();
  std::cout << "detect: " << total << " beats in " << ds.size() << " records\n";
}

void cmd_segment(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  Manifest manifest("segment", options, out);
  const auto ds = load_input(cfg, manifest);
  const auto seg = segment_dataset(ds, cfg.pipeline(input_preprocessed(cfg)));
  const auto pack = out / "segments.bin";
  write_segment_pack(pack, seg.segments, cfg.segments.seg_len);
  manifest.output(pack);
  const auto index_path = out / "segments_index.csv";
  {
    auto f = open_out(index_path);
    f << "record,label,begin,end\n";
    for (const auto& rec : ds.records()) {
      const auto it = seg.per_record_index.find(rec.id);
      const auto r = it == seg.per_record_index.end() ? SegmentRange{} : it->second;
      f << rec.id << ',' << label_code(*rec.label) << ',' << r.begin << ',' << r.end << '\n';
    }
  }
  manifest.output(index_path);
  manifest.note("segments", seg.segments.size());
  manifest.note("class_counts", class_counts(seg.class_counts()));
  manifest.write();
  std::cout << "segment: " << seg.segments.size() << " segments from " << ds.size() << " records\n";
}

void cmd_train(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  Manifest manifest("train", options, out);
  const auto ds = load_input(cfg, manifest);
  const auto mcfg = model_config(cfg);
  const auto tcfg = train_config(cfg);
  Classifier<float> model(mcfg, cfg.seed);
  const auto ex = run_experiment(model, ds, cfg.pipeline(input_preprocessed(cfg)), tcfg, [](const EpochStats& e) {
    std::fprintf(stderr, "epoch %zu: train_loss %.5f val_loss %.5f val_weighted_f1 %.4f\n", e.epoch, e.train_loss,
                 e.val_loss, e.val_weighted_f1);
  });

  save_snapshot(out / "last.ckpt", snapshot(model));
  save_snapshot(out / "best.ckpt", ex.result.best);
  write_json(out / "model.json", to_json(mcfg));
  write_history_csv(out / "history.csv", ex.result.history);
  write_json(out / "split.json", {{"seed", tcfg.seed},
                                  {"train_fraction", tcfg.split_fraction},
                                  {"train", ex.train_ids},
                                  {"val", ex.val_ids}});
  json metrics = {{"best_epoch", ex.result.best_epoch},
                  {"train_segments", ex.train_segments.segments.size()},
                  {"val_segments", ex.val_segments.segments.size()}};
  if (!ex.val_segments.segments.empty()) {
    restore(model, ex.result.best);
    metrics["val"] = to_json(evaluate(model, ex.val_segments.segments, ex.val_segments.per_record_index, tcfg.focal,
                                      tcfg.eval_batch_size));
  }
  write_json(out / "metrics.json", metrics);
  for (const char* name : {"last.ckpt", "best.ckpt", "model.json", "history.csv", "split.json", "metrics.json"})
    manifest.output(out / name);
  manifest.note("best_epoch", ex.result.best_epoch);
  manifest.note("parameters", count_parameters(model));
  manifest.note("parameter_names", snapshot(model).names);
  manifest.write();
  std::cout << "train: " << scheme_name(mcfg.scheme) << ", " << ex.result.history.epochs.size()
            << " epochs, best epoch " << ex.result.best_epoch << '\n';
}

void cmd_evaluate(const RunConfig& cfg, const json& options) {
  const auto out = prepare_out(cfg);
  Manifest manifest("evaluate", options, out);
  require(!cfg.checkpoint.empty(), "--checkpoint is required");
  require(fs::exists(cfg.checkpoint), "checkpoint not found: '" + cfg.checkpoint.string() + "'");
  const auto model_path = cfg.model_json.empty() ? cfg.checkpoint.parent_path() / "model.json" : cfg.model_json;
  const auto mcfg = model_config_from_json(read_json(model_path));
  manifest.input(model_path);
  manifest.input(cfg.checkpoint);
  Classifier<float> model(mcfg, 0);
  nn::load_checkpoint(cfg.checkpoint, model.state());

  auto ds = load_input(cfg, manifest);
  if (!cfg.split.empty()) {
    require(cfg.subset == "train" || cfg.subset == "val", "--subset must be 'train' or 'val'");
    const auto split = read_json(cfg.split);
    manifest.input(cfg.split);
    require(split.contains(cfg.subset), cfg.split.string() + ": no '" + cfg.subset + "' list");
    const auto ids = split.at(cfg.subset).get<std::set<std::string>>();
    ds = subset(ds, ids);
    require(!ds.empty(), "no records of the '" + cfg.subset + "' subset found in '" + cfg.data_dir.string() + "'");
  }
  const auto seg = segment_dataset(ds, cfg.pipeline(input_preprocessed(cfg)));
  require(!seg.segments.empty(), "no segments could be cut from '" + cfg.data_dir.string() + "'");
  cfg.train.focal.validate();
  const auto res = evaluate(model, seg.segments, seg.per_record_index, cfg.train.focal, cfg.train.eval_batch_size);
  const auto j = to_json(res);
  write_json(out / "metrics.json", j);
  write_json(out / "confusion.json", {{"segment", j.at("segment").at("confusion_matrix")},
                                      {"record", j.at("record").at("confusion_matrix")}});
  manifest.output(out / "metrics.json");
  manifest.output(out / "confusion.json");
  manifest.note("segment_weighted_f1", res.segment.weighted_f1);
  manifest.note("record_weighted_f1", res.record.weighted_f1);
  manifest.write();
  std::cout << "evaluate: segment weighted F1 " << format_real(res.segment.weighted_f1) << ", record weighted F1 "
            << format_real(res.record.weighted_f1) << '\n';
}

}  // namespace ecgnet::cli
