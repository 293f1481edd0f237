#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>

#include "commands.hpp"
#include "ecgnet/error.hpp"

using namespace ecgnet;
using namespace ecgnet::cli;

namespace {

void add_input(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("dir", cfg.data_dir, "directory holding the records and REFERENCE.csv");
  sub.add_option("--reference", cfg.reference, "reference file (default <dir>/REFERENCE.csv)");
  sub.add_option("--fs", cfg.fs, "sample rate in Hz");
  sub.add_option("--noisy", cfg.noisy, "handling of '~' reference labels: drop or other");
}

void add_filter(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--low", cfg.filter.low_cut, "band-pass low cut-off (Hz)");
  sub.add_option("--high", cfg.filter.high_cut, "band-pass high cut-off (Hz)");
  sub.add_option("--taps", cfg.filter.num_taps, "FIR length (odd)");
  sub.add_option("--max-len", cfg.max_len, "samples kept per record");
}

void add_pipeline(CLI::App& sub, RunConfig& cfg) {
  add_filter(sub, cfg);
  sub.add_flag("--preprocessed", cfg.preprocessed, "input was written by 'preprocess' (detected automatically)");
  sub.add_option("--k-min", cfg.detector.k_min, "shortest slope window (samples)");
  sub.add_option("--k-max", cfg.detector.k_max, "longest slope window (samples)");
  sub.add_option("--refractory", cfg.detector.refractory, "refractory period (s)");
  sub.add_option("--theta", cfg.detector.theta_init, "initial detection threshold");
}

void add_segments(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--seg-len", cfg.segments.seg_len, "segment length (samples)");
  sub.add_option("--min-beats", cfg.segments.min_beats, "beats per segment");
  sub.add_option("--lead-in", cfg.segments.lead_in, "samples kept before the first beat");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"ecgnet: ECG rhythm classification pipeline"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--config", cfg.config_file, "flat 'key = value' file; command-line flags take precedence");
  app.add_option("--seed", cfg.seed, "seed for synthesis, splitting, initialisation and shuffling");
  app.add_option("--jobs", cfg.jobs, "worker threads for per-record stages")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "output directory");

  std::map<CLI::App*, std::function<void(const RunConfig&, const nlohmann::json&)>> handlers;

  auto* synth = app.add_subcommand("synth", "write a labelled synthetic corpus");
  synth->add_option("--n", cfg.corpus.count, "number of records");
  synth->add_option("--duration", cfg.corpus.duration, "record length (s)");
  synth->add_option("--hr-min", cfg.corpus.hr_min, "lowest mean heart rate (bpm)");
  synth->add_option("--hr-max", cfg.corpus.hr_max, "highest mean heart rate (bpm)");
  synth->add_option("--snr", cfg.corpus.snr_db, "SNR of regular and irregular records (dB)");
  synth->add_option("--noisy-snr", cfg.corpus.noisy_snr_db, "SNR of noisy records (dB)");
  synth->add_option("--fs", cfg.fs, "sample rate in Hz");
  handlers[synth] = cmd_synth;

  auto* pre = app.add_subcommand("preprocess", "standardize, band-pass and truncate records");
  add_input(*pre, cfg);
  add_filter(*pre, cfg);
  handlers[pre] = cmd_preprocess;

  auto* detect = app.add_subcommand("detect", "detect R peaks; write peaks and R-R intervals as CSV");
  add_input(*detect, cfg);
  add_pipeline(*detect, cfg);
  handlers[detect] = cmd_detect;

  auto* segment = app.add_subcommand("segment", "cut fixed-length beat segments into a binary pack");
  add_input(*segment, cfg);
  add_pipeline(*segment, cfg);
  add_segments(*segment, cfg);
  handlers[segment] = cmd_segment;

  auto* train = app.add_subcommand("train", "split, segment and train a classifier");
  add_input(*train, cfg);
  add_pipeline(*train, cfg);
  add_segments(*train, cfg);
  train->add_option("--scheme", cfg.scheme, "baseline, concat or cascade");
  train->add_flag("--tiny", cfg.tiny, "reduced channel and hidden sizes");
  train->add_option("--epochs", cfg.train.epochs, "training epochs");
  train->add_option("--batch-size", cfg.train.batch_size, "minibatch size");
  train->add_option("--lr", cfg.train.adam.lr, "Adam learning rate");
  train->add_option("--gamma", cfg.train.focal.gamma, "focal loss exponent");
  train->add_option("--split", cfg.train.split_fraction, "fraction of records used for training");
  handlers[train] = cmd_train;

  auto* eval = app.add_subcommand("evaluate", "segment- and record-level metrics for a checkpoint");
  add_input(*eval, cfg);
  add_pipeline(*eval, cfg);
  add_segments(*eval, cfg);
  eval->add_option("--checkpoint", cfg.checkpoint, "checkpoint file");
  eval->add_option("--model", cfg.model_json, "model description (default model.json beside the checkpoint)");
  eval->add_option("--split", cfg.split, "split.json written by 'train'");
  eval->add_option("--subset", cfg.subset, "records of the split to use: train or val");
  eval->add_option("--gamma", cfg.train.focal.gamma, "focal loss exponent for the reported loss");
  handlers[eval] = cmd_evaluate;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!cfg.config_file.empty()) apply_config(app, *sub, read_config_file(cfg.config_file));
    handlers.at(sub)(cfg, resolved_options(app, *sub));
  } catch (const Error& e) {
    std::fprintf(stderr, "ecgnet %s: error: %s\n", sub->get_name().c_str(), e.what());
    return 1;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "ecgnet %s: internal error: %s\n", sub->get_name().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ecgnet %s: internal error: %s\n", sub->get_name().c_str(), e.what());
    return 2;
  }
  return 0;
}
