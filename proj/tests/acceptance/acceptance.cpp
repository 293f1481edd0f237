// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ecgnet/losses_metrics.hpp"
#include "ecgnet/models.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "ecgnet/nn/gradient_check.hpp"
#include "ecgnet/preprocess.hpp"
#include "ecgnet/qrs_detect.hpp"
#include "ecgnet/segmenter.hpp"
#include "ecgnet/synth.hpp"
#include "ecgnet/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ecgnet;
using nn::Shape;
using nn::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string only;
  std::string cli;
  std::string asan;
  std::string work = "acceptance_work";
  std::size_t e2e_seeds = 10;
};

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.2e", v); }
std::string secs(double v) { return fmt("%.1f s", v); }

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& v : t.data()) v = d(rng);
  return t;
}

void randomize(nn::Layer<double>& layer, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& p : layer.parameters())
    for (auto& v : p.tensor->data()) v = d(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  Stopwatch clock;
  double linear = 0.0, nonlinear = 0.0, loss_err = 0.0;
  std::string worst_linear, worst_nonlinear;
  std::size_t checks = 0;
  auto note = [&](double& slot, std::string& name, const std::string& what, const nn::GradientCheckResult& r) {
    ++checks;
    if (r.max_rel_error > slot) {
      slot = r.max_rel_error;
      name = what + " " + r.worst;
    }
  };

  constexpr std::size_t kSeeds = 24;
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t b = pick(rng, 1, 3), cin = pick(rng, 1, 3), cout = pick(rng, 1, 4);
    const std::size_t len = pick(rng, 6, 14), k = 2 * pick(rng, 0, 3) + 1;

    nn::Conv1d<double> same(cin, cout, k, 1, nn::Padding::Same);
    randomize(same, rng);
    note(linear, worst_linear, "conv(same)", nn::gradient_check(same, random_tensor({b, cin, len}, rng), seed));
    nn::Conv1d<double> valid(cin, cout, std::min<std::size_t>(k + 1, len), pick(rng, 1, 2), nn::Padding::Valid);
    randomize(valid, rng);
    note(linear, worst_linear, "conv(valid)", nn::gradient_check(valid, random_tensor({b, cin, len}, rng), seed));
    nn::Dense<double> dense(pick(rng, 1, 6), pick(rng, 1, 5));
    randomize(dense, rng);
    note(linear, worst_linear, "dense",
         nn::gradient_check(dense, random_tensor({b, dense.weight.dim(1)}, rng), seed));
    nn::GlobalAvgPool1d<double> gap;
    note(linear, worst_linear, "gap", nn::gradient_check(gap, random_tensor({b, cout, len}, rng), seed));
    nn::SwapLastAxes<double> swap;
    note(linear, worst_linear, "swap", nn::gradient_check(swap, random_tensor({b, cout, len}, rng), seed));
    nn::Dropout<double> drop(0.1 * static_cast<double>(pick(rng, 1, 5)));
    note(linear, worst_linear, "dropout",
         nn::gradient_check(drop, random_tensor({b, cout, len}, rng), seed, 1e-5, [&] { drop.reseed(seed); }));

    nn::BatchNorm1d<double> bn(cout);
    randomize(bn, rng);
    const std::size_t bn_batch = pick(rng, 2, 4);
    note(nonlinear, worst_nonlinear, "batchnorm(train)",
         nn::gradient_check(bn, random_tensor({bn_batch, cout, len}, rng), seed));
    bn.set_training(false);
    note(nonlinear, worst_nonlinear, "batchnorm(eval)",
         nn::gradient_check(bn, random_tensor({bn_batch, cout, len}, rng), seed));
    nn::ReLU<double> relu;
    note(nonlinear, worst_nonlinear, "relu", nn::gradient_check(relu, random_tensor({b, cout, len}, rng), seed));
    nn::MaxPool1d<double> pool(2, 2);
    note(nonlinear, worst_nonlinear, "maxpool", nn::gradient_check(pool, random_tensor({b, cout, len}, rng), seed));
    nn::Softmax<double> softmax;
    note(nonlinear, worst_nonlinear, "softmax",
         nn::gradient_check(softmax, random_tensor({b, pick(rng, 2, 5)}, rng, 2.0), seed));
    nn::BiLstm<double> lstm(pick(rng, 1, 4), pick(rng, 1, 5));
    randomize(lstm, rng);
    note(nonlinear, worst_nonlinear, "bilstm",
         nn::gradient_check(lstm, random_tensor({b, pick(rng, 1, 7), lstm.input_size()}, rng), seed));

    // Both losses against central differences in the probabilities.
    for (const double gamma : {0.0, 2.0}) {
      const std::size_t rows = pick(rng, 1, 6);
      Tensor<double> p({rows, 3});
      std::uniform_real_distribution<double> u(0.05, 1.0);
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += p[r * 3 + j] = u(rng);
        for (std::size_t j = 0; j < 3; ++j) p[r * 3 + j] /= s;
      }
      std::vector<std::size_t> y(rows);
      for (auto& v : y) v = pick(rng, 0, 2);
      const FocalConfig cfg{gamma};
      const auto lg = focal_loss_with_grad(p, y, cfg);
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + 1e-5;
        const double up = focal_loss(p, y, cfg);
        p[i] = orig - 1e-5;
        const double down = focal_loss(p, y, cfg);
        p[i] = orig;
        loss_err = std::max(loss_err, nn::relative_error(lg.grad[i], (up - down) / 2e-5));
      }
      ++checks;
    }
  }
  const double t = clock.seconds();
  const bool pass = linear < 1e-7 && nonlinear < 1e-4 && loss_err < 1e-4 && t < 120.0;
  return {pass, std::to_string(kSeeds) + " seeds, " + std::to_string(checks) + " checks; linear max " + sci(linear) +
                    " (" + worst_linear + ") < 1e-7; nonlinear max " + sci(nonlinear) + " (" + worst_nonlinear +
                    ") < 1e-4; losses max " + sci(loss_err) + " < 1e-4; " + secs(t) + " < 120 s"};
}

Outcome focal_reduction() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> logit(0.0, 3.0);
  double worst = 0.0;
  std::size_t violations = 0;
  for (int batch = 0; batch < 1000; ++batch) {
    const std::size_t rows = pick(rng, 1, 32);
    Tensor<double> z({rows, 3});
    for (auto& v : z.data()) v = logit(rng);
    const auto p = nn::Softmax<double>::apply(z);
    std::vector<std::size_t> y(rows);
    for (auto& v : y) v = pick(rng, 0, 2);
    worst = std::max(worst, std::abs(focal_loss(p, y, FocalConfig{0.0}) - cross_entropy(p, y)));
    const auto ce = focal_losses(p, y, FocalConfig{0.0});
    for (const double g : {0.5, 1.0, 2.0, 5.0}) {
      const auto fl = focal_losses(p, y, FocalConfig{g});
      for (std::size_t i = 0; i < rows; ++i) violations += fl[i] > ce[i];
    }
  }
  return {worst <= 1e-12 && violations == 0, "1000 batches; max |focal(0) - CE| " + sci(worst) +
                                                 " <= 1e-12; pointwise focal > CE violations " +
                                                 std::to_string(violations)};
}

Outcome filter_response() {
  const auto filter = design_bandpass(FilterSpec{});
  const auto& h = filter.taps;
  bool symmetric = h.size() == 601;
  for (std::size_t i = 0; i < h.size(); ++i) symmetric = symmetric && h[i] == h[h.size() - 1 - i];
  auto mag = [&](double f) { return oracle::dtft_magnitude(h, f, 300.0); };
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i <= 3400; ++i) {
    const double m = mag(6.0 + 0.01 * i);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  const double h0 = mag(0.0), h05 = mag(0.5), h60 = mag(60.0);
  const bool pass = symmetric && h0 <= 0.01 && h05 <= 0.15 && lo >= 0.9 && hi <= 1.05 && h60 <= 0.05;
  return {pass, "601 taps " + std::string(symmetric ? "exactly symmetric" : "NOT symmetric") + "; |H(0)| " +
                    sci(h0) + " <= 0.01; |H(0.5)| " + fmt("%.4f", h05) + " <= 0.15; [6,40] Hz in [" +
                    fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "] within [0.9, 1.05]; |H(60)| " + sci(h60) +
                    " <= 0.05"};
}

Outcome detector() {
  Stopwatch clock;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> hr(50.0, 120.0), snr(15.0, 30.0);
  const auto filter = design_bandpass(FilterSpec{});
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int i = 0; i < 100; ++i) {
    SynthSpec spec;
    spec.rhythm = i % 2 == 0 ? Rhythm::Regular : Rhythm::Irregular;
    spec.mean_hr = hr(rng);
    spec.snr_db = snr(rng);
    spec.duration = 30.0;
    spec.seed = rng();
    const auto ecg = synth_ecg(spec);
    const auto rec = preprocess_record(ecg.record, filter);
    const auto found = detect_r_peaks(rec.samples, rec.fs);
    const auto m = oracle::match_peaks(found.peaks, ecg.peaks, 15);
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
  }
  const double t = clock.seconds();
  const double se = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double ppv = static_cast<double>(tp) / static_cast<double>(tp + fp);
  return {se >= 0.99 && ppv >= 0.99 && t < 60.0,
          "100 records, " + std::to_string(tp + fn) + " beats; sensitivity " + fmt("%.4f", se) + ", PPV " +
              fmt("%.4f", ppv) + " (>= 0.99, +-50 ms); " + secs(t) + " < 60 s"};
}

Outcome segmenter(const Options& opt) {
  CorpusSpec spec;
  spec.count = 90;
  spec.hr_min = 50.0;
  spec.hr_max = 150.0;
  spec.seed = 5;
  const auto out = segment_dataset(corpus_dataset(synth_corpus(spec)), PipelineConfig{});
  std::size_t bad = 0;
  for (const auto& s : out.segments) {
    bool ok = s.samples().size() == 1000 && s.peak_offsets().size() >= 5;
    for (std::size_t i = 0; i < s.peak_offsets().size(); ++i) {
      ok = ok && s.peak_offsets()[i] < 1000 && (i == 0 || s.peak_offsets()[i] > s.peak_offsets()[i - 1]);
    }
    bad += !ok;
  }
  std::string asan = "instrumented run unavailable";
  bool asan_ok = false;
  if (!opt.asan.empty()) {
    const auto cmd = "\"" + opt.asan + "\" > \"" + (fs::path(opt.work) / "asan_segmenter.log").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    asan_ok = rc == 0;
    asan = asan_ok ? "AddressSanitizer segmenter tests clean" : "AddressSanitizer run failed (see asan_segmenter.log)";
  }
  return {bad == 0 && !out.segments.empty() && asan_ok,
          std::to_string(out.segments.size()) + " segments from 90 records; " + std::to_string(bad) +
              " with length != 1000 or < 5 peaks; " + asan};
}

Outcome shape_contract() {
  ModelConfig cfg;
  Classifier<float> cascade(cfg, 1);
  cascade.set_training(false);
  Tensor<float> x({1, 1000}, 0.1f);
  const auto feat = cascade.cnn_features(x);
  bool lstm_ok = true;
  nn::BiLstm<float> lstm(5, 100);
  for (const auto& [b, t] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 7}, {4, 250}}) {
    lstm_ok = lstm_ok && lstm.forward(Tensor<float>({b, t, 5}, 0.2f)).shape() == Shape{b, 100};
  }
  lstm_ok = lstm_ok && cascade.lstm().hidden_size() == 100;
  ModelConfig concat_cfg = cfg;
  concat_cfg.scheme = Scheme::ConcatA;
  Classifier<float> concat(concat_cfg, 1);
  concat.set_training(false);
  const auto fused = concat.fused_features(x);
  const bool pass = feat.shape() == Shape{1, 256} && lstm_ok && fused.shape() == Shape{1, 356} &&
                    concat_cfg.fusion_width() == 356;
  return {pass, "CNN (1,1,1000) -> " + nn::shape_string(feat.shape()) + "; BiLSTM (B,T,F) -> (B,100) " +
                    (lstm_ok ? "holds" : "FAILS") + "; concat fusion " + nn::shape_string(fused.shape())};
}

std::vector<Segment> overfit_segments() {
  CorpusSpec spec;
  spec.count = 30;
  spec.duration = 12.0;
  spec.seed = 11;
  const auto seg = segment_dataset(corpus_dataset(synth_corpus(spec)), PipelineConfig{});
  std::vector<Segment> out;
  std::map<ClassLabel, std::size_t> taken;
  for (const auto& s : seg.segments) {
    if (taken[s.label()] < 20) {
      ++taken[s.label()];
      out.push_back(s);
    }
  }
  return out;
}

std::pair<double, double> loss_and_accuracy(Classifier<float>& model, const std::vector<Segment>& segs) {
  const auto probs = predict(model, segs);
  Tensor<double> p({segs.size(), 3});
  std::vector<std::size_t> y;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    y.push_back(label_index(segs[i].label()));
    std::size_t best = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      p[i * 3 + k] = probs[i * 3 + k];
      if (probs[i * 3 + k] > probs[i * 3 + best]) best = k;
    }
    correct += best == y.back();
  }
  return {focal_loss(p, y, FocalConfig{}), static_cast<double>(correct) / static_cast<double>(segs.size())};
}

Outcome overfit() {
  const auto segs = overfit_segments();
  if (segs.size() != 60) return {false, "could not assemble 60 segments (got " + std::to_string(segs.size()) + ")"};
  Stopwatch clock;
  Classifier<float> model(ModelConfig::tiny(Scheme::CascadeB), 3);
  const auto [initial, initial_acc] = loss_and_accuracy(model, segs);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 10;
  cfg.seed = 3;
  double loss = initial, acc = initial_acc;
  std::size_t epochs = 0;
  train(model, segs, {}, cfg, {}, [&](const EpochStats& e) {
    epochs = e.epoch;
    std::tie(loss, acc) = loss_and_accuracy(model, segs);
    return acc >= 0.95 && loss < 0.1 * initial;
  });
  const double t = clock.seconds();
  return {acc >= 0.95 && loss < 0.1 * initial && t < 600.0,
          "tiny cascade, 60 segments: accuracy " + fmt("%.3f", acc) + " >= 0.95 after " + std::to_string(epochs) +
              " epochs (<= 200); loss " + sci(loss) + " < 0.1 x initial " + sci(initial) + "; " + secs(t) +
              " < 600 s"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Options& opt) {
  const auto segs = overfit_segments();
  const std::vector<Segment> tr(segs.begin(), segs.begin() + 40), va(segs.begin() + 40, segs.end());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 21;
  const fs::path dir = fs::path(opt.work) / "determinism";
  fs::create_directories(dir);
  std::string csv[2];
  for (int run = 0; run < 2; ++run) {
    Classifier<float> model(ModelConfig::tiny(Scheme::CascadeB), 21);
    const auto r = train(model, tr, va, cfg);
    csv[run] = history_csv(r.history);
    save_snapshot(dir / ("run" + std::to_string(run) + ".ckpt"), r.best);
  }
  const bool same_history = csv[0] == csv[1];
  const bool same_bytes = slurp(dir / "run0.ckpt") == slurp(dir / "run1.ckpt");

  Classifier<float> a(ModelConfig::tiny(Scheme::CascadeB), 0), b(ModelConfig::tiny(Scheme::CascadeB), 99);
  nn::load_checkpoint(dir / "run0.ckpt", a.state());
  save_snapshot(dir / "resaved.ckpt", snapshot(a));
  nn::load_checkpoint(dir / "resaved.ckpt", b.state());
  const auto idx = index_segments(va);
  const auto ma = to_json(evaluate(a, va, idx, FocalConfig{})).dump();
  const auto mb = to_json(evaluate(b, va, idx, FocalConfig{})).dump();
  const bool round_trip = ma == mb && slurp(dir / "run0.ckpt") == slurp(dir / "resaved.ckpt");
  return {same_history && same_bytes && round_trip,
          std::string("history CSV ") + (same_history ? "identical" : "DIFFERS") + "; checkpoint bytes " +
              (same_bytes ? "identical" : "DIFFER") + "; round-trip metrics " +
              (round_trip ? "bit-exact" : "DIFFER")};
}

// ---------------------------------------------------------------------------

constexpr std::size_t kE2ERecords = 300;
constexpr double kE2EDuration = 10.0;

TrainConfig e2e_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 16;
  cfg.adam.lr = 3e-3;
  cfg.seed = seed;
  return cfg;
}

int run_command(const std::string& cmd, const fs::path& log) {
  const auto full = cmd + " >> \"" + log.string() + "\" 2>&1";
  {
    std::ofstream(log, std::ios::app) << "$ " << cmd << "\n";
  }
  const int rc = std::system(full.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

Outcome end_to_end(const Options& opt) {
  Stopwatch clock;
  std::string detail;
  bool pass = true;

  // Part one: the command-line pipeline on a 300-record corpus.
  if (opt.cli.empty()) {
    pass = false;
    detail = "CLI binary not provided";
  } else {
    const fs::path w = fs::absolute(fs::path(opt.work) / "e2e");
    fs::remove_all(w);
    fs::create_directories(w);
    const fs::path log = w / "commands.log";
    const std::string cli = "\"" + opt.cli + "\"";
    const auto cfg = e2e_train_config(0);
    std::vector<std::string> cmds = {
        cli + " synth --n 300 --duration 10 --seed 0 --out \"" + (w / "raw").string() + "\"",
        cli + " synth --n 300 --duration 10 --seed 1 --out \"" + (w / "holdout").string() + "\"",
        cli + " preprocess \"" + (w / "raw").string() + "\" --out \"" + (w / "pre").string() + "\"",
        cli + " preprocess \"" + (w / "holdout").string() + "\" --out \"" + (w / "holdout_pre").string() + "\"",
        cli + " detect \"" + (w / "pre").string() + "\" --preprocessed --out \"" + (w / "peaks").string() + "\"",
        cli + " segment \"" + (w / "pre").string() + "\" --preprocessed --out \"" + (w / "segments").string() + "\"",
    };
    int failed_rc = 0;
    std::string failed;
    for (const auto& c : cmds) {
      const int rc = run_command(c, log);
      if (rc != 0) {
        failed_rc = rc;
        failed = c;
        break;
      }
    }
    std::string scores;
    for (const auto* scheme : {"baseline", "concat", "cascade"}) {
      if (failed_rc != 0) break;
      const auto run = w / (std::string("run_") + scheme);
      const auto eval = w / (std::string("eval_") + scheme);
      const std::string train_cmd = cli + " train \"" + (w / "pre").string() + "\" --preprocessed --tiny --scheme " +
                                    scheme + " --epochs 5 --batch-size " + std::to_string(cfg.batch_size) +
                                    " --lr " + format_real(cfg.adam.lr) + " --seed 0 --out \"" + run.string() + "\"";
      const std::string eval_cmd = cli + " evaluate \"" + (w / "holdout_pre").string() +
                                   "\" --preprocessed --checkpoint \"" + (run / "best.ckpt").string() +
                                   "\" --out \"" + eval.string() + "\"";
      for (const auto& c : {train_cmd, eval_cmd}) {
        const int rc = run_command(c, log);
        if (rc != 0) {
          failed_rc = rc;
          failed = c;
          break;
        }
      }
      if (failed_rc != 0) break;
      const auto metrics = nlohmann::json::parse(slurp(eval / "metrics.json"));
      const double wf1 = metrics.at("record").at("weighted_f1").get<double>();
      scores += std::string(scores.empty() ? "" : ", ") + scheme + " " + fmt("%.3f", wf1);
      pass = pass && wf1 >= 0.80;
    }
    if (failed_rc != 0) {
      pass = false;
      detail = "pipeline command exited " + std::to_string(failed_rc) + ": " + failed;
    } else {
      detail = "CLI pipeline exit 0; holdout record-level weighted F1 (>= 0.80): " + scores;
    }
  }

  // Part two: cascade versus baseline on matched seeds.
  std::size_t wins = 0;
  std::string per_seed;
  for (std::size_t seed = 0; seed < opt.e2e_seeds; ++seed) {
    CorpusSpec spec;
    spec.count = kE2ERecords;
    spec.duration = kE2EDuration;
    spec.seed = 100 + seed;
    const auto ds = corpus_dataset(synth_corpus(spec));
    const auto cfg = e2e_train_config(seed);
    double best[2] = {0.0, 0.0};
    const Scheme schemes[2] = {Scheme::CascadeB, Scheme::BaselineLstm};
    for (int s = 0; s < 2; ++s) {
      Classifier<float> model(ModelConfig::tiny(schemes[s]), seed);
      const auto ex = run_experiment(model, ds, PipelineConfig{}, cfg);
      for (const auto& e : ex.result.history.epochs) best[s] = std::max(best[s], e.val_weighted_f1);
    }
    wins += best[0] >= best[1];
    per_seed += (per_seed.empty() ? "" : " ") + fmt("%.3f", best[0]) + "/" + fmt("%.3f", best[1]);
  }
  const std::size_t needed = (7 * opt.e2e_seeds + 9) / 10;
  pass = pass && opt.e2e_seeds >= 10 && wins >= needed;
  detail += "; cascade >= baseline validation F1 in " + std::to_string(wins) + "/" + std::to_string(opt.e2e_seeds) +
            " seeds (need >= 7/10) [cascade/baseline: " + per_seed + "]; " + secs(clock.seconds());
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"ecgnet acceptance criteria"};
  app.add_option("--only", opt.only, "run a single criterion");
  app.add_option("--cli", opt.cli, "path to the ecgnet binary");
  app.add_option("--asan-segmenter", opt.asan, "path to the instrumented segmenter test binary");
  app.add_option("--work", opt.work, "scratch directory");
  app.add_option("--e2e-seeds", opt.e2e_seeds, "seeds for the cascade/baseline comparison");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(opt.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_suite", gradient_suite},
      {"focal_reduction", focal_reduction},
      {"filter_response", filter_response},
      {"detector", detector},
      {"segmenter", [&] { return segmenter(opt); }},
      {"shape_contract", shape_contract},
      {"overfit", overfit},
      {"end_to_end", [&] { return end_to_end(opt); }},
      {"determinism", [&] { return determinism(opt); }},
  };

  int failures = 0, ran = 0;
  for (const auto& [name, run] : criteria) {
    if (!opt.only.empty() && opt.only != name) continue;
    ++ran;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", opt.only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
