#include "cnndc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "cnndc/errors.hpp"
#include "cnndc/ground_truth.hpp"
#include "cnndc/model_io.hpp"
#include "cnndc/patches.hpp"

namespace fs = std::filesystem;

namespace cnndc {

std::vector<ImageRecord> list_dataset(const fs::path& dir, bool require_truth) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<ImageRecord> records;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".pgm" && ext != ".png") continue;
    ImageRecord r;
    r.id = entry.path().stem().string();
    r.image = entry.path();
    r.truth = fs::path(entry.path()).replace_extension(".csv");
    if (require_truth && !fs::exists(r.truth)) {
      throw IoError("missing ground truth " + r.truth.string() + " for image " + r.image.string());
    }
    records.push_back(std::move(r));
  }
  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.image < b.image; });
  return records;
}

std::vector<ImageRecord> cmd_synth(const SynthConfig& base, const fs::path& out_dir,
                                   std::size_t count) {
  base.validate();
  std::vector<ImageRecord> written;
  if (count == 0) return written;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < count; ++i) {
    SynthConfig cfg = base;
    cfg.seed = base.seed + i;
    const SynthScene scene = synth_generate(cfg);
    char stem[32];
    std::snprintf(stem, sizeof stem, "image_%03zu", i);
    ImageRecord r{stem, out_dir / (std::string(stem) + ".pgm"), out_dir / (std::string(stem) + ".csv")};
    save_image(scene.image, r.image);
    write_ground_truth(r.truth, scene.centers);
    written.push_back(std::move(r));
  }
  return written;
}

std::vector<TrainingSample> build_training_set(const std::vector<ImageRecord>& records,
                                               std::size_t ratio, std::uint64_t seed,
                                               std::size_t patch_size) {
  std::vector<TrainingSample> samples;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GrayImage image = load_image(records[i].image);
    const GroundTruth gt = read_ground_truth(records[i].truth);
    const auto labeled = label_patches(image, gt, patch_size);
    std::vector<LabeledPatch> chosen;
    try {
      chosen = sample_training_set(labeled, ratio, seed + i);
    } catch (const ConfigError& e) {
      throw ConfigError(records[i].image.string() + ": " + e.what());
    }
    for (const auto& p : chosen) {
      samples.push_back({extract_patch(image, p.center, patch_size), static_cast<std::size_t>(p.label)});
    }
  }
  return samples;
}

TrainRun cmd_train(const fs::path& train_dir, const TrainOptions& options, const fs::path& model_out,
                   const EpochCallback& on_epoch) {
  options.train.validate();
  validate(options.spec);
  if (options.spec.input.height != options.spec.input.width || options.spec.input.channels != 1) {
    throw ConfigError("network input must be a square single-channel patch");
  }
  const auto records = list_dataset(train_dir);
  if (records.empty()) throw ConfigError("no training images in " + train_dir.string());
  const auto samples = build_training_set(records, options.ratio, options.train.rng_seed,
                                          options.spec.input.height);
  TrainResult result = train(options.spec, samples, options.train, on_epoch);
  TrainRun run{Model{options.spec, std::move(result.params)}, std::move(result.epoch_loss),
               samples.size()};
  save_model(run.model, model_out);
  return run;
}

Detector cnn_detector(const Model& model, const DetectConfig& cfg) {
  return [&model, cfg](const GrayImage& image, const ImageRecord& record) {
    return detect(image, model, cfg, record.id);
  };
}

EvalSummary cmd_eval(const std::vector<ImageRecord>& records, const Detector& detector,
                     const EvalOptions& options) {
  if (records.empty()) throw ConfigError("evaluation set is empty");
  EvalSummary summary;
  std::vector<EvalReport> reports;
  for (const auto& record : records) {
    const GrayImage image = load_image(record.image);
    const GroundTruth gt = read_ground_truth(record.truth);
    Detection det = detector(image, record);
    EvalReport report =
        evaluate(gt, det.centers, det.seconds, options.match_radius, options.diameter);
    reports.push_back(report);
    summary.rows.push_back({record.id, report, std::move(det)});
  }
  summary.mean = average(reports);
  return summary;
}

EvalSummary cmd_eval(const fs::path& test_dir, const Model& model, const DetectConfig& cfg,
                     const EvalOptions& options) {
  const auto records = list_dataset(test_dir);
  if (records.empty()) throw ConfigError("no test images in " + test_dir.string());
  return cmd_eval(records, cnn_detector(model, cfg), options);
}

std::string format_eval_csv(const EvalSummary& summary, bool include_timing) {
  std::string out = std::string(kEvalCsvHeader) + "\n";
  auto row = [&](const std::string& id, EvalReport r) {
    if (!include_timing) r.seconds = 0.0;
    out += id + "," + to_csv_row(r) + "\n";
  };
  for (const auto& r : summary.rows) row(r.id, r.report);
  row("average", summary.mean);
  return out;
}

SweepParam parse_sweep_param(const std::string& text) {
  if (text == "stride") return SweepParam::stride;
  if (text == "th_d" || text == "thd") return SweepParam::th_d;
  throw ConfigError("unknown sweep parameter '" + text + "' (expected stride or th_d)");
}

std::vector<double> sweep_values(const SweepOptions& options) {
  if (!(options.step > 0.0)) throw ConfigError("sweep step must be positive");
  if (!(options.to >= options.from)) throw ConfigError("sweep range is empty");
  std::vector<double> values;
  const auto steps = static_cast<std::size_t>(std::floor((options.to - options.from) / options.step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) values.push_back(options.from + static_cast<double>(k) * options.step);
  return values;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t as_stride(double value) {
  if (value < 1.0 || std::floor(value) != value) {
    throw ConfigError("stride values must be positive integers");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

std::vector<SweepRow> cmd_sweep(const std::vector<ImageRecord>& records, const Model& model,
                                const DetectConfig& base, const SweepOptions& options,
                                const EvalOptions& eval) {
  if (records.empty()) throw ConfigError("sweep set is empty");
  if (options.repeats == 0) throw ConfigError("sweep repeats must be at least 1");
  const auto values = sweep_values(options);

  std::vector<GrayImage> images;
  std::vector<GroundTruth> truths;
  for (const auto& r : records) {
    images.push_back(load_image(r.image));
    truths.push_back(read_ground_truth(r.truth));
  }

  // th_d does not affect classification, so candidates are computed once.
  std::vector<Detection> cached;
  if (options.param == SweepParam::th_d) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      cached.push_back(detect(images[i], model, base, records[i].id));
    }
  }

  std::vector<SweepRow> rows;
  for (double value : values) {
    DetectConfig cfg = base;
    if (options.param == SweepParam::stride) {
      cfg.stride = as_stride(value);
    } else {
      cfg.th_d = value;
    }
    cfg.validate();

    std::vector<EvalReport> reports;
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::vector<double> times;
      Detection det;
      for (std::size_t rep = 0; rep < options.repeats; ++rep) {
        if (options.param == SweepParam::th_d) {
          det = cached[i];
          recluster(det, cfg);
        } else {
          det = detect(images[i], model, cfg, records[i].id);
        }
        times.push_back(det.seconds);
      }
      reports.push_back(evaluate(truths[i], det.centers, median(times), eval.match_radius,
                                 eval.diameter));
    }
    rows.push_back({value, average(reports)});
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : rows) out += format_number(r.value) + "," + to_csv_row(r.mean) + "\n";
  return out;
}

}  // namespace cnndc
