#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cnndc/detect.hpp"
#include "cnndc/metrics.hpp"
#include "cnndc/network.hpp"
#include "cnndc/synth.hpp"
#include "cnndc/training.hpp"

namespace cnndc {

// An image file and its same-stem ground-truth CSV.
struct ImageRecord {
  std::string id;  // file stem
  std::filesystem::path image;
  std::filesystem::path truth;
};

// *.pgm / *.png files in `dir`, sorted by name. With require_truth, a
// missing CSV is an IoError naming the image.
std::vector<ImageRecord> list_dataset(const std::filesystem::path& dir, bool require_truth = true);

// Writes image_NNN.pgm / image_NNN.csv pairs; pair i uses seed base.seed + i.
std::vector<ImageRecord> cmd_synth(const SynthConfig& base, const std::filesystem::path& out_dir,
                                   std::size_t count);

struct TrainOptions {
  NetworkSpec spec = NetworkSpec::reference();
  TrainConfig train;
  std::size_t ratio = 3;  // negatives per positive
};

// label_patches > sample_training_set (seed train.rng_seed + image index)
// > patch tensors, for every record.
std::vector<TrainingSample> build_training_set(const std::vector<ImageRecord>& records,
                                               std::size_t ratio, std::uint64_t seed,
                                               std::size_t patch_size = 71);

struct TrainRun {
  Model model;
  std::vector<double> epoch_loss;
  std::size_t sample_count = 0;
};

TrainRun cmd_train(const std::filesystem::path& train_dir, const TrainOptions& options,
                   const std::filesystem::path& model_out, const EpochCallback& on_epoch = {});

// Produces centers and timing for one image; the default runs detect().
using Detector = std::function<Detection(const GrayImage& image, const ImageRecord& record)>;
Detector cnn_detector(const Model& model, const DetectConfig& cfg);

struct EvalOptions {
  double match_radius = kDefaultMatchRadius;
  double diameter = kBarDiameter;
};

struct EvalRow {
  std::string id;
  EvalReport report;
  Detection detection;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  EvalReport mean;
};

// Runs the detector and evaluate() on every record; throws ConfigError on
// an empty directory.
EvalSummary cmd_eval(const std::vector<ImageRecord>& records, const Detector& detector,
                     const EvalOptions& options = {});
EvalSummary cmd_eval(const std::filesystem::path& test_dir, const Model& model,
                     const DetectConfig& cfg, const EvalOptions& options = {});

inline constexpr const char* kEvalCsvHeader = "image,recall,precision,f1,acc_r,offset,seconds";

// Per-image rows then an "average" row. Without timing the seconds column
// is written as 0 so repeated runs are byte-identical.
std::string format_eval_csv(const EvalSummary& summary, bool include_timing = true);

enum class SweepParam { stride, th_d };
SweepParam parse_sweep_param(const std::string& text);

struct SweepOptions {
  SweepParam param = SweepParam::stride;
  double from = 5;
  double to = 9;
  double step = 1;
  std::size_t repeats = 1;  // seconds column is the median over repeats
};

struct SweepRow {
  double value = 0.0;
  EvalReport mean;
};

// One evaluation per parameter value. A th_d sweep classifies each image
// once at base.stride and re-clusters per value; its seconds column adds
// that classification time to the clustering time.
std::vector<SweepRow> cmd_sweep(const std::vector<ImageRecord>& records, const Model& model,
                                const DetectConfig& base, const SweepOptions& options,
                                const EvalOptions& eval = {});

inline constexpr const char* kSweepCsvHeader = "value,recall,precision,f1,acc_r,offset,seconds";
std::string format_sweep_csv(const std::vector<SweepRow>& rows);

// Values from..to inclusive in steps of `step`.
std::vector<double> sweep_values(const SweepOptions& options);

}  // namespace cnndc
