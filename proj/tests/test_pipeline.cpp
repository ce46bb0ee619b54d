#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "cnndc/commands.hpp"
#include "cnndc/detect.hpp"
#include "cnndc/errors.hpp"
#include "cnndc/ground_truth.hpp"
#include "cnndc/model_io.hpp"
#include "cnndc/patches.hpp"
#include "cnndc/rng.hpp"

using namespace cnndc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cnndc_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 7x7 window classifier: label 1 iff the window's center pixel exceeds 0.5.
Model center_pixel_model() {
  const NetworkSpec spec = parse_architecture("c1k7,f2", {7, 7, 1});
  Model m{spec, zero_params(spec)};
  m.params.layers[0].weights[3 * 7 + 3] = 1.0;
  m.params.layers[0].biases[0] = -0.5;
  m.params.layers[1].weights = {0.0, 10.0};  // logit 1 = 10 * relu(center - 0.5)
  return m;
}

DetectConfig small_config(std::size_t stride = 1) {
  DetectConfig cfg;
  cfg.patch_size = 7;
  cfg.stride = stride;
  cfg.threads = 1;
  return cfg;
}

// Bright 5x5 squares centered on the given pixels.
GrayImage squares(std::size_t w, std::size_t h, const std::vector<Pixel>& centers) {
  GrayImage img(w, h, 0.1);
  for (const Pixel& c : centers)
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx) img.at(c.x + dx, c.y + dy) = 0.9;
  return img;
}

}  // namespace

TEST_CASE("DetectConfig defaults and validation") {
  const DetectConfig cfg;
  CHECK(cfg.stride == 6);
  CHECK(cfg.th_d == 20.0);
  CHECK(cfg.mode == MergeMode::transitive);
  CHECK(cfg.patch_size == 71);
  DetectConfig bad;
  bad.stride = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.th_d = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("inference_threads reads CNNDC_THREADS") {
  ::setenv("CNNDC_THREADS", "3", 1);
  CHECK(inference_threads() == 3);
  ::setenv("CNNDC_THREADS", "zero", 1);
  CHECK_THROWS_AS(inference_threads(), ConfigError);
  ::unsetenv("CNNDC_THREADS");
  CHECK(inference_threads() >= 1);
}

TEST_CASE("detect with a hand-built classifier") {
  const Model model = center_pixel_model();
  const GrayImage img = squares(120, 90, {{20, 20}, {80, 30}, {50, 70}});

  const Detection det = detect(img, model, small_config(), "scene");
  CHECK(det.image_id == "scene");
  CHECK(det.count == 3);
  CHECK(det.centers == std::vector<Point2>{{20, 20}, {80, 30}, {50, 70}});
  CHECK(det.candidates.size() == 75);
  CHECK(det.candidates.size() >= det.count);
  CHECK(det.seconds >= det.classify_seconds);

  const Detection coarse = detect(img, model, small_config(2));
  CHECK(coarse.count == 3);
  for (const Point2& c : coarse.candidates) {
    CHECK(std::find(det.candidates.begin(), det.candidates.end(), c) != det.candidates.end());
  }

  const Detection none = detect(GrayImage(40, 40, 0.2), model, small_config());
  CHECK(none.count == 0);
  CHECK(none.centers.empty());

  CHECK_THROWS_AS(detect(GrayImage(6, 40, 0.2), model, small_config()), ShapeError);
  CHECK_THROWS_AS(detect(img, model, DetectConfig{}), ShapeError);  // 71 px window vs 7 px model
}

TEST_CASE("classification does not depend on the worker count") {
  const Model model = center_pixel_model();
  Rng rng(8);
  std::vector<double> px(97 * 61);
  for (auto& v : px) v = rng.uniform();
  const GrayImage img(97, 61, px);
  const auto positions = sliding_positions(97, 61, 1, 7);
  const auto serial = classify_positions(model, img, positions, 1);
  CHECK_FALSE(serial.empty());
  for (std::size_t threads : {2, 3, 7, 64}) CHECK(classify_positions(model, img, positions, threads) == serial);

  DetectConfig cfg = small_config();
  cfg.threads = 4;
  const Detection par = detect(img, model, cfg);
  cfg.threads = 1;
  CHECK(detect(img, model, cfg).candidates == par.candidates);
}

TEST_CASE("recluster") {
  const Model model = center_pixel_model();
  const GrayImage img = squares(120, 60, {{20, 20}, {34, 20}});
  Detection det = detect(img, model, small_config());
  // Every candidate's nearest neighbor sits 1 px away inside its own block,
  // so the blocks stay apart even though the gap is below th_d.
  CHECK(det.count == 2);
  DetectConfig cfg = small_config();
  cfg.th_d = 1.0;
  recluster(det, cfg);
  CHECK(det.count == det.candidates.size());
  CHECK(det.centers.size() == det.count);
}

TEST_CASE("render_overlay") {
  const GrayImage img = squares(30, 20, {{10, 10}});
  CHECK(render_overlay(img, std::vector<Point2>{}) == img);

  const GrayImage out = render_overlay(img, std::vector<Point2>{{10.2, 9.8}, {1, 18}});
  for (int d = -3; d <= 3; ++d) {
    CHECK(out.at(10 + d, 10) == (img.at(10 + d, 10) < 0.5 ? 1.0 : 0.0));
    CHECK(out.at(10, 10 + d) == (img.at(10, 10 + d) < 0.5 ? 1.0 : 0.0));
  }
  CHECK(out.at(11, 11) == img.at(11, 11));
  CHECK(out.at(0, 18) == 1.0);   // clipped marker near the corner
  CHECK(out.at(1, 19) == 1.0);
  CHECK(out.at(4, 18) == 1.0);
  CHECK(out.at(5, 18) == img.at(5, 18));

  const fs::path dir = temp_dir("overlay");
  render_overlay(img, std::vector<Point2>{{10, 10}}, dir / "o.png");
  const GrayImage back = load_image(dir / "o.png");
  CHECK(back.width() == 30);
  CHECK(back.at(10, 10) == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("cmd_synth") {
  const fs::path dir = temp_dir("synth");
  SynthConfig cfg;
  cfg.width = 240;
  cfg.height = 200;
  cfg.bars_min = 1;
  cfg.bars_max = 3;
  cfg.seed = 40;
  CHECK(cmd_synth(cfg, dir / "none", 0).empty());
  CHECK((!fs::exists(dir / "none") || fs::is_empty(dir / "none")));

  const auto first = cmd_synth(cfg, dir / "a", 2);
  const auto second = cmd_synth(cfg, dir / "b", 2);
  REQUIRE(first.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(slurp(first[i].image) == slurp(second[i].image));
    CHECK(slurp(first[i].truth) == slurp(second[i].truth));
    const GrayImage img = load_image(first[i].image);
    CHECK(img.width() == 240);
    const auto gt = read_ground_truth(first[i].truth);
    CHECK(gt.size() >= 1);
    CHECK(gt.size() <= 3);
  }
  cfg.seed = 41;
  const auto shifted = cmd_synth(cfg, dir / "c", 1);
  CHECK(slurp(shifted[0].image) == slurp(first[1].image));

  const auto listed = list_dataset(dir / "a");
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].id == "image_000");
  fs::remove(first[1].truth);
  CHECK_THROWS_WITH_AS(list_dataset(dir / "a"), doctest::Contains("image_001"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("cmd_eval with stub detectors") {
  const fs::path dir = temp_dir("eval");
  SynthConfig cfg;
  cfg.width = 240;
  cfg.height = 200;
  cfg.bars_min = 2;
  cfg.bars_max = 4;
  const auto records = cmd_synth(cfg, dir, 3);

  const Detector perfect = [](const GrayImage&, const ImageRecord& r) {
    Detection d;
    d.centers = read_ground_truth(r.truth);
    d.count = d.centers.size();
    return d;
  };
  const EvalSummary s = cmd_eval(records, perfect);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.mean.recall == 1.0);
  CHECK(s.mean.precision == 1.0);
  CHECK(s.mean.f1 == 1.0);
  CHECK(s.mean.acc_r == 100.0);
  CHECK(s.mean.offset == 0.0);

  const std::string csv = format_eval_csv(s, false);
  CHECK(csv.rfind(std::string(kEvalCsvHeader) + "\n", 0) == 0);
  CHECK(csv.find("\naverage,1.000000,1.000000,1.000000,100.0000,0.0000,0.0000\n") != std::string::npos);
  CHECK(csv.find("image_002,") != std::string::npos);

  // First image exact, second one with the count off by one out of ten.
  std::vector<ImageRecord> two(records.begin(), records.begin() + 2);
  std::vector<Point2> ten;
  for (int i = 0; i < 10; ++i) ten.push_back({40.0 + 15 * i, 100});
  write_ground_truth(two[0].truth, ten);
  write_ground_truth(two[1].truth, ten);
  const Detector drop_last = [&](const GrayImage&, const ImageRecord& r) {
    Detection d;
    d.centers = ten;
    if (r.id == two[1].id) d.centers.pop_back();
    d.count = d.centers.size();
    return d;
  };
  const EvalSummary avg = cmd_eval(two, drop_last);
  CHECK(avg.rows[0].report.acc_r == 100.0);
  CHECK(std::abs(avg.rows[1].report.acc_r - 90.0) < 1e-12);
  CHECK(std::abs(avg.mean.acc_r - 95.0) < 1e-12);

  CHECK_THROWS_AS(cmd_eval(std::vector<ImageRecord>{}, perfect), ConfigError);
  fs::create_directories(dir / "empty");
  CHECK_THROWS_AS(cmd_eval(dir / "empty", center_pixel_model(), small_config()), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("sweep helpers") {
  CHECK(parse_sweep_param("stride") == SweepParam::stride);
  CHECK(parse_sweep_param("th_d") == SweepParam::th_d);
  CHECK_THROWS_AS(parse_sweep_param("lr"), ConfigError);
  SweepOptions o;
  CHECK(sweep_values(o) == std::vector<double>{5, 6, 7, 8, 9});
  o.param = SweepParam::th_d;
  o.from = 11;
  o.to = 51;
  o.step = 10;
  CHECK(sweep_values(o) == std::vector<double>{11, 21, 31, 41, 51});
  o.to = 10;
  CHECK_THROWS_AS(sweep_values(o), ConfigError);
}

TEST_CASE("cmd_sweep on a hand-built classifier") {
  const fs::path dir = temp_dir("sweep");
  const std::vector<Pixel> centers{{20, 20}, {80, 30}, {50, 70}};
  save_image(squares(120, 90, centers), dir / "image_000.pgm");
  std::vector<Point2> gt;
  for (const auto& c : centers) gt.push_back(c.to_point());
  write_ground_truth(dir / "image_000.csv", gt);
  const auto records = list_dataset(dir);
  const Model model = center_pixel_model();

  SweepOptions one;
  one.from = one.to = 2;
  const auto single = cmd_sweep(records, model, small_config(), one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].value == 2);
  CHECK(single[0].mean.acc_r == 100.0);

  SweepOptions th;
  th.param = SweepParam::th_d;
  th.from = 11;
  th.to = 51;
  th.step = 20;
  const auto rows = cmd_sweep(records, model, small_config(), th);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.mean.f1 == 1.0);
  const std::string csv = format_sweep_csv(rows);
  CHECK(csv.rfind(std::string(kSweepCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  fs::remove_all(dir);
}

TEST_CASE("cmd_train on a tiny synthetic set") {
  const fs::path dir = temp_dir("train");
  SynthConfig cfg;
  cfg.width = 120;
  cfg.height = 100;
  cfg.diameter = 15;
  cfg.diameter_jitter = 1;
  cfg.bars_min = 2;
  cfg.bars_max = 3;
  cfg.min_spacing = 30;
  cmd_synth(cfg, dir / "data", 2);

  TrainOptions opts;
  opts.spec = parse_architecture("c4k4,p,f8,f2", {15, 15, 1});
  opts.train.epochs = 6;
  opts.train.batch_size = 8;
  opts.train.learning_rate = 0.01;
  const TrainRun a = cmd_train(dir / "data", opts, dir / "a.bin");
  CHECK(a.epoch_loss.size() == 6);
  CHECK(a.epoch_loss.back() < a.epoch_loss.front());
  CHECK(a.sample_count % 4 == 0);
  cmd_train(dir / "data", opts, dir / "b.bin");
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));
  CHECK(load_model(dir / "a.bin").params.layers == a.model.params.layers);

  opts.train.epochs = 0;
  CHECK_THROWS_AS(cmd_train(dir / "data", opts, dir / "c.bin"), ConfigError);
  fs::remove_all(dir);
}
