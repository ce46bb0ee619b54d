// Command-line front end: synth | train | detect | eval | sweep.
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime/IO error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "cnndc/commands.hpp"
#include "cnndc/errors.hpp"
#include "cnndc/ground_truth.hpp"
#include "cnndc/model_io.hpp"

namespace fs = std::filesystem;
using namespace cnndc;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

struct DetectFlags {
  std::size_t stride = 6;
  double th_d = 20.0;
  std::string mode = "transitive";
  std::size_t threads = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--stride", stride, "Sliding-window stride in pixels")->capture_default_str();
    cmd.add_option("--th-d", th_d, "Distance-clustering threshold in pixels")->capture_default_str();
    cmd.add_option("--mode", mode, "Merge mode: transitive or faithful")->capture_default_str();
    cmd.add_option("--threads", threads, "Inference workers (0: CNNDC_THREADS or all cores)")
        ->capture_default_str();
  }

  DetectConfig config(std::size_t patch_size) const {
    DetectConfig cfg;
    cfg.stride = stride;
    cfg.th_d = th_d;
    cfg.mode = parse_merge_mode(mode);
    cfg.patch_size = patch_size;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steel-bar counting and center localization (CNN + distance clustering)"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic images with ground truth");
  std::string synth_config;
  std::string synth_out;
  std::size_t synth_count = 1;
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "key=value scene configuration file");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of image/ground-truth pairs")->capture_default_str();
  auto* seed_opt = synth->add_option("--seed", synth_seed, "Base seed (overrides the config file)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the patch classifier");
  std::string train_dir;
  std::string model_out;
  std::string arch;
  TrainOptions train_opts;
  train_cmd->add_option("--data", train_dir, "Directory of image + CSV pairs")->required();
  train_cmd->add_option("--model", model_out, "Output model file")->required();
  train_cmd->add_option("--epochs", train_opts.train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_opts.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--decay", train_opts.train.weight_decay)->capture_default_str();
  train_cmd->add_option("--batch", train_opts.train.batch_size)->capture_default_str();
  train_cmd->add_option("--ratio", train_opts.ratio, "Negatives per positive")->capture_default_str();
  train_cmd->add_option("--seed", train_opts.train.rng_seed)->capture_default_str();
  train_cmd->add_option("--arch", arch, "Architecture override, e.g. c16k4,p,c32k3,p,f64,f2");

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Count bars and locate centers in one image");
  std::string detect_model;
  std::string detect_image;
  std::string centers_out;
  std::string candidates_out;
  std::string clusters_out;
  std::string overlay_out;
  DetectFlags detect_flags;
  detect_cmd->add_option("--model", detect_model)->required();
  detect_cmd->add_option("--image", detect_image)->required();
  detect_cmd->add_option("--centers", centers_out, "Write centers as x,y CSV ('-' for stdout)");
  detect_cmd->add_option("--candidates", candidates_out, "Write candidate points as x,y CSV");
  detect_cmd->add_option("--clusters", clusters_out, "Write cluster_id,x,y membership CSV");
  detect_cmd->add_option("--overlay", overlay_out, "Write the image with center markers");
  detect_flags.add_to(*detect_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate on a directory of image + CSV pairs");
  std::string eval_dir;
  std::string eval_model;
  std::string eval_out;
  bool no_timing = false;
  EvalOptions eval_opts;
  DetectFlags eval_flags;
  eval_cmd->add_option("--data", eval_dir)->required();
  eval_cmd->add_option("--model", eval_model)->required();
  eval_cmd->add_option("--out", eval_out, "CSV output path (default stdout)");
  eval_cmd->add_flag("--no-timing", no_timing, "Write 0 in the seconds column");
  eval_cmd->add_option("--match-radius", eval_opts.match_radius)->capture_default_str();
  eval_cmd->add_option("--diameter", eval_opts.diameter)->capture_default_str();
  eval_flags.add_to(*eval_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Metrics versus stride or th_d");
  std::string sweep_dir;
  std::string sweep_model;
  std::string sweep_out;
  std::string sweep_param = "stride";
  SweepOptions sweep_opts;
  DetectFlags sweep_flags;
  sweep_cmd->add_option("--data", sweep_dir)->required();
  sweep_cmd->add_option("--model", sweep_model)->required();
  sweep_cmd->add_option("--param", sweep_param, "stride or th_d")->capture_default_str();
  sweep_cmd->add_option("--from", sweep_opts.from)->required();
  sweep_cmd->add_option("--to", sweep_opts.to)->required();
  sweep_cmd->add_option("--step", sweep_opts.step)->capture_default_str();
  sweep_cmd->add_option("--repeats", sweep_opts.repeats, "Timing repeats (median)")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV output path (default stdout)");
  sweep_flags.add_to(*sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      SynthConfig cfg = synth_config.empty() ? SynthConfig{} : load_synth_config(synth_config);
      if (*seed_opt) cfg.seed = synth_seed;
      const auto written = cmd_synth(cfg, synth_out, synth_count);
      for (const auto& r : written) std::cout << r.image.string() << "\n";
    } else if (*train_cmd) {
      if (!arch.empty()) {
        try {
          train_opts.spec = parse_architecture(arch);
        } catch (const ShapeError& e) {
          throw ConfigError(std::string("--arch: ") + e.what());
        }
      }
      const TrainRun run = cmd_train(train_dir, train_opts, model_out, [](std::size_t epoch, double loss) {
        std::printf("epoch %zu loss %.6f\n", epoch, loss);
        std::fflush(stdout);
      });
      std::printf("trained on %zu patches; model written to %s\n", run.sample_count, model_out.c_str());
    } else if (*detect_cmd) {
      const Model model = load_model(fs::path(detect_model));
      const GrayImage image = load_image(detect_image);
      const DetectConfig cfg = detect_flags.config(model.spec.input.height);
      const Detection det = detect(image, model, cfg, fs::path(detect_image).stem().string());
      std::printf("count %zu candidates %zu seconds %.4f\n", det.count, det.candidates.size(), det.seconds);
      if (!centers_out.empty()) write_text(centers_out, format_points(det.centers));
      if (!candidates_out.empty()) write_text(candidates_out, format_points(det.candidates));
      if (!clusters_out.empty()) {
        std::ostringstream dump;
        write_cluster_members(dump, det.clusters, det.candidates);
        write_text(clusters_out, dump.str());
      }
      if (!overlay_out.empty()) render_overlay(image, det.centers, overlay_out);
    } else if (*eval_cmd) {
      const Model model = load_model(fs::path(eval_model));
      const DetectConfig cfg = eval_flags.config(model.spec.input.height);
      const EvalSummary summary = cmd_eval(eval_dir, model, cfg, eval_opts);
      write_text(eval_out, format_eval_csv(summary, !no_timing));
    } else if (*sweep_cmd) {
      const Model model = load_model(fs::path(sweep_model));
      const DetectConfig cfg = sweep_flags.config(model.spec.input.height);
      sweep_opts.param = parse_sweep_param(sweep_param);
      const auto records = list_dataset(sweep_dir);
      write_text(sweep_out, format_sweep_csv(cmd_sweep(records, model, cfg, sweep_opts, eval_opts)));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
