// Command-line front end: train / infer / eval / bench / gen-data.
//
// Exit codes: 0 success, 2 usage or configuration errors (including the
// documented missing-config and image-size-mismatch cases), 1 operational
// failures (I/O, malformed files, degenerate data, divergence).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fadnet/fadnet.hpp"

namespace fs = std::filesystem;
using namespace fadnet;

namespace {

struct UsageFailure {
  std::string message;
};

RunConfig load_run_config(const std::string& path) {
  if (!fs::exists(path)) {
    throw UsageFailure{"config file not found: " + path};
  }
  return load_config(path);
}

LossSchedule schedule_with_epochs(const std::vector<int>& epochs) {
  LossSchedule s = default_loss_schedule();
  if (epochs.empty()) return s;
  if (epochs.size() != s.rounds.size()) {
    throw UsageFailure{"--epochs needs exactly " + std::to_string(s.rounds.size()) +
                       " comma-separated values"};
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (epochs[i] < 0) throw UsageFailure{"--epochs values must be >= 0"};
    s.rounds[i].epochs = epochs[i];
  }
  return s;
}

SceneMode parse_mode(const std::string& mode) {
  if (mode == "dots") return SceneMode::dots;
  if (mode == "boxes") return SceneMode::boxes;
  throw UsageFailure{"--mode must be dots or boxes"};
}

int cmd_train(const std::string& config_path, const std::string& data_dir, int synthetic_count,
              const std::string& out_dir, std::optional<std::uint64_t> seed_flag,
              const std::vector<int>& epochs_override, const std::string& mode_name,
              double max_disparity, int size) {
  RunConfig run = load_run_config(config_path);
  if (seed_flag) run.seed = *seed_flag;

  std::vector<StereoSample> dataset;
  std::vector<StereoSample> test_set;
  if (!data_dir.empty()) {
    dataset = load_dataset(data_dir);
  } else {
    const SceneMode mode = parse_mode(mode_name);
    dataset = generate_synthetic_dataset(run.seed * 1000 + 100, synthetic_count, size, size,
                                         max_disparity, mode);
    const int test_count = std::max(2, synthetic_count / 4);
    test_set = generate_synthetic_dataset(run.seed * 1000 + 900, test_count, size, size,
                                          max_disparity, mode);
  }
  for (const auto& s : dataset) {
    if (s.left.extent(2) % run.net.divisor() != 0 || s.left.extent(3) % run.net.divisor() != 0) {
      throw UsageFailure{"training images must have extents divisible by " +
                         std::to_string(run.net.divisor())};
    }
  }

  StackedModel model = build_model(run.net, run.seed);
  TrainOptions opts;
  opts.seed = run.seed;
  opts.test_set = std::move(test_set);
  TrainingLog log = train(model, dataset, schedule_with_epochs(epochs_override), opts);

  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "train_log.txt").string(), log.to_text());
  save_weights((fs::path(out_dir) / "weights.fadw").string(), model.named_parameters());
  write_text_file((fs::path(out_dir) / "config.cfg").string(), config_to_text(run));
  std::printf("trained %zu epochs, final train EPE %.6g, test EPE %.6g\n", log.epochs.size(),
              log.epochs.empty() ? 0.0 : log.epochs.back().train_epe, log.final_test_epe());
  std::printf("wrote %s and %s\n", (fs::path(out_dir) / "train_log.txt").c_str(),
              (fs::path(out_dir) / "weights.fadw").c_str());
  return 0;
}

// The checkpoint carries weights only; the network shape comes from the
// config written next to it at training time (or --config).
RunConfig config_for_checkpoint(const std::string& checkpoint, const std::string& config_flag) {
  if (!config_flag.empty()) return load_run_config(config_flag);
  const fs::path sibling = fs::path(checkpoint).parent_path() / "config.cfg";
  if (fs::exists(sibling)) return load_config(sibling.string());
  throw UsageFailure{"no config.cfg next to " + checkpoint + "; pass --config"};
}

int cmd_infer(const std::string& checkpoint, const std::string& left_path,
              const std::string& right_path, const std::string& out_path,
              const std::string& config_flag) {
  RunConfig run = config_for_checkpoint(checkpoint, config_flag);
  Tensor left = image_to_tensor(png_decode(read_file(left_path)));
  Tensor right = image_to_tensor(png_decode(read_file(right_path)));
  if (left.shape() != right.shape()) {
    throw UsageFailure{"left and right images differ in size: " + shape_str(left.shape()) +
                       " vs " + shape_str(right.shape())};
  }
  const std::int64_t H = left.extent(2), W = left.extent(3);

  StackedModel model = build_model(run.net, run.seed);
  load_weights(checkpoint, model.named_parameters());

  Tensor pl = pad_reflect_to_multiple(left, run.net.divisor());
  Tensor pr = pad_reflect_to_multiple(right, run.net.divisor());
  DisparityPyramid pyr = model.forward(pl, pr);
  Tensor full = crop_spatial(pyr.d_hat[0], H, W);
  write_file(out_path, pfm_write(DisparityMap::from_tensor(full, /*clamp_nonneg=*/true)));
  std::printf("wrote %s (%lldx%lld)\n", out_path.c_str(), static_cast<long long>(W),
              static_cast<long long>(H));
  return 0;
}

DisparityMap read_disparity(const std::string& path, const std::string& format) {
  return format == "pfm" ? pfm_read(read_file(path)) : kitti_png_read(read_file(path));
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& format,
             bool strict, const std::string& report_path) {
  const std::string want_ext = format == "pfm" ? ".pfm" : ".png";
  const std::string other_ext = format == "pfm" ? ".png" : ".pfm";

  auto scan = [&](const std::string& dir) {
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      if (ext == want_ext) {
        names.insert(entry.path().filename().string());
      } else if (ext == other_ext) {
        throw FormatError("eval: mixed disparity formats in " + dir + " (found " +
                          entry.path().filename().string() + " while evaluating " + format + ")");
      }
    }
    return names;
  };
  const std::set<std::string> preds = scan(pred_dir);
  const std::set<std::string> gts = scan(gt_dir);

  std::vector<std::string> matched;
  bool any_unmatched = false;
  for (const auto& name : preds) {
    if (gts.count(name)) {
      matched.push_back(name);
    } else {
      std::fprintf(stderr, "unmatched prediction (no ground truth): %s\n", name.c_str());
      any_unmatched = true;
    }
  }
  for (const auto& name : gts) {
    if (!preds.count(name)) {
      std::fprintf(stderr, "unmatched ground truth (no prediction): %s\n", name.c_str());
      any_unmatched = true;
    }
  }
  if (matched.empty()) throw UsageFailure{"eval: no matching files between directories"};

  const std::vector<double> thresholds{1.0, 2.0, 4.0};
  std::ostringstream table;
  table << "# file\tepe\td1_all\tbad1\tbad2\tbad4\trms\n";
  double agg_epe = 0, agg_d1 = 0, agg_rms = 0;
  std::vector<double> agg_bad(thresholds.size(), 0.0);
  for (const auto& name : matched) {
    DisparityMap pred = read_disparity((fs::path(pred_dir) / name).string(), format);
    DisparityMap gt = read_disparity((fs::path(gt_dir) / name).string(), format);
    ThresholdMetrics m = threshold_metrics(pred, gt, thresholds);
    table << name << '\t' << m.avg_error << '\t' << m.d1_all << '\t' << m.bad[0] << '\t'
          << m.bad[1] << '\t' << m.bad[2] << '\t' << m.rms << '\n';
    agg_epe += m.avg_error;
    agg_d1 += m.d1_all;
    agg_rms += m.rms;
    for (std::size_t t = 0; t < thresholds.size(); ++t) agg_bad[t] += m.bad[t];
  }
  const double n = static_cast<double>(matched.size());
  table << "aggregate\t" << agg_epe / n << '\t' << agg_d1 / n << '\t' << agg_bad[0] / n << '\t'
        << agg_bad[1] / n << '\t' << agg_bad[2] / n << '\t' << agg_rms / n << '\n';
  std::fputs(table.str().c_str(), stdout);
  if (!report_path.empty()) write_text_file(report_path, table.str());
  if (strict && any_unmatched) {
    std::fprintf(stderr, "eval: unmatched files present (strict mode)\n");
    return 1;
  }
  return 0;
}

// Warp-consistency self-test over a generated dataset: the right image
// warped by the ground truth must reproduce the left image on valid pixels.
int cmd_eval_self_test(const std::string& dataset_dir, double tolerance) {
  int failures = 0;
  const auto entries = read_manifest(dataset_dir);
  std::printf("# sample\tmean_abs_residual\tvalid_fraction\n");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    StereoSample s = load_sample(dataset_dir, entries[i]);
    Tensor rebuilt = warp_right_to_left(s.right, s.disparity_gt);
    double acc = 0.0, n = 0.0;
    const std::int64_t HW = s.left.extent(2) * s.left.extent(3);
    for (std::int64_t c = 0; c < s.left.extent(1); ++c) {
      for (std::int64_t i2 = 0; i2 < HW; ++i2) {
        if (s.valid_mask.values()[static_cast<std::size_t>(i2)] == 0.0) continue;
        acc += std::fabs(rebuilt.values()[static_cast<std::size_t>(c * HW + i2)] -
                         s.left.values()[static_cast<std::size_t>(c * HW + i2)]);
        n += 1.0;
      }
    }
    const double residual = acc / std::max(n, 1.0);
    const double valid_fraction =
        n / static_cast<double>(s.left.extent(1) * HW);
    std::printf("%s\t%.3g\t%.3g\n", entries[i].gt.c_str(), residual, valid_fraction);
    if (!(residual < tolerance)) ++failures;
  }
  if (failures > 0) {
    std::fprintf(stderr, "self-test: %d sample(s) exceed residual tolerance %g\n", failures,
                 tolerance);
    return 1;
  }
  std::printf("self-test: all %zu samples warp-consistent within %g\n", entries.size(),
              tolerance);
  return 0;
}

int cmd_bench(const std::vector<std::string>& config_paths, const std::string& resolution,
              int runs, int warmup, std::uint64_t seed, const std::string& tsv_path) {
  std::int64_t width = 0, height = 0;
  const std::size_t cross = resolution.find('x');
  try {
    if (cross == std::string::npos) throw std::invalid_argument("no x");
    width = std::stoll(resolution.substr(0, cross));
    height = std::stoll(resolution.substr(cross + 1));
  } catch (const std::exception&) {
    throw UsageFailure{"--resolution must look like 128x96"};
  }
  if (width < 1 || height < 1) throw UsageFailure{"--resolution must look like 128x96"};
  if (runs < 10) throw UsageFailure{"--runs must be at least 10"};
  std::vector<BenchReport> reports;
  for (const auto& path : config_paths) {
    RunConfig run = load_run_config(path);
    if (width % run.net.divisor() != 0 || height % run.net.divisor() != 0) {
      throw UsageFailure{"resolution must be divisible by " + std::to_string(run.net.divisor())};
    }
    reports.push_back(bench_forward(run.net, fs::path(path).stem().string(), height, width, runs,
                                    warmup, seed));
  }
  const std::string table = bench_table(reports);
  std::fputs(table.c_str(), stdout);
  if (!tsv_path.empty()) write_text_file(tsv_path, table);
  return 0;
}

int cmd_gendata(const std::string& out_dir, int count, int height, int width,
                double max_disparity, std::uint64_t seed, const std::string& mode_name,
                bool integer_disparities) {
  const SceneMode mode = parse_mode(mode_name);
  auto samples = generate_synthetic_dataset(seed, count, height, width, max_disparity, mode,
                                            integer_disparities);
  write_dataset(out_dir, samples);
  std::printf("wrote %d samples to %s\n", count, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fadnet: configurable two-stage stereo disparity estimation"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("--workers", workers, "internal worker threads (0 = hardware default)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string config_path, data_dir, out_dir = "out", mode_name = "dots";
  int synthetic_count = 0, synth_size = 64;
  double max_disparity = 8.0;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  std::vector<int> epochs_override;
  train_cmd->add_option("config", config_path, "network config file")->required();
  auto* data_opt = train_cmd->add_option("--data", data_dir, "dataset directory (manifest.txt)");
  auto* synth_opt =
      train_cmd->add_option("--synthetic", synthetic_count, "generate N synthetic pairs");
  data_opt->excludes(synth_opt);
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_option("--seed", seed_value, "override the config seed")
      ->each([&](const std::string&) { seed_given = true; });
  train_cmd->add_option("--epochs", epochs_override,
                        "per-round epoch override, e.g. --epochs 2 2 2 3");
  train_cmd->add_option("--mode", mode_name, "synthetic scene mode: dots|boxes");
  train_cmd->add_option("--max-disparity", max_disparity, "synthetic disparity range");
  train_cmd->add_option("--size", synth_size, "synthetic image extent");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "predict a disparity map");
  std::string ckpt, left_path, right_path, out_path, infer_config;
  infer_cmd->add_option("checkpoint", ckpt, "weights file")->required();
  infer_cmd->add_option("left", left_path, "left image (png)")->required();
  infer_cmd->add_option("right", right_path, "right image (png)")->required();
  infer_cmd->add_option("output", out_path, "output disparity (pfm)")->required();
  infer_cmd->add_option("--config", infer_config, "network config (default: sibling config.cfg)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare disparity directories");
  std::string pred_dir, gt_dir, eval_format = "pfm", report_path, self_test_dir;
  bool strict = false;
  double self_test_tol = 1e-3;
  eval_cmd->add_option("pred", pred_dir, "prediction directory");
  eval_cmd->add_option("gt", gt_dir, "ground-truth directory");
  eval_cmd->add_option("--format", eval_format, "disparity format: pfm|kitti")
      ->check(CLI::IsMember({"pfm", "kitti"}));
  eval_cmd->add_flag("--strict", strict, "fail on unmatched files");
  eval_cmd->add_option("--report", report_path, "also write the table to this file");
  eval_cmd->add_option("--self-test", self_test_dir,
                       "warp-consistency check over a generated dataset directory");
  eval_cmd->add_option("--self-test-tol", self_test_tol, "residual tolerance for --self-test");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "forward-pass timing");
  std::vector<std::string> bench_configs;
  std::string resolution = "64x64", tsv_path;
  int runs = 10, warmup = 3;
  std::uint64_t bench_seed = 7;
  bench_cmd->add_option("configs", bench_configs, "config files to time")->required();
  bench_cmd->add_option("--resolution", resolution, "input size WxH");
  bench_cmd->add_option("--runs", runs, "timed runs (>= 10)");
  bench_cmd->add_option("--warmup", warmup, "warmup runs");
  bench_cmd->add_option("--seed", bench_seed, "weights/input seed");
  bench_cmd->add_option("--tsv", tsv_path, "write the machine-readable table here");

  // gen-data
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset");
  std::string gen_out, gen_mode = "dots";
  int gen_count = 8, gen_h = 64, gen_w = 64;
  double gen_maxd = 8.0;
  std::uint64_t gen_seed = 0;
  bool gen_integer = false;
  gen_cmd->add_option("out_dir", gen_out, "output directory")->required();
  gen_cmd->add_option("--count", gen_count, "sample count");
  gen_cmd->add_option("--height", gen_h, "image height");
  gen_cmd->add_option("--width", gen_w, "image width");
  gen_cmd->add_option("--max-disparity", gen_maxd, "disparity range");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--mode", gen_mode, "dots|boxes");
  gen_cmd->add_flag("--integer", gen_integer, "snap disparities to integers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (workers > 0) set_worker_count(workers);
    if (train_cmd->parsed()) {
      if (data_dir.empty() && synthetic_count <= 0) {
        throw UsageFailure{"train needs --data DIR or --synthetic N"};
      }
      return cmd_train(config_path, data_dir, synthetic_count, out_dir,
                       seed_given ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                       epochs_override, mode_name, max_disparity, synth_size);
    }
    if (infer_cmd->parsed()) {
      return cmd_infer(ckpt, left_path, right_path, out_path, infer_config);
    }
    if (eval_cmd->parsed()) {
      if (!self_test_dir.empty()) return cmd_eval_self_test(self_test_dir, self_test_tol);
      if (pred_dir.empty() || gt_dir.empty()) {
        throw UsageFailure{"eval needs PRED_DIR and GT_DIR (or --self-test DIR)"};
      }
      return cmd_eval(pred_dir, gt_dir, eval_format, strict, report_path);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(bench_configs, resolution, runs, warmup, bench_seed, tsv_path);
    }
    if (gen_cmd->parsed()) {
      return cmd_gendata(gen_out, gen_count, gen_h, gen_w, gen_maxd, gen_seed, gen_mode,
                         gen_integer);
    }
  } catch (const UsageFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    std::fprintf(stderr, "run with --help for usage\n");
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
