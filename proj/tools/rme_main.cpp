// rme: command-line front end for map generation, sampling, reconstruction,
// training, evaluation and export.

#include "rme/config.hpp"
#include "rme/error.hpp"
#include "rme/io.hpp"
#include "rme/methods.hpp"
#include "rme/metrics.hpp"
#include "rme/radio.hpp"
#include "rme/unrolled.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace rme;

namespace {

Config config_or_default(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

std::string scene_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%03zu", i);
  return buf;
}

std::vector<std::string> dataset_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw_invalid("dataset directory not found: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".rmt") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw_invalid("no .rmt tensors in " + dir);
  return files;
}

int cmd_gen(const std::string& spec_path, const std::string& out_dir, std::size_t count) {
  const Config cfg = config_or_default(spec_path);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec spec = cfg.scene;
    spec.seed = cfg.scene.seed + i;
    const Scene s = generate_scene(spec);
    const std::string base = (fs::path(out_dir) / scene_name(i)).string();
    io::write_tensor(base + ".rmt", s.ground_truth);
    std::string meta = "seed " + std::to_string(spec.seed) + "\ndb_min " + std::to_string(s.db_min) +
                       "\ndb_max " + std::to_string(s.db_max) + "\n";
    for (const auto& t : s.transmitters)
      meta += "tx " + std::to_string(t.tx_row) + " " + std::to_string(t.tx_col) + " n_exp " +
              std::to_string(t.n_exp) + "\n";
    io::write_file_atomic(base + ".meta", meta);
  }
  return 0;
}

int cmd_sample(const std::string& tensor, double percent, std::uint64_t seed, const std::string& out) {
  const Tensor3 t = io::read_tensor(tensor);
  const ObservationMask m = sample_mask(t.h(), t.w(), percent, seed);
  io::write_mask(out, m);
  std::printf("observed=%zu\n", m.count());
  return 0;
}

int cmd_solve(const std::string& method, const std::string& tensor, const std::string& mask_path,
              const std::string& model_path, const std::string& config, const std::string& out) {
  const Config cfg = config_or_default(config);
  const Tensor3 t = io::read_tensor(tensor);
  const ObservationMask mask = io::read_mask(mask_path);
  check_mask_dims(t, mask, "solve");
  std::shared_ptr<const UnrolledModel> model;
  if (method == "unroll") {
    if (!model_path.empty()) {
      model = std::make_shared<UnrolledModel>(io::read_checkpoint(model_path));
    } else {
      ModelInit init = cfg.model;
      init.k_bands = t.k();
      init.grid = std::max(t.h(), t.w());
      model = std::make_shared<UnrolledModel>(make_model(init));
      std::cerr << "note: no --model given, using an untrained model\n";
    }
  } else if (!model_path.empty()) {
    throw_invalid("--model only applies to --method unroll");
  }
  const NamedMethod m = make_method(method, cfg, model);
  io::write_tensor(out, m.run(project(t, mask), mask));
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& config, const std::string& out,
              const std::string& history) {
  const Config cfg = config_or_default(config);
  const auto files = dataset_files(dataset);
  std::vector<TrainSample> data;
  for (std::size_t i = 0; i < files.size(); ++i) {
    Tensor3 truth = io::read_tensor(files[i]);
    const ObservationMask mask =
        sample_mask(truth.h(), truth.w(), cfg.train_sparsity, cfg.train.seed * 1000003ULL + i);
    data.push_back(make_sample(truth, mask));
  }
  ModelInit init = cfg.model;
  init.k_bands = data[0].truth.k();
  init.grid = std::max(data[0].truth.h(), data[0].truth.w());
  const TrainResult r = train(make_model(init), data, cfg.train, [](int ep, double tl, double vl) {
    std::cerr << "epoch " << ep << " train_loss " << tl << " val_loss " << vl << "\n";
  });
  io::write_checkpoint(out, r.model);
  if (!history.empty()) {
    std::string csv = "epoch,train_loss,val_loss,best_val\n";
    for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
      csv += std::to_string(e) + "," + std::to_string(r.epoch_loss[e]);
      csv += "," + (e < r.val_loss.size() ? std::to_string(r.val_loss[e]) : std::string("nan"));
      csv += "," + (e < r.best_val.size() ? std::to_string(r.best_val[e]) : std::string("nan")) + "\n";
    }
    io::write_file_atomic(history, csv);
  }
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& truth_path, double threshold) {
  const Tensor3 est = io::read_tensor(est_path);
  const Tensor3 truth = io::read_tensor(truth_path);
  check_same_dims(est, truth, "eval");
  const EvalReport r = evaluate("eval", est, truth, threshold);
  std::printf("psnr_db=%.6f\nrmse=%.8f\noutage_error=%.8f\n", r.psnr_db, r.rmse, r.outage_error);
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out) {
  const Config cfg = config_or_default(config);
  std::shared_ptr<const UnrolledModel> model;
  if (!cfg.sweep.model.empty()) model = std::make_shared<UnrolledModel>(io::read_checkpoint(cfg.sweep.model));
  std::vector<NamedMethod> methods;
  for (const auto& name : cfg.sweep.methods) methods.push_back(make_method(name, cfg, model));
  std::vector<Tensor3> scenes;
  for (std::size_t i = 0; i < cfg.sweep.n_scenes; ++i) {
    SceneSpec spec = cfg.scene;
    spec.seed = cfg.sweep.scene_seed + i;
    scenes.push_back(generate_scene(spec).ground_truth);
  }
  SweepOptions opts;
  opts.outage_threshold = cfg.outage_threshold;
  const auto reports = sweep(methods, scenes, cfg.sweep.sparsities, cfg.sweep.seeds, opts);
  io::write_file_atomic(out, reports_to_csv(reports));
  for (const auto& s : summarize(reports))
    std::printf("%-8s %5.1f%%  psnr %7.3f dB  rmse %.5f  outage %.5f  failed %zu\n", s.method.c_str(),
                s.sparsity_percent, s.psnr_db, s.rmse, s.outage_error, s.failed);
  return 0;
}

int cmd_export(const std::string& tensor, std::size_t band, const std::string& format,
               const std::string& out) {
  const Tensor3 t = io::read_tensor(tensor);
  if (format == "pgm") {
    io::write_file_atomic(out, io::export_pgm(t, band));
  } else if (format == "csv") {
    io::write_file_atomic(out, io::export_csv(t, band));
  } else {
    throw_invalid("unknown export format '" + format + "' (expected pgm or csv)");
  }
  return 0;
}

int cmd_import(const std::vector<std::string>& csv, const std::string& out, std::string sidecar) {
  const io::ImportedTensor t = io::import_csv(csv);
  if (sidecar.empty()) sidecar = out + ".range";
  io::write_tensor(out, t.tensor);
  io::write_file_atomic(sidecar, io::ranges_sidecar(t));
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radio map estimation from sparse observations"};
  app.require_subcommand(1);

  std::string spec, out, tensor, mask, model, config, method, dataset, est, truth, format, history, sidecar;
  std::size_t count = 1, band = 0;
  double percent = 10.0, threshold = 0.2;
  std::uint64_t seed = 0;
  std::vector<std::string> csv;

  auto* gen = app.add_subcommand("gen", "Generate synthetic scenes");
  gen->add_option("--spec", spec, "key=value file with scene.* settings");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--count", count, "Number of scenes (seeds scene.seed + i)");

  auto* sample = app.add_subcommand("sample", "Draw an observation mask");
  sample->add_option("--tensor", tensor)->required();
  sample->add_option("--percent", percent)->required();
  sample->add_option("--seed", seed);
  sample->add_option("--out", out)->required();

  auto* solve = app.add_subcommand("solve", "Reconstruct a map from its observed cells");
  solve->add_option("--method", method)->required()->check(CLI::IsMember({"halrtc", "admm", "rbf", "ldpl", "unroll"}));
  solve->add_option("--tensor", tensor)->required();
  solve->add_option("--mask", mask)->required();
  solve->add_option("--model", model);
  solve->add_option("--config", config);
  solve->add_option("--out", out)->required();

  auto* trn = app.add_subcommand("train", "Train the unrolled network");
  trn->add_option("--dataset", dataset, "Directory of ground-truth .rmt tensors")->required();
  trn->add_option("--config", config);
  trn->add_option("--out", out)->required();
  trn->add_option("--history", history, "Optional per-epoch loss CSV");

  auto* ev = app.add_subcommand("eval", "Compare an estimate with the ground truth");
  ev->add_option("--est", est)->required();
  ev->add_option("--truth", truth)->required();
  ev->add_option("--outage-threshold", threshold);

  auto* sw = app.add_subcommand("sweep", "Evaluate methods over sparsity levels");
  sw->add_option("--config", config);
  sw->add_option("--out", out)->required();

  auto* ex = app.add_subcommand("export", "Export one band as PGM or CSV");
  ex->add_option("--tensor", tensor)->required();
  ex->add_option("--band", band);
  ex->add_option("--format", format)->required();
  ex->add_option("--out", out)->required();

  auto* im = app.add_subcommand("import", "Import per-band CSV grids as a normalized tensor");
  im->add_option("--csv", csv, "One CSV grid per band")->required();
  im->add_option("--out", out)->required();
  im->add_option("--sidecar", sidecar, "min/max file (default <out>.range)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s: %s\n", category_name(ErrorCategory::InvalidArgument), e.what());
    return static_cast<int>(ErrorCategory::InvalidArgument);
  }

  try {
    if (*gen) return cmd_gen(spec, out, count);
    if (*sample) return cmd_sample(tensor, percent, seed, out);
    if (*solve) return cmd_solve(method, tensor, mask, model, config, out);
    if (*trn) return cmd_train(dataset, config, out, history);
    if (*ev) return cmd_eval(est, truth, threshold);
    if (*sw) return cmd_sweep(config, out);
    if (*ex) return cmd_export(tensor, band, format, out);
    if (*im) return cmd_import(csv, out, sidecar);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", category_name(e.category()), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
