#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "cxr/binary_io.hpp"
#include "cxr/errors.hpp"
#include "cxr/eval/report.hpp"
#include "cxr/imaging/ops.hpp"
#include "cxr/imaging/pgm.hpp"
#include "cxr/neural/arch.hpp"
#include "cxr/neural/model_io.hpp"
#include "cxr/neural/unet.hpp"
#include "cxr/parallel.hpp"
#include "cxr/pipeline/config.hpp"
#include "cxr/pipeline/run.hpp"
#include "cxr/pipeline/stages.hpp"
#include "cxr/pipeline/synth.hpp"
#include "cxr/sampling/smote.hpp"
#include "cxr/svm/svm.hpp"

namespace fs = std::filesystem;
using namespace cxr;
using namespace cxr::pipeline;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  PipelineConfig config() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

/// Copy of `m` whose paths point at new files under `out_dir`.
DatasetManifest rebased(const DatasetManifest& m, const fs::path& out_dir) {
  DatasetManifest out = m;
  out.base_dir = out_dir;
  for (auto& e : out.entries)
    if (!e.mask.empty()) e.mask = relative_path(m.resolve(e.mask), out_dir);
  return out;
}

void write_cv(const eval::CrossValidation& cv, const nlohmann::json& extra, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json j = extra;
  j["cross_validation"] = eval::to_json(cv);
  write_text_file(dir / "evaluation.json", j.dump(1) + "\n");
  for (const auto& [name, text] : eval::csv_tables(cv)) write_text_file(dir / name, text);
}

void print_overlapped(const eval::CrossValidation& cv) {
  const auto ms = cv.overlapped_metrics();
  for (std::size_t c = 0; c < ms.size(); ++c)
    std::printf("%-12s Se %s  Sp %s  Pre %s  Acc %s  F1 %s\n", cv.class_names[c].c_str(),
                eval::format_percent(ms[c].sensitivity).c_str(), eval::format_percent(ms[c].specificity).c_str(),
                eval::format_percent(ms[c].precision).c_str(), eval::format_percent(ms[c].accuracy).c_str(),
                eval::format_percent(ms[c].f1).c_str());
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const auto v = std::stoull(item, &used);
    if (used != item.size()) throw ArgumentError("bad count '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chest X-ray classification pipeline: enhancement, lung segmentation, CNN encoding, SMOTE, RBF-SVM"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed, overriding the config");

  std::string out, manifest_path, model_path, features_path, input_path;
  std::string counts_text = "470,1000,1000";
  std::size_t extent = 64;
  double confound = 0.3;
  std::optional<std::size_t> target, neighbours;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic radiograph set with lung masks");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--counts", counts_text, "Images per class (COVID-19,Normal,Pneumonia)");
  synth->add_option("--extent", extent, "Image side in pixels (>= 32)");
  synth->add_option("--confound-rate", confound, "Wire probability for COVID-19 images");

  auto* preprocess = app.add_subcommand("preprocess", "Resize, median filter and enhance every manifest image");
  preprocess->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  preprocess->add_option("--out", out, "Output directory")->required();

  auto* seg_train = app.add_subcommand("segment-train", "Train the U-Net on manifest images and their masks");
  seg_train->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  seg_train->add_option("--out", out, "Model file")->required();

  auto* segment = app.add_subcommand("segment", "Predict lung masks and zero everything outside them");
  segment->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  segment->add_option("--model", model_path, "Segmenter model; without it the manifest masks are applied");
  segment->add_option("--out", out, "Output directory")->required();

  auto* enc_train = app.add_subcommand("encode-train", "Train the encoder on the training split of a manifest");
  enc_train->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  enc_train->add_option("--out", out, "Model file")->required();

  auto* encode = app.add_subcommand("encode", "Encode every manifest image into a feature file");
  encode->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  encode->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  encode->add_option("--out", out, "Feature file")->required();

  auto* balance = app.add_subcommand("balance", "SMOTE every class up to a target count");
  balance->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  balance->add_option("--out", out, "Feature file")->required();
  balance->add_option("--target", target, "Rows per class (default from config; 0 = majority count)");
  balance->add_option("--k", neighbours, "Nearest neighbours");

  auto* svm_train = app.add_subcommand("svm-train", "Train a one-vs-one RBF SVM on a feature file");
  svm_train->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  svm_train->add_option("--out", out, "Model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation, or test a trained SVM with --model");
  evaluate->add_option("--features", features_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--model", model_path, "SVM model to test instead of cross-validating");
  evaluate->add_option("--out", out, "Output directory")->required();

  auto* run_all_cmd = app.add_subcommand("run-all", "Every stage from preprocessing to the report");
  run_all_cmd->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
  run_all_cmd->add_option("--out", out, "Run directory")->required();

  auto* report = app.add_subcommand("report", "Re-emit CSV tables from a run report or evaluation JSON");
  report->add_option("--input", input_path)->required()->check(CLI::ExistingFile);
  report->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = g.config();

    if (*synth) {
      SynthParams p;
      p.counts = parse_counts(counts_text);
      p.extent = extent;
      p.seed = cfg.seed;
      p.confound_rate = confound;
      const auto m = synth_generate(p, out);
      std::printf("wrote %zu images to %s\n", m.entries.size(), out.c_str());
    } else if (*preprocess) {
      const auto m = load_manifest(manifest_path);
      fs::create_directories(fs::path(out) / "images");
      auto result = rebased(m, out);
      parallel_for(m.entries.size(), [&](std::size_t i) {
        const auto img = preprocess_image(imaging::read_pgm(m.image_path(i)), cfg.preprocess);
        result.entries[i].path = "images/" + m.entries[i].id + ".pgm";
        imaging::write_pgm(result.image_path(i), img);
      });
      save_manifest(fs::path(out) / "manifest.json", result);
    } else if (*seg_train) {
      const auto m = load_manifest(manifest_path);
      const auto images = load_images(m);
      const std::size_t e = images.front().width();
      const auto masks = load_masks(m, e);
      std::vector<neural::EpochRecord> history;
      const auto net = train_segmentation_model(images, masks, cfg.segmentation, e,
                                                stage_seed(cfg, SeedStream::segmenter_subset),
                                                stage_seed(cfg, SeedStream::segmenter_init),
                                                stage_seed(cfg, SeedStream::segmenter_shuffle), &history);
      neural::save_model(out, net, {{"stage", "segment-train"}});
      if (!history.empty())
        std::printf("final pixel accuracy %.4f\n", history.back().train_accuracy);
    } else if (*segment) {
      const auto m = load_manifest(manifest_path);
      const auto images = load_images(m);
      const std::size_t e = images.front().width();
      std::vector<imaging::BitMask> masks(images.size());
      if (!model_path.empty()) {
        const auto net = neural::load_model(model_path).network;
        parallel_for(images.size(), [&](std::size_t i) { masks[i] = neural::predict_mask(net, images[i]); });
      } else {
        masks = load_masks(m, e);
      }
      fs::create_directories(fs::path(out) / "images");
      fs::create_directories(fs::path(out) / "masks");
      auto result = rebased(m, out);
      parallel_for(images.size(), [&](std::size_t i) {
        result.entries[i].path = "images/" + m.entries[i].id + ".pgm";
        result.entries[i].mask = "masks/" + m.entries[i].id + ".pgm";
        imaging::write_pgm(result.image_path(i), imaging::apply_mask(images[i], masks[i]));
        imaging::write_pgm(result.resolve(result.entries[i].mask), masks[i].to_image());
      });
      save_manifest(fs::path(out) / "manifest.json", result);
    } else if (*enc_train) {
      const auto m = load_manifest(manifest_path);
      const auto splits = split_dataset(m, cfg.split, stage_seed(cfg, SeedStream::split));
      for (const auto& w : splits.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      const std::size_t channels = neural::profile_channels(cfg.encoder.profile);
      auto tensors = [&](const DatasetManifest& part) {
        return labeled_tensors(load_images(part), part.labels(), channels);
      };
      const auto train = tensors(splits.train);
      const auto val = tensors(splits.val);
      const std::size_t e = train.images.front().shape()[1];
      std::vector<neural::EpochRecord> history;
      const auto net = train_encoder(train, val, cfg.encoder, class_weight_vector(cfg.encoder, m.class_names), e,
                                     stage_seed(cfg, SeedStream::encoder_init),
                                     stage_seed(cfg, SeedStream::encoder_shuffle), &history);
      neural::save_model(out, net, {{"stage", "encode-train"}, {"profile", cfg.encoder.profile}});
      for (const auto& h : history)
        std::printf("epoch %zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f\n", h.epoch, h.train_loss,
                    h.train_accuracy, h.val_loss, h.val_accuracy);
    } else if (*encode) {
      const auto m = load_manifest(manifest_path);
      const auto net = neural::load_model(model_path).network;
      sampling::save_features(out, encode_images(net, load_images(m), m));
    } else if (*balance) {
      const auto fs_in = sampling::load_features(features_path);
      SmoteConfig sc = cfg.smote;
      if (target) sc.target = *target;
      if (neighbours) sc.k = *neighbours;
      const auto balanced = sampling::balance_dataset(fs_in, smote_target(sc, fs_in), sc.k, stage_seed(cfg, SeedStream::smote));
      sampling::save_features(out, balanced);
      const auto counts = balanced.class_counts();
      for (std::size_t c = 0; c < counts.size(); ++c) std::printf("%s: %zu\n", balanced.class_names[c].c_str(), counts[c]);
    } else if (*svm_train) {
      const auto fs_in = sampling::load_features(features_path);
      svm::save_svm(out, svm::ovo_train(fs_in, cfg.svm, stage_seed(cfg, SeedStream::svm)));
    } else if (*evaluate) {
      const auto fs_in = sampling::load_features(features_path);
      if (!model_path.empty()) {
        const auto model = svm::load_svm(model_path);
        eval::CrossValidation cv;
        cv.class_names = fs_in.class_names;
        cv.folds.push_back(eval::confusion(fs_in.labels_as_indices(), svm::ovo_predict_all(model, fs_in.features),
                                           fs_in.class_names.size()));
        write_cv(cv, {{"mode", "held-out model"}}, out);
        print_overlapped(cv);
      } else {
        const auto outcome = cross_validate(fs_in, cfg);
        write_cv(outcome.cv,
                 {{"mode", "cross-validation"},
                  {"fold_mode", eval::to_string(cfg.cv.mode)},
                  {"leakage", outcome.leakage}},
                 out);
        print_overlapped(outcome.cv);
      }
    } else if (*run_all_cmd) {
      const auto m = load_manifest(manifest_path);
      const auto r = run_all(cfg, m, out, &std::cerr);
      print_overlapped(r.cv);
    } else if (*report) {
      const auto bytes = read_file(input_path);
      const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
      if (j.value("format", std::string()) == "cxr-run-report") {
        const auto r = report_from_json(j);
        emit_report(r, out);
        print_overlapped(r.cv);
      } else {
        const auto cv = eval::cross_validation_from_json(j.at("cross_validation"));
        write_cv(cv, j, out);
        print_overlapped(cv);
      }
    }
  } catch (const StageFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
