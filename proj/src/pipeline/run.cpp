#include "cxr/pipeline/run.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include "cxr/binary_io.hpp"
#include "cxr/imaging/ops.hpp"
#include "cxr/imaging/pgm.hpp"
#include "cxr/neural/model_io.hpp"
#include "cxr/neural/unet.hpp"
#include "cxr/parallel.hpp"
#include "cxr/pipeline/digest.hpp"
#include "cxr/pipeline/stages.hpp"
#include "cxr/sampling/smote.hpp"

namespace cxr::pipeline {

namespace fs = std::filesystem;
using imaging::BitMask;
using imaging::GrayImage;
using nlohmann::json;

namespace {

json artifact_json(const Artifact& a) { return {{"path", a.path}, {"sha256", a.sha256}}; }

Artifact artifact_from(const json& j) { return {j.at("path").get<std::string>(), j.at("sha256").get<std::string>()}; }

json artifacts_json(const std::vector<Artifact>& as) {
  json out = json::array();
  for (const auto& a : as) out.push_back(artifact_json(a));
  return out;
}

std::vector<Artifact> artifacts_from(const json& j) {
  std::vector<Artifact> out;
  for (const auto& a : j) out.push_back(artifact_from(a));
  return out;
}

}  // namespace

json report_to_json(const RunReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"name", s.name}, {"inputs", artifacts_json(s.inputs)}, {"outputs", artifacts_json(s.outputs)},
                      {"details", s.details}});
  return {{"format", "cxr-run-report"},
          {"version", kReportVersion},
          {"config", r.config},
          {"seeds", r.seeds},
          {"dataset", r.dataset},
          {"stages", stages},
          {"evaluation",
           {{"fold_mode", r.fold_mode},
            {"smote_placement", r.smote_placement},
            {"leakage", r.leakage},
            {"cross_validation", r.cv.folds.empty() ? json(nullptr) : eval::to_json(r.cv)}}},
          {"fidelity_deviations", r.deviations}};
}

RunReport report_from_json(const json& j) {
  if (j.value("format", std::string()) != "cxr-run-report") throw ArgumentError("not a run report");
  if (j.value("version", 0) != kReportVersion) throw ArgumentError("unsupported run report version");
  RunReport r;
  r.config = j.at("config");
  r.seeds = j.at("seeds");
  r.dataset = j.at("dataset");
  for (const auto& s : j.at("stages"))
    r.stages.push_back({s.at("name").get<std::string>(), artifacts_from(s.at("inputs")), artifacts_from(s.at("outputs")),
                        s.at("details")});
  const auto& e = j.at("evaluation");
  r.fold_mode = e.at("fold_mode").get<std::string>();
  r.smote_placement = e.at("smote_placement").get<std::string>();
  r.leakage = e.at("leakage");
  if (!e.at("cross_validation").is_null()) r.cv = eval::cross_validation_from_json(e.at("cross_validation"));
  r.deviations = j.at("fidelity_deviations").get<std::vector<std::string>>();
  return r;
}

void emit_report(const RunReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "report.json", report_to_json(r).dump(1) + "\n");
  for (const auto& [name, text] : eval::csv_tables(r.cv)) write_text_file(dir / name, text);
}

namespace {

std::vector<std::string> fidelity_deviations(const PipelineConfig& cfg) {
  std::vector<std::string> out{
      "Synthetic radiographs replace the clinical image set. The clinical accuracies (98.9% COVID-19 accuracy) and "
      "the fold-level reference values cannot be reproduced without the clinical data and the unpublished SVM "
      "hyperparameters; COVID-19 sensitivity on the synthetic task is checked instead.",
      "Encoder weights start from a seeded random initialization instead of ImageNet-pretrained VGG-16 weights.",
  };
  if (cfg.encoder.profile != "vgg16-paper" || cfg.preprocess.extent != 224)
    out.push_back("Encoder profile '" + cfg.encoder.profile + "' at " + std::to_string(cfg.preprocess.extent) + "x" +
                  std::to_string(cfg.preprocess.extent) + " instead of the full VGG-16 layout at 224x224.");
  char svm_text[200];
  std::snprintf(svm_text, sizeof svm_text,
                "SVM C and gamma are not published; C=%g and %s are used on standardized features.", cfg.svm.C,
                cfg.svm.gamma > 0 ? ("gamma=" + std::to_string(cfg.svm.gamma)).c_str()
                                  : "gamma=1/(d*mean variance)");
  out.emplace_back(svm_text);
  if (cfg.cv.mode == eval::FoldMode::stratified)
    out.push_back("Folds are stratified (equal class counts per fold) whereas the reference fold supports vary, "
                  "which implies unstratified folds.");
  if (cfg.segmentation.enabled && cfg.segmentation.source == MaskSource::unet)
    out.push_back("The U-Net segmenter (depth " + std::to_string(cfg.segmentation.depth) + ", " +
                  std::to_string(cfg.segmentation.base_channels) + " base channels) is trained on " +
                  std::to_string(cfg.segmentation.train_images) + " synthetic ground-truth masks from the training split.");
  if (!cfg.segmentation.enabled) out.push_back("Lung segmentation is disabled.");
  return out;
}

std::string leakage_label(const PipelineConfig& cfg) {
  if (cfg.smote.placement == SmotePlacement::before_cv)
    return "LEAKY: the encoder is trained on the 60% split and SMOTE runs over all vectors before cross-validation, "
           "so test folds contain synthetic rows interpolated from training-fold rows and images the encoder was "
           "trained on.";
  return "SMOTE runs inside each training fold only; test folds hold original rows. The encoder was still trained on "
         "the 60% split, which overlaps the cross-validation test folds.";
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

/// Writes an image and returns its digest, hashing the bytes written.
std::string write_tracked(const fs::path& path, const GrayImage& img) {
  const auto bytes = imaging::save_pgm(img);
  write_file(path, bytes);
  return sha256_hex(bytes);
}

Artifact write_json_artifact(const fs::path& out_dir, const std::string& rel, const json& j) {
  const std::string text = j.dump(1) + "\n";
  write_text_file(out_dir / rel, text);
  return {rel, sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()))};
}

Artifact write_bytes_artifact(const fs::path& out_dir, const std::string& rel, const std::vector<std::uint8_t>& bytes) {
  write_file(out_dir / rel, bytes);
  return {rel, sha256_hex(bytes)};
}

json history_json(const std::vector<neural::EpochRecord>& h) {
  json out = json::array();
  for (const auto& e : h)
    out.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"train_accuracy", e.train_accuracy},
                   {"val_loss", e.val_loss},
                   {"val_accuracy", e.val_accuracy}});
  return out;
}

std::vector<std::size_t> positions(const DatasetManifest& whole, const DatasetManifest& part) {
  std::map<std::string, std::size_t> at;
  for (std::size_t i = 0; i < whole.entries.size(); ++i) at[whole.entries[i].id] = i;
  std::vector<std::size_t> out;
  for (const auto& e : part.entries) out.push_back(at.at(e.id));
  return out;
}

template <class T>
std::vector<T> gather(const std::vector<T>& all, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(all[r]);
  return out;
}

}  // namespace

RunReport run_all(const PipelineConfig& cfg, const DatasetManifest& manifest, const fs::path& out_dir, std::ostream* log) {
  RunReport r;
  r.config = config_to_json(cfg);
  r.seeds = stage_seeds(cfg);
  r.fold_mode = std::string(eval::to_string(cfg.cv.mode));
  r.smote_placement = std::string(to_string(cfg.smote.placement));
  r.deviations = fidelity_deviations(cfg);
  r.leakage = {{"label", leakage_label(cfg)}};
  r.cv.class_names = manifest.class_names;

  fs::create_directories(out_dir);
  json timings = json::object();
  const std::size_t extent = cfg.preprocess.extent;
  const std::size_t n = manifest.entries.size();
  const bool segment = cfg.segmentation.enabled;

  auto stage = [&](const std::string& name, auto&& body) {
    if (log) *log << "[" << name << "] ..." << std::endl;
    Timer t;
    StageRecord rec{name, {}, {}, json::object()};
    try {
      body(rec);
    } catch (const std::exception& e) {
      json partial = report_to_json(r);
      partial["failed_stage"] = name;
      partial["error"] = e.what();
      fs::create_directories(out_dir / "report");
      write_text_file(out_dir / "report" / "partial_report.json", partial.dump(1) + "\n");
      throw StageFailure(name, e.what());
    }
    r.stages.push_back(std::move(rec));
    timings[name] = t.seconds();
    if (log) *log << "[" << name << "] done in " << t.seconds() << " s" << std::endl;
  };

  Splits splits;
  const std::string manifest_digest = [&] {
    const std::string text = manifest_to_json(manifest).dump();
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }();

  stage("ingest", [&](StageRecord& rec) {
    splits = split_dataset(manifest, cfg.split, stage_seed(cfg, SeedStream::split));
    auto ids = [](const DatasetManifest& m) {
      std::vector<std::string> out;
      for (const auto& e : m.entries) out.push_back(e.id);
      return out;
    };
    rec.inputs.push_back({"manifest", manifest_digest});
    rec.outputs.push_back(write_json_artifact(out_dir, "splits.json",
                                              {{"train", ids(splits.train)}, {"val", ids(splits.val)}, {"test", ids(splits.test)}}));
    r.dataset = {{"class_names", manifest.class_names},
                 {"counts", manifest.counts()},
                 {"size", n},
                 {"splits",
                  {{"train", splits.train.counts()}, {"val", splits.val.counts()}, {"test", splits.test.counts()}}},
                 {"split_warnings", splits.warnings}};
    rec.details = {{"counts", manifest.counts()}, {"warnings", splits.warnings}};
  });
  const auto train_rows = positions(manifest, splits.train);
  const auto val_rows = positions(manifest, splits.val);
  const auto test_rows = positions(manifest, splits.test);

  std::vector<GrayImage> pre(n);
  stage("preprocess", [&](StageRecord& rec) {
    fs::create_directories(out_dir / "preprocessed");
    json index = json::array();
    std::vector<std::string> in_sha(n), out_sha(n);
    parallel_for(n, [&](std::size_t i) {
      const auto bytes = read_file(manifest.image_path(i));
      in_sha[i] = sha256_hex(bytes);
      pre[i] = preprocess_image(imaging::load_pgm(bytes), cfg.preprocess);
      out_sha[i] = write_tracked(out_dir / "preprocessed" / (manifest.entries[i].id + ".pgm"), pre[i]);
    });
    for (std::size_t i = 0; i < n; ++i)
      index.push_back({{"id", manifest.entries[i].id},
                       {"inputs", json::array({artifact_json({manifest.entries[i].path, in_sha[i]})})},
                       {"output", artifact_json({"preprocessed/" + manifest.entries[i].id + ".pgm", out_sha[i]})}});
    rec.inputs.push_back({"manifest", manifest_digest});
    rec.outputs.push_back(write_json_artifact(out_dir, "preprocessed/index.json", index));
    rec.details = {{"extent", extent},
                   {"median_radius", cfg.preprocess.median_radius},
                   {"enhancement", to_string(cfg.preprocess.enhancement)},
                   {"order", "resize, median, enhancement"}};
  });

  std::vector<GrayImage> encoder_input = pre;
  fs::create_directories(out_dir / "models");
  if (segment) {
    std::vector<BitMask> masks(n);
    if (cfg.segmentation.source == MaskSource::unet) {
      neural::Network<float> seg_net;
      Artifact seg_model;
      stage("segment-train", [&](StageRecord& rec) {
        const DatasetManifest& tm = splits.train;
        const auto truth = load_masks(tm, extent);
        std::vector<neural::EpochRecord> history;
        seg_net = train_segmentation_model(gather(pre, train_rows), truth, cfg.segmentation, extent,
                                           stage_seed(cfg, SeedStream::segmenter_subset),
                                           stage_seed(cfg, SeedStream::segmenter_init),
                                           stage_seed(cfg, SeedStream::segmenter_shuffle), &history);
        double held_out = 0.0;
        std::size_t checked = 0;
        if (!splits.val.entries.empty()) {
          const auto val_truth = load_masks(splits.val, extent);
          std::vector<double> acc(val_rows.size());
          parallel_for(val_rows.size(), [&](std::size_t i) {
            acc[i] = neural::pixel_accuracy(neural::predict_mask(seg_net, pre[val_rows[i]]), val_truth[i]);
          });
          for (double a : acc) held_out += a;
          checked = acc.size();
          held_out /= static_cast<double>(checked);
        }
        rec.inputs.push_back(*std::find_if(r.stages.begin(), r.stages.end(), [](const auto& s) {
                               return s.name == "preprocess";
                             })->outputs.begin());
        seg_model = write_bytes_artifact(out_dir, "models/segmenter.cxrm",
                                         neural::serialize_model(seg_net, {{"stage", "segment-train"},
                                                                           {"train_split_manifest", manifest_digest}}));
        rec.outputs.push_back(seg_model);
        rec.details = {{"unet", {{"depth", cfg.segmentation.depth}, {"base_channels", cfg.segmentation.base_channels}}},
                       {"train_images", std::min(cfg.segmentation.train_images, train_rows.size())},
                       {"history", history_json(history)},
                       {"validation_pixel_accuracy", held_out},
                       {"validation_images", checked}};
      });
      stage("segment", [&](StageRecord& rec) {
        parallel_for(n, [&](std::size_t i) { masks[i] = neural::predict_mask(seg_net, pre[i]); });
        rec.inputs.push_back(seg_model);
        rec.details = {{"mask_source", "unet"}, {"post_processing", "two largest 4-connected components"}};
      });
    } else {
      stage("segment", [&](StageRecord& rec) {
        masks = load_masks(manifest, extent);
        rec.inputs.push_back({"manifest", manifest_digest});
        rec.details = {{"mask_source", "manifest"}};
      });
    }
    // Persisting masks and masked images belongs to the segment stage.
    StageRecord& rec = r.stages.back();
    Timer t;
    fs::create_directories(out_dir / "segmentation" / "masks");
    fs::create_directories(out_dir / "segmentation" / "images");
    std::vector<std::string> mask_sha(n), img_sha(n);
    std::vector<std::size_t> empty(n, 0);
    parallel_for(n, [&](std::size_t i) {
      const auto& id = manifest.entries[i].id;
      encoder_input[i] = imaging::apply_mask(pre[i], masks[i]);
      mask_sha[i] = write_tracked(out_dir / "segmentation" / "masks" / (id + ".pgm"), masks[i].to_image());
      img_sha[i] = write_tracked(out_dir / "segmentation" / "images" / (id + ".pgm"), encoder_input[i]);
      empty[i] = masks[i].count() == 0;
    });
    json index = json::array();
    std::size_t empty_masks = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& id = manifest.entries[i].id;
      empty_masks += empty[i];
      index.push_back({{"id", id},
                       {"inputs", json::array({artifact_json({"preprocessed/" + id + ".pgm", ""}),
                                               artifact_json({"segmentation/masks/" + id + ".pgm", mask_sha[i]})})},
                       {"mask", artifact_json({"segmentation/masks/" + id + ".pgm", mask_sha[i]})},
                       {"output", artifact_json({"segmentation/images/" + id + ".pgm", img_sha[i]})}});
    }
    // Fill the preprocessed digests from that stage's index.
    const auto pre_index = json::parse(read_file(out_dir / "preprocessed" / "index.json"));
    for (std::size_t i = 0; i < n; ++i) index[i]["inputs"][0]["sha256"] = pre_index[i]["output"]["sha256"];
    rec.outputs.push_back(write_json_artifact(out_dir, "segmentation/index.json", index));
    rec.details["empty_masks"] = empty_masks;
    timings[rec.name] = timings.value(rec.name, 0.0) + t.seconds();
  }

  const std::string encoder_input_index = segment ? "segmentation/index.json" : "preprocessed/index.json";
  const Artifact input_index{encoder_input_index, sha256_file(out_dir / encoder_input_index)};
  neural::Network<float> encoder;
  Artifact encoder_model;
  stage("encode-train", [&](StageRecord& rec) {
    const auto labels = manifest.labels();
    const std::size_t channels = neural::profile_channels(cfg.encoder.profile);
    const auto train = labeled_tensors(gather(encoder_input, train_rows), gather(labels, train_rows), channels);
    const auto val = labeled_tensors(gather(encoder_input, val_rows), gather(labels, val_rows), channels);
    const auto weights = class_weight_vector(cfg.encoder, manifest.class_names);
    std::vector<neural::EpochRecord> history;
    encoder = train_encoder(train, val, cfg.encoder, weights, extent, stage_seed(cfg, SeedStream::encoder_init),
                            stage_seed(cfg, SeedStream::encoder_shuffle), &history);
    json test_eval = nullptr;
    if (!test_rows.empty()) {
      const auto test = labeled_tensors(gather(encoder_input, test_rows), gather(labels, test_rows), channels);
      const auto ev = neural::evaluate_classifier(encoder, test, weights);
      test_eval = {{"loss", ev.loss}, {"accuracy", ev.accuracy}};
    }
    rec.inputs.push_back(input_index);
    encoder_model = write_bytes_artifact(
        out_dir, "models/encoder.cxrm",
        neural::serialize_model(encoder, {{"stage", "encode-train"}, {"profile", cfg.encoder.profile}}));
    rec.outputs.push_back(encoder_model);
    rec.details = {{"profile", cfg.encoder.profile},
                   {"class_weights", weights},
                   {"train_images", train_rows.size()},
                   {"val_images", val_rows.size()},
                   {"history", history_json(history)},
                   {"test_split", test_eval}};
  });

  sampling::FeatureSet features;
  stage("encode", [&](StageRecord& rec) {
    features = encode_images(encoder, encoder_input, manifest);
    features.provenance = {{"encoder_sha256", encoder_model.sha256}, {"inputs_sha256", input_index.sha256}};
    rec.inputs = {encoder_model, input_index};
    rec.outputs.push_back(write_bytes_artifact(out_dir, "features/features.cxrf", sampling::serialize_features(features)));
    rec.details = {{"dimension", features.dim()}, {"rows", features.size()}};
  });

  sampling::FeatureSet cv_input = features;
  if (cfg.smote.placement == SmotePlacement::before_cv) {
    stage("balance", [&](StageRecord& rec) {
      const auto target = smote_target(cfg.smote, features);
      cv_input = sampling::balance_dataset(features, target, cfg.smote.k, stage_seed(cfg, SeedStream::smote));
      cv_input.provenance = {{"features_sha256", r.stages.back().outputs.front().sha256},
                             {"target", target},
                             {"k", cfg.smote.k}};
      rec.inputs.push_back(r.stages.back().outputs.front());
      rec.outputs.push_back(write_bytes_artifact(out_dir, "features/balanced.cxrf", sampling::serialize_features(cv_input)));
      rec.details = {{"target", target},
                     {"k", cfg.smote.k},
                     {"counts_before", features.class_counts()},
                     {"counts_after", cv_input.class_counts()},
                     {"synthetic_rows", cv_input.generators.size()}};
    });
  }

  stage("evaluate", [&](StageRecord& rec) {
    rec.inputs.push_back(r.stages.back().outputs.front());
    auto outcome = cross_validate(cv_input, cfg);
    fs::create_directories(out_dir / "svm");
    for (std::size_t f = 0; f < outcome.fold_models.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "svm/fold_%02zu.cxrs", f + 1);
      rec.outputs.push_back(write_bytes_artifact(out_dir, name, outcome.fold_models[f]));
    }
    r.cv = std::move(outcome.cv);
    r.leakage.update(outcome.leakage);
    std::vector<std::size_t> sizes;
    for (std::size_t f = 0; f < outcome.plan.k; ++f) sizes.push_back(outcome.plan.test_indices(f).size());
    rec.details = {{"folds", cfg.cv.k},
                   {"fold_mode", eval::to_string(cfg.cv.mode)},
                   {"smote_placement", to_string(cfg.smote.placement)},
                   {"test_fold_sizes", sizes},
                   {"svm", {{"C", cfg.svm.C}, {"gamma", cfg.svm.gamma}, {"tol", cfg.svm.tol}}}};
  });

  Timer t;
  emit_report(r, out_dir / "report");
  timings["report"] = t.seconds();
  write_text_file(out_dir / "timings.json", timings.dump(1) + "\n");
  return r;
}

}  // namespace cxr::pipeline
