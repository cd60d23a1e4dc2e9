#include "cxr/pipeline/stages.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "cxr/errors.hpp"
#include "cxr/imaging/ops.hpp"
#include "cxr/imaging/pgm.hpp"
#include "cxr/neural/arch.hpp"
#include "cxr/neural/unet.hpp"
#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"
#include "cxr/sampling/smote.hpp"
#include "cxr/svm/svm.hpp"

namespace cxr::pipeline {

namespace fs = std::filesystem;
using imaging::BitMask;
using imaging::GrayImage;

GrayImage preprocess_image(const GrayImage& img, const PreprocessConfig& cfg) {
  GrayImage out = imaging::resize_bilinear(img, cfg.extent, cfg.extent);
  if (cfg.median_radius > 0) out = imaging::median_filter(out, cfg.median_radius);
  switch (cfg.enhancement) {
    case Enhancement::none: break;
    case Enhancement::he: out = imaging::histogram_equalize(out); break;
    case Enhancement::clahe: out = imaging::clahe(out, cfg.clahe); break;
    case Enhancement::unsharp_gaussian:
      out = imaging::unsharp(out, imaging::GaussianBlur{cfg.unsharp_sigma}, cfg.unsharp_amount);
      break;
    case Enhancement::unsharp_laplacian: out = imaging::unsharp(out, imaging::LaplacianBlur{}, cfg.unsharp_amount); break;
  }
  return out;
}

BitMask load_mask(const fs::path& path, std::size_t extent) {
  GrayImage raw = imaging::read_pgm(path);
  if (raw.width() != extent || raw.height() != extent) raw = imaging::resize_bilinear(raw, extent, extent);
  return BitMask::from_image(raw, 128);
}

std::vector<GrayImage> load_images(const DatasetManifest& m) {
  std::vector<GrayImage> out(m.entries.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = imaging::read_pgm(m.image_path(i)); });
  return out;
}

std::vector<BitMask> load_masks(const DatasetManifest& m, std::size_t extent) {
  std::vector<std::string> missing;
  for (const auto& e : m.entries)
    if (e.mask.empty()) missing.push_back(e.id);
  if (!missing.empty()) throw ValidationError("manifest entries without a mask", missing);
  std::vector<BitMask> out(m.entries.size());
  parallel_for(out.size(), [&](std::size_t i) { out[i] = load_mask(m.resolve(m.entries[i].mask), extent); });
  return out;
}

neural::UNetSpec unet_spec(const SegmentationConfig& cfg, std::size_t extent) {
  return {cfg.depth, cfg.base_channels, extent};
}

neural::Network<float> train_segmentation_model(std::span<const GrayImage> images, std::span<const BitMask> masks,
                                                const SegmentationConfig& cfg, std::size_t extent,
                                                std::uint64_t subset_seed, std::uint64_t init_seed,
                                                std::uint64_t shuffle_seed, std::vector<neural::EpochRecord>* history) {
  if (images.size() != masks.size()) throw ArgumentError("segmenter training needs one mask per image");
  if (images.empty()) throw ArgumentError("segmenter training set is empty");
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(subset_seed);
  shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(order.size(), cfg.train_images));
  std::sort(order.begin(), order.end());
  std::vector<GrayImage> pick_images;
  std::vector<BitMask> pick_masks;
  for (auto i : order) {
    pick_images.push_back(images[i]);
    pick_masks.push_back(masks[i]);
  }
  auto net = neural::build_unet(unet_spec(cfg, extent), init_seed);
  auto train_cfg = cfg.train;
  train_cfg.shuffle_seed = shuffle_seed;
  auto records = neural::train_segmenter(net, neural::make_segmentation_set(pick_images, pick_masks), train_cfg);
  if (history) *history = std::move(records);
  return net;
}

neural::LabeledImages labeled_tensors(std::span<const GrayImage> images, std::span<const std::size_t> labels,
                                      std::size_t channels) {
  if (images.size() != labels.size()) throw ArgumentError("one label per image required");
  neural::LabeledImages out;
  out.images.resize(images.size());
  parallel_for(images.size(), [&](std::size_t i) { out.images[i] = neural::image_tensor(images[i], channels); });
  out.labels.assign(labels.begin(), labels.end());
  return out;
}

neural::Network<float> train_encoder(const neural::LabeledImages& train, const neural::LabeledImages& val,
                                     const EncoderConfig& cfg, std::span<const double> class_weights, std::size_t extent,
                                     std::uint64_t init_seed, std::uint64_t shuffle_seed,
                                     std::vector<neural::EpochRecord>* history) {
  if (train.size() == 0) throw ArgumentError("encoder training split is empty");
  const std::size_t channels = neural::profile_channels(cfg.profile);
  auto net = neural::Network<float>::build(neural::profile(cfg.profile), {channels, extent, extent}, init_seed);
  auto train_cfg = cfg.train;
  train_cfg.class_weights.assign(class_weights.begin(), class_weights.end());
  train_cfg.shuffle_seed = shuffle_seed;
  // Without a validation split the training set stands in so progress is still recorded.
  auto records = neural::train_classifier(net, train, val.size() > 0 ? val : train, train_cfg);
  if (history) *history = std::move(records);
  return net;
}

sampling::FeatureSet encode_images(const neural::Network<float>& net, std::span<const GrayImage> images,
                                   const DatasetManifest& m) {
  if (images.size() != m.entries.size()) throw ArgumentError("one image per manifest entry required");
  const std::size_t channels = net.input_shape().at(0);
  std::vector<neural::Tensor<float>> tensors(images.size());
  parallel_for(images.size(), [&](std::size_t i) { tensors[i] = neural::image_tensor(images[i], channels); });
  const auto vectors = neural::encode_all(net, tensors);
  sampling::FeatureSet fs;
  const std::size_t d = vectors.empty() ? 0 : vectors.front().size();
  fs.features = Matrix<float>(0, d);
  for (const auto& v : vectors) fs.features.append_row(v);
  for (auto l : m.labels()) fs.labels.push_back(static_cast<std::uint8_t>(l));
  fs.class_names = m.class_names;
  for (const auto& e : m.entries) fs.ids.push_back(e.id);
  fs.validate();
  return fs;
}

std::size_t smote_target(const SmoteConfig& cfg, const sampling::FeatureSet& fs) {
  if (cfg.target > 0) return cfg.target;
  const auto counts = fs.class_counts();
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

namespace {

std::vector<std::size_t> pick(const std::vector<std::size_t>& all, const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(all[r]);
  return out;
}

}  // namespace

CvOutcome cross_validate(const sampling::FeatureSet& fs, const PipelineConfig& cfg) {
  fs.validate();
  CvOutcome out;
  out.cv.class_names = fs.class_names;
  const auto labels = fs.labels_as_indices();
  const std::size_t k = fs.class_names.size();
  const bool per_fold = cfg.smote.placement == SmotePlacement::per_fold;
  if (per_fold && !fs.generators.empty())
    throw ArgumentError("per_fold SMOTE placement expects a feature set without synthetic rows");
  out.plan = eval::make_folds(labels, cfg.cv.k, stage_seed(cfg, SeedStream::folds), cfg.cv.mode);

  std::vector<const sampling::Generator*> generator_of(fs.size(), nullptr);
  for (const auto& g : fs.generators) generator_of[g.row] = &g;

  std::uint64_t synthetic_in_test = 0, linked_to_train = 0, per_fold_synthetic = 0, violations = 0;
  for (std::size_t f = 0; f < out.plan.k; ++f) {
    const auto test = out.plan.test_indices(f);
    const auto train = out.plan.train_indices(f);
    sampling::FeatureSet train_set = subset(fs, train);
    if (per_fold) {
      const SmoteConfig majority{0, cfg.smote.k, cfg.smote.placement};
      train_set = sampling::balance_dataset(train_set, smote_target(majority, train_set), cfg.smote.k,
                                            derive_seed(stage_seed(cfg, SeedStream::smote), f));
      const std::set<std::size_t> test_rows(test.begin(), test.end());
      for (const auto& g : train_set.generators) {
        ++per_fold_synthetic;
        if (g.base >= train.size() || g.neighbor >= train.size() || test_rows.count(train[g.base]) ||
            test_rows.count(train[g.neighbor]))
          ++violations;
      }
    } else {
      std::vector<bool> in_train(fs.size(), false);
      for (auto r : train) in_train[r] = true;
      for (auto r : test) {
        if (!generator_of[r]) continue;
        ++synthetic_in_test;
        if (in_train[generator_of[r]->base] || in_train[generator_of[r]->neighbor]) ++linked_to_train;
      }
    }
    const auto model = svm::ovo_train(train_set, cfg.svm, derive_seed(stage_seed(cfg, SeedStream::svm), f));
    const auto test_set = subset(fs, test);
    const auto predicted = svm::ovo_predict_all(model, test_set.features);
    const auto actual = pick(labels, test);
    out.cv.folds.push_back(eval::confusion(actual, predicted, k));
    out.fold_models.push_back(svm::serialize_svm(model));
  }

  if (per_fold) {
    out.leakage = {{"smote_placement", "per_fold"},
                   {"synthetic_training_rows", per_fold_synthetic},
                   {"synthetic_rows_from_test_folds", violations}};
  } else {
    out.leakage = {{"smote_placement", "before_cv"},
                   {"synthetic_rows_in_test_folds", synthetic_in_test},
                   {"synthetic_test_rows_linked_to_training_rows", linked_to_train}};
  }
  return out;
}

std::string relative_path(const fs::path& path, const fs::path& base) {
  return fs::weakly_canonical(fs::absolute(path)).lexically_relative(fs::weakly_canonical(fs::absolute(base))).generic_string();
}

}  // namespace cxr::pipeline
