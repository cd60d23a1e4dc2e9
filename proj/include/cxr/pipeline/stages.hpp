#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cxr/eval/folds.hpp"
#include "cxr/eval/report.hpp"
#include "cxr/imaging/image.hpp"
#include "cxr/neural/network.hpp"
#include "cxr/neural/train.hpp"
#include "cxr/pipeline/config.hpp"
#include "cxr/pipeline/manifest.hpp"
#include "cxr/sampling/feature_set.hpp"

namespace cxr::pipeline {

/// resize -> median -> configured enhancement.
imaging::GrayImage preprocess_image(const imaging::GrayImage& img, const PreprocessConfig& cfg);

/// Reads a mask PGM (nonzero = lung) and brings it to extent x extent.
imaging::BitMask load_mask(const std::filesystem::path& path, std::size_t extent);

/// Loads every manifest image, in parallel.
std::vector<imaging::GrayImage> load_images(const DatasetManifest& m);

/// Manifest masks of every entry; throws ValidationError naming entries
/// without one.
std::vector<imaging::BitMask> load_masks(const DatasetManifest& m, std::size_t extent);

neural::UNetSpec unet_spec(const SegmentationConfig& cfg, std::size_t extent);

/// U-Net on up to cfg.train_images pairs picked by `subset_seed`.
neural::Network<float> train_segmentation_model(std::span<const imaging::GrayImage> images,
                                                std::span<const imaging::BitMask> masks, const SegmentationConfig& cfg,
                                                std::size_t extent, std::uint64_t subset_seed, std::uint64_t init_seed,
                                                std::uint64_t shuffle_seed, std::vector<neural::EpochRecord>* history);

neural::LabeledImages labeled_tensors(std::span<const imaging::GrayImage> images, std::span<const std::size_t> labels,
                                      std::size_t channels);

/// Encoder of the configured profile trained on `train`, validated on `val`.
neural::Network<float> train_encoder(const neural::LabeledImages& train, const neural::LabeledImages& val,
                                     const EncoderConfig& cfg, std::span<const double> class_weights, std::size_t extent,
                                     std::uint64_t init_seed, std::uint64_t shuffle_seed,
                                     std::vector<neural::EpochRecord>* history);

sampling::FeatureSet encode_images(const neural::Network<float>& net, std::span<const imaging::GrayImage> images,
                                   const DatasetManifest& m);

struct CvOutcome {
  eval::CrossValidation cv;
  eval::FoldPlan plan;
  nlohmann::json leakage;
  std::vector<std::vector<std::uint8_t>> fold_models;  ///< serialized SVMs, one per fold
};

/// k-fold SVM evaluation of a feature set. With before_cv placement `fs` is
/// expected to be balanced already and folds are drawn over all of its rows;
/// with per_fold placement SMOTE runs on each training fold only and test
/// folds hold original rows alone.
CvOutcome cross_validate(const sampling::FeatureSet& fs, const PipelineConfig& cfg);

/// SMOTE target for a feature set: cfg.target, or the majority count when 0.
std::size_t smote_target(const SmoteConfig& cfg, const sampling::FeatureSet& fs);

/// `path` re-expressed relative to `base`, with forward slashes.
std::string relative_path(const std::filesystem::path& path, const std::filesystem::path& base);

}  // namespace cxr::pipeline
