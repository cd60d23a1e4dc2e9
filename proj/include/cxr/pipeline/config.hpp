#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cxr/eval/folds.hpp"
#include "cxr/imaging/ops.hpp"
#include "cxr/neural/train.hpp"
#include "cxr/neural/unet.hpp"
#include "cxr/pipeline/manifest.hpp"
#include "cxr/svm/svm.hpp"

namespace cxr::pipeline {

enum class Enhancement { none, he, clahe, unsharp_gaussian, unsharp_laplacian };
std::string_view to_string(Enhancement e);
Enhancement parse_enhancement(std::string_view name);

struct PreprocessConfig {
  std::size_t extent = 64;
  std::size_t median_radius = 1;
  Enhancement enhancement = Enhancement::he;
  imaging::ClaheParams clahe;
  double unsharp_sigma = 1.0;
  double unsharp_amount = 1.0;
};

/// "unet" trains a segmenter on manifest masks; "manifest" applies the
/// manifest's masks directly.
enum class MaskSource { unet, manifest };

struct SegmentationConfig {
  bool enabled = true;
  MaskSource source = MaskSource::unet;
  std::size_t depth = 3;
  std::size_t base_channels = 8;
  std::size_t train_images = 96;  ///< drawn from the training split
  neural::TrainConfig train = neural::segmenter_defaults();
};

struct EncoderConfig {
  std::string profile = "mini";
  neural::TrainConfig train;  ///< class_weights ignored; see class_weights below
  std::map<std::string, double> class_weights{{"COVID-19", 10.0}, {"Normal", 8.0}, {"Pneumonia", 9.0}};
};

enum class SmotePlacement { before_cv, per_fold };
std::string_view to_string(SmotePlacement p);
SmotePlacement parse_smote_placement(std::string_view name);

struct SmoteConfig {
  std::size_t target = 1000;  ///< before_cv only; 0 means the majority count
  std::size_t k = 5;
  SmotePlacement placement = SmotePlacement::before_cv;
};

struct CvConfig {
  std::size_t k = 10;
  eval::FoldMode mode = eval::FoldMode::stratified;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  Fractions split;
  PreprocessConfig preprocess;
  SegmentationConfig segmentation;
  EncoderConfig encoder;
  SmoteConfig smote;
  svm::SvmParams svm;
  CvConfig cv;

  /// Equal when their JSON forms are equal.
  friend bool operator==(const PipelineConfig& a, const PipelineConfig& b);
};

/// Every stochastic stage draws from its own stream of the master seed.
enum class SeedStream : std::uint64_t {
  split = 1,
  segmenter_init,
  segmenter_shuffle,
  encoder_init,
  encoder_shuffle,
  smote,
  folds,
  svm,
  segmenter_subset,
};
std::uint64_t stage_seed(const PipelineConfig& cfg, SeedStream stream);
nlohmann::json stage_seeds(const PipelineConfig& cfg);

inline constexpr int kConfigVersion = 1;

/// Missing keys take their defaults; unknown keys, wrong types and invalid
/// values are collected into one ValidationError.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

/// The encoder's class weights in the manifest's class order.
std::vector<double> class_weight_vector(const EncoderConfig& enc, const std::vector<std::string>& class_names);

}  // namespace cxr::pipeline
