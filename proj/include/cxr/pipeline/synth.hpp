#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cxr/imaging/image.hpp"
#include "cxr/pipeline/manifest.hpp"

namespace cxr::pipeline {

/// Class order of generated data, matching the default class weights.
inline const std::vector<std::string> kSynthClasses{"COVID-19", "Normal", "Pneumonia"};

/// Thorax pixels outside the lungs never exceed this; wires are drawn at 230
/// and above.
inline constexpr std::uint8_t kBackgroundCeiling = 150;

enum class Finding { peripheral_haze, clean, consolidation };

/// Finding drawn for each entry of kSynthClasses.
Finding finding_for_class(std::size_t class_idx);

struct SynthSample {
  imaging::GrayImage image;
  imaging::BitMask mask;
  bool wire = false;
};

/// One radiograph-like raster: two elliptical lung fields on a darker thorax,
/// the class finding inside the lungs only, and with probability
/// `wire_probability` a bright polyline outside them. Requires extent >= 32.
SynthSample synth_sample(Finding finding, std::size_t extent, double wire_probability, std::uint64_t seed);

/// Wire probability per class: confound_rate for COVID-19, a tenth of it
/// otherwise.
double wire_probability(std::size_t class_idx, double confound_rate);

struct SynthParams {
  std::vector<std::size_t> counts{470, 1000, 1000};  ///< per kSynthClasses entry
  std::size_t extent = 64;
  std::uint64_t seed = 0;
  double confound_rate = 0.3;
};

/// Writes images/<id>.pgm, masks/<id>.pgm and manifest.json under `out_dir`
/// and returns the manifest. Image i is generated from derive_seed(seed, i),
/// so the set does not depend on thread count.
DatasetManifest synth_generate(const SynthParams& params, const std::filesystem::path& out_dir);

}  // namespace cxr::pipeline
