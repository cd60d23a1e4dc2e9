#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cxr/imaging/image.hpp"
#include "cxr/neural/network.hpp"
#include "cxr/neural/train.hpp"

namespace cxr::neural {

/// Encoder-decoder segmenter. `depth` counts resolution levels; every level
/// but the deepest contributes one skip concatenation to the decoder.
struct UNetSpec {
  std::size_t depth = 3;
  std::size_t base_channels = 16;
  std::size_t extent = 64;
};

/// Two same-padded 3x3 conv+ReLU per level, 2x2/2 max pooling down, 2x2/2
/// transposed convolutions up, a 1x1 conv to one channel and a sigmoid.
ArchSpec unet_arch(const UNetSpec& spec);

Network<float> build_unet(const UNetSpec& spec, std::uint64_t seed);

/// Defaults for segmenter training: batch 4, 20 epochs, lr 0.02, momentum 0.9.
TrainConfig segmenter_defaults();

struct SegmentationSet {
  std::vector<Tensor<float>> images;  ///< [1,H,W] each
  std::vector<Tensor<float>> masks;   ///< [1,H,W] each, values 0 or 1
  std::size_t size() const { return images.size(); }
};

/// Throws ArgumentError if any image and mask differ in extent.
SegmentationSet make_segmentation_set(std::span<const imaging::GrayImage> images, std::span<const imaging::BitMask> masks);

/// Per-pixel binary cross-entropy on the sigmoid output. Accuracy fields hold
/// pixel accuracy; validation fields are zero when `val` is empty.
std::vector<EpochRecord> train_segmenter(Network<float>& net, const SegmentationSet& train, const TrainConfig& cfg,
                                         const SegmentationSet& val = {});

/// Sigmoid output thresholded at 0.5, without post-processing.
imaging::BitMask predict_raw_mask(const Network<float>& net, const imaging::GrayImage& image);

/// predict_raw_mask followed by keeping the two largest 4-connected components.
imaging::BitMask predict_mask(const Network<float>& net, const imaging::GrayImage& image);

double pixel_accuracy(const imaging::BitMask& predicted, const imaging::BitMask& truth);

}  // namespace cxr::neural
