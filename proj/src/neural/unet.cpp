#include "cxr/neural/unet.hpp"

#include <algorithm>
#include <numeric>

#include "cxr/imaging/components.hpp"
#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"

namespace cxr::neural {

ArchSpec unet_arch(const UNetSpec& spec) {
  if (spec.depth == 0 || spec.base_channels == 0) throw ArgumentError("U-Net depth and width must be >= 1");
  const std::size_t factor = std::size_t{1} << (spec.depth - 1);
  if (spec.extent == 0 || spec.extent % factor != 0)
    throw ArgumentError("U-Net extent must be divisible by 2^(depth-1)");
  ArchSpec arch;
  arch.name = "unet";
  auto& L = arch.layers;
  auto double_conv = [&](std::size_t channels) {
    for (int k = 0; k < 2; ++k) {
      L.push_back(LayerSpec::conv(channels, 3, 1, 1));
      L.push_back(LayerSpec::of(LayerKind::relu));
    }
  };
  std::vector<std::size_t> skips;
  for (std::size_t level = 0; level < spec.depth; ++level) {
    double_conv(spec.base_channels << level);
    if (level + 1 < spec.depth) {
      skips.push_back(L.size() - 1);
      L.push_back(LayerSpec::maxpool(2, 2, 0));
    }
  }
  for (std::size_t level = spec.depth - 1; level-- > 0;) {
    L.push_back(LayerSpec::upconv(spec.base_channels << level, 2, 2));
    L.push_back(LayerSpec::concat_skip(skips[level]));
    double_conv(spec.base_channels << level);
  }
  L.push_back(LayerSpec::conv(1, 1, 1, 0));
  L.push_back(LayerSpec::of(LayerKind::sigmoid));
  return arch;
}

Network<float> build_unet(const UNetSpec& spec, std::uint64_t seed) {
  return Network<float>::build(unet_arch(spec), {1, spec.extent, spec.extent}, seed);
}

TrainConfig segmenter_defaults() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 20;
  cfg.learning_rate = 0.02;
  cfg.momentum = 0.9;
  cfg.class_weights = {};
  return cfg;
}

SegmentationSet make_segmentation_set(std::span<const imaging::GrayImage> images, std::span<const imaging::BitMask> masks) {
  if (images.size() != masks.size()) throw ArgumentError("one mask per image required");
  SegmentationSet set;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    const auto& m = masks[i];
    if (img.width() != m.width() || img.height() != m.height())
      throw ArgumentError("mask " + std::to_string(i) + " does not match its image extent");
    set.images.push_back(image_tensor(img, 1));
    Tensor<float> t({1, m.height(), m.width()});
    for (std::size_t k = 0; k < m.size(); ++k) t[k] = m[k] ? 1.0f : 0.0f;
    set.masks.push_back(std::move(t));
  }
  return set;
}

namespace {

Tensor<float> as_batch(const Tensor<float>& t) {
  Shape s{1};
  s.insert(s.end(), t.shape().begin(), t.shape().end());
  return Tensor<float>(std::move(s), std::vector<float>(t.values().begin(), t.values().end()));
}

double evaluate_pixels(const Network<float>& net, const SegmentationSet& set, double& loss) {
  std::vector<double> losses(set.size()), hits(set.size());
  parallel_for(set.size(), [&](std::size_t j) {
    const auto pass = forward(net, as_batch(set.images[j]));
    const auto target = as_batch(set.masks[j]);
    losses[j] = bce_with_logits(pass.output(), target).loss;
    double h = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k) h += (pass.output()[k] >= 0.0f) == (target[k] > 0.5f);
    hits[j] = h / static_cast<double>(target.size());
  });
  loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(set.size());
  return std::accumulate(hits.begin(), hits.end(), 0.0) / static_cast<double>(set.size());
}

}  // namespace

std::vector<EpochRecord> train_segmenter(Network<float>& net, const SegmentationSet& train, const TrainConfig& cfg,
                                         const SegmentationSet& val) {
  if (train.size() == 0) throw ArgumentError("segmentation training set is empty");
  if (train.images.size() != train.masks.size()) throw ArgumentError("one mask per image required");
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be >= 1");
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.images[i].shape() != train.masks[i].shape() || train.images[i].shape() != net.input_shape())
      throw ArgumentError("segmentation sample " + std::to_string(i) + " does not match the network extent");

  std::vector<EpochRecord> history;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.shuffle_seed);
  const double pixels = static_cast<double>(element_count(net.input_shape()));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, hit_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::vector<const Tensor<float>*> inputs;
      for (std::size_t k = start; k < end; ++k) inputs.push_back(&train.images[order[k]]);
      const double normalizer = pixels * static_cast<double>(end - start);
      std::vector<double> losses;
      std::vector<Tensor<float>> logits;
      const auto grads = minibatch_gradients(
          net, inputs,
          [&](std::size_t j, const Tensor<float>& z) {
            return bce_with_logits(z, as_batch(train.masks[order[start + j]]), normalizer);
          },
          &losses, &logits);
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        loss_sum += losses[j] * normalizer / pixels;
        const auto& target = train.masks[order[start + j]];
        double h = 0.0;
        for (std::size_t k = 0; k < target.size(); ++k) h += (logits[j][k] >= 0.0f) == (target[k] > 0.5f);
        hit_sum += h / pixels;
      }
      sgd_momentum_step(net, grads, cfg.learning_rate, cfg.momentum);
    }
    EpochRecord rec{epoch + 1, loss_sum / static_cast<double>(train.size()), hit_sum / static_cast<double>(train.size()),
                    0.0, 0.0};
    if (val.size() > 0) rec.val_accuracy = evaluate_pixels(net, val, rec.val_loss);
    history.push_back(rec);
  }
  return history;
}

imaging::BitMask predict_raw_mask(const Network<float>& net, const imaging::GrayImage& image) {
  if (Shape{1, image.height(), image.width()} != net.input_shape())
    throw ArgumentError("image extent does not match the segmenter input");
  const auto pass = forward(net, as_batch(image_tensor(image, 1)));
  imaging::BitMask mask(image.width(), image.height());
  // sigmoid(z) >= 0.5 exactly when z >= 0.
  for (std::size_t k = 0; k < mask.size(); ++k) mask.set(k, pass.output()[k] >= 0.0f);
  return mask;
}

imaging::BitMask predict_mask(const Network<float>& net, const imaging::GrayImage& image) {
  return imaging::keep_largest_components(predict_raw_mask(net, image), 2);
}

double pixel_accuracy(const imaging::BitMask& predicted, const imaging::BitMask& truth) {
  if (predicted.size() != truth.size() || predicted.size() == 0) throw ArgumentError("mask sizes differ");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) hits += predicted[k] == truth[k];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace cxr::neural
