#include <gtest/gtest.h>

#include <cmath>

#include "cxr/imaging/image.hpp"
#include "cxr/neural/arch.hpp"
#include "cxr/neural/train.hpp"
#include "cxr/neural/unet.hpp"
#include "cxr/rng.hpp"

using namespace cxr::neural;
using cxr::imaging::BitMask;
using cxr::imaging::GrayImage;

namespace {

LabeledImages random_patterns(std::size_t per_class, std::uint64_t seed) {
  cxr::Rng rng(seed);
  LabeledImages out;
  for (std::size_t i = 0; i < 3 * per_class; ++i) {
    Tensor<float> t({1, 32, 32});
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform());
    out.images.push_back(std::move(t));
    out.labels.push_back(i % 3);
  }
  return out;
}

TrainConfig fast_config() {
  TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.epochs = 40;
  cfg.learning_rate = 2e-3;
  cfg.momentum = 0.9;
  cfg.class_weights = {1.0, 1.0, 1.0};
  cfg.shuffle_seed = 11;
  return cfg;
}

}  // namespace

TEST(Train, DefaultsMatchClassifierSettings) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.batch_size, 32u);
  EXPECT_EQ(cfg.epochs, 30u);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
  EXPECT_DOUBLE_EQ(cfg.momentum, 0.9);
  EXPECT_EQ(cfg.class_weights, (std::vector<double>{10.0, 8.0, 9.0}));
}

TEST(Train, MemorizesTinySet) {
  auto net = Network<float>::build(mini(), {1, 32, 32}, 3);
  const auto data = random_patterns(2, 1);
  const auto history = train_classifier(net, data, data, fast_config());
  ASSERT_EQ(history.size(), 40u);
  EXPECT_DOUBLE_EQ(history.back().val_accuracy, 1.0);
  EXPECT_LT(history.back().train_loss, history.front().train_loss);
}

TEST(Train, ZeroEpochsLeavesNetworkUntouched) {
  auto net = Network<float>::build(mini(), {1, 32, 32}, 3);
  const auto before = net.parameters();
  auto cfg = fast_config();
  cfg.epochs = 0;
  const auto data = random_patterns(1, 2);
  EXPECT_TRUE(train_classifier(net, data, data, cfg).empty());
  EXPECT_EQ(net.parameters(), before);
}

TEST(Train, RepeatedRunsAreIdentical) {
  const auto data = random_patterns(2, 4);
  auto cfg = fast_config();
  cfg.epochs = 3;
  cfg.batch_size = 4;
  auto a = Network<float>::build(mini(), {1, 32, 32}, 9);
  auto b = Network<float>::build(mini(), {1, 32, 32}, 9);
  const auto ha = train_classifier(a, data, data, cfg);
  const auto hb = train_classifier(b, data, data, cfg);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(a.parameters(), b.parameters());
}

TEST(Train, SmallStepDecreasesBatchLoss) {
  const auto data = random_patterns(2, 5);
  auto net = Network<float>::build(mini(), {1, 32, 32}, 5);
  const std::vector<double> w{10.0, 8.0, 9.0};
  const double before = evaluate_classifier(net, data, w).loss;
  TrainConfig cfg;
  cfg.batch_size = data.size();
  cfg.epochs = 1;
  cfg.learning_rate = 1e-5;
  train_classifier(net, data, data, cfg);
  EXPECT_LT(evaluate_classifier(net, data, w).loss, before);
}

TEST(Train, RejectsMalformedInput) {
  auto net = Network<float>::build(mini(), {1, 32, 32}, 5);
  auto data = random_patterns(1, 6);
  data.labels[0] = 3;
  EXPECT_THROW(train_classifier(net, data, data, fast_config()), cxr::ArgumentError);
  auto cfg = fast_config();
  cfg.batch_size = 0;
  EXPECT_THROW(train_classifier(net, random_patterns(1, 6), {}, cfg), cxr::ArgumentError);
}

TEST(Train, ClassifyProducesDistributions) {
  const auto net = Network<float>::build(mini(), {1, 32, 32}, 5);
  const auto data = random_patterns(1, 7);
  for (const auto& p : classify(net, data.images)) {
    ASSERT_EQ(p.size(), 3u);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0f, 1e-5);
  }
}

TEST(Train, EncodeAllMatchesEncode) {
  const auto net = Network<float>::build(mini(), {1, 32, 32}, 5);
  const auto data = random_patterns(2, 8);
  const auto all = encode_all(net, data.images);
  ASSERT_EQ(all.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(all[i], encode(net, data.images[i]));
}

TEST(Train, ImageTensorScalesAndReplicates) {
  GrayImage img(2, 1);
  img.at(0, 0) = 0;
  img.at(1, 0) = 255;
  const auto t = image_tensor(img, 3);
  EXPECT_EQ(t.shape(), (Shape{3, 1, 2}));
  EXPECT_EQ(std::vector<float>(t.values().begin(), t.values().end()), (std::vector<float>{0, 1, 0, 1, 0, 1}));
}

namespace {

// Two bright ellipses on a darker noisy background; the mask is their union.
void ellipse_pair(std::size_t n, cxr::Rng& rng, GrayImage& img, BitMask& mask) {
  img = GrayImage(n, n);
  mask = BitMask(n, n);
  const double c = static_cast<double>(n);
  const double jx = rng.uniform(-0.04, 0.04) * c, jy = rng.uniform(-0.04, 0.04) * c;
  const double rx = rng.uniform(0.13, 0.18) * c, ry = rng.uniform(0.28, 0.36) * c;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      bool inside = false;
      for (double cx : {0.3 * c, 0.7 * c}) {
        const double dx = (static_cast<double>(x) - cx - jx) / rx, dy = (static_cast<double>(y) - 0.5 * c - jy) / ry;
        inside |= dx * dx + dy * dy <= 1.0;
      }
      mask.set(x, y, inside);
      const double base = inside ? 170.0 : 70.0;
      img.at(x, y) = cxr::imaging::round_to_pixel(base + rng.normal(0.0, 20.0));
    }
}

}  // namespace

TEST(Segmenter, LearnsEllipsesAndGeneralizes) {
  cxr::Rng rng(21);
  std::vector<GrayImage> imgs(24);
  std::vector<BitMask> masks(24);
  for (std::size_t i = 0; i < imgs.size(); ++i) ellipse_pair(32, rng, imgs[i], masks[i]);
  const auto train = make_segmentation_set(std::span(imgs).first(16), std::span(masks).first(16));
  auto net = build_unet({3, 8, 32}, 4);
  auto cfg = segmenter_defaults();
  cfg.shuffle_seed = 2;
  const auto history = train_segmenter(net, train, cfg);
  ASSERT_EQ(history.size(), cfg.epochs);
  double acc = 0.0;
  for (std::size_t i = 16; i < 24; ++i) acc += pixel_accuracy(predict_mask(net, imgs[i]), masks[i]);
  EXPECT_GE(acc / 8.0, 0.95);
}

TEST(Segmenter, NegativeOutputGivesEmptyMask) {
  auto net = build_unet({2, 4, 16}, 1);
  auto& params = net.parameters();
  params[params.size() - 2].fill(0.0f);
  params.back().fill(-5.0f);
  GrayImage img(16, 16);
  for (std::size_t k = 0; k < img.size(); ++k) img.pixels()[k] = static_cast<std::uint8_t>(k);
  EXPECT_EQ(predict_mask(net, img).count(), 0u);
}

TEST(Segmenter, ExtentMismatchIsRejected) {
  std::vector<GrayImage> imgs{GrayImage(16, 16)};
  std::vector<BitMask> masks{BitMask(16, 8)};
  EXPECT_THROW(make_segmentation_set(imgs, masks), cxr::ArgumentError);
  const auto net = build_unet({2, 4, 16}, 1);
  EXPECT_THROW(predict_mask(net, GrayImage(8, 8)), cxr::ArgumentError);
}

TEST(Segmenter, SkipsAndShapes) {
  const auto arch = unet_arch({3, 16, 64});
  std::size_t skips = 0;
  for (const auto& l : arch.layers) skips += l.kind == LayerKind::concat_skip;
  EXPECT_EQ(skips, 2u);
  const auto shapes = infer_shapes(arch, {1, 64, 64});
  EXPECT_EQ(shapes.back(), (Shape{1, 64, 64}));
  EXPECT_THROW(unet_arch({3, 16, 30}), cxr::ArgumentError);
}
