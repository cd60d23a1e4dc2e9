#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cxr/imaging/image.hpp"
#include "cxr/neural/loss.hpp"
#include "cxr/neural/network.hpp"

namespace cxr::neural {

/// Optimizer and schedule settings. Defaults are the classifier settings:
/// batch 32, 30 epochs, lr 1e-4, momentum 0.9, class weights 10/8/9.
struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double learning_rate = 1e-4;
  double momentum = 0.9;
  std::vector<double> class_weights{10.0, 8.0, 9.0};
  std::uint64_t shuffle_seed = 0;
};

/// Per-sample tensors shaped like the network input, with class labels.
struct LabeledImages {
  std::vector<Tensor<float>> images;
  std::vector<std::size_t> labels;
  std::size_t size() const { return images.size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Intensities scaled to [0,1], replicated over `channels`. Result is [C,H,W].
Tensor<float> image_tensor(const imaging::GrayImage& img, std::size_t channels);

/// Sum of per-sample gradients of one minibatch, reduced in sample order so the
/// result does not depend on how many threads computed it. `loss_fn` maps a
/// sample position and its [1, ...] logits to that sample's loss terms; the
/// returned losses are written to `losses` when non-null and the logits to
/// `logits` when non-null.
using SampleLoss = std::function<LossResult<float>(std::size_t, const Tensor<float>&)>;
Gradients<float> minibatch_gradients(const Network<float>& net, std::span<const Tensor<float>* const> inputs,
                                     const SampleLoss& loss_fn, std::vector<double>* losses,
                                     std::vector<Tensor<float>>* logits);

/// Minibatch SGD with momentum, reshuffling the training order each epoch from
/// cfg.shuffle_seed. The weighted mean loss and accuracy over each epoch's
/// training passes are recorded alongside a validation pass.
std::vector<EpochRecord> train_classifier(Network<float>& net, const LabeledImages& train, const LabeledImages& val,
                                          const TrainConfig& cfg);

Evaluation evaluate_classifier(const Network<float>& net, const LabeledImages& data, std::span<const double> class_weights);

/// Class scores for each sample (softmax output).
std::vector<std::vector<float>> classify(const Network<float>& net, std::span<const Tensor<float>> images);

/// Activations of the network's feature layer for one [C,H,W] image.
std::vector<float> encode(const Network<float>& net, const Tensor<float>& image);

/// encode() over many images, in parallel.
std::vector<std::vector<float>> encode_all(const Network<float>& net, std::span<const Tensor<float>> images);

}  // namespace cxr::neural
