#include "cxr/neural/train.hpp"

#include <algorithm>
#include <numeric>

#include "cxr/parallel.hpp"
#include "cxr/rng.hpp"

namespace cxr::neural {
namespace {

Tensor<float> single_batch(const Tensor<float>& sample) {
  Shape s{1};
  s.insert(s.end(), sample.shape().begin(), sample.shape().end());
  return Tensor<float>(std::move(s), std::vector<float>(sample.values().begin(), sample.values().end()));
}

void check_labeled(const LabeledImages& data, const char* which) {
  if (data.images.empty()) throw ArgumentError(std::string(which) + " split is empty");
  if (data.images.size() != data.labels.size()) throw ArgumentError(std::string(which) + " split has mismatched labels");
}

}  // namespace

Tensor<float> image_tensor(const imaging::GrayImage& img, std::size_t channels) {
  Tensor<float> t({channels, img.height(), img.width()});
  const auto px = img.pixels();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t k = 0; k < px.size(); ++k) t[c * px.size() + k] = static_cast<float>(px[k]) / 255.0f;
  return t;
}

Gradients<float> minibatch_gradients(const Network<float>& net, std::span<const Tensor<float>* const> inputs,
                                     const SampleLoss& loss_fn, std::vector<double>* losses,
                                     std::vector<Tensor<float>>* logits) {
  const std::size_t n = inputs.size();
  std::vector<Gradients<float>> per_sample(n);
  std::vector<double> sample_loss(n);
  std::vector<Tensor<float>> sample_logits(logits ? n : 0);
  parallel_for(n, [&](std::size_t j) {
    const auto pass = forward(net, single_batch(*inputs[j]));
    auto loss = loss_fn(j, pass.output());
    sample_loss[j] = loss.loss;
    per_sample[j] = backward(net, pass, loss.grad);
    per_sample[j].input = Tensor<float>();
    if (logits) sample_logits[j] = pass.output();
  });
  Gradients<float> total = std::move(per_sample.front());
  for (std::size_t j = 1; j < n; ++j) total.accumulate(per_sample[j]);
  if (losses) *losses = std::move(sample_loss);
  if (logits) *logits = std::move(sample_logits);
  return total;
}

Evaluation evaluate_classifier(const Network<float>& net, const LabeledImages& data, std::span<const double> class_weights) {
  check_labeled(data, "evaluation");
  std::vector<double> weighted(data.size());
  std::vector<int> correct(data.size());
  parallel_for(data.size(), [&](std::size_t j) {
    const auto pass = forward(net, single_batch(data.images[j]));
    const std::size_t label = data.labels[j];
    const auto r = weighted_ce_loss(pass.output(), std::span(&label, 1), class_weights, 1.0);
    weighted[j] = r.loss;
    correct[j] = argmax(pass.output().values()) == label;
  });
  double num = 0.0, den = 0.0, hits = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    num += weighted[j];
    den += class_weights[data.labels[j]];
    hits += correct[j];
  }
  return {num / den, hits / static_cast<double>(data.size())};
}

std::vector<EpochRecord> train_classifier(Network<float>& net, const LabeledImages& train, const LabeledImages& val,
                                          const TrainConfig& cfg) {
  check_labeled(train, "training");
  check_labeled(val, "validation");
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be >= 1");
  const std::size_t classes = net.output_shapes()[net.logits_layer()].at(0);
  if (cfg.class_weights.size() != classes) throw ArgumentError("one class weight per output class required");

  std::vector<EpochRecord> history;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.shuffle_seed);
  const std::span<const double> weights(cfg.class_weights);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0, weight_sum = 0.0, hits = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::vector<const Tensor<float>*> inputs;
      std::vector<std::size_t> labels;
      double normalizer = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        inputs.push_back(&train.images[order[k]]);
        labels.push_back(train.labels[order[k]]);
        normalizer += weights[labels.back()];
      }
      std::vector<double> losses;
      std::vector<Tensor<float>> logits;
      const auto grads = minibatch_gradients(
          net, inputs,
          [&](std::size_t j, const Tensor<float>& z) {
            return weighted_ce_loss(z, std::span(&labels[j], 1), weights, normalizer);
          },
          &losses, &logits);
      for (std::size_t j = 0; j < labels.size(); ++j) {
        loss_sum += losses[j] * normalizer;
        weight_sum += weights[labels[j]];
        hits += argmax(logits[j].values()) == labels[j];
      }
      sgd_momentum_step(net, grads, cfg.learning_rate, cfg.momentum);
    }
    const Evaluation v = evaluate_classifier(net, val, weights);
    history.push_back({epoch + 1, loss_sum / weight_sum, hits / static_cast<double>(train.size()), v.loss, v.accuracy});
  }
  return history;
}

std::vector<std::vector<float>> classify(const Network<float>& net, std::span<const Tensor<float>> images) {
  std::vector<std::vector<float>> out(images.size());
  parallel_for(images.size(), [&](std::size_t j) {
    const auto p = predict(net, single_batch(images[j]));
    out[j].assign(p.values().begin(), p.values().end());
  });
  return out;
}

std::vector<float> encode(const Network<float>& net, const Tensor<float>& image) {
  if (!net.arch().feature_layer_index) throw ArgumentError("network has no feature layer");
  const auto pass = forward_to(net, single_batch(image), *net.arch().feature_layer_index);
  return {pass.output().values().begin(), pass.output().values().end()};
}

std::vector<std::vector<float>> encode_all(const Network<float>& net, std::span<const Tensor<float>> images) {
  std::vector<std::vector<float>> out(images.size());
  parallel_for(images.size(), [&](std::size_t j) { out[j] = encode(net, images[j]); });
  return out;
}

}  // namespace cxr::neural
