#include "cxr/neural/network.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "cxr/rng.hpp"

namespace cxr::neural {
namespace {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

struct Geometry {
  std::size_t channels, height, width, kernel, stride, padding, out_h, out_w;
};

// col[(c*k + ky)*k + kx][oy*out_w + ox] = x[c][oy*s - p + ky][ox*s - p + kx], zero outside.
template <class T>
void im2col(const T* x, const Geometry& g, T* col) {
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel; ++ky)
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = x + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T{0} : src[ix];
          }
        }
      }
}

// Adjoint of im2col: accumulates columns back into x.
template <class T>
void col2im(const T* col, const Geometry& g, T* x) {
  const std::size_t plane = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel; ++ky)
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          T* dst = x + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix >= 0 && ix < static_cast<long>(g.width)) dst[ix] += src[ox];
          }
        }
      }
}

Geometry conv_geometry(const LayerSpec& l, const Shape& in, const Shape& out) {
  return {in[0], in[1], in[2], l.kernel, l.stride, l.padding, out[1], out[2]};
}

// A transposed convolution is the adjoint of a convolution from its output
// geometry back to its input geometry.
Geometry upconv_geometry(const LayerSpec& l, const Shape& in, const Shape& out) {
  return {out[0], out[1], out[2], l.kernel, l.stride, 0, in[1], in[2]};
}

Shape batch_shape(std::size_t batch, const Shape& sample) {
  Shape s{batch};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

template <class T>
Network<T> Network<T>::build(const ArchSpec& arch, const Shape& input_shape, std::uint64_t seed) {
  Network net;
  net.arch_ = arch;
  net.input_shape_ = input_shape;
  net.shapes_ = infer_shapes(arch, input_shape);
  net.seed_ = seed;
  net.layer_params_.resize(arch.layers.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (!l.has_parameters()) continue;
    const Shape& in = i == 0 ? input_shape : net.shapes_[i - 1];
    Shape wshape;
    std::size_t bias = 0;
    double fan_in = 1.0;
    switch (l.kind) {
      case LayerKind::conv:
        wshape = {l.channels, in[0], l.kernel, l.kernel};
        bias = l.channels;
        fan_in = static_cast<double>(in[0] * l.kernel * l.kernel);
        break;
      case LayerKind::upconv:
        wshape = {in[0], l.channels, l.kernel, l.kernel};
        bias = l.channels;
        fan_in = std::max(1.0, static_cast<double>(in[0] * l.kernel * l.kernel) / static_cast<double>(l.stride * l.stride));
        break;
      case LayerKind::fc:
        wshape = {l.units, in[0]};
        bias = l.units;
        fan_in = static_cast<double>(in[0]);
        break;
      default:
        break;
    }
    Tensor<T> w(wshape);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : w.values()) v = static_cast<T>(rng.normal() * stddev);
    net.layer_params_[i] = std::pair{net.params_.size(), net.params_.size() + 1};
    net.params_.push_back(std::move(w));
    net.params_.emplace_back(Shape{bias});
    net.param_info_.push_back({i, "weight"});
    net.param_info_.push_back({i, "bias"});
  }
  return net;
}

template <class T>
std::optional<std::pair<std::size_t, std::size_t>> Network<T>::layer_parameters(std::size_t layer) const {
  return layer_params_.at(layer);
}

template <class T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <class T>
std::size_t Network<T>::logits_layer() const {
  if (arch_.layers.empty()) throw ArgumentError("empty network");
  const LayerKind last = arch_.layers.back().kind;
  const bool head = last == LayerKind::softmax || last == LayerKind::sigmoid;
  if (head && arch_.layers.size() < 2) throw ArgumentError("network has only an output head");
  return arch_.layers.size() - (head ? 2 : 1);
}

template <class T>
template <class U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.arch_ = arch_;
  out.input_shape_ = input_shape_;
  out.shapes_ = shapes_;
  out.param_info_ = param_info_;
  out.layer_params_ = layer_params_;
  out.seed_ = seed_;
  for (const auto& p : params_) out.params_.push_back(p.template cast<U>());
  for (const auto& v : velocity_) out.velocity_.push_back(v.template cast<U>());
  return out;
}

template <class T>
void Gradients<T>::accumulate(const Gradients& other) {
  if (parameters.empty()) {
    *this = other;
    return;
  }
  for (std::size_t p = 0; p < parameters.size(); ++p) {
    auto dst = parameters[p].values();
    const auto src = other.parameters[p].values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

template <class T>
void Gradients<T>::scale(T factor) {
  for (auto& p : parameters)
    for (auto& v : p.values()) v *= factor;
}

template <class T>
ForwardPass<T> forward(const Network<T>& net, const Tensor<T>& batch) {
  return forward_to(net, batch, net.logits_layer());
}

template <class T>
ForwardPass<T> forward_to(const Network<T>& net, const Tensor<T>& batch, std::size_t last_layer) {
  const auto& layers = net.arch().layers;
  if (last_layer >= layers.size()) throw ArgumentError("forward target layer out of range");
  if (batch.rank() != net.input_shape().size() + 1 ||
      !std::equal(net.input_shape().begin(), net.input_shape().end(), batch.shape().begin() + 1))
    throw ArgumentError("batch shape " + to_string(batch.shape()) + " does not match network input " +
                        to_string(net.input_shape()));
  const std::size_t B = batch.dim(0);
  ForwardPass<T> pass;
  pass.input = batch;
  pass.outputs.resize(last_layer + 1);
  pass.argmax.resize(last_layer + 1);
  pass.last_layer = last_layer;
  pass.network = &net;
  pass.network_version = net.version();

  AlignedVector<T> col;
  for (std::size_t i = 0; i <= last_layer; ++i) {
    const LayerSpec& l = layers[i];
    const Tensor<T>& in = i == 0 ? pass.input : pass.outputs[i - 1];
    const Shape& in_shape = i == 0 ? net.input_shape() : net.output_shapes()[i - 1];
    const Shape& out_shape = net.output_shapes()[i];
    Tensor<T> out(batch_shape(B, out_shape));
    const std::size_t in_n = element_count(in_shape);
    const std::size_t out_n = element_count(out_shape);

    switch (l.kind) {
      case LayerKind::conv: {
        const auto [wi, bi] = *net.layer_parameters(i);
        const Geometry g = conv_geometry(l, in_shape, out_shape);
        const std::size_t K = g.channels * g.kernel * g.kernel;
        const std::size_t P = g.out_h * g.out_w;
        col.resize(K * P);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(l.channels), static_cast<long>(K));
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(net.parameters()[bi].data(), static_cast<long>(l.channels));
        for (std::size_t b = 0; b < B; ++b) {
          im2col(in.data() + b * in_n, g, col.data());
          MapR<T> Y(out.data() + b * out_n, static_cast<long>(l.channels), static_cast<long>(P));
          Y.noalias() = W * CMapR<T>(col.data(), static_cast<long>(K), static_cast<long>(P));
          Y.colwise() += bias;
        }
        break;
      }
      case LayerKind::upconv: {
        const auto [wi, bi] = *net.layer_parameters(i);
        const Geometry g = upconv_geometry(l, in_shape, out_shape);
        const std::size_t Cin = in_shape[0];
        const std::size_t K = g.channels * g.kernel * g.kernel;
        const std::size_t P = in_shape[1] * in_shape[2];
        col.resize(K * P);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(Cin), static_cast<long>(K));
        const T* bias = net.parameters()[bi].data();
        const std::size_t plane = out_shape[1] * out_shape[2];
        for (std::size_t b = 0; b < B; ++b) {
          MapR<T> C(col.data(), static_cast<long>(K), static_cast<long>(P));
          C.noalias() = W.transpose() * CMapR<T>(in.data() + b * in_n, static_cast<long>(Cin), static_cast<long>(P));
          T* y = out.data() + b * out_n;
          for (std::size_t c = 0; c < g.channels; ++c) std::fill(y + c * plane, y + (c + 1) * plane, bias[c]);
          col2im(col.data(), g, y);
        }
        break;
      }
      case LayerKind::maxpool: {
        const Geometry g = conv_geometry(l, in_shape, out_shape);
        auto& route = pass.argmax[i];
        route.resize(B * out_n);
        for (std::size_t b = 0; b < B; ++b) {
          const T* x = in.data() + b * in_n;
          T* y = out.data() + b * out_n;
          for (std::size_t c = 0; c < g.channels; ++c)
            for (std::size_t oy = 0; oy < g.out_h; ++oy)
              for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_index = 0;
                bool found = false;
                for (std::size_t ky = 0; ky < g.kernel; ++ky) {
                  const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                  if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                  for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                    const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                    if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                    const std::size_t idx = (c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix);
                    if (!found || x[idx] > best) {
                      best = x[idx];
                      best_index = idx;
                      found = true;
                    }
                  }
                }
                const std::size_t o = (c * g.out_h + oy) * g.out_w + ox;
                y[o] = best;
                route[b * out_n + o] = static_cast<std::uint32_t>(best_index);
              }
        }
        break;
      }
      case LayerKind::relu:
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = in[k] > T{0} ? in[k] : T{0};
        break;
      case LayerKind::sigmoid:
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = T{1} / (T{1} + std::exp(-in[k]));
        break;
      case LayerKind::flatten:
        std::copy(in.values().begin(), in.values().end(), out.values().begin());
        break;
      case LayerKind::fc: {
        const auto [wi, bi] = *net.layer_parameters(i);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(l.units), static_cast<long>(in_n));
        Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(net.parameters()[bi].data(), static_cast<long>(l.units));
        MapR<T> Y(out.data(), static_cast<long>(B), static_cast<long>(l.units));
        Y.noalias() = CMapR<T>(in.data(), static_cast<long>(B), static_cast<long>(in_n)) * W.transpose();
        Y.rowwise() += bias;
        break;
      }
      case LayerKind::softmax:
        for (std::size_t b = 0; b < B; ++b) {
          const T* x = in.data() + b * in_n;
          T* y = out.data() + b * out_n;
          const T mx = *std::max_element(x, x + in_n);
          T sum{0};
          for (std::size_t k = 0; k < in_n; ++k) sum += (y[k] = std::exp(x[k] - mx));
          for (std::size_t k = 0; k < in_n; ++k) y[k] /= sum;
        }
        break;
      case LayerKind::concat_skip: {
        const Tensor<T>& skip = pass.outputs[l.skip_source];
        const std::size_t skip_n = element_count(net.output_shapes()[l.skip_source]);
        for (std::size_t b = 0; b < B; ++b) {
          T* y = out.data() + b * out_n;
          std::copy(in.data() + b * in_n, in.data() + (b + 1) * in_n, y);
          std::copy(skip.data() + b * skip_n, skip.data() + (b + 1) * skip_n, y + in_n);
        }
        break;
      }
    }
    pass.outputs[i] = std::move(out);
  }
  return pass;
}

template <class T>
Gradients<T> backward(const Network<T>& net, const ForwardPass<T>& pass, const Tensor<T>& grad_output) {
  if (pass.network != &net || pass.network_version != net.version())
    throw ContractError("forward cache is stale: the network changed since the forward call");
  if (grad_output.shape() != pass.output().shape())
    throw ArgumentError("gradient shape " + to_string(grad_output.shape()) + " does not match output " +
                        to_string(pass.output().shape()));
  const auto& layers = net.arch().layers;
  const std::size_t B = pass.input.dim(0);
  Gradients<T> grads;
  for (const auto& p : net.parameters()) grads.parameters.emplace_back(p.shape());
  grads.input = Tensor<T>(pass.input.shape());

  std::vector<Tensor<T>> dout(pass.last_layer + 1);
  dout[pass.last_layer] = grad_output;
  AlignedVector<T> col, dcol;

  for (std::size_t i = pass.last_layer + 1; i-- > 0;) {
    if (dout[i].empty()) continue;
    const LayerSpec& l = layers[i];
    const Tensor<T>& in = i == 0 ? pass.input : pass.outputs[i - 1];
    const Tensor<T>& out = pass.outputs[i];
    const Tensor<T>& dy = dout[i];
    const Shape& in_shape = i == 0 ? net.input_shape() : net.output_shapes()[i - 1];
    const Shape& out_shape = net.output_shapes()[i];
    const std::size_t in_n = element_count(in_shape);
    const std::size_t out_n = element_count(out_shape);
    Tensor<T>& dx = i == 0 ? grads.input : dout[i - 1];
    if (dx.empty()) dx = Tensor<T>(in.shape());

    switch (l.kind) {
      case LayerKind::conv: {
        const auto [wi, bi] = *net.layer_parameters(i);
        const Geometry g = conv_geometry(l, in_shape, out_shape);
        const std::size_t K = g.channels * g.kernel * g.kernel;
        const std::size_t P = g.out_h * g.out_w;
        col.resize(K * P);
        dcol.resize(K * P);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(l.channels), static_cast<long>(K));
        MapR<T> dW(grads.parameters[wi].data(), static_cast<long>(l.channels), static_cast<long>(K));
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads.parameters[bi].data(), static_cast<long>(l.channels));
        for (std::size_t b = 0; b < B; ++b) {
          im2col(in.data() + b * in_n, g, col.data());
          CMapR<T> dY(dy.data() + b * out_n, static_cast<long>(l.channels), static_cast<long>(P));
          CMapR<T> Col(col.data(), static_cast<long>(K), static_cast<long>(P));
          dW.noalias() += dY * Col.transpose();
          db += dY.rowwise().sum();
          MapR<T> dCol(dcol.data(), static_cast<long>(K), static_cast<long>(P));
          dCol.noalias() = W.transpose() * dY;
          col2im(dcol.data(), g, dx.data() + b * in_n);
        }
        break;
      }
      case LayerKind::upconv: {
        const auto [wi, bi] = *net.layer_parameters(i);
        const Geometry g = upconv_geometry(l, in_shape, out_shape);
        const std::size_t Cin = in_shape[0];
        const std::size_t K = g.channels * g.kernel * g.kernel;
        const std::size_t P = in_shape[1] * in_shape[2];
        const std::size_t plane = out_shape[1] * out_shape[2];
        dcol.resize(K * P);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(Cin), static_cast<long>(K));
        MapR<T> dW(grads.parameters[wi].data(), static_cast<long>(Cin), static_cast<long>(K));
        T* db = grads.parameters[bi].data();
        for (std::size_t b = 0; b < B; ++b) {
          const T* dyb = dy.data() + b * out_n;
          for (std::size_t c = 0; c < g.channels; ++c)
            for (std::size_t k = 0; k < plane; ++k) db[c] += dyb[c * plane + k];
          im2col(dyb, g, dcol.data());
          CMapR<T> dCol(dcol.data(), static_cast<long>(K), static_cast<long>(P));
          CMapR<T> X(in.data() + b * in_n, static_cast<long>(Cin), static_cast<long>(P));
          dW.noalias() += X * dCol.transpose();
          MapR<T> dX(dx.data() + b * in_n, static_cast<long>(Cin), static_cast<long>(P));
          dX.noalias() += W * dCol;
        }
        break;
      }
      case LayerKind::maxpool: {
        const auto& route = pass.argmax[i];
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t o = 0; o < out_n; ++o) dx[b * in_n + route[b * out_n + o]] += dy[b * out_n + o];
        break;
      }
      case LayerKind::relu:
        for (std::size_t k = 0; k < dy.size(); ++k)
          if (in[k] > T{0}) dx[k] += dy[k];
        break;
      case LayerKind::sigmoid:
        for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += dy[k] * out[k] * (T{1} - out[k]);
        break;
      case LayerKind::flatten:
        for (std::size_t k = 0; k < dy.size(); ++k) dx[k] += dy[k];
        break;
      case LayerKind::fc: {
        const auto [wi, bi] = *net.layer_parameters(i);
        CMapR<T> W(net.parameters()[wi].data(), static_cast<long>(l.units), static_cast<long>(in_n));
        CMapR<T> dY(dy.data(), static_cast<long>(B), static_cast<long>(l.units));
        CMapR<T> X(in.data(), static_cast<long>(B), static_cast<long>(in_n));
        MapR<T> dW(grads.parameters[wi].data(), static_cast<long>(l.units), static_cast<long>(in_n));
        dW.noalias() += dY.transpose() * X;
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(grads.parameters[bi].data(), static_cast<long>(l.units));
        db += dY.colwise().sum();
        MapR<T> dX(dx.data(), static_cast<long>(B), static_cast<long>(in_n));
        dX.noalias() += dY * W;
        break;
      }
      case LayerKind::softmax:
        for (std::size_t b = 0; b < B; ++b) {
          const T* y = out.data() + b * out_n;
          const T* g = dy.data() + b * out_n;
          T dot{0};
          for (std::size_t k = 0; k < out_n; ++k) dot += g[k] * y[k];
          for (std::size_t k = 0; k < out_n; ++k) dx[b * in_n + k] += y[k] * (g[k] - dot);
        }
        break;
      case LayerKind::concat_skip: {
        const std::size_t skip_n = element_count(net.output_shapes()[l.skip_source]);
        Tensor<T>& dskip = dout[l.skip_source];
        if (dskip.empty()) dskip = Tensor<T>(pass.outputs[l.skip_source].shape());
        for (std::size_t b = 0; b < B; ++b) {
          const T* g = dy.data() + b * out_n;
          for (std::size_t k = 0; k < in_n; ++k) dx[b * in_n + k] += g[k];
          for (std::size_t k = 0; k < skip_n; ++k) dskip[b * skip_n + k] += g[in_n + k];
        }
        break;
      }
    }
    if (i != pass.last_layer) dout[i] = Tensor<T>();
  }
  return grads;
}

template <class T>
Tensor<T> predict(const Network<T>& net, const Tensor<T>& batch) {
  auto pass = forward_to(net, batch, net.arch().layers.size() - 1);
  return std::move(pass.outputs.back());
}

template <class T>
void sgd_momentum_step(Network<T>& net, const Gradients<T>& grads, double lr, double momentum) {
  auto& params = net.parameters();
  auto& velocity = net.velocity();
  if (grads.parameters.size() != params.size()) throw ArgumentError("gradient count does not match parameters");
  if (velocity.empty())
    for (const auto& p : params) velocity.emplace_back(p.shape());
  const T mu = static_cast<T>(momentum);
  const T rate = static_cast<T>(lr);
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (grads.parameters[p].shape() != params[p].shape()) throw ArgumentError("gradient shape mismatch");
    auto theta = params[p].values();
    auto v = velocity[p].values();
    const auto g = grads.parameters[p].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      v[k] = mu * v[k] + g[k];
      theta[k] -= rate * v[k];
    }
  }
  net.mark_modified();
}

template <class T>
Tensor<T> stack(const std::vector<const Tensor<T>*>& samples) {
  if (samples.empty()) throw ArgumentError("cannot stack an empty sample list");
  const Shape& sample = samples.front()->shape();
  Tensor<T> out(batch_shape(samples.size(), sample));
  const std::size_t n = element_count(sample);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    if (samples[b]->shape() != sample) throw ArgumentError("stacked samples differ in shape");
    std::copy(samples[b]->values().begin(), samples[b]->values().end(), out.data() + b * n);
  }
  return out;
}

#define CXR_INSTANTIATE(T)                                                                           \
  template class Network<T>;                                                                         \
  template struct Gradients<T>;                                                                      \
  template ForwardPass<T> forward(const Network<T>&, const Tensor<T>&);                              \
  template ForwardPass<T> forward_to(const Network<T>&, const Tensor<T>&, std::size_t);              \
  template Gradients<T> backward(const Network<T>&, const ForwardPass<T>&, const Tensor<T>&);        \
  template Tensor<T> predict(const Network<T>&, const Tensor<T>&);                                   \
  template void sgd_momentum_step(Network<T>&, const Gradients<T>&, double, double);                 \
  template Tensor<T> stack(const std::vector<const Tensor<T>*>&);

CXR_INSTANTIATE(float)
CXR_INSTANTIATE(double)
#undef CXR_INSTANTIATE

template Network<double> Network<float>::cast<double>() const;
template Network<float> Network<double>::cast<float>() const;
template Network<float> Network<float>::cast<float>() const;

Network<float> build_network(std::string_view profile_name, const Shape& input_shape, std::uint64_t seed) {
  return Network<float>::build(profile(profile_name), input_shape, seed);
}

}  // namespace cxr::neural
