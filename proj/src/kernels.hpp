#pragma once

// Scalar-generic forward and reverse passes for a single input. Instantiated
// with double (gradients, VJPs) and Dual (Hessian-vector products).

#include <cstddef>
#include <type_traits>
#include <vector>

#include "widenet/dual.hpp"
#include "widenet/network.hpp"

namespace widenet::detail {

// out = scale * W z, W is rows x cols row-major.
template <class T>
void matvec(const T* w, std::size_t rows, std::size_t cols, const T* z, double scale,
            T* out) {
  if constexpr (std::is_same_v<T, double>) {
    Eigen::Map<const DenseMatrix> wm(w, static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
    Eigen::Map<const Vector> zv(z, static_cast<Eigen::Index>(cols));
    Eigen::Map<Vector> ov(out, static_cast<Eigen::Index>(rows));
    ov.noalias() = scale * (wm * zv);
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      T acc{};
      const T* row = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * z[c];
      out[r] = scale * acc;
    }
  }
}

// out += scale * W^T delta.
template <class T>
void matvec_t_acc(const T* w, std::size_t rows, std::size_t cols, const T* delta,
                  double scale, T* out) {
  if constexpr (std::is_same_v<T, double>) {
    Eigen::Map<const DenseMatrix> wm(w, static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols));
    Eigen::Map<const Vector> dv(delta, static_cast<Eigen::Index>(rows));
    Eigen::Map<Vector> ov(out, static_cast<Eigen::Index>(cols));
    ov.noalias() += scale * (wm.transpose() * dv);
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      const T* row = w + r * cols;
      const T dr = scale * delta[r];
      for (std::size_t c = 0; c < cols; ++c) out[c] += dr * row[c];
    }
  }
}

// g += scale * delta z^T.
template <class T>
void outer_acc(T* g, std::size_t rows, std::size_t cols, const T* delta, const T* z,
               double scale) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T dr = scale * delta[r];
    T* row = g + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += dr * z[c];
  }
}

template <class T>
struct Trace {
  std::vector<T> input;
  std::vector<std::vector<T>> pre;
  std::vector<std::vector<T>> post;

  const std::vector<T>& activation(std::size_t k) const {
    return k == 0 ? input : post[k - 1];
  }
};

template <class T>
void gather_input(const Network& net, const Trace<T>& trace, std::size_t layer,
                  std::vector<T>& z) {
  z.assign(net.fan_in(layer), T{});
  for (const InputBlock& b : net.inputs(layer)) {
    const std::vector<T>& src = trace.activation(b.source);
    for (std::size_t c = 0; c < b.width; ++c) z[b.column + c] = src[c];
  }
}

// Runs layers 1..last_layer.
template <class T>
void forward_core(const Network& net, const T* theta, const std::vector<T>& x,
                  std::size_t last_layer, Trace<T>& trace) {
  const std::size_t depth = net.depth();
  trace.input = x;
  trace.pre.assign(last_layer, {});
  trace.post.assign(last_layer, {});
  std::vector<T> z;
  for (std::size_t l = 1; l <= last_layer; ++l) {
    const LayerBlock& block = net.layout().block(l);
    gather_input(net, trace, l, z);
    std::vector<T>& pre = trace.pre[l - 1];
    pre.assign(block.rows, T{});
    matvec(theta + block.offset, block.rows, block.cols, z.data(), net.scale(l),
           pre.data());
    std::vector<T>& post = trace.post[l - 1];
    if (l == depth) {
      post = pre;
    } else {
      post.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i)
        post[i] = act::value(net.activation(), pre[i]);
    }
  }
}

// Accumulates d(seed . a~(layer))/d theta into grad (length p, layers > layer
// untouched). seed is the cotangent on the pre-activations of `layer`.
template <class T>
void backward_core(const Network& net, const T* theta, const Trace<T>& trace,
                   std::size_t layer, std::vector<T> seed, T* grad) {
  std::vector<std::vector<T>> dpost(layer);
  for (std::size_t k = 1; k < layer; ++k) dpost[k].assign(net.width(k), T{});
  std::vector<T> dpre = std::move(seed);
  std::vector<T> z;
  std::vector<T> dz;
  for (std::size_t l = layer; l >= 1; --l) {
    if (l < layer) {
      const std::vector<T>& pre = trace.pre[l - 1];
      dpre.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i)
        dpre[i] = dpost[l][i] * act::d1(net.activation(), pre[i]);
    }
    const LayerBlock& block = net.layout().block(l);
    const double s = net.scale(l);
    gather_input(net, trace, l, z);
    outer_acc(grad + block.offset, block.rows, block.cols, dpre.data(), z.data(), s);
    if (l == 1) break;
    dz.assign(block.cols, T{});
    matvec_t_acc(theta + block.offset, block.rows, block.cols, dpre.data(), s,
                 dz.data());
    for (const InputBlock& b : net.inputs(l)) {
      if (b.source == 0) continue;
      std::vector<T>& target = dpost[b.source];
      for (std::size_t c = 0; c < b.width; ++c) target[c] += dz[b.column + c];
    }
  }
}

}  // namespace widenet::detail
