#pragma once

#include <cstddef>
#include <vector>

#include "widenet/grad.hpp"
#include "widenet/network.hpp"

namespace widenet {

/// Forward pass over a batch; row a of every matrix belongs to sample a.
struct BatchTrace {
  DenseMatrix input;               // n x d
  std::vector<DenseMatrix> pre;    // pre[l - 1]: n x m_l
  std::vector<DenseMatrix> post;   // post[l - 1]: n x m_l, equal to pre at layer L

  std::size_t samples() const { return static_cast<std::size_t>(input.rows()); }
  const DenseMatrix& activation(std::size_t k) const { return k == 0 ? input : post.at(k - 1); }
};

/// Runs layers 1..last_layer (0 means the whole network).
BatchTrace forward_batch(const Network& net, const ParamVector& theta, const DenseMatrix& inputs,
                         std::size_t last_layer = 0);

/// Stacked layer inputs z(l), n x fan_in(l).
DenseMatrix batch_layer_input(const Network& net, const BatchTrace& trace, std::size_t layer);

/// Reverse pass for B cotangent rows placed on a~(layer). Returns D[k - 1]
/// (B x m_k), the cotangents on a~(k) for k = 1..layer. Row b of `seed` uses
/// sample b of the trace, or sample 0 for every row when the trace holds a
/// single sample.
///
/// The gradient block of W(k) for row b is D[k-1].row(b)^T z_b(k) / sqrt(fan_in),
/// so inner products of gradients reduce to per-layer products of D and z.
std::vector<DenseMatrix> backprop_deltas(const Network& net, const ParamVector& theta,
                                         const BatchTrace& trace, std::size_t layer,
                                         DenseMatrix seed);

/// sum_a c_a grad f(x_a) as a flat parameter vector.
Vector batch_pullback(const Network& net, const ParamVector& theta, const BatchTrace& trace,
                      const Vector& cotangent);

/// Gram matrix of the pre-activation gradients of the listed neurons of
/// `layer` at one input: G_rs = <grad a~_{i_r}, grad a~_{i_s}>.
DenseMatrix neuron_gram(const Network& net, const ParamVector& theta, const Vector& x,
                        std::size_t layer, const std::vector<std::size_t>& neurons);

/// J J^T for J = d a(layer) / d theta restricted to prefix(layer), as a dense
/// m_l x m_l matrix. The post stage scales rows and columns by sigma'.
DenseMatrix jacobian_gram(const Network& net, const ParamVector& theta, const Vector& x,
                          std::size_t layer, Stage stage);

}  // namespace widenet
