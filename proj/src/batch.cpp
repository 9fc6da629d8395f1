#include "widenet/batch.hpp"

#include <string>

namespace widenet {

namespace {

Eigen::Map<const DenseMatrix> weights(const Network& net, const ParamVector& theta,
                                      std::size_t layer) {
  const LayerBlock& b = net.layout().block(layer);
  return Eigen::Map<const DenseMatrix>(theta.values().data() + b.offset,
                                       static_cast<Eigen::Index>(b.rows),
                                       static_cast<Eigen::Index>(b.cols));
}

DenseMatrix apply_elementwise(const DenseMatrix& a, Activation kind, bool derivative) {
  DenseMatrix out(a.rows(), a.cols());
  const double* src = a.data();
  double* dst = out.data();
  const Eigen::Index n = a.size();
  for (Eigen::Index i = 0; i < n; ++i)
    dst[i] = derivative ? act::d1(kind, src[i]) : act::value(kind, src[i]);
  return out;
}

}  // namespace

BatchTrace forward_batch(const Network& net, const ParamVector& theta, const DenseMatrix& inputs,
                         std::size_t last_layer) {
  require(theta.layout() == net.layout(), "parameter layout does not match the network");
  require(static_cast<std::size_t>(inputs.cols()) == net.input_dim(),
          "inputs have " + std::to_string(inputs.cols()) + " columns, expected " +
              std::to_string(net.input_dim()));
  require(inputs.rows() >= 1, "empty batch");
  if (last_layer == 0) last_layer = net.depth();
  require(last_layer <= net.depth(), "layer out of range");

  BatchTrace t;
  t.input = inputs;
  for (std::size_t l = 1; l <= last_layer; ++l) {
    const DenseMatrix z = batch_layer_input(net, t, l);
    DenseMatrix pre = net.scale(l) * (z * weights(net, theta, l).transpose());
    DenseMatrix post = l == net.depth() ? pre : apply_elementwise(pre, net.activation(), false);
    t.pre.push_back(std::move(pre));
    t.post.push_back(std::move(post));
  }
  return t;
}

DenseMatrix batch_layer_input(const Network& net, const BatchTrace& trace, std::size_t layer) {
  const std::vector<InputBlock>& blocks = net.inputs(layer);
  if (blocks.size() == 1) return trace.activation(blocks.front().source);
  DenseMatrix z(trace.input.rows(), static_cast<Eigen::Index>(net.fan_in(layer)));
  for (const InputBlock& b : blocks)
    z.middleCols(static_cast<Eigen::Index>(b.column), static_cast<Eigen::Index>(b.width)) =
        trace.activation(b.source);
  return z;
}

std::vector<DenseMatrix> backprop_deltas(const Network& net, const ParamVector& theta,
                                         const BatchTrace& trace, std::size_t layer,
                                         DenseMatrix seed) {
  require(layer >= 1 && layer <= trace.pre.size(), "layer not covered by the trace");
  require(static_cast<std::size_t>(seed.cols()) == net.width(layer),
          "seed width does not match the layer");
  const bool broadcast = trace.samples() == 1;
  require(broadcast || seed.rows() == trace.input.rows(),
          "seed rows must match the number of samples");

  const Eigen::Index rows = seed.rows();
  std::vector<DenseMatrix> dpost(layer);
  for (std::size_t k = 1; k < layer; ++k)
    dpost[k] = DenseMatrix::Zero(rows, static_cast<Eigen::Index>(net.width(k)));

  std::vector<DenseMatrix> deltas(layer);
  deltas[layer - 1] = std::move(seed);
  for (std::size_t l = layer; l >= 1; --l) {
    if (l < layer) {
      const DenseMatrix deriv = apply_elementwise(trace.pre[l - 1], net.activation(), true);
      if (broadcast) {
        deltas[l - 1] = dpost[l].array().rowwise() * deriv.row(0).array();
      } else {
        deltas[l - 1] = dpost[l].cwiseProduct(deriv);
      }
    }
    if (l == 1) break;
    const DenseMatrix dz = net.scale(l) * (deltas[l - 1] * weights(net, theta, l));
    for (const InputBlock& b : net.inputs(l)) {
      if (b.source == 0) continue;
      dpost[b.source] +=
          dz.middleCols(static_cast<Eigen::Index>(b.column), static_cast<Eigen::Index>(b.width));
    }
  }
  return deltas;
}

Vector batch_pullback(const Network& net, const ParamVector& theta, const BatchTrace& trace,
                      const Vector& cotangent) {
  require(trace.pre.size() == net.depth(), "trace must cover the whole network");
  require(static_cast<std::size_t>(cotangent.size()) == trace.samples(),
          "one cotangent per sample required");
  const std::vector<DenseMatrix> deltas =
      backprop_deltas(net, theta, trace, net.depth(), DenseMatrix(cotangent));
  Vector out(static_cast<Eigen::Index>(net.parameter_count()));
  for (std::size_t l = 1; l <= net.depth(); ++l) {
    const LayerBlock& b = net.layout().block(l);
    Eigen::Map<DenseMatrix> g(out.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                              static_cast<Eigen::Index>(b.cols));
    g.noalias() = net.scale(l) * (deltas[l - 1].transpose() * batch_layer_input(net, trace, l));
  }
  return out;
}

DenseMatrix neuron_gram(const Network& net, const ParamVector& theta, const Vector& x,
                        std::size_t layer, const std::vector<std::size_t>& neurons) {
  require(layer >= 1 && layer <= net.depth(), "layer out of range");
  const auto k = static_cast<Eigen::Index>(neurons.size());
  DenseMatrix input(1, x.size());
  input.row(0) = x.transpose();
  const BatchTrace t = forward_batch(net, theta, input, layer);

  DenseMatrix seed = DenseMatrix::Zero(k, static_cast<Eigen::Index>(net.width(layer)));
  for (Eigen::Index r = 0; r < k; ++r) {
    const std::size_t i = neurons[static_cast<std::size_t>(r)];
    require(i < net.width(layer), "neuron index out of range");
    seed(r, static_cast<Eigen::Index>(i)) = 1.0;
  }
  const std::vector<DenseMatrix> deltas = backprop_deltas(net, theta, t, layer, std::move(seed));

  DenseMatrix gram = DenseMatrix::Zero(k, k);
  for (std::size_t l = 1; l <= layer; ++l) {
    const double zz = batch_layer_input(net, t, l).row(0).squaredNorm();
    const double s2 = 1.0 / static_cast<double>(net.fan_in(l));
    gram.noalias() += (s2 * zz) * (deltas[l - 1] * deltas[l - 1].transpose());
  }
  return gram;
}

DenseMatrix jacobian_gram(const Network& net, const ParamVector& theta, const Vector& x,
                          std::size_t layer, Stage stage) {
  require(layer >= 1 && layer <= net.depth(), "layer out of range");
  require(stage == Stage::pre || layer < net.depth(), "the output has no post-activation");
  std::vector<std::size_t> all(net.width(layer));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  DenseMatrix gram = neuron_gram(net, theta, x, layer, all);
  if (stage == Stage::post) {
    const Vector alpha = forward(net, theta, x).preactivation(layer);
    Vector d(alpha.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = act::d1(net.activation(), alpha(i));
    gram = d.asDiagonal() * gram * d.asDiagonal();
  }
  return gram;
}

}  // namespace widenet
