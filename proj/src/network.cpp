#include "widenet/network.hpp"

#include <string>

#include "kernels.hpp"

namespace widenet {

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "softplus") return Activation::softplus;
  if (name == "identity") return Activation::identity;
  if (name == "relu" || name == "leaky_relu")
    fail(ErrorKind::unsupported_activation,
         std::string(name) + " is not twice differentiable");
  fail(ErrorKind::unsupported_activation, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
    case Activation::identity: return "identity";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "mlp") return Architecture::mlp;
  if (name == "densenet") return Architecture::densenet;
  fail(ErrorKind::invalid_argument, "unknown architecture '" + std::string(name) + "'");
}

std::string_view to_string(Architecture architecture) {
  return architecture == Architecture::mlp ? "mlp" : "densenet";
}

void NetworkSpec::validate() const {
  require(input_dim >= 1, "input_dim must be at least 1");
  require(!hidden_widths.empty(), "a network needs at least one hidden layer (L >= 2)");
  for (std::size_t w : hidden_widths) require(w >= 1, "hidden widths must be at least 1");
}

ParamLayout::ParamLayout(std::vector<LayerBlock> blocks) : blocks_(std::move(blocks)) {
  for (const LayerBlock& b : blocks_) {
    if (b.offset != size_)
      fail(ErrorKind::invariant_violation, "layer blocks must be contiguous");
    require(b.rows >= 1 && b.cols >= 1, "empty layer block");
    size_ += b.size();
  }
}

const LayerBlock& ParamLayout::block(std::size_t layer) const {
  require(layer >= 1 && layer <= blocks_.size(),
          "layer " + std::to_string(layer) + " out of range");
  return blocks_[layer - 1];
}

Slice ParamLayout::layer_slice(std::size_t layer) const {
  const LayerBlock& b = block(layer);
  return {b.offset, b.size()};
}

Slice ParamLayout::row_slice(std::size_t layer, std::size_t row) const {
  const LayerBlock& b = block(layer);
  require(row < b.rows, "row " + std::to_string(row) + " out of range for layer " +
                            std::to_string(layer));
  return {b.offset + row * b.cols, b.cols};
}

Slice ParamLayout::layers(std::size_t first, std::size_t last) const {
  require(first >= 1 && first <= last && last <= blocks_.size(), "invalid layer range");
  const std::size_t begin = blocks_[first - 1].offset;
  const LayerBlock& end = blocks_[last - 1];
  return {begin, end.offset + end.size() - begin};
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, Vector values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  require(layout_ != nullptr, "null layout");
  require(static_cast<std::size_t>(values_.size()) == layout_->size(),
          "parameter vector length " + std::to_string(values_.size()) +
              " does not match layout size " + std::to_string(layout_->size()));
}

ParamVector::ConstMatrixMap ParamVector::layer(std::size_t l) const {
  const LayerBlock& b = layout_->block(l);
  return ConstMatrixMap(values_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                        static_cast<Eigen::Index>(b.cols));
}

ParamVector::MatrixMap ParamVector::layer(std::size_t l) {
  const LayerBlock& b = layout_->block(l);
  return MatrixMap(values_.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                   static_cast<Eigen::Index>(b.cols));
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t depth = spec_.depth();
  inputs_.resize(depth);
  std::vector<LayerBlock> blocks;
  std::size_t offset = 0;
  for (std::size_t l = 1; l <= depth; ++l) {
    std::vector<InputBlock>& in = inputs_[l - 1];
    std::size_t column = 0;
    if (spec_.architecture == Architecture::mlp || l == 1) {
      in.push_back({l - 1, 0, width(l - 1)});
      column = width(l - 1);
    } else {
      for (std::size_t k = l; k-- > 0;) {
        in.push_back({k, column, width(k)});
        column += width(k);
      }
    }
    blocks.push_back({offset, width(l), column});
    offset += width(l) * column;
  }
  layout_ = std::make_shared<const ParamLayout>(std::move(blocks));
}

std::size_t Network::width(std::size_t layer) const {
  const std::size_t depth = spec_.depth();
  require(layer <= depth, "layer " + std::to_string(layer) + " out of range");
  if (layer == 0) return spec_.input_dim;
  if (layer == depth) return 1;
  return spec_.hidden_widths[layer - 1];
}

std::size_t Network::fan_in(std::size_t layer) const { return layout_->block(layer).cols; }

double Network::scale(std::size_t layer) const {
  return 1.0 / std::sqrt(static_cast<double>(fan_in(layer)));
}

const std::vector<InputBlock>& Network::inputs(std::size_t layer) const {
  require(layer >= 1 && layer <= depth(), "layer out of range");
  return inputs_[layer - 1];
}

ParamVector Network::wrap(Vector values) const { return {layout_, std::move(values)}; }

ParamVector Network::zeros() const {
  return wrap(Vector::Zero(static_cast<Eigen::Index>(layout_->size())));
}

std::pair<Network, ParamVector> build_network(const NetworkSpec& spec, Rng& rng) {
  Network net(spec);
  Vector values(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = rng.normal();
  ParamVector theta = net.wrap(std::move(values));
  return {std::move(net), std::move(theta)};
}

namespace {

void check_inputs(const Network& net, const ParamVector& theta, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == net.input_dim(),
          "input has dimension " + std::to_string(x.size()) + ", expected " +
              std::to_string(net.input_dim()));
  require(theta.layout() == net.layout(), "parameter layout does not match the network");
}

}  // namespace

EvalTrace forward(const Network& net, const ParamVector& theta, const Vector& x) {
  check_inputs(net, theta, x);
  detail::Trace<double> t;
  detail::forward_core(net, theta.values().data(),
                       std::vector<double>(x.data(), x.data() + x.size()), net.depth(), t);
  EvalTrace out;
  out.input = x;
  auto to_vec = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  for (std::size_t l = 0; l < t.pre.size(); ++l) {
    out.pre.push_back(to_vec(t.pre[l]));
    out.post.push_back(to_vec(t.post[l]));
  }
  return out;
}

double evaluate(const Network& net, const ParamVector& theta, const Vector& x) {
  return forward(net, theta, x).output();
}

Vector layer_input(const Network& net, const EvalTrace& trace, std::size_t layer) {
  Vector z(static_cast<Eigen::Index>(net.fan_in(layer)));
  for (const InputBlock& b : net.inputs(layer))
    z.segment(static_cast<Eigen::Index>(b.column), static_cast<Eigen::Index>(b.width)) =
        trace.activation(b.source);
  return z;
}

}  // namespace widenet
