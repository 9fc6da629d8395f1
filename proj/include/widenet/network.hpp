#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <utility>
#include <vector>

#include "widenet/activation.hpp"
#include "widenet/numerics.hpp"

namespace widenet {

enum class Architecture { mlp, densenet };

Architecture parse_architecture(std::string_view name);
std::string_view to_string(Architecture architecture);

/// Architecture of a bias-free, scalar-output network
///
///   a~(l) = W(l) z(l) / sqrt(fan_in(l)),   a(l) = sigma(a~(l)),   f = a~(L)
///
/// where z(l) = a(l-1) for an MLP and z(l) = concat[a(l-1), ..., a(1), x] for
/// a DenseNet. Layers are numbered 1..L; layer 0 is the input.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths;
  Activation activation = Activation::tanh;
  Architecture architecture = Architecture::mlp;

  std::size_t depth() const { return hidden_widths.size() + 1; }
  void validate() const;
};

/// Contiguous index range inside a flat parameter vector.
struct Slice {
  std::size_t offset = 0;
  std::size_t length = 0;

  std::size_t end() const { return offset + length; }
  bool contains(std::size_t i) const { return i >= offset && i < end(); }
  bool operator==(const Slice&) const = default;
};

/// One weight matrix stored row-major at `offset`.
struct LayerBlock {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const LayerBlock&) const = default;
};

/// Flat layout of theta: W(1), ..., W(L) back to back, each row-major, so the
/// row w_i(l) is contiguous and theta(l) (layers 1..l) is a prefix.
class ParamLayout {
 public:
  explicit ParamLayout(std::vector<LayerBlock> blocks);

  std::size_t size() const { return size_; }
  std::size_t depth() const { return blocks_.size(); }
  const LayerBlock& block(std::size_t layer) const;

  Slice full() const { return {0, size_}; }
  Slice layer_slice(std::size_t layer) const;
  Slice row_slice(std::size_t layer, std::size_t row) const;
  /// Layers first..last inclusive.
  Slice layers(std::size_t first, std::size_t last) const;
  /// theta(l): layers 1..l.
  Slice prefix(std::size_t layer) const { return layers(1, layer); }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<LayerBlock> blocks_;
  std::size_t size_ = 0;
};

/// Parameter values bound to an immutable layout.
class ParamVector {
 public:
  ParamVector(std::shared_ptr<const ParamLayout> layout, Vector values);

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  using MatrixMap = Eigen::Map<DenseMatrix>;
  using ConstMatrixMap = Eigen::Map<const DenseMatrix>;

  ConstMatrixMap layer(std::size_t l) const;
  MatrixMap layer(std::size_t l);

  auto segment(const Slice& s) const {
    return values_.segment(static_cast<Eigen::Index>(s.offset),
                           static_cast<Eigen::Index>(s.length));
  }
  auto segment(const Slice& s) {
    return values_.segment(static_cast<Eigen::Index>(s.offset),
                           static_cast<Eigen::Index>(s.length));
  }

  ParamVector with_values(Vector values) const { return {layout_, std::move(values)}; }

 private:
  std::shared_ptr<const ParamLayout> layout_;
  Vector values_;
};

/// Input of a layer: (source layer, first column) pairs in concatenation order.
struct InputBlock {
  std::size_t source = 0;  // 0 is the network input
  std::size_t column = 0;
  std::size_t width = 0;
};

class Network {
 public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const { return layout_; }

  std::size_t depth() const { return spec_.depth(); }
  std::size_t input_dim() const { return spec_.input_dim; }
  /// Width of layer l; width(0) is the input dimension, width(L) is 1.
  std::size_t width(std::size_t layer) const;
  std::size_t fan_in(std::size_t layer) const;
  /// 1/sqrt(fan_in(l)).
  double scale(std::size_t layer) const;
  std::size_t parameter_count() const { return layout_->size(); }
  Activation activation() const { return spec_.activation; }

  const std::vector<InputBlock>& inputs(std::size_t layer) const;

  ParamVector wrap(Vector values) const;
  ParamVector zeros() const;

 private:
  NetworkSpec spec_;
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<std::vector<InputBlock>> inputs_;
};

/// Cached values of one forward pass.
struct EvalTrace {
  Vector input;
  std::vector<Vector> pre;   // pre[l - 1] holds a~(l)
  std::vector<Vector> post;  // post[l - 1] holds a(l); the output layer stores f

  const Vector& preactivation(std::size_t layer) const { return pre.at(layer - 1); }
  /// a(k); k = 0 is the input.
  const Vector& activation(std::size_t k) const {
    return k == 0 ? input : post.at(k - 1);
  }
  double output() const { return pre.back()(0); }
};

/// Draws theta_0 with i.i.d. N(0, 1) entries, layer by layer, row by row.
std::pair<Network, ParamVector> build_network(const NetworkSpec& spec, Rng& rng);

EvalTrace forward(const Network& net, const ParamVector& theta, const Vector& x);
double evaluate(const Network& net, const ParamVector& theta, const Vector& x);

/// z(l): the (possibly concatenated) input of layer l.
Vector layer_input(const Network& net, const EvalTrace& trace, std::size_t layer);

}  // namespace widenet
