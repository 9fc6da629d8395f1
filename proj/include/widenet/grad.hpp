#pragma once

#include <cstddef>
#include <vector>

#include "widenet/network.hpp"

namespace widenet {

enum class Stage { pre, post };

/// What to differentiate: the network output or one neuron. Neuron indices
/// are 0-based; layers are 1..L. The output is the single pre-activation of
/// layer L, so a post-activation target there is rejected.
struct GradTarget {
  enum class Kind { output, neuron };

  Kind kind = Kind::output;
  std::size_t layer = 0;
  std::size_t index = 0;
  Stage stage = Stage::pre;

  static GradTarget output() { return {}; }
  static GradTarget neuron(std::size_t layer, std::size_t index, Stage stage = Stage::pre) {
    return {Kind::neuron, layer, index, stage};
  }
};

/// Throws invalid_argument when the target does not exist in `net`.
void validate_target(const Network& net, const GradTarget& target);

double target_value(const Network& net, const ParamVector& theta, const Vector& x,
                    const GradTarget& target);

ParamVector grad(const Network& net, const ParamVector& theta, const Vector& x,
                 const GradTarget& target);

/// grad restricted to `slice`.
Vector partial_grad(const Network& net, const ParamVector& theta, const Vector& x,
                    const GradTarget& target, const Slice& slice);

/// Hessian-vector product H v of the target, by forward-mode differentiation
/// of the reverse pass.
ParamVector hvp(const Network& net, const ParamVector& theta, const Vector& x,
                const Vector& v, const GradTarget& target);

/// J v with J = d a(l) / d theta (m_l x p). Only the theta(l) part of v is read.
Vector jvp(const Network& net, const ParamVector& theta, const Vector& x, std::size_t layer,
           Stage stage, const Vector& v);

/// J^T u, a full-length vector whose entries past theta(l) are zero.
Vector vjp(const Network& net, const ParamVector& theta, const Vector& x, std::size_t layer,
           Stage stage, const Vector& u);

/// Largest singular value of J restricted to theta(l): the top singular pair
/// drives the aligned cross-term probe.
SingularTriplet layer_jacobian_triplet(const Network& net, const ParamVector& theta,
                                       const Vector& x, std::size_t layer,
                                       const PowerIterationOptions& options = {});

/// Same triplet from a dense eigendecomposition of J J^T. Exact up to
/// rounding and much faster than power iteration when the top singular
/// values are clustered, at O(m_l^3) cost.
SingularTriplet dense_layer_jacobian_triplet(const Network& net, const ParamVector& theta,
                                             const Vector& x, std::size_t layer);

/// Top eigenvalue of the dense J J^T (eigenvalues only). Exact counterpart
/// of jacobian_gram_spectral for width sweeps.
double dense_jacobian_gram_spectral(const Network& net, const ParamVector& theta,
                                    const Vector& x, std::size_t layer);

/// || J J^T || for J = grad of the post-activations a(l), matrix-free.
double jacobian_gram_spectral(const Network& net, const ParamVector& theta, const Vector& x,
                              std::size_t layer, const PowerIterationOptions& options = {});

/// A differentiable scalar function of a flat parameter vector.
class ParametricFunction {
 public:
  virtual ~ParametricFunction() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;
};

/// One network target at a fixed input, viewed as a function of theta.
class NetworkFunction final : public ParametricFunction {
 public:
  NetworkFunction(const Network& net, Vector x, GradTarget target);

  std::size_t dim() const override { return net_->parameter_count(); }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;

 private:
  const Network* net_;
  Vector x_;
  GradTarget target_;
};

/// f(theta0 + delta) - f(theta0) - <grad f(theta0), delta>.
double quadratic_form(const ParametricFunction& f, const Vector& theta0, const Vector& delta);
double quadratic_form(const Network& net, const ParamVector& theta0, const Vector& delta,
                      const Vector& x, const GradTarget& target);

/// A set of sub-models sharing one parameter vector, e.g. all neurons of a
/// layer. Each member depends only on the parameters in its domain.
class ModelFamily {
 public:
  virtual ~ModelFamily() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<Slice> domain(std::size_t member) const = 0;
  virtual double value(std::size_t member, const Vector& theta) const = 0;
  virtual Vector gradient(std::size_t member, const Vector& theta) const = 0;
};

/// Family with a single member.
class SingleFamily final : public ModelFamily {
 public:
  explicit SingleFamily(const ParametricFunction& f) : f_(&f) {}

  std::size_t size() const override { return 1; }
  std::size_t dim() const override { return f_->dim(); }
  std::vector<Slice> domain(std::size_t) const override { return {{0, f_->dim()}}; }
  double value(std::size_t, const Vector& theta) const override { return f_->value(theta); }
  Vector gradient(std::size_t, const Vector& theta) const override {
    return f_->gradient(theta);
  }

 private:
  const ParametricFunction* f_;
};

/// All neurons of one layer at a fixed input. The domain of neuron i is
/// theta(l-1) together with its own row w_i(l).
class LayerNeuronFamily final : public ModelFamily {
 public:
  LayerNeuronFamily(const Network& net, Vector x, std::size_t layer, Stage stage);

  std::size_t size() const override { return net_->width(layer_); }
  std::size_t dim() const override { return net_->parameter_count(); }
  std::vector<Slice> domain(std::size_t member) const override;
  double value(std::size_t member, const Vector& theta) const override;
  Vector gradient(std::size_t member, const Vector& theta) const override;

 private:
  const Network* net_;
  Vector x_;
  std::size_t layer_;
  Stage stage_;
};

struct BetaEstimate {
  double value = 0.0;
  std::size_t probes = 0;
  std::size_t argmax_member = 0;
};

/// Sampled smoothness constant: the largest ratio
/// ||grad g(theta0 + D) - grad g(theta0)|| / ||D|| seen over the probes, a
/// lower bound on the true constant. Probe k examines member k mod size();
/// even probes point along the member's gradient, odd probes are uniform on
/// the sphere of the member's domain. Radii are uniform on (0, R].
BetaEstimate estimate_beta(const ModelFamily& family, const Vector& theta0, double radius,
                           std::size_t probes, Rng& rng);

/// Copies `values` into the slices of a zero vector of length `dim`.
Vector embed(const std::vector<Slice>& slices, const Vector& values, std::size_t dim);
std::size_t total_length(const std::vector<Slice>& slices);

}  // namespace widenet
