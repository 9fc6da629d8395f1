#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "widenet/grad.hpp"
#include "widenet/network.hpp"

namespace widenet {

enum class WeightRule { ones, rademacher, gaussian };
enum class Scaling { sqrt_m, m };

WeightRule parse_weight_rule(std::string_view name);
std::string_view to_string(WeightRule rule);
Scaling parse_scaling(std::string_view name);
std::string_view to_string(Scaling scaling);

/// f(theta; x) = (1 / s(m)) sum_i v_i g_i(theta_i; x), where theta_i is the
/// concatenation of the slices owned by sub-model i. The weights v are fixed.
struct AssemblySpec {
  std::size_t param_dim = 0;
  std::vector<std::vector<Slice>> slices;
  Vector weights;
  Scaling scaling = Scaling::sqrt_m;

  std::size_t size() const { return slices.size(); }
  double scale() const;
};

Vector draw_weights(std::size_t m, WeightRule rule, Rng& rng);

/// Evaluates sub-model i on its own parameters.
class SubModelEvaluator {
 public:
  virtual ~SubModelEvaluator() = default;
  virtual double value(std::size_t i, const Vector& local, const Vector& x) const = 0;
  virtual Vector gradient(std::size_t i, const Vector& local, const Vector& x) const = 0;
};

class AssemblyModel {
 public:
  const AssemblySpec& spec() const { return spec_; }
  std::size_t size() const { return spec_.size(); }
  std::size_t dim() const { return spec_.param_dim; }

  double value(const Vector& theta, const Vector& x) const;
  Vector gradient(const Vector& theta, const Vector& x) const;

  Vector gather(std::size_t i, const Vector& theta) const;
  double sub_value(std::size_t i, const Vector& theta, const Vector& x) const;
  /// Gradient of g_i as a full-length vector (zero off its slices).
  Vector sub_gradient(std::size_t i, const Vector& theta, const Vector& x) const;

 private:
  friend AssemblyModel assemble(AssemblySpec, std::shared_ptr<const SubModelEvaluator>);
  AssemblyModel(AssemblySpec spec, std::shared_ptr<const SubModelEvaluator> eval)
      : spec_(std::move(spec)), eval_(std::move(eval)) {}

  AssemblySpec spec_;
  std::shared_ptr<const SubModelEvaluator> eval_;
};

/// Validates the spec. Overlapping slices raise invariant_violation.
AssemblyModel assemble(AssemblySpec spec, std::shared_ptr<const SubModelEvaluator> evaluator);

/// g_i(w_i, u_i; x) = u_i sigma(w_i . x / sqrt(d)), local parameters [w_i, u_i].
class TwoLayerNeurons final : public SubModelEvaluator {
 public:
  explicit TwoLayerNeurons(Activation activation) : activation_(activation) {}

  double value(std::size_t i, const Vector& local, const Vector& x) const override;
  Vector gradient(std::size_t i, const Vector& local, const Vector& x) const override;

 private:
  Activation activation_;
};

/// Slices of a two-layer network layout: sub-model i owns row i of W(1) and
/// entry i of W(2).
std::vector<std::vector<Slice>> two_layer_slices(std::size_t input_dim, std::size_t width);

/// The two-layer network read as an assembly of its hidden neurons
/// (v = 1, s = sqrt(m)); shares the network's parameter layout.
AssemblyModel assembly_view(const Network& two_layer_net);

/// Two-layer assembly with drawn weights; theta0 uses the network layout.
AssemblyModel two_layer_assembly(std::size_t input_dim, std::size_t width, Activation activation,
                                 WeightRule rule, Scaling scaling, Rng& rng);

/// f at a fixed input as a ParametricFunction.
class AssemblyFunction final : public ParametricFunction {
 public:
  AssemblyFunction(const AssemblyModel& model, Vector x) : model_(&model), x_(std::move(x)) {}

  std::size_t dim() const override { return model_->dim(); }
  double value(const Vector& theta) const override { return model_->value(theta, x_); }
  Vector gradient(const Vector& theta) const override { return model_->gradient(theta, x_); }

 private:
  const AssemblyModel* model_;
  Vector x_;
};

/// The sub-models g_i at a fixed input, for smoothness estimates.
class SubModelFamily final : public ModelFamily {
 public:
  SubModelFamily(const AssemblyModel& model, Vector x) : model_(&model), x_(std::move(x)) {}

  std::size_t size() const override { return model_->size(); }
  std::size_t dim() const override { return model_->dim(); }
  std::vector<Slice> domain(std::size_t member) const override {
    return model_->spec().slices[member];
  }
  double value(std::size_t member, const Vector& theta) const override {
    return model_->sub_value(member, theta, x_);
  }
  Vector gradient(std::size_t member, const Vector& theta) const override {
    return model_->sub_gradient(member, theta, x_);
  }

 private:
  const AssemblyModel* model_;
  Vector x_;
};

struct DominationReport {
  double ratio = 0.0;  // median |g| / max |g|
  double max = 0.0;
  bool pass = false;
  bool max_in_range = false;
};

/// Checks that no sub-model dominates: median/max >= c and max in [a, b].
DominationReport check_no_domination(const Vector& magnitudes, double c, double a = 1e-6,
                                     double b = 1e6);

}  // namespace widenet
