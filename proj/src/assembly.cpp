#include "widenet/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace widenet {

WeightRule parse_weight_rule(std::string_view name) {
  if (name == "ones") return WeightRule::ones;
  if (name == "rademacher") return WeightRule::rademacher;
  if (name == "gaussian") return WeightRule::gaussian;
  fail(ErrorKind::invalid_argument, "unknown weight rule '" + std::string(name) + "'");
}

std::string_view to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::ones: return "ones";
    case WeightRule::rademacher: return "rademacher";
    case WeightRule::gaussian: return "gaussian";
  }
  return "?";
}

Scaling parse_scaling(std::string_view name) {
  if (name == "sqrt_m") return Scaling::sqrt_m;
  if (name == "m") return Scaling::m;
  fail(ErrorKind::invalid_argument, "unknown scaling '" + std::string(name) + "'");
}

std::string_view to_string(Scaling scaling) {
  return scaling == Scaling::sqrt_m ? "sqrt_m" : "m";
}

double AssemblySpec::scale() const {
  const auto m = static_cast<double>(size());
  return scaling == Scaling::sqrt_m ? std::sqrt(m) : m;
}

Vector draw_weights(std::size_t m, WeightRule rule, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    switch (rule) {
      case WeightRule::ones: v(i) = 1.0; break;
      case WeightRule::rademacher: v(i) = rng.rademacher(); break;
      case WeightRule::gaussian: v(i) = rng.normal(); break;
    }
  }
  return v;
}

AssemblyModel assemble(AssemblySpec spec, std::shared_ptr<const SubModelEvaluator> evaluator) {
  require(evaluator != nullptr, "missing sub-model evaluator");
  require(spec.size() >= 1, "an assembly needs at least one sub-model");
  require(static_cast<std::size_t>(spec.weights.size()) == spec.size(),
          "one weight per sub-model required");

  struct Owned {
    Slice slice;
    std::size_t owner;
  };
  std::vector<Owned> all;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    require(!spec.slices[i].empty(), "sub-model " + std::to_string(i) + " owns no parameters");
    for (const Slice& s : spec.slices[i]) {
      require(s.length >= 1 && s.end() <= spec.param_dim,
              "slice of sub-model " + std::to_string(i) + " is empty or out of range");
      all.push_back({s, i});
    }
  }
  std::sort(all.begin(), all.end(),
            [](const Owned& a, const Owned& b) { return a.slice.offset < b.slice.offset; });
  for (std::size_t k = 1; k < all.size(); ++k) {
    if (all[k].slice.offset < all[k - 1].slice.end())
      fail(ErrorKind::invariant_violation,
           "sub-models " + std::to_string(all[k - 1].owner) + " and " +
               std::to_string(all[k].owner) + " share parameters at index " +
               std::to_string(all[k].slice.offset));
  }
  return AssemblyModel(std::move(spec), std::move(evaluator));
}

Vector AssemblyModel::gather(std::size_t i, const Vector& theta) const {
  require(static_cast<std::size_t>(theta.size()) == dim(), "theta has the wrong length");
  const std::vector<Slice>& sl = spec_.slices.at(i);
  Vector local(static_cast<Eigen::Index>(total_length(sl)));
  Eigen::Index k = 0;
  for (const Slice& s : sl) {
    const auto len = static_cast<Eigen::Index>(s.length);
    local.segment(k, len) = theta.segment(static_cast<Eigen::Index>(s.offset), len);
    k += len;
  }
  return local;
}

double AssemblyModel::sub_value(std::size_t i, const Vector& theta, const Vector& x) const {
  return eval_->value(i, gather(i, theta), x);
}

Vector AssemblyModel::sub_gradient(std::size_t i, const Vector& theta, const Vector& x) const {
  return embed(spec_.slices.at(i), eval_->gradient(i, gather(i, theta), x), dim());
}

double AssemblyModel::value(const Vector& theta, const Vector& x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    acc += spec_.weights(static_cast<Eigen::Index>(i)) * sub_value(i, theta, x);
  return acc / spec_.scale();
}

Vector AssemblyModel::gradient(const Vector& theta, const Vector& x) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim()));
  const double inv_s = 1.0 / spec_.scale();
  for (std::size_t i = 0; i < size(); ++i) {
    const Vector g = eval_->gradient(i, gather(i, theta), x);
    const double c = spec_.weights(static_cast<Eigen::Index>(i)) * inv_s;
    Eigen::Index k = 0;
    for (const Slice& s : spec_.slices[i]) {
      const auto len = static_cast<Eigen::Index>(s.length);
      out.segment(static_cast<Eigen::Index>(s.offset), len) += c * g.segment(k, len);
      k += len;
    }
  }
  return out;
}

double TwoLayerNeurons::value(std::size_t, const Vector& local, const Vector& x) const {
  const Eigen::Index d = x.size();
  require(local.size() == d + 1, "two-layer sub-model expects d + 1 parameters");
  const double a = local.head(d).dot(x) / std::sqrt(static_cast<double>(d));
  return local(d) * act::value(activation_, a);
}

Vector TwoLayerNeurons::gradient(std::size_t, const Vector& local, const Vector& x) const {
  const Eigen::Index d = x.size();
  require(local.size() == d + 1, "two-layer sub-model expects d + 1 parameters");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double a = local.head(d).dot(x) * inv_sqrt_d;
  Vector g(d + 1);
  g.head(d) = (local(d) * act::d1(activation_, a) * inv_sqrt_d) * x;
  g(d) = act::value(activation_, a);
  return g;
}

std::vector<std::vector<Slice>> two_layer_slices(std::size_t input_dim, std::size_t width) {
  std::vector<std::vector<Slice>> out(width);
  for (std::size_t i = 0; i < width; ++i)
    out[i] = {{i * input_dim, input_dim}, {width * input_dim + i, 1}};
  return out;
}

AssemblyModel assembly_view(const Network& net) {
  require(net.depth() == 2, "assembly_view needs a network with one hidden layer");
  const std::size_t m = net.width(1);
  AssemblySpec spec;
  spec.param_dim = net.parameter_count();
  spec.slices = two_layer_slices(net.input_dim(), m);
  spec.weights = Vector::Ones(static_cast<Eigen::Index>(m));
  spec.scaling = Scaling::sqrt_m;
  return assemble(std::move(spec), std::make_shared<TwoLayerNeurons>(net.activation()));
}

AssemblyModel two_layer_assembly(std::size_t input_dim, std::size_t width, Activation activation,
                                 WeightRule rule, Scaling scaling, Rng& rng) {
  require(input_dim >= 1 && width >= 1, "dimensions must be positive");
  AssemblySpec spec;
  spec.param_dim = width * (input_dim + 1);
  spec.slices = two_layer_slices(input_dim, width);
  spec.weights = draw_weights(width, rule, rng);
  spec.scaling = scaling;
  return assemble(std::move(spec), std::make_shared<TwoLayerNeurons>(activation));
}

DominationReport check_no_domination(const Vector& magnitudes, double c, double a, double b) {
  require(magnitudes.size() >= 1, "no sub-model outputs given");
  require(c > 0.0 && c < 1.0, "c must lie in (0, 1)");
  const Vector mags = magnitudes.cwiseAbs();
  DominationReport r;
  r.max = mags.maxCoeff();
  if (!(r.max > 0.0))
    fail(ErrorKind::degenerate_input, "all sub-model outputs are zero; ratio undefined");
  r.ratio = median(std::vector<double>(mags.data(), mags.data() + mags.size())) / r.max;
  r.pass = r.ratio >= c;
  r.max_in_range = r.max >= a && r.max <= b;
  return r;
}

}  // namespace widenet
