#include "widenet/linearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace widenet {

namespace {

constexpr std::size_t kRadiusBands = 4;

double band_radius(double radius, std::size_t k, Rng& rng) {
  const double band = static_cast<double>(kRadiusBands - 1 - k % kRadiusBands);
  return radius * (band + rng.uniform_open_left()) / static_cast<double>(kRadiusBands);
}

Vector unit_in(const std::vector<Slice>& slices, std::size_t dim, Rng& rng) {
  return embed(slices, sphere_sample(total_length(slices), 1.0, rng), dim);
}

Vector restrict_to(const Vector& v, const Slice& s) {
  Vector out = Vector::Zero(v.size());
  const auto off = static_cast<Eigen::Index>(s.offset);
  const auto len = static_cast<Eigen::Index>(s.length);
  out.segment(off, len) = v.segment(off, len);
  return out;
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

std::string describe(const GradTarget& t) {
  if (t.kind == GradTarget::Kind::output) return "output";
  return std::string(t.stage == Stage::pre ? "pre" : "post") + "[" + std::to_string(t.layer) +
         "," + std::to_string(t.index) + "]";
}

// Unit direction along the gradient of neuron j of `layer`, falling
// back to a uniform direction in theta(layer) when that gradient vanishes.
Vector neuron_direction(const Network& net, const ParamVector& theta0, const Vector& x,
                        std::size_t layer, std::size_t j, Rng& rng) {
  const Stage stage = layer == net.depth() ? Stage::pre : Stage::post;
  Vector g = grad(net, theta0, x, GradTarget::neuron(layer, j, stage)).values();
  const double n = g.norm();
  if (n > 0.0) return g / n;
  return unit_in({net.layout().prefix(layer)}, net.parameter_count(), rng);
}

Vector neuron_direction(const Network& net, const ParamVector& theta0, const Vector& x,
                        std::size_t layer, Rng& rng) {
  return neuron_direction(net, theta0, x, layer, rng.index(net.width(layer)), rng);
}

}  // namespace

std::vector<double> probe_remainders(const ParametricFunction& f, const Vector& theta0,
                                     double radius, std::size_t probes,
                                     const DirectionSampler& directions, Rng& rng) {
  require(radius >= 0.0, "radius must be non-negative");
  require(static_cast<std::size_t>(theta0.size()) == f.dim(), "theta0 has the wrong length");
  std::vector<double> out;
  out.reserve(probes);
  if (radius == 0.0) {
    out.assign(probes, 0.0);
    return out;
  }
  const double f0 = f.value(theta0);
  const Vector g0 = f.gradient(theta0);
  for (std::size_t k = 0; k < probes; ++k) {
    const Vector dir = directions(k, rng);
    const double r = band_radius(radius, k, rng);
    const Vector delta = r * dir;
    out.push_back(std::abs(f.value(theta0 + delta) - f0 - g0.dot(delta)));
  }
  return out;
}

RemainderReport remainder_at(const AssemblyModel& model, const Vector& theta0, const Vector& x,
                             const RemainderOptions& options, Rng& rng) {
  require(options.radius >= 0.0, "radius must be non-negative");
  const AssemblyFunction f(model, x);
  const std::size_t p = model.dim();
  DirectionSampler dirs = [&](std::size_t k, Rng& r) -> Vector {
    if (k % 2 == 0) return sphere_sample(p, 1.0, r);
    return unit_in(model.spec().slices[r.index(model.size())], p, r);
  };

  RemainderReport rep;
  rep.width = model.size();
  rep.radius = options.radius;
  rep.target = "assembly";
  rep.bound_kind = BoundKind::assembly;
  rep.probes = options.probes;
  rep.samples = probe_remainders(f, theta0, options.radius, options.probes, dirs, rng);
  rep.remainder = max_of(rep.samples);
  if (options.radius == 0.0) {
    rep.pass = true;
    return rep;
  }

  const SubModelFamily family(model, x);
  const double vmax = model.spec().weights.cwiseAbs().maxCoeff();
  const double r2 = options.radius * options.radius;
  auto bound_for = [&](std::size_t beta_probes) {
    rep.beta_probes = beta_probes;
    rep.beta = estimate_beta(family, theta0, options.radius, beta_probes, rng).value;
    rep.bound = rep.beta * r2 * vmax / (2.0 * model.spec().scale());
    rep.pass = rep.remainder <= rep.bound;
  };
  bound_for(options.beta_probes);
  if (!rep.pass && options.retry) {
    rep.beta_reestimated = true;
    bound_for(10 * options.beta_probes);
  }
  return rep;
}

RemainderReport remainder_at(const Network& net, const ParamVector& theta0, const Vector& x,
                             const GradTarget& target, const RemainderOptions& options,
                             Rng& rng) {
  validate_target(net, target);
  require(options.radius >= 0.0, "radius must be non-negative");
  const std::size_t top = target.kind == GradTarget::Kind::output ? net.depth() : target.layer;
  const std::size_t p = net.parameter_count();
  const NetworkFunction f(net, x, target);

  RemainderReport rep;
  rep.radius = options.radius;
  rep.target = describe(target);
  rep.bound_kind = BoundKind::deep;
  rep.probes = options.probes;

  if (top == 1) {
    // Linear in its parameters: the remainder is rounding noise.
    const Slice own = net.layout().layer_slice(1);
    DirectionSampler dirs = [&](std::size_t, Rng& r) { return unit_in({own}, p, r); };
    rep.width = net.width(1);
    rep.samples = probe_remainders(f, theta0.values(), options.radius, options.probes, dirs, rng);
    rep.remainder = max_of(rep.samples);
    rep.bound = 1e-12 * (1.0 + std::abs(f.value(theta0.values())));
    rep.pass = rep.remainder <= rep.bound;
    return rep;
  }

  const std::size_t l = top - 1;
  const Slice dom = net.layout().prefix(l);
  DirectionSampler dirs = [&](std::size_t k, Rng& r) -> Vector {
    if (k % 2 == 0) return unit_in({dom}, p, r);
    return neuron_direction(net, theta0, x, l, r);
  };
  rep.width = net.width(l);
  rep.samples = probe_remainders(f, theta0.values(), options.radius, options.probes, dirs, rng);
  rep.remainder = max_of(rep.samples);
  if (options.radius == 0.0) {
    rep.pass = true;
    return rep;
  }

  const std::size_t row = target.kind == GradTarget::Kind::output ? 0 : target.index;
  const double wmax = theta0.layer(top).row(static_cast<Eigen::Index>(row)).cwiseAbs().maxCoeff();
  const double r2 = options.radius * options.radius;
  // DenseNet pre-activations assemble neurons from every earlier layer.
  const std::size_t first = net.spec().architecture == Architecture::densenet ? 1 : l;
  auto bound_for = [&](std::size_t beta_probes) {
    rep.beta_probes = beta_probes;
    rep.beta = 0.0;
    const std::size_t per_layer = std::max<std::size_t>(1, beta_probes / (l - first + 1));
    for (std::size_t k = first; k <= l; ++k) {
      const LayerNeuronFamily family(net, x, k, Stage::post);
      rep.beta = std::max(
          rep.beta, estimate_beta(family, theta0.values(), options.radius, per_layer, rng).value);
    }
    rep.bound = rep.beta * r2 * wmax * net.scale(top) / 2.0;
    rep.pass = rep.remainder <= rep.bound;
  };
  bound_for(options.beta_probes);
  if (!rep.pass && options.retry) {
    rep.beta_reestimated = true;
    bound_for(10 * options.beta_probes);
  }
  return rep;
}

double abs_cosine(const Vector& a, const Vector& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::min(1.0, std::abs(a.dot(b)) / std::sqrt(na * nb));
}

CosineStats cosine_stats(const Network& net, const ParamVector& theta, std::size_t layer,
                         const DenseMatrix& inputs, std::size_t max_pairs, Rng& rng) {
  require(layer >= 1 && layer < net.depth(), "cosine statistics need a hidden layer");
  const std::size_t m = net.width(layer);
  if (m < 2)
    fail(ErrorKind::degenerate_input,
         "layer " + std::to_string(layer) + " has a single neuron; no pairs to compare");
  require(max_pairs >= 1, "max_pairs must be positive");
  require(inputs.rows() >= 1, "no inputs");

  const std::size_t all_pairs = m * (m - 1) / 2;
  std::size_t subset = m;
  if (all_pairs > max_pairs) {
    subset = 2;
    while (subset * (subset - 1) / 2 < max_pairs) ++subset;
  }

  CosineStats st;
  st.layer = layer;
  st.width = m;
  double total = 0.0;
  std::size_t counted_total = 0;
  std::vector<std::size_t> perm(m);
  for (Eigen::Index a = 0; a < inputs.rows(); ++a) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (subset < m) {
      for (std::size_t i = 0; i < subset; ++i) std::swap(perm[i], perm[i + rng.index(m - i)]);
    }
    const std::vector<std::size_t> neurons(perm.begin(),
                                           perm.begin() + static_cast<std::ptrdiff_t>(subset));
    const DenseMatrix gram = neuron_gram(net, theta, inputs.row(a).transpose(), layer, neurons);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(subset * (subset - 1) / 2);
    for (std::size_t i = 0; i < subset; ++i)
      for (std::size_t j = i + 1; j < subset; ++j) pairs.emplace_back(i, j);
    std::size_t take = pairs.size();
    if (take > max_pairs) {
      for (std::size_t k = 0; k < max_pairs; ++k)
        std::swap(pairs[k], pairs[k + rng.index(pairs.size() - k)]);
      take = max_pairs;
    }

    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < take; ++k) {
      const auto i = static_cast<Eigen::Index>(pairs[k].first);
      const auto j = static_cast<Eigen::Index>(pairs[k].second);
      const double gii = gram(i, i);
      const double gjj = gram(j, j);
      if (gii <= 0.0 || gjj <= 0.0) {
        ++st.skipped;
        continue;
      }
      sum += std::min(1.0, std::abs(gram(i, j)) / std::sqrt(gii * gjj));
      ++counted;
    }
    st.per_sample.push_back(counted ? sum / static_cast<double>(counted)
                                    : std::numeric_limits<double>::quiet_NaN());
    total += sum;
    counted_total += counted;
  }
  st.n_pairs = counted_total;
  if (counted_total == 0)
    fail(ErrorKind::degenerate_input, "every sampled pair had a zero gradient");
  st.mean_abs_cos = total / static_cast<double>(counted_total);
  return st;
}

double normal_constancy(const Network& net, const ParamVector& theta0, const GradTarget& target,
                        double radius, std::size_t probes, const Vector& x, Rng& rng) {
  validate_target(net, target);
  require(radius >= 0.0, "radius must be non-negative");
  const std::size_t l = target.kind == GradTarget::Kind::output ? net.depth() : target.layer;
  const Vector g0 = grad(net, theta0, x, target).values();
  const double n0 = g0.norm();
  if (n0 == 0.0) fail(ErrorKind::degenerate_input, "the target gradient vanishes at theta0");
  if (l == 1 || radius == 0.0 || probes == 0) return 1.0;

  const std::size_t p = net.parameter_count();
  const Slice dom = net.layout().prefix(l - 1);
  double min_cos = 1.0;
  for (std::size_t k = 0; k < probes; ++k) {
    const Vector dir = k % 2 == 0 ? unit_in({dom}, p, rng)
                                  : neuron_direction(net, theta0, x, l - 1, rng);
    const double r = band_radius(radius, k, rng);
    const Vector g1 = grad(net, theta0.with_values(theta0.values() + r * dir), x, target).values();
    const double n1 = g1.norm();
    if (n1 == 0.0) fail(ErrorKind::degenerate_input, "the target gradient vanishes at a probe");
    min_cos = std::min(min_cos, std::clamp(g0.dot(g1) / (n0 * n1), -1.0, 1.0));
  }
  return min_cos;
}

double NtkMatrix::min_eigenvalue() const { return symmetric_eigenvalues(k)(0); }

bool NtkMatrix::is_psd(double tol) const {
  return min_eigenvalue() >= -tol * std::abs(k.trace());
}

NtkMatrix ntk(const Network& net, const ParamVector& theta, const DenseMatrix& inputs) {
  const BatchTrace t = forward_batch(net, theta, inputs);
  const std::vector<DenseMatrix> deltas =
      backprop_deltas(net, theta, t, net.depth(), DenseMatrix::Ones(inputs.rows(), 1));
  NtkMatrix out{DenseMatrix::Zero(inputs.rows(), inputs.rows())};
  for (std::size_t l = 1; l <= net.depth(); ++l) {
    const DenseMatrix z = batch_layer_input(net, t, l);
    const DenseMatrix dd = deltas[l - 1] * deltas[l - 1].transpose();
    const DenseMatrix zz = z * z.transpose();
    out.k += dd.cwiseProduct(zz) / static_cast<double>(net.fan_in(l));
  }
  // Symmetrise away rounding so eigen-solvers see an exact symmetric matrix.
  out.k = 0.5 * (out.k + out.k.transpose()).eval();
  return out;
}

double ntk_drift(const NtkMatrix& k0, const NtkMatrix& kt) {
  require(k0.k.rows() == kt.k.rows() && k0.k.cols() == kt.k.cols(), "NTK sizes differ");
  const double base = k0.k.norm();
  if (base == 0.0) fail(ErrorKind::degenerate_input, "the reference NTK is zero");
  return (kt.k - k0.k).norm() / base;
}

CrossTerm cross_term(const Network& net, const ParamVector& theta0, const ParamVector& theta,
                     const Vector& x, std::size_t layer, std::size_t index,
                     double gram_spectral) {
  require(layer >= 1 && layer + 1 <= net.depth(), "cross term needs layer l with l + 1 <= L");
  require(theta.layout() == theta0.layout(), "theta and theta0 have different layouts");
  const GradTarget target = layer + 1 == net.depth()
                                ? GradTarget::output()
                                : GradTarget::neuron(layer + 1, index);
  validate_target(net, target);
  const NetworkFunction f(net, x, target);

  const Vector delta = theta.values() - theta0.values();
  const Vector dw = restrict_to(delta, net.layout().row_slice(layer + 1, index));
  const Vector dt = restrict_to(delta, net.layout().prefix(layer));

  CrossTerm ct;
  ct.f0 = f.value(theta0.values());
  const Vector g0 = f.gradient(theta0.values());
  auto remainder = [&](const Vector& d) {
    return f.value(theta0.values() + d) - ct.f0 - g0.dot(d);
  };
  ct.a = remainder(dw);
  ct.b = remainder(dt);
  ct.full = remainder(dw + dt);
  ct.c = ct.full - ct.a - ct.b;
  ct.radius = (dw + dt).norm();
  ct.gram_spectral = gram_spectral >= 0.0
                         ? gram_spectral
                         : dense_jacobian_gram_spectral(net, theta0, x, layer);
  ct.bound = ct.radius * ct.radius * std::sqrt(ct.gram_spectral) * net.scale(layer + 1);
  return ct;
}

CrossTermSweepPoint cross_term_probe(const Network& net, const ParamVector& theta0,
                                     const Vector& x, std::size_t layer, double radius,
                                     std::size_t probes, std::size_t beta_probes, Rng& rng) {
  require(layer >= 1 && layer + 1 <= net.depth(), "cross term needs layer l with l + 1 <= L");
  require(radius > 0.0 && probes >= 1, "need a positive radius and at least one probe");
  const std::size_t p = net.parameter_count();
  const Slice row = net.layout().row_slice(layer + 1, 0);
  const Slice dom = net.layout().prefix(layer);
  const std::size_t m = net.width(layer);
  const double s = net.scale(layer + 1);

  const SingularTriplet top = dense_layer_jacobian_triplet(net, theta0, x, layer);
  const double gram = top.sigma * top.sigma;
  const double wmax =
      theta0.layer(layer + 1).row(0).cwiseAbs().maxCoeff();

  CrossTermSweepPoint pt;
  pt.probes = probes;
  pt.beta = estimate_beta(LayerNeuronFamily(net, x, layer, Stage::post), theta0.values(), radius,
                          beta_probes, rng)
                .value;
  pt.b_bound = pt.beta * radius * radius * wmax * s / 2.0;
  pt.c_bound = radius * radius * std::sqrt(gram) * s;
  pt.a_zero = pt.b_within_bound = pt.c_within_bound = true;

  const double h = 1.0 / std::sqrt(2.0);
  for (std::size_t k = 0; k < probes; ++k) {
    Vector delta = Vector::Zero(static_cast<Eigen::Index>(p));
    if (k == 0) {
      // The source block of layer l sits first in the next layer's input.
      delta.segment(static_cast<Eigen::Index>(row.offset), static_cast<Eigen::Index>(m)) =
          (h * radius) * top.left;
      delta.head(static_cast<Eigen::Index>(dom.length)) = (h * radius) * top.right;
    } else {
      const double r = band_radius(radius, k - 1, rng);
      switch (k % 3) {
        case 1:
          delta = r * unit_in({row, dom}, p, rng);
          break;
        case 2: {
          const std::size_t j = rng.index(m);
          delta = (h * r) * neuron_direction(net, theta0, x, layer, j, rng);
          delta(static_cast<Eigen::Index>(row.offset + j)) += h * r * rng.rademacher();
          break;
        }
        default:
          delta = r * neuron_direction(net, theta0, x, layer, rng);
          break;
      }
    }
    const CrossTerm ct =
        cross_term(net, theta0, theta0.with_values(theta0.values() + delta), x, layer, 0, gram);
    pt.max_abs_a = std::max(pt.max_abs_a, std::abs(ct.a));
    pt.max_abs_b = std::max(pt.max_abs_b, std::abs(ct.b));
    pt.max_abs_c = std::max(pt.max_abs_c, std::abs(ct.c));
    pt.max_abs_f = std::max(pt.max_abs_f, std::abs(ct.f0));
    if (std::abs(ct.a) > 1e-12 * (1.0 + std::abs(ct.f0))) pt.a_zero = false;
    const double rt2 = restrict_to(delta, dom).squaredNorm();
    if (std::abs(ct.b) > pt.beta * rt2 * wmax * s / 2.0) pt.b_within_bound = false;
    if (std::abs(ct.c) > ct.bound) pt.c_within_bound = false;
  }
  return pt;
}

}  // namespace widenet
