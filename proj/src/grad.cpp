#include "widenet/grad.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <string>

#include "kernels.hpp"
#include "widenet/batch.hpp"

namespace widenet {

namespace {

std::size_t target_layer(const Network& net, const GradTarget& target) {
  return target.kind == GradTarget::Kind::output ? net.depth() : target.layer;
}

std::vector<double> as_std(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void check_shapes(const Network& net, const ParamVector& theta, const Vector& x) {
  require(static_cast<std::size_t>(x.size()) == net.input_dim(),
          "input has dimension " + std::to_string(x.size()) + ", expected " +
              std::to_string(net.input_dim()));
  require(theta.layout() == net.layout(), "parameter layout does not match the network");
}

void check_stage(const Network& net, std::size_t layer, Stage stage) {
  require(layer >= 1 && layer <= net.depth(),
          "layer " + std::to_string(layer) + " outside 1.." + std::to_string(net.depth()));
  require(!(layer == net.depth() && stage == Stage::post),
          "the output layer has no post-activation");
}

detail::Trace<double> trace_to(const Network& net, const ParamVector& theta, const Vector& x,
                               std::size_t layer) {
  detail::Trace<double> t;
  detail::forward_core(net, theta.values().data(), as_std(x), layer, t);
  return t;
}

// Cotangent on a~(layer) for the cotangent u on the requested stage.
template <class T>
std::vector<T> stage_seed(const Network& net, const detail::Trace<T>& t, std::size_t layer,
                          Stage stage, std::vector<T> u) {
  if (stage == Stage::post) {
    const std::vector<T>& pre = t.pre[layer - 1];
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] * act::d1(net.activation(), pre[i]);
  }
  return u;
}

Vector vjp_from_trace(const Network& net, const ParamVector& theta,
                      const detail::Trace<double>& t, std::size_t layer, Stage stage,
                      const Vector& u) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  detail::backward_core(net, theta.values().data(), t, layer,
                        stage_seed(net, t, layer, stage, as_std(u)), out.data());
  return out;
}

Vector jvp_from_trace(const Network& net, const ParamVector& theta,
                      const detail::Trace<double>& t, std::size_t layer, Stage stage,
                      const Vector& v) {
  // Tangents of a(k) for k = 0..layer; the input has none.
  std::vector<Vector> dpost(layer + 1);
  dpost[0] = Vector::Zero(static_cast<Eigen::Index>(net.input_dim()));
  Vector dpre;
  for (std::size_t l = 1; l <= layer; ++l) {
    const LayerBlock& b = net.layout().block(l);
    Vector z(static_cast<Eigen::Index>(b.cols));
    Vector dz(static_cast<Eigen::Index>(b.cols));
    for (const InputBlock& in : net.inputs(l)) {
      const auto col = static_cast<Eigen::Index>(in.column);
      const auto w = static_cast<Eigen::Index>(in.width);
      const std::vector<double>& src = t.activation(in.source);
      z.segment(col, w) = Eigen::Map<const Vector>(src.data(), w);
      dz.segment(col, w) = dpost[in.source];
    }
    Eigen::Map<const DenseMatrix> wmat(theta.values().data() + b.offset,
                                       static_cast<Eigen::Index>(b.rows),
                                       static_cast<Eigen::Index>(b.cols));
    Eigen::Map<const DenseMatrix> dw(v.data() + b.offset, static_cast<Eigen::Index>(b.rows),
                                     static_cast<Eigen::Index>(b.cols));
    dpre = net.scale(l) * (wmat * dz + dw * z);
    if (l < net.depth()) {
      Vector d(dpre.size());
      const std::vector<double>& pre = t.pre[l - 1];
      for (Eigen::Index i = 0; i < d.size(); ++i)
        d(i) = act::d1(net.activation(), pre[static_cast<std::size_t>(i)]) * dpre(i);
      dpost[l] = std::move(d);
    }
  }
  return stage == Stage::pre ? dpre : dpost[layer];
}

}  // namespace

void validate_target(const Network& net, const GradTarget& target) {
  if (target.kind == GradTarget::Kind::output) {
    require(target.stage == Stage::pre, "the output has no post-activation stage");
    return;
  }
  check_stage(net, target.layer, target.stage);
  require(target.index < net.width(target.layer),
          "neuron index " + std::to_string(target.index) + " out of range for layer " +
              std::to_string(target.layer) + " of width " +
              std::to_string(net.width(target.layer)));
}

double target_value(const Network& net, const ParamVector& theta, const Vector& x,
                    const GradTarget& target) {
  validate_target(net, target);
  check_shapes(net, theta, x);
  const std::size_t l = target_layer(net, target);
  const detail::Trace<double> t = trace_to(net, theta, x, l);
  const std::size_t i = target.kind == GradTarget::Kind::output ? 0 : target.index;
  return target.stage == Stage::pre ? t.pre[l - 1][i] : t.post[l - 1][i];
}

ParamVector grad(const Network& net, const ParamVector& theta, const Vector& x,
                 const GradTarget& target) {
  validate_target(net, target);
  check_shapes(net, theta, x);
  const std::size_t l = target_layer(net, target);
  const detail::Trace<double> t = trace_to(net, theta, x, l);
  Vector u = Vector::Zero(static_cast<Eigen::Index>(net.width(l)));
  u(static_cast<Eigen::Index>(target.kind == GradTarget::Kind::output ? 0 : target.index)) = 1.0;
  return net.wrap(vjp_from_trace(net, theta, t, l, target.stage, u));
}

Vector partial_grad(const Network& net, const ParamVector& theta, const Vector& x,
                    const GradTarget& target, const Slice& slice) {
  require(slice.length >= 1 && slice.end() <= net.parameter_count(),
          "slice [" + std::to_string(slice.offset) + ", " + std::to_string(slice.end()) +
              ") outside the parameter vector");
  return grad(net, theta, x, target).segment(slice);
}

ParamVector hvp(const Network& net, const ParamVector& theta, const Vector& x, const Vector& v,
                const GradTarget& target) {
  validate_target(net, target);
  check_shapes(net, theta, x);
  require(static_cast<std::size_t>(v.size()) == net.parameter_count(),
          "direction length does not match the parameter count");
  const std::size_t p = net.parameter_count();
  std::vector<Dual> th(p);
  for (std::size_t k = 0; k < p; ++k)
    th[k] = Dual(theta.values()(static_cast<Eigen::Index>(k)), v(static_cast<Eigen::Index>(k)));
  std::vector<Dual> xin(x.data(), x.data() + x.size());

  const std::size_t l = target_layer(net, target);
  detail::Trace<Dual> t;
  detail::forward_core(net, th.data(), xin, l, t);
  std::vector<Dual> u(net.width(l));
  u[target.kind == GradTarget::Kind::output ? 0 : target.index] = Dual(1.0);
  std::vector<Dual> g(p);
  detail::backward_core(net, th.data(), t, l, stage_seed(net, t, l, target.stage, u), g.data());

  Vector out(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < p; ++k) out(static_cast<Eigen::Index>(k)) = g[k].d;
  return net.wrap(std::move(out));
}

Vector jvp(const Network& net, const ParamVector& theta, const Vector& x, std::size_t layer,
           Stage stage, const Vector& v) {
  check_stage(net, layer, stage);
  check_shapes(net, theta, x);
  require(static_cast<std::size_t>(v.size()) == net.parameter_count(),
          "tangent length does not match the parameter count");
  return jvp_from_trace(net, theta, trace_to(net, theta, x, layer), layer, stage, v);
}

Vector vjp(const Network& net, const ParamVector& theta, const Vector& x, std::size_t layer,
           Stage stage, const Vector& u) {
  check_stage(net, layer, stage);
  check_shapes(net, theta, x);
  require(static_cast<std::size_t>(u.size()) == net.width(layer),
          "cotangent length does not match the layer width");
  return vjp_from_trace(net, theta, trace_to(net, theta, x, layer), layer, stage, u);
}

SingularTriplet layer_jacobian_triplet(const Network& net, const ParamVector& theta,
                                       const Vector& x, std::size_t layer,
                                       const PowerIterationOptions& options) {
  const Stage stage = layer == net.depth() ? Stage::pre : Stage::post;
  check_stage(net, layer, stage);
  check_shapes(net, theta, x);
  const detail::Trace<double> t = trace_to(net, theta, x, layer);
  const Slice dom = net.layout().prefix(layer);
  const auto n = static_cast<Eigen::Index>(dom.length);
  const auto p = static_cast<Eigen::Index>(net.parameter_count());
  LinearOperator apply = [&](const Vector& v) {
    Vector full = Vector::Zero(p);
    full.head(n) = v;
    return jvp_from_trace(net, theta, t, layer, stage, full);
  };
  LinearOperator apply_t = [&](const Vector& u) {
    return Vector(vjp_from_trace(net, theta, t, layer, stage, u).head(n));
  };
  return top_singular_triplet(apply, apply_t, dom.length, net.width(layer), options);
}

SingularTriplet dense_layer_jacobian_triplet(const Network& net, const ParamVector& theta,
                                             const Vector& x, std::size_t layer) {
  const Stage stage = layer == net.depth() ? Stage::pre : Stage::post;
  check_stage(net, layer, stage);
  check_shapes(net, theta, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      Eigen::MatrixXd(jacobian_gram(net, theta, x, layer, stage)));
  if (eig.info() != Eigen::Success)
    fail(ErrorKind::numeric_failure, "eigendecomposition of the Jacobian Gram failed");
  const Eigen::Index top = eig.eigenvalues().size() - 1;
  SingularTriplet t;
  t.sigma = std::sqrt(std::max(0.0, eig.eigenvalues()(top)));
  t.left = eig.eigenvectors().col(top);
  const Slice dom = net.layout().prefix(layer);
  const Vector jt = vjp(net, theta, x, layer, stage, t.left);
  t.right = jt.segment(static_cast<Eigen::Index>(dom.offset), static_cast<Eigen::Index>(dom.length));
  if (t.sigma > 0.0) t.right /= t.sigma;
  t.iterations = 0;
  return t;
}

double dense_jacobian_gram_spectral(const Network& net, const ParamVector& theta,
                                    const Vector& x, std::size_t layer) {
  const Stage stage = layer == net.depth() ? Stage::pre : Stage::post;
  check_stage(net, layer, stage);
  check_shapes(net, theta, x);
  return symmetric_eigenvalues(jacobian_gram(net, theta, x, layer, stage)).maxCoeff();
}

double jacobian_gram_spectral(const Network& net, const ParamVector& theta, const Vector& x,
                              std::size_t layer, const PowerIterationOptions& options) {
  const double s = layer_jacobian_triplet(net, theta, x, layer, options).sigma;
  return s * s;
}

NetworkFunction::NetworkFunction(const Network& net, Vector x, GradTarget target)
    : net_(&net), x_(std::move(x)), target_(target) {
  validate_target(net, target);
}

double NetworkFunction::value(const Vector& theta) const {
  return target_value(*net_, net_->wrap(theta), x_, target_);
}

Vector NetworkFunction::gradient(const Vector& theta) const {
  return grad(*net_, net_->wrap(theta), x_, target_).values();
}

double quadratic_form(const ParametricFunction& f, const Vector& theta0, const Vector& delta) {
  require(theta0.size() == delta.size(), "perturbation shape does not match theta0");
  if (delta.isZero(0.0)) return 0.0;
  return f.value(theta0 + delta) - f.value(theta0) - f.gradient(theta0).dot(delta);
}

double quadratic_form(const Network& net, const ParamVector& theta0, const Vector& delta,
                      const Vector& x, const GradTarget& target) {
  return quadratic_form(NetworkFunction(net, x, target), theta0.values(), delta);
}

LayerNeuronFamily::LayerNeuronFamily(const Network& net, Vector x, std::size_t layer,
                                     Stage stage)
    : net_(&net), x_(std::move(x)), layer_(layer), stage_(stage) {
  check_stage(net, layer, stage);
}

std::vector<Slice> LayerNeuronFamily::domain(std::size_t member) const {
  std::vector<Slice> out;
  if (layer_ > 1) out.push_back(net_->layout().prefix(layer_ - 1));
  out.push_back(net_->layout().row_slice(layer_, member));
  return out;
}

double LayerNeuronFamily::value(std::size_t member, const Vector& theta) const {
  return target_value(*net_, net_->wrap(theta), x_, GradTarget::neuron(layer_, member, stage_));
}

Vector LayerNeuronFamily::gradient(std::size_t member, const Vector& theta) const {
  return grad(*net_, net_->wrap(theta), x_, GradTarget::neuron(layer_, member, stage_)).values();
}

std::size_t total_length(const std::vector<Slice>& slices) {
  std::size_t n = 0;
  for (const Slice& s : slices) n += s.length;
  return n;
}

Vector embed(const std::vector<Slice>& slices, const Vector& values, std::size_t dim) {
  require(static_cast<std::size_t>(values.size()) == total_length(slices),
          "value count does not match the slices");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim));
  Eigen::Index k = 0;
  for (const Slice& s : slices) {
    require(s.end() <= dim, "slice outside the parameter vector");
    const auto len = static_cast<Eigen::Index>(s.length);
    out.segment(static_cast<Eigen::Index>(s.offset), len) = values.segment(k, len);
    k += len;
  }
  return out;
}

BetaEstimate estimate_beta(const ModelFamily& family, const Vector& theta0, double radius,
                           std::size_t probes, Rng& rng) {
  require(probes >= 1, "estimate_beta needs at least one probe");
  require(radius > 0.0, "radius must be positive");
  require(family.size() >= 1, "empty model family");
  BetaEstimate est;
  est.probes = probes;
  for (std::size_t k = 0; k < probes; ++k) {
    const std::size_t member = k % family.size();
    const Vector g0 = family.gradient(member, theta0);
    const std::vector<Slice> dom = family.domain(member);
    const double r = radius * rng.uniform_open_left();
    Vector dir;
    if (k % 2 == 0 && g0.norm() > 0.0) {
      dir = g0 / g0.norm();
    } else {
      dir = embed(dom, sphere_sample(total_length(dom), 1.0, rng), family.dim());
    }
    const Vector g1 = family.gradient(member, theta0 + r * dir);
    const double ratio = (g1 - g0).norm() / r;
    if (ratio > est.value) {
      est.value = ratio;
      est.argmax_member = member;
    }
  }
  return est;
}

}  // namespace widenet
