#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "oracles.hpp"
#include "widenet/assembly.hpp"
#include "widenet/batch.hpp"
#include "widenet/grad.hpp"

using namespace widenet;

namespace {

NetworkSpec make_spec(std::size_t d, std::vector<std::size_t> widths, Activation a,
                      Architecture arch) {
  NetworkSpec s;
  s.input_dim = d;
  s.hidden_widths = std::move(widths);
  s.activation = a;
  s.architecture = arch;
  return s;
}

// Value of a target read off the naive oracle, so the FD side never touches
// library code.
double oracle_value(const NetworkSpec& spec, const Vector& theta, const Vector& x,
                    const GradTarget& t) {
  const oracle::NaiveTrace tr = oracle::naive_forward(spec, theta, x);
  if (t.kind == GradTarget::Kind::output) return tr.output;
  const auto& v = t.stage == Stage::pre ? tr.pre : tr.post;
  return v[t.layer - 1][t.index];
}

}  // namespace

class GradOracle
    : public ::testing::TestWithParam<std::tuple<Activation, Architecture, int>> {};

TEST_P(GradOracle, ReverseModeMatchesCentralDifferences) {
  const auto [a, arch, kind] = GetParam();
  Rng rng(21);
  const NetworkSpec spec = make_spec(4, {6, 5, 4}, a, arch);
  auto [net, theta] = build_network(spec, rng);
  const Vector x = gaussian_vector(4, rng);
  const GradTarget t = kind == 0   ? GradTarget::output()
                       : kind == 1 ? GradTarget::neuron(3, 2, Stage::pre)
                                   : GradTarget::neuron(2, 1, Stage::post);
  const Vector g = grad(net, theta, x, t).values();
  const double scale = g.cwiseAbs().maxCoeff();
  for (int k = 0; k < 50; ++k) {
    const std::size_t i = rng.index(net.parameter_count());
    const double fd = oracle::central(
        [&](const Vector& v) { return oracle_value(spec, v, x, t); }, theta.values(), i);
    EXPECT_NEAR(g(i), fd, 1e-6 * std::max(std::abs(fd), scale)) << "coordinate " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllCombinations, GradOracle,
    ::testing::Combine(::testing::Values(Activation::tanh, Activation::sigmoid,
                                         Activation::softplus, Activation::identity),
                       ::testing::Values(Architecture::mlp, Architecture::densenet),
                       ::testing::Values(0, 1, 2)));

TEST(Grad, TargetOutsideLayerIsZero) {
  Rng rng(22);
  auto [net, theta] =
      build_network(make_spec(3, {5, 4}, Activation::tanh, Architecture::mlp), rng);
  const Vector g =
      grad(net, theta, gaussian_vector(3, rng), GradTarget::neuron(2, 1)).values();
  const Slice later = net.layout().layer_slice(3);
  EXPECT_EQ(g.segment(later.offset, later.length).norm(), 0.0);
  // Only row 1 of W(2) is touched inside layer 2.
  for (std::size_t r = 0; r < 4; ++r) {
    const Slice row = net.layout().row_slice(2, r);
    if (r != 1) EXPECT_EQ(g.segment(row.offset, row.length).norm(), 0.0);
  }
}

TEST(Grad, InvalidTargetsAreRejected) {
  Rng rng(23);
  auto [net, theta] =
      build_network(make_spec(3, {5}, Activation::tanh, Architecture::mlp), rng);
  const Vector x = gaussian_vector(3, rng);
  EXPECT_THROW(grad(net, theta, x, GradTarget::neuron(0, 0)), Error);
  EXPECT_THROW(grad(net, theta, x, GradTarget::neuron(1, 5)), Error);
  EXPECT_THROW(grad(net, theta, x, GradTarget::neuron(2, 0, Stage::post)), Error);
  EXPECT_THROW(grad(net, theta, gaussian_vector(2, rng), GradTarget::output()), Error);
}

TEST(PartialGrad, IsTheSliceOfTheFullGradient) {
  Rng rng(24);
  auto [net, theta] =
      build_network(make_spec(3, {5, 4}, Activation::tanh, Architecture::densenet), rng);
  const Vector x = gaussian_vector(3, rng);
  const Slice s = net.layout().layer_slice(2);
  const Vector full = grad(net, theta, x, GradTarget::output()).values();
  EXPECT_EQ(partial_grad(net, theta, x, GradTarget::output(), s),
            full.segment(s.offset, s.length));
}

class HvpOracle : public ::testing::TestWithParam<Architecture> {};

TEST_P(HvpOracle, MatchesFiniteDifferenceOfGradient) {
  Rng rng(25);
  auto [net, theta] =
      build_network(make_spec(3, {6, 5}, Activation::tanh, GetParam()), rng);
  const Vector x = gaussian_vector(3, rng);
  for (const GradTarget& t : {GradTarget::output(), GradTarget::neuron(2, 3, Stage::post)}) {
    const Vector v = sphere_sample(net.parameter_count(), 1.0, rng);
    const Vector hv = hvp(net, theta, x, v, t).values();
    const double h = 1e-5;
    const Vector fd = (grad(net, theta.with_values(theta.values() + h * v), x, t).values() -
                       grad(net, theta.with_values(theta.values() - h * v), x, t).values()) /
                      (2 * h);
    EXPECT_LE((hv - fd).norm(), 1e-5 * fd.norm());
  }
}

TEST_P(HvpOracle, HessianIsSymmetric) {
  Rng rng(26);
  auto [net, theta] =
      build_network(make_spec(3, {6, 5}, Activation::softplus, GetParam()), rng);
  const Vector x = gaussian_vector(3, rng);
  const Vector u = gaussian_vector(net.parameter_count(), rng);
  const Vector v = gaussian_vector(net.parameter_count(), rng);
  const double uhv = u.dot(hvp(net, theta, x, v, GradTarget::output()).values());
  const double vhu = v.dot(hvp(net, theta, x, u, GradTarget::output()).values());
  EXPECT_NEAR(uhv, vhu, 1e-10 * std::abs(uhv));
}

INSTANTIATE_TEST_SUITE_P(Both, HvpOracle,
                         ::testing::Values(Architecture::mlp, Architecture::densenet));

TEST(Hvp, CrossSubModelBlocksOfTwoLayerNetAreExactlyZero) {
  Rng rng(27);
  const std::size_t d = 4, m = 6;
  auto [net, theta] = build_network(make_spec(d, {m}, Activation::tanh, Architecture::mlp), rng);
  const Vector x = gaussian_vector(d, rng);
  const auto slices = two_layer_slices(d, m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vector v =
        embed(slices[j], gaussian_vector(total_length(slices[j]), rng), net.parameter_count());
    const Vector hv = hvp(net, theta, x, v, GradTarget::output()).values();
    for (std::size_t i = 0; i < m; ++i) {
      if (i == j) continue;
      for (const Slice& s : slices[i]) EXPECT_EQ(hv.segment(s.offset, s.length).norm(), 0.0);
    }
  }
}

TEST(Hvp, IdentityTwoLayerHessianIsTheBilinearCoupling) {
  // f = sum_i u_i w_i.x / sqrt(d m): the Hessian couples w_i and u_i only.
  Rng rng(28);
  const std::size_t d = 3, m = 2;
  auto [net, theta] =
      build_network(make_spec(d, {m}, Activation::identity, Architecture::mlp), rng);
  const Vector x = gaussian_vector(d, rng);
  Vector e = Vector::Zero(net.parameter_count());
  e(static_cast<Eigen::Index>(m * d)) = 1.0;  // u_0
  const Vector hv = hvp(net, theta, x, e, GradTarget::output()).values();
  const double s = 1.0 / std::sqrt(static_cast<double>(d * m));
  for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(hv(k), x(k) * s, 1e-14);
  for (Eigen::Index k = d; k < hv.size(); ++k) EXPECT_EQ(hv(k), 0.0);
}

TEST(JvpVjp, AdjointIdentityAndFiniteDifference) {
  Rng rng(29);
  for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
    const NetworkSpec spec = make_spec(3, {5, 4, 3}, Activation::tanh, arch);
    auto [net, theta] = build_network(spec, rng);
    const Vector x = gaussian_vector(3, rng);
    for (std::size_t l = 1; l < net.depth(); ++l) {
      for (Stage st : {Stage::pre, Stage::post}) {
        const Vector v = gaussian_vector(net.parameter_count(), rng);
        const Vector u = gaussian_vector(net.width(l), rng);
        const Vector jv = jvp(net, theta, x, l, st, v);
        const double a = u.dot(jv);
        const double b = vjp(net, theta, x, l, st, u).dot(v);
        EXPECT_NEAR(a, b, 1e-12 * (1 + std::abs(a)));

        // Directional derivative of a(l) against the oracle; only theta(l)
        // moves a(l).
        const double h = 1e-6;
        const Vector vp = v.head(net.layout().prefix(l).length);
        Vector plus = theta.values(), minus = theta.values();
        plus.head(vp.size()) += h * vp;
        minus.head(vp.size()) -= h * vp;
        const auto tp = oracle::naive_forward(spec, plus, x);
        const auto tm = oracle::naive_forward(spec, minus, x);
        const auto& p = st == Stage::pre ? tp.pre : tp.post;
        const auto& q = st == Stage::pre ? tm.pre : tm.post;
        for (std::size_t i = 0; i < net.width(l); ++i)
          EXPECT_NEAR(jv(i), (p[l - 1][i] - q[l - 1][i]) / (2 * h), 1e-7);
      }
    }
  }
}

namespace {

DenseMatrix dense_jacobian(const Network& net, const ParamVector& theta, const Vector& x,
                           std::size_t l, Stage st) {
  const std::size_t n = net.layout().prefix(l).length;
  DenseMatrix j(net.width(l), n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector e = Vector::Zero(net.parameter_count());
    e(c) = 1.0;
    j.col(c) = jvp(net, theta, x, l, st, e);
  }
  return j;
}

}  // namespace

TEST(JacobianGram, LayerOneClosedForm) {
  // J J^T for a(1) is diag(sigma'(a~_i)^2) |x|^2 / d.
  Rng rng(30);
  const std::size_t d = 4, m = 6;
  auto [net, theta] =
      build_network(make_spec(d, {m, 3}, Activation::tanh, Architecture::mlp), rng);
  const Vector x = gaussian_vector(d, rng);
  const DenseMatrix g = jacobian_gram(net, theta, x, 1, Stage::post);
  const Vector pre = forward(net, theta, x).preactivation(1);
  const DenseMatrix j = dense_jacobian(net, theta, x, 1, Stage::post);
  const DenseMatrix direct = j * j.transpose();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      const double dp = act::d1(Activation::tanh, pre(i));
      const double closed = i == k ? dp * dp * x.squaredNorm() / d : 0.0;
      EXPECT_NEAR(g(i, k), closed, 1e-8);
      EXPECT_NEAR(direct(i, k), closed, 1e-8);
    }
}

TEST(JacobianGram, DeepLayersMatchDenseJacobian) {
  Rng rng(31);
  for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
    auto [net, theta] =
        build_network(make_spec(3, {5, 6, 4}, Activation::sigmoid, arch), rng);
    const Vector x = gaussian_vector(3, rng);
    for (std::size_t l = 1; l < net.depth(); ++l) {
      for (Stage st : {Stage::pre, Stage::post}) {
        const DenseMatrix j = dense_jacobian(net, theta, x, l, st);
        EXPECT_LE((jacobian_gram(net, theta, x, l, st) - j * j.transpose()).norm(),
                  1e-12 * (1 + (j * j.transpose()).norm()));
      }
    }
  }
}

TEST(LayerJacobian, PowerAndDenseTripletsAgreeWithSvd) {
  Rng rng(32);
  auto [net, theta] =
      build_network(make_spec(3, {8, 7}, Activation::tanh, Architecture::mlp), rng);
  const Vector x = gaussian_vector(3, rng);
  const DenseMatrix j = dense_jacobian(net, theta, x, 2, Stage::post);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);

  PowerIterationOptions opt;
  opt.max_iter = 100000;
  const SingularTriplet p = layer_jacobian_triplet(net, theta, x, 2, opt);
  const SingularTriplet d = dense_layer_jacobian_triplet(net, theta, x, 2);
  EXPECT_NEAR(p.sigma, sigma, 1e-6 * sigma);
  EXPECT_NEAR(d.sigma, sigma, 1e-12 * sigma);
  EXPECT_NEAR(std::abs(d.right.dot(svd.matrixV().col(0))), 1.0, 1e-8);
  EXPECT_NEAR((j * d.right - d.sigma * d.left).norm(), 0.0, 1e-10);
  EXPECT_NEAR(jacobian_gram_spectral(net, theta, x, 2, opt), sigma * sigma, 1e-5 * sigma * sigma);
  EXPECT_NEAR(dense_jacobian_gram_spectral(net, theta, x, 2), sigma * sigma, 1e-12);
}

namespace {

// f(theta) = 1/2 theta^T A theta with known smoothness ||A||.
class Quadratic final : public ParametricFunction {
 public:
  explicit Quadratic(DenseMatrix a) : a_(std::move(a)) {}
  std::size_t dim() const override { return static_cast<std::size_t>(a_.rows()); }
  double value(const Vector& t) const override { return 0.5 * t.dot(a_ * t); }
  Vector gradient(const Vector& t) const override { return a_ * t; }

 private:
  DenseMatrix a_;
};

}  // namespace

TEST(EstimateBeta, IsALowerBoundOnTheTrueConstant) {
  Rng rng(33);
  const DenseMatrix b = gaussian_matrix(6, 6, rng);
  const DenseMatrix a = b * b.transpose();
  const double lmax = symmetric_eigenvalues(a).maxCoeff();
  const Quadratic q(a);
  const BetaEstimate est = estimate_beta(SingleFamily(q), gaussian_vector(6, rng), 1.0, 400, rng);
  EXPECT_LE(est.value, lmax * (1 + 1e-12));
  EXPECT_GE(est.value, 0.3 * lmax);
  EXPECT_EQ(est.probes, 400u);
}

TEST(QuadraticForm, MatchesSecondOrderTermForQuadratic) {
  Rng rng(34);
  const DenseMatrix b = gaussian_matrix(5, 5, rng);
  const DenseMatrix a = b + b.transpose();
  const Quadratic q(a);
  const Vector t0 = gaussian_vector(5, rng), d = gaussian_vector(5, rng);
  EXPECT_NEAR(quadratic_form(q, t0, d), 0.5 * d.dot(a * d), 1e-12);
}

TEST(LayerNeuronFamily, DomainsAndGradients) {
  Rng rng(35);
  auto [net, theta] =
      build_network(make_spec(3, {5, 4}, Activation::tanh, Architecture::mlp), rng);
  const Vector x = gaussian_vector(3, rng);
  const LayerNeuronFamily fam(net, x, 2, Stage::post);
  EXPECT_EQ(fam.size(), 4u);
  const auto dom = fam.domain(1);
  EXPECT_EQ(total_length(dom), 15u + 5u);
  const Vector g = fam.gradient(1, theta.values());
  EXPECT_EQ(g, grad(net, theta, x, GradTarget::neuron(2, 1, Stage::post)).values());
  // The gradient lives inside the domain.
  Vector masked = g;
  for (const Slice& s : dom) masked.segment(s.offset, s.length).setZero();
  EXPECT_EQ(masked.norm(), 0.0);
}
