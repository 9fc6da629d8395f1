#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "widenet/assembly.hpp"
#include "widenet/batch.hpp"
#include "widenet/grad.hpp"

namespace widenet {

// ---------------------------------------------------------------------------
// Taylor remainder

enum class BoundKind { none, assembly, deep };

struct RemainderReport {
  std::size_t width = 0;
  double radius = 0.0;
  std::string target;
  double remainder = 0.0;  // max |f(theta0 + D) - f(theta0) - <grad, D>| over probes
  double bound = 0.0;
  BoundKind bound_kind = BoundKind::none;
  double beta = 0.0;
  std::size_t probes = 0;
  std::size_t beta_probes = 0;
  bool pass = false;
  bool beta_reestimated = false;  // set when the first estimate was too small
  std::vector<double> samples;    // |remainder| per probe
};

struct RemainderOptions {
  double radius = 1.0;
  std::size_t probes = 200;
  std::size_t beta_probes = 200;
  /// Re-estimate beta with ten times the probes before reporting a violation.
  bool retry = true;
};

/// Unit direction for probe k.
using DirectionSampler = std::function<Vector(std::size_t k, Rng& rng)>;

/// |quadratic_form| for each probe. Radii are stratified over (0, R] in four
/// bands; directions come from `directions`.
std::vector<double> probe_remainders(const ParametricFunction& f, const Vector& theta0,
                                     double radius, std::size_t probes,
                                     const DirectionSampler& directions, Rng& rng);

/// Assembly model: bound beta R^2 / (2 s(m)), beta sampled over the sub-models.
/// Probes alternate between the whole sphere and directions confined to one
/// sub-model's slice.
RemainderReport remainder_at(const AssemblyModel& model, const Vector& theta0, const Vector& x,
                             const RemainderOptions& options, Rng& rng);

/// Network neuron (or output) a~(l+1) with the weights of layer l+1 frozen:
/// probes move theta(l) only and the bound is
/// beta R^2 max_j |w_ij(l+1)| / (2 sqrt(m_l)), beta sampled over a(l).
/// Layer-1 targets are linear; their bound is zero up to rounding.
RemainderReport remainder_at(const Network& net, const ParamVector& theta0, const Vector& x,
                             const GradTarget& target, const RemainderOptions& options, Rng& rng);

// ---------------------------------------------------------------------------
// Gradient orthogonality

struct CosineStats {
  double mean_abs_cos = 0.0;
  std::size_t n_pairs = 0;
  std::size_t skipped = 0;           // pairs with a zero gradient
  std::vector<double> per_sample;    // mean |cos| for each input
  std::size_t layer = 0;
  std::size_t width = 0;
};

/// |<a, b>| / (|a| |b|); NaN when either vector is zero.
double abs_cosine(const Vector& a, const Vector& b);

/// Mean |cos| between pre-activation gradients of distinct neurons of `layer`,
/// averaged over the inputs (rows). When the layer has more pairs than
/// max_pairs, each input draws a random subset of K neurons (smallest K with
/// K(K-1)/2 >= max_pairs) and then max_pairs distinct pairs inside it.
CosineStats cosine_stats(const Network& net, const ParamVector& theta, std::size_t layer,
                         const DenseMatrix& inputs, std::size_t max_pairs, Rng& rng);

// ---------------------------------------------------------------------------
// Normal-vector constancy

/// min over probes of cos(grad a~_i(theta0), grad a~_i(theta0 + D)), with D
/// moving theta(l-1) only (the neuron's own row and later layers frozen).
/// Half the probes are uniform on the sphere, half follow the gradient of a
/// random neuron of layer l-1. Layer-1 targets have a constant gradient.
double normal_constancy(const Network& net, const ParamVector& theta0, const GradTarget& target,
                        double radius, std::size_t probes, const Vector& x, Rng& rng);

// ---------------------------------------------------------------------------
// Neural tangent kernel

struct NtkMatrix {
  DenseMatrix k;

  std::size_t size() const { return static_cast<std::size_t>(k.rows()); }
  double min_eigenvalue() const;
  /// min eigenvalue >= -tol * trace.
  bool is_psd(double tol = 1e-10) const;
};

NtkMatrix ntk(const Network& net, const ParamVector& theta, const DenseMatrix& inputs);

/// ||K_t - K_0||_F / ||K_0||_F; degenerate_input when K_0 = 0.
double ntk_drift(const NtkMatrix& k0, const NtkMatrix& kt);

// ---------------------------------------------------------------------------
// Monte-Carlo checks of the probability bounds

struct MonteCarloResult {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double fraction = 0.0;
  double bound = 0.0;          // analytic lower bound on the probability
  bool vacuous = false;        // bound <= 0
  double standard_error = 0.0;
  /// fraction >= max(0, bound) - 3 SE, or vacuous.
  bool consistent = false;
};

/// P(||W|| <= 3 sqrt(m)) for m x m standard Gaussian W; bound 1 - 2 exp(-m/2).
MonteCarloResult verify_weight_spectral(std::size_t m, std::size_t trials, Rng& rng);
/// P(||w||^2 <= 5m) for w ~ N(0, I_m); bound 1 - exp(-m).
MonteCarloResult verify_chi_square(std::size_t m, std::size_t trials, Rng& rng);
/// P(max_i |v_i| <= ln m) for m i.i.d. N(0, 1); bound 1 - 2 exp(-ln^2(m)/2 + ln m).
MonteCarloResult verify_max_gaussian(std::size_t m, std::size_t trials, Rng& rng);

// ---------------------------------------------------------------------------
// Cross term with trainable next-layer weights

struct CrossTerm {
  double a = 0.0;      // remainder moving only w_i(l+1)
  double b = 0.0;      // remainder moving only theta(l)
  double c = 0.0;      // full - a - b
  double full = 0.0;
  double radius = 0.0;          // ||D|| restricted to w_i(l+1) and theta(l)
  double bound = 0.0;           // R^2 sqrt(C_hat) / sqrt(m_l)
  double gram_spectral = 0.0;   // C_hat
  double f0 = 0.0;              // target value at theta0
};

/// Splits D = theta - theta0 for the target a~_i(l+1) (the output when l+1 = L).
/// Components outside w_i(l+1) and theta(l) are ignored. gram_spectral < 0
/// asks for C_hat to be computed at theta0.
CrossTerm cross_term(const Network& net, const ParamVector& theta0, const ParamVector& theta,
                     const Vector& x, std::size_t layer, std::size_t index = 0,
                     double gram_spectral = -1.0);

struct CrossTermSweepPoint {
  double max_abs_a = 0.0;
  double max_abs_b = 0.0;
  double max_abs_c = 0.0;
  double max_abs_f = 0.0;
  double c_bound = 0.0;
  double b_bound = 0.0;        // deep-net bound on |B| at the sampled beta
  double beta = 0.0;
  bool a_zero = false;         // |A| <= 1e-12 (1 + |f|) on every probe
  bool b_within_bound = false;
  bool c_within_bound = false;
  std::size_t probes = 0;
};

/// Probes a ball of radius R around theta0 for the output's cross term at
/// layer l = L - 1. Probe 0 is aligned with the top singular pair of the
/// layer-l Jacobian, the rest mix uniform directions with probes along the
/// gradient of a single layer-l neuron.
CrossTermSweepPoint cross_term_probe(const Network& net, const ParamVector& theta0,
                                     const Vector& x, std::size_t layer, double radius,
                                     std::size_t probes, std::size_t beta_probes, Rng& rng);

}  // namespace widenet
