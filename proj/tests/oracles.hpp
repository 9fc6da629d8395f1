#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the Eigen types and the activation scalars.

#include <cmath>
#include <vector>

#include "widenet/activation.hpp"
#include "widenet/network.hpp"

namespace oracle {

using widenet::Activation;
using widenet::Architecture;
using widenet::NetworkSpec;
using widenet::Vector;

/// Pre- and post-activations by plain loops over the flat parameter vector.
struct NaiveTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
  double output = 0.0;
};

inline NaiveTrace naive_forward(const NetworkSpec& spec, const Vector& theta, const Vector& x) {
  std::vector<std::size_t> widths = spec.hidden_widths;
  widths.push_back(1);
  std::vector<std::vector<double>> acts;  // acts[0] = x, acts[k] = a(k)
  acts.emplace_back(x.data(), x.data() + x.size());
  NaiveTrace tr;
  std::size_t offset = 0;
  for (std::size_t l = 1; l <= widths.size(); ++l) {
    std::vector<double> z;
    if (spec.architecture == Architecture::mlp) {
      z = acts[l - 1];
    } else {
      for (std::size_t k = l; k-- > 0;) z.insert(z.end(), acts[k].begin(), acts[k].end());
    }
    const std::size_t m = widths[l - 1];
    std::vector<double> pre(m), post(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) s += theta(offset + i * z.size() + j) * z[j];
      pre[i] = s / std::sqrt(static_cast<double>(z.size()));
      post[i] = widenet::act::value(spec.activation, pre[i]);
    }
    offset += m * z.size();
    tr.pre.push_back(pre);
    tr.post.push_back(post);
    acts.push_back(post);
  }
  tr.output = tr.pre.back()[0];
  return tr;
}

inline std::size_t naive_parameter_count(const NetworkSpec& spec) {
  std::vector<std::size_t> widths = spec.hidden_widths;
  widths.push_back(1);
  std::size_t total = 0, prev = spec.input_dim, cumulative = spec.input_dim;
  for (std::size_t m : widths) {
    const std::size_t fan = spec.architecture == Architecture::mlp ? prev : cumulative;
    total += m * fan;
    prev = m;
    cumulative += m;
  }
  return total;
}

/// Central difference with a step chosen for the second-order error to sit
/// well below 1e-8 at unit-scale curvature.
template <class F>
double central(F&& f, Vector x, std::size_t i, double h = 1e-5) {
  const double x0 = x(static_cast<Eigen::Index>(i));
  x(static_cast<Eigen::Index>(i)) = x0 + h;
  const double plus = f(x);
  x(static_cast<Eigen::Index>(i)) = x0 - h;
  const double minus = f(x);
  return (plus - minus) / (2.0 * h);
}

/// P(X <= t) for X ~ chi-square with one degree of freedom.
inline double chi2_1_cdf(double t) { return std::erf(std::sqrt(t / 2.0)); }

/// P(max_i |v_i| <= t) for m i.i.d. standard normals.
inline double max_abs_gaussian_cdf(std::size_t m, double t) {
  return std::pow(std::erf(t / std::sqrt(2.0)), static_cast<double>(m));
}

}  // namespace oracle
