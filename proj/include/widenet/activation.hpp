#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "widenet/dual.hpp"

namespace widenet {

/// Supported activations. All are injective and twice differentiable; ReLU is
/// rejected when parsing.
enum class Activation { tanh, sigmoid, softplus, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation activation);

namespace act {

inline double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

inline double value(Activation kind, double a) {
  switch (kind) {
    case Activation::tanh: return std::tanh(a);
    case Activation::sigmoid: return logistic(a);
    case Activation::softplus:
      return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    case Activation::identity: return a;
  }
  return a;
}

inline double d1(Activation kind, double a) {
  switch (kind) {
    case Activation::tanh: {
      const double t = std::tanh(a);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = logistic(a);
      return s * (1.0 - s);
    }
    case Activation::softplus: return logistic(a);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

inline double d2(Activation kind, double a) {
  switch (kind) {
    case Activation::tanh: {
      const double t = std::tanh(a);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::sigmoid: {
      const double s = logistic(a);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Activation::softplus: {
      const double s = logistic(a);
      return s * (1.0 - s);
    }
    case Activation::identity: return 0.0;
  }
  return 0.0;
}

inline Dual value(Activation kind, const Dual& a) {
  return {value(kind, a.v), d1(kind, a.v) * a.d};
}

inline Dual d1(Activation kind, const Dual& a) {
  return {d1(kind, a.v), d2(kind, a.v) * a.d};
}

}  // namespace act
}  // namespace widenet
