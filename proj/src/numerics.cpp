#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "widenet/numerics.hpp"

namespace widenet {

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, "gaussian_matrix: dimensions must be >= 1");
  DenseMatrix out(rows, cols);
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = rng.normal();
  return out;
}

Vector gaussian_vector(std::size_t n, Rng& rng) {
  Vector out(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
  return out;
}

Vector sphere_sample(std::size_t dim, double radius, Rng& rng) {
  require(dim >= 1, "sphere_sample: dim must be >= 1");
  require(radius >= 0.0 && std::isfinite(radius),
          "sphere_sample: radius must be finite and >= 0");
  if (radius == 0.0) return Vector::Zero(static_cast<Eigen::Index>(dim));
  for (;;) {
    Vector v = gaussian_vector(dim, rng);
    const double norm = v.norm();
    if (norm > 0.0 && std::isfinite(norm)) return v * (radius / norm);
  }
}

namespace {

// One side of the power iteration: iterate u <- F(G(u)), where G maps the
// iterated space to the other space.
SingularTriplet power_iterate(const LinearOperator& to_other,
                              const LinearOperator& back, std::size_t dim,
                              std::size_t other_dim,
                              const PowerIterationOptions& options) {
  Rng rng(options.seed);
  Vector u = gaussian_vector(dim, rng);
  u /= u.norm();
  double previous = -1.0;
  double last_step = 0.0;
  double estimate = 0.0;
  for (std::size_t k = 1; k <= options.max_iter; ++k) {
    Vector w = to_other(u);
    require(static_cast<std::size_t>(w.size()) == other_dim,
            "spectral_norm: operator returned a vector of the wrong size");
    const double w_norm = w.norm();
    if (w_norm == 0.0) {
      return {0.0, u, Vector::Zero(static_cast<Eigen::Index>(other_dim)), k};
    }
    Vector next = back(w);
    require(static_cast<std::size_t>(next.size()) == dim,
            "spectral_norm: adjoint returned a vector of the wrong size");
    const double next_norm = next.norm();
    estimate = next_norm / w_norm;
    if (!std::isfinite(estimate)) {
      fail(ErrorKind::numeric_failure, "spectral_norm: non-finite estimate");
    }
    // The estimates increase geometrically towards sigma; stop once the
    // extrapolated remaining gap is below tol.
    bool converged = false;
    if (previous >= 0.0) {
      const double step = std::abs(estimate - previous);
      const double ratio = last_step > 0.0 ? step / last_step : 1.0;
      const double tail = step == 0.0 ? 0.0 : ratio < 1.0 ? step * ratio / (1.0 - ratio) : INFINITY;
      // Near the rounding floor the step ratio is noise, so a step far below
      // tol is accepted on its own.
      converged = step <= 1e-3 * options.tol * estimate ||
                  (step <= options.tol * estimate && tail <= 0.5 * options.tol * estimate);
      last_step = step;
    }
    SingularTriplet triplet{estimate, u, w / w_norm, k};
    if (converged) return triplet;
    previous = estimate;
    if (next_norm == 0.0) return triplet;
    u = next / next_norm;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge in " +
                             std::to_string(options.max_iter) + " iterations",
                         estimate, options.max_iter);
}

}  // namespace

SingularTriplet top_singular_triplet(const LinearOperator& apply,
                                     const LinearOperator& apply_transpose,
                                     std::size_t dim_in, std::size_t dim_out,
                                     const PowerIterationOptions& options) {
  require(dim_in >= 1 && dim_out >= 1, "spectral_norm: dimensions must be >= 1");
  require(options.tol > 0.0, "spectral_norm: tol must be positive");
  require(options.max_iter >= 1, "spectral_norm: max_iter must be >= 1");
  if (dim_out <= dim_in) {
    // Iterate in the output space on A A^T.
    SingularTriplet t =
        power_iterate(apply_transpose, apply, dim_out, dim_in, options);
    return {t.sigma, t.left, t.right, t.iterations};
  }
  SingularTriplet t = power_iterate(apply, apply_transpose, dim_in, dim_out, options);
  // power_iterate reports (iterated, other) = (right, left) here.
  return {t.sigma, t.right, t.left, t.iterations};
}

SpectralEstimate spectral_norm(const LinearOperator& apply,
                               const LinearOperator& apply_transpose,
                               std::size_t dim_in, std::size_t dim_out,
                               const PowerIterationOptions& options) {
  const SingularTriplet t =
      top_singular_triplet(apply, apply_transpose, dim_in, dim_out, options);
  return {t.sigma, t.iterations};
}

SpectralEstimate spectral_norm(const DenseMatrix& a,
                               const PowerIterationOptions& options) {
  return spectral_norm([&a](const Vector& x) -> Vector { return a * x; },
                       [&a](const Vector& y) -> Vector { return a.transpose() * y; },
                       static_cast<std::size_t>(a.cols()),
                       static_cast<std::size_t>(a.rows()), options);
}

double central_diff(const ScalarFunction& f, const Vector& x, std::size_t i,
                    double h) {
  require(i < static_cast<std::size_t>(x.size()), "central_diff: index out of range");
  require(h > 0.0, "central_diff: step must be positive");
  Vector probe = x;
  const auto idx = static_cast<Eigen::Index>(i);
  probe(idx) = x(idx) + h;
  const double plus = f(probe);
  probe(idx) = x(idx) - h;
  const double minus = f(probe);
  if (!std::isfinite(plus) || !std::isfinite(minus)) {
    fail(ErrorKind::numeric_failure, "central_diff: function value is not finite");
  }
  return (plus - minus) / (2.0 * h);
}

double central_diff(const ScalarFunction& f, const Vector& x, std::size_t i) {
  require(i < static_cast<std::size_t>(x.size()), "central_diff: index out of range");
  return central_diff(f, x, i, default_fd_step(x(static_cast<Eigen::Index>(i))));
}

Vector symmetric_eigenvalues(const DenseMatrix& a) {
  require(a.rows() == a.cols(), "symmetric_eigenvalues: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(a),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::numeric_failure, "symmetric_eigenvalues: solver failed");
  }
  return solver.eigenvalues();
}

double median(std::vector<double> values) {
  require(!values.empty(), "median: no values");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace widenet

namespace widenet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::convergence_failure: return "convergence-failure";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::unsupported_activation: return "unsupported-activation";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::format_error: return "format-error";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::usage_error: return "usage-error";
  }
  return "unknown";
}

}  // namespace widenet
