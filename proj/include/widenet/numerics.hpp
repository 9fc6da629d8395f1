#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "widenet/error.hpp"

namespace widenet {

using Vector = Eigen::VectorXd;
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Deterministic pseudo-random source.
///
/// The engine is xoshiro256** seeded through SplitMix64. Uniform doubles take
/// the top 53 bits of a draw; standard normals use the Marsaglia polar method
/// (one spare value is cached). The stream is a pure function of the seed.
///
/// Child streams for parallel tasks are derived from the *construction seed*,
/// not the current state: `child(task)` always returns the same stream for
/// the same `(seed, task)` pair regardless of how many draws were made.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_left();
  double normal();
  /// +1 or -1 with equal probability.
  double rademacher();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  Rng child(std::uint64_t task) const { return Rng(mix_seed(seed_, task)); }

  /// SplitMix64-based mixing of (seed, task) into an independent child seed.
  static std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t task);

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  std::optional<double> spare_normal_;
};

/// i.i.d. N(0, 1) entries, filled row by row.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);
Vector gaussian_vector(std::size_t n, Rng& rng);

/// Uniformly distributed vector on the sphere of the given radius.
Vector sphere_sample(std::size_t dim, double radius, Rng& rng);

using LinearOperator = std::function<Vector(const Vector&)>;

struct PowerIterationOptions {
  double tol = 1e-6;
  std::size_t max_iter = 500;
  std::uint64_t seed = 0x5eedULL;
};

struct SpectralEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
};

struct SingularTriplet {
  double sigma = 0.0;
  Vector left;   // unit vector in the output space
  Vector right;  // unit vector in the input space
  std::size_t iterations = 0;
};

/// Largest singular value of a matrix-free operator A: R^dim_in -> R^dim_out.
///
/// Runs power iteration on whichever Gram operator (A A^T or A^T A) is
/// smaller. Stops once the relative change of the estimate drops below
/// `tol`; throws ConvergenceError carrying the last estimate otherwise.
SingularTriplet top_singular_triplet(const LinearOperator& apply,
                                     const LinearOperator& apply_transpose,
                                     std::size_t dim_in, std::size_t dim_out,
                                     const PowerIterationOptions& options = {});

SpectralEstimate spectral_norm(const LinearOperator& apply,
                               const LinearOperator& apply_transpose,
                               std::size_t dim_in, std::size_t dim_out,
                               const PowerIterationOptions& options = {});

/// Convenience overload for an explicit matrix.
SpectralEstimate spectral_norm(const DenseMatrix& a,
                               const PowerIterationOptions& options = {});

using ScalarFunction = std::function<double(const Vector&)>;

/// Default finite-difference step for coordinate value x.
inline double default_fd_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

/// (f(x + h e_i) - f(x - h e_i)) / (2h). Throws numeric_failure when either
/// evaluation is not finite.
double central_diff(const ScalarFunction& f, const Vector& x, std::size_t i,
                    double h);
double central_diff(const ScalarFunction& f, const Vector& x, std::size_t i);

/// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const DenseMatrix& a);

/// Median of the values (copies; even counts average the middle pair).
double median(std::vector<double> values);

}  // namespace widenet
