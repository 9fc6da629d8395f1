#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/SVD>

#include "widenet/linearity.hpp"

namespace widenet {

namespace {

constexpr std::size_t kChunk = 256;

// Trials run in fixed-size chunks; chunk c draws from rng.child(c), so the
// result does not depend on how chunks are scheduled.
MonteCarloResult run_trials(std::size_t trials, double bound, Rng& rng,
                            const std::function<bool(Rng&)>& trial) {
  if (trials == 0) fail(ErrorKind::degenerate_input, "a Monte-Carlo check needs trials > 0");
  MonteCarloResult r;
  r.trials = trials;
  const std::size_t chunks = (trials + kChunk - 1) / kChunk;
  for (std::size_t c = 0; c < chunks; ++c) {
    Rng local = rng.child(c);
    const std::size_t n = std::min(kChunk, trials - c * kChunk);
    for (std::size_t t = 0; t < n; ++t) r.successes += trial(local) ? 1 : 0;
  }
  // Advance the caller's stream so repeated calls draw fresh chunks.
  rng.next_u64();

  const auto nt = static_cast<double>(trials);
  r.fraction = static_cast<double>(r.successes) / nt;
  r.bound = bound;
  r.vacuous = !(bound > 0.0);
  // Floor the standard error at the 1/n resolution so fractions of exactly 1
  // still carry a non-zero uncertainty.
  r.standard_error = std::max(std::sqrt(r.fraction * (1.0 - r.fraction) / nt), 1.0 / nt);
  r.consistent = r.vacuous || r.fraction >= std::max(0.0, bound) - 3.0 * r.standard_error;
  return r;
}

}  // namespace

MonteCarloResult verify_weight_spectral(std::size_t m, std::size_t trials, Rng& rng) {
  require(m >= 1, "m must be positive");
  const double limit = 3.0 * std::sqrt(static_cast<double>(m));
  const double bound = 1.0 - 2.0 * std::exp(-static_cast<double>(m) / 2.0);
  return run_trials(trials, bound, rng, [&](Rng& r) {
    const DenseMatrix w = gaussian_matrix(m, m, r);
    const double norm = Eigen::BDCSVD<Eigen::MatrixXd>(w).singularValues()(0);
    return norm <= limit;
  });
}

MonteCarloResult verify_chi_square(std::size_t m, std::size_t trials, Rng& rng) {
  require(m >= 1, "m must be positive");
  const double limit = 5.0 * static_cast<double>(m);
  const double bound = 1.0 - std::exp(-static_cast<double>(m));
  return run_trials(trials, bound, rng,
                    [&](Rng& r) { return gaussian_vector(m, r).squaredNorm() <= limit; });
}

MonteCarloResult verify_max_gaussian(std::size_t m, std::size_t trials, Rng& rng) {
  require(m >= 1, "m must be positive");
  const double lm = std::log(static_cast<double>(m));
  const double bound = 1.0 - 2.0 * std::exp(-0.5 * lm * lm + lm);
  return run_trials(trials, bound, rng, [&](Rng& r) {
    for (std::size_t i = 0; i < m; ++i)
      if (std::abs(r.normal()) > lm) return false;
    return true;
  });
}

}  // namespace widenet
