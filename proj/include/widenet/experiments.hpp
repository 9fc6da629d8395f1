#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "widenet/assembly.hpp"
#include "widenet/data_io.hpp"
#include "widenet/network.hpp"

namespace widenet {

// ---------------------------------------------------------------------------
// Training

/// Model interface for full-batch gradient descent on the square loss.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual std::size_t dim() const = 0;
  virtual Vector predict(const Vector& theta, const DenseMatrix& inputs) const = 0;
  /// sum_a c_a grad f(theta; x_a).
  virtual Vector pullback(const Vector& theta, const DenseMatrix& inputs,
                          const Vector& cotangent) const = 0;
};

class NetworkModel final : public TrainableModel {
 public:
  explicit NetworkModel(const Network& net) : net_(&net) {}

  std::size_t dim() const override { return net_->parameter_count(); }
  Vector predict(const Vector& theta, const DenseMatrix& inputs) const override;
  Vector pullback(const Vector& theta, const DenseMatrix& inputs,
                  const Vector& cotangent) const override;

 private:
  const Network* net_;
};

/// f(theta; x) = theta . x.
class LinearModel final : public TrainableModel {
 public:
  explicit LinearModel(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const override { return dim_; }
  Vector predict(const Vector& theta, const DenseMatrix& inputs) const override {
    return inputs * theta;
  }
  Vector pullback(const Vector&, const DenseMatrix& inputs,
                  const Vector& cotangent) const override {
    return inputs.transpose() * cotangent;
  }

 private:
  std::size_t dim_;
};

struct Trajectory {
  std::vector<double> loss;       // loss[t] at theta_t, t = 0..steps
  std::vector<double> distance;   // ||theta_t - theta_0||
  std::vector<std::size_t> checkpoints;
  Vector final_theta;
};

using CheckpointHook = std::function<void(std::size_t step, const Vector& theta)>;

/// theta_{t+1} = theta_t - lr grad(1/2 sum_a (f(theta_t; x_a) - y_a)^2).
/// The hook runs at every listed checkpoint step (0..steps). A non-finite
/// loss throws DivergenceError carrying the step.
Trajectory train_gd(const TrainableModel& model, const Vector& theta0, const Dataset& data,
                    double lr, std::size_t steps, const std::vector<std::size_t>& checkpoints = {},
                    const CheckpointHook& hook = {});

/// 1 / (1 + lambda_max(K_0)) for the NTK on the training inputs.
double default_learning_rate(const Network& net, const ParamVector& theta0,
                             const DenseMatrix& inputs);

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepKind { cosine, bottleneck, remainder, ntk, crossterm, constancy, gram };

SweepKind parse_sweep_kind(std::string_view name);
std::string_view to_string(SweepKind kind);

enum class DataSource { synthetic, cifar10 };

struct DatasetSpec {
  DataSource source = DataSource::synthetic;
  std::filesystem::path path;
  std::size_t n = 20;
  std::size_t dim = 64;               // synthetic input dimension
  PixelScaling pixels = PixelScaling::unit;
  bool fallback_synthetic = true;     // use synthetic data when CIFAR-10 is missing
};

struct SweepConfig {
  SweepKind kind = SweepKind::cosine;
  std::string experiment_id = "cosine";
  std::vector<std::size_t> widths;
  std::size_t depth = 4;
  Activation activation = Activation::tanh;
  Architecture architecture = Architecture::mlp;
  DatasetSpec dataset;
  std::vector<std::uint64_t> seeds;
  double radius = 1.0;
  std::optional<double> lr;           // empty: default_learning_rate
  std::size_t steps = 200;
  std::size_t checkpoint_every = 50;
  std::size_t probes = 200;
  std::size_t beta_probes = 200;
  std::size_t max_pairs = 2000;
  std::size_t outer_width = 256;      // bottleneck sweeps
  bool train = true;                  // cosine sweeps: also measure after training
  WeightRule weights = WeightRule::rademacher;
  std::size_t jobs = 1;

  void validate() const;
};

/// Builds the dataset shared by every width of one seed.
Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);

std::vector<MetricsRow> run_cosine_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_bottleneck_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_remainder_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_ntk_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_crossterm_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_constancy_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_gram_sweep(const SweepConfig& config);
std::vector<MetricsRow> run_sweep(const SweepConfig& config);

// ---------------------------------------------------------------------------
// Fits and summaries

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of ln y on ln x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Seed-median of `metric` per width (degenerate rows skipped).
std::map<std::size_t, double> median_by_width(const std::vector<MetricsRow>& rows,
                                              std::string_view metric,
                                              std::optional<std::size_t> layer = std::nullopt);

/// fit_loglog over the per-width medians.
SlopeFit slope_fit(const std::vector<MetricsRow>& rows, std::string_view metric,
                   std::optional<std::size_t> layer = std::nullopt);

bool strictly_decreasing(const std::map<std::size_t, double>& series);
bool strictly_increasing(const std::map<std::size_t, double>& series);

struct SummaryLine {
  std::string name;
  std::string detail;
  bool pass = false;
  bool applicable = true;  // false when the sweep is too small to judge
};

/// Trend and window verdicts for the rows of one sweep kind.
std::vector<SummaryLine> summarize(SweepKind kind, const std::vector<MetricsRow>& rows);

// ---------------------------------------------------------------------------
// Worker pool

/// Evaluates fn(0..n-1) on up to `jobs` threads and returns the results in
/// index order. The first exception (by index) is rethrown.
template <class T>
std::vector<T> parallel_map(std::size_t n, std::size_t jobs, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace widenet
