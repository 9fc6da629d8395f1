#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "widenet/batch.hpp"
#include "widenet/experiments.hpp"
#include "widenet/grad.hpp"

using namespace widenet;

namespace {

Dataset one_point(double x, double y) {
  Dataset d;
  d.inputs = DenseMatrix::Constant(1, 1, x);
  d.labels = Vector::Constant(1, y);
  return d;
}

SweepConfig tiny_cosine() {
  SweepConfig c;
  c.kind = SweepKind::cosine;
  c.experiment_id = "cosine";
  c.widths = {8, 16};
  c.seeds = {0};
  c.depth = 4;
  c.train = false;
  c.dataset.n = 4;
  c.dataset.dim = 6;
  c.max_pairs = 50;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gradient descent

TEST(TrainGd, LinearModelHandComputedSteps) {
  // f = theta x with x = 1, y = 1, lr 0.5: theta 0 -> 0.5 -> 0.75 -> 0.875.
  const LinearModel model(1);
  const Trajectory t = train_gd(model, Vector::Zero(1), one_point(1.0, 1.0), 0.5, 3);
  ASSERT_EQ(t.loss.size(), 4u);
  EXPECT_DOUBLE_EQ(t.loss[0], 0.5);
  EXPECT_DOUBLE_EQ(t.loss[1], 0.125);
  EXPECT_DOUBLE_EQ(t.loss[2], 0.03125);
  EXPECT_DOUBLE_EQ(t.final_theta(0), 0.875);
  EXPECT_DOUBLE_EQ(t.distance[2], 0.75);
}

TEST(TrainGd, HookSeesCheckpointsInOrder) {
  const LinearModel model(1);
  std::vector<std::pair<std::size_t, double>> seen;
  train_gd(model, Vector::Zero(1), one_point(1.0, 1.0), 0.5, 4, {2, 0, 4},
           [&](std::size_t s, const Vector& th) { seen.emplace_back(s, th(0)); });
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0], (std::pair<std::size_t, double>{0, 0.0}));
  EXPECT_EQ(seen[1], (std::pair<std::size_t, double>{2, 0.75}));
  EXPECT_EQ(seen[2].first, 4u);
}

TEST(TrainGd, OvershootingLearningRateDiverges) {
  const LinearModel model(1);
  try {
    train_gd(model, Vector::Zero(1), one_point(1.0, 1.0), 5.0, 2000);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
    EXPECT_GT(e.step(), 0u);
  }
}

TEST(TrainGd, RejectsNonSignLabels) {
  const LinearModel model(1);
  EXPECT_THROW(train_gd(model, Vector::Zero(1), one_point(1.0, 0.3), 0.1, 1), Error);
}

TEST(TrainGd, NetworkLossDecreasesAtDefaultRate) {
  Rng rng(71);
  NetworkSpec s;
  s.input_dim = 6;
  s.hidden_widths = {64, 64};
  auto [net, theta] = build_network(s, rng);
  const Dataset data = synthetic_dataset(6, 10, rng);
  const double lr = default_learning_rate(net, theta, data.inputs);
  EXPECT_GT(lr, 0.0);
  EXPECT_LT(lr, 1.0);
  const Trajectory t = train_gd(NetworkModel(net), theta.values(), data, lr, 50);
  EXPECT_LT(t.loss.back(), t.loss.front());
  for (std::size_t i = 1; i < t.loss.size(); ++i) EXPECT_LE(t.loss[i], t.loss[i - 1] + 1e-12);
}

TEST(NetworkModel, PullbackIsSumOfGradients) {
  Rng rng(72);
  NetworkSpec s;
  s.input_dim = 3;
  s.hidden_widths = {5, 4};
  s.architecture = Architecture::densenet;
  auto [net, theta] = build_network(s, rng);
  const DenseMatrix xs = gaussian_matrix(3, 3, rng);
  const Vector c = gaussian_vector(3, rng);
  const NetworkModel model(net);
  Vector want = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index a = 0; a < 3; ++a) {
    want += c(a) * grad(net, theta, xs.row(a).transpose(), GradTarget::output()).values();
    EXPECT_NEAR(model.predict(theta.values(), xs)(a),
                evaluate(net, theta, xs.row(a).transpose()), 1e-13);
  }
  EXPECT_LE((model.pullback(theta.values(), xs, c) - want).norm(), 1e-12);
}

// ---------------------------------------------------------------------------
// Fits

TEST(Fits, LogLogSlopeIsExactOnPowerLaws) {
  const std::vector<double> x = {8, 16, 32, 64};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  const SlopeFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, -0.5, 1e-14);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_EQ(f.points, 4u);
}

TEST(Fits, NeedsThreeDistinctWidthsAndPositiveValues) {
  EXPECT_THROW(fit_loglog({8, 16}, {1, 2}), Error);
  EXPECT_THROW(fit_loglog({8, 8, 16}, {1, 2, 3}), Error);
  EXPECT_THROW(fit_loglog({8, 16, 32}, {1, 0, 3}), Error);
}

TEST(Fits, MedianSkipsDegenerateRows) {
  const std::vector<MetricsRow> rows = {
      {"e", 8, 0, 1, "m", 1.0, false, 1},  {"e", 8, 1, 1, "m", 3.0, false, 1},
      {"e", 8, 2, 1, "m", 0.0, true, 0},   {"e", 8, 3, 1, "m", 2.0, false, 1},
      {"e", 16, 0, 1, "m", 0.5, false, 1}, {"e", 16, 0, 2, "m", 9.0, false, 1},
      {"e", 16, 0, 1, "other", 7.0, false, 1},
  };
  const auto med = median_by_width(rows, "m", 1);
  ASSERT_EQ(med.size(), 2u);
  EXPECT_EQ(med.at(8), 2.0);
  EXPECT_EQ(med.at(16), 0.5);
  EXPECT_TRUE(strictly_decreasing(med));
  EXPECT_FALSE(strictly_increasing(med));
  EXPECT_FALSE(strictly_decreasing({{8, 1.0}}));
}

// ---------------------------------------------------------------------------
// Sweeps

TEST(Sweep, ConfigValidation) {
  SweepConfig c = tiny_cosine();
  EXPECT_NO_THROW(c.validate());
  c.widths = {16, 8};
  EXPECT_THROW(c.validate(), std::exception);
  c = tiny_cosine();
  c.depth = 1;
  EXPECT_THROW(c.validate(), std::exception);
  c = tiny_cosine();
  c.seeds.clear();
  EXPECT_THROW(c.validate(), std::exception);
  EXPECT_EQ(parse_sweep_kind("crossterm"), SweepKind::crossterm);
  EXPECT_EQ(to_string(SweepKind::gram), "gram");
  EXPECT_THROW(parse_sweep_kind("bogus"), Error);
}

TEST(Sweep, TinyCosineSweepRowLayout) {
  const std::vector<MetricsRow> rows = run_sweep(tiny_cosine());
  // Two widths, layers 2 and 3, one seed, no training.
  ASSERT_EQ(rows.size(), 4u);
  for (const MetricsRow& r : rows) {
    EXPECT_EQ(r.experiment_id, "cosine");
    EXPECT_EQ(r.metric, "mean_abs_cos@init");
    EXPECT_FALSE(r.degenerate);
    EXPECT_GT(r.value, 0.0);
    EXPECT_LT(r.value, 1.0);
    EXPECT_TRUE(r.layer == 2 || r.layer == 3);
  }
  EXPECT_EQ(rows[0].width, 8u);
  EXPECT_EQ(rows[3].width, 16u);
}

TEST(Sweep, TrainedCosineAddsRows) {
  SweepConfig c = tiny_cosine();
  c.train = true;
  c.steps = 5;
  const std::vector<MetricsRow> rows = run_sweep(c);
  std::size_t trained = 0, loss = 0;
  for (const MetricsRow& r : rows) {
    trained += r.metric == "mean_abs_cos@trained";
    loss += r.metric == "final_loss";
  }
  EXPECT_EQ(trained, 4u);
  EXPECT_EQ(loss, 2u);
}

TEST(Sweep, SingleNeuronBottleneckIsDegenerate) {
  SweepConfig c;
  c.kind = SweepKind::bottleneck;
  c.experiment_id = "bottleneck";
  c.widths = {1, 4};
  c.seeds = {0};
  c.outer_width = 16;
  c.train = false;
  c.dataset.n = 3;
  c.dataset.dim = 5;
  const std::vector<MetricsRow> rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].degenerate);
  EXPECT_EQ(rows[0].width, 1u);
  EXPECT_FALSE(rows[1].degenerate);
}

TEST(Sweep, JobsDoNotChangeResults) {
  SweepConfig c = tiny_cosine();
  c.seeds = {0, 1, 2};
  c.jobs = 1;
  const auto serial = run_sweep(c);
  c.jobs = 4;
  EXPECT_EQ(run_sweep(c), serial);
}

TEST(Sweep, RemainderSummaryOnSmallWidths) {
  SweepConfig c;
  c.kind = SweepKind::remainder;
  c.experiment_id = "remainder";
  c.widths = {64, 256, 1024};
  c.seeds = {0, 1, 2};
  c.depth = 2;
  c.dataset.dim = 8;
  c.probes = 40;
  c.beta_probes = 40;
  const auto rows = run_sweep(c);
  for (const SummaryLine& s : summarize(SweepKind::remainder, rows))
    EXPECT_TRUE(s.pass) << s.name << ": " << s.detail;
}

// ---------------------------------------------------------------------------
// Worker pool

TEST(ParallelMap, KeepsIndexOrder) {
  const auto out =
      parallel_map<std::size_t>(50, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(out[i], i * i);
}

TEST(ParallelMap, RethrowsLowestIndexFailure) {
  try {
    parallel_map<int>(20, 3, [](std::size_t i) -> int {
      if (i == 7 || i == 13) throw std::runtime_error("cell " + std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "cell 7");
  }
}
