#include "widenet/experiments.hpp"

#include <cmath>
#include <sstream>

#include "widenet/batch.hpp"
#include "widenet/grad.hpp"
#include "widenet/linearity.hpp"

namespace widenet {

// ---------------------------------------------------------------------------
// Training

Vector NetworkModel::predict(const Vector& theta, const DenseMatrix& inputs) const {
  return forward_batch(*net_, net_->wrap(theta), inputs).pre.back().col(0);
}

Vector NetworkModel::pullback(const Vector& theta, const DenseMatrix& inputs,
                              const Vector& cotangent) const {
  const ParamVector th = net_->wrap(theta);
  return batch_pullback(*net_, th, forward_batch(*net_, th, inputs), cotangent);
}

Trajectory train_gd(const TrainableModel& model, const Vector& theta0, const Dataset& data,
                    double lr, std::size_t steps, const std::vector<std::size_t>& checkpoints,
                    const CheckpointHook& hook) {
  require(lr >= 0.0 && std::isfinite(lr), "learning rate must be finite and non-negative");
  require(static_cast<std::size_t>(theta0.size()) == model.dim(), "theta0 has the wrong length");
  require(data.size() >= 1, "empty training set");
  for (Eigen::Index a = 0; a < data.labels.size(); ++a)
    require(data.labels(a) == 1.0 || data.labels(a) == -1.0, "labels must be +1 or -1");

  Trajectory tr;
  tr.checkpoints = checkpoints;
  Vector theta = theta0;
  std::size_t next_cp = 0;
  std::vector<std::size_t> cps = checkpoints;
  std::sort(cps.begin(), cps.end());
  for (std::size_t t = 0;; ++t) {
    const Vector residual = model.predict(theta, data.inputs) - data.labels;
    const double loss = 0.5 * residual.squaredNorm();
    if (!std::isfinite(loss))
      throw DivergenceError("loss became non-finite at step " + std::to_string(t), t);
    tr.loss.push_back(loss);
    tr.distance.push_back((theta - theta0).norm());
    while (next_cp < cps.size() && cps[next_cp] == t) {
      if (hook) hook(t, theta);
      ++next_cp;
    }
    if (t == steps) break;
    theta -= lr * model.pullback(theta, data.inputs, residual);
  }
  tr.final_theta = std::move(theta);
  return tr;
}

double default_learning_rate(const Network& net, const ParamVector& theta0,
                             const DenseMatrix& inputs) {
  const Vector eig = symmetric_eigenvalues(ntk(net, theta0, inputs).k);
  return 1.0 / (1.0 + eig(eig.size() - 1));
}

// ---------------------------------------------------------------------------
// Sweep plumbing

SweepKind parse_sweep_kind(std::string_view name) {
  static constexpr SweepKind kAll[] = {SweepKind::cosine,    SweepKind::bottleneck,
                                       SweepKind::remainder, SweepKind::ntk,
                                       SweepKind::crossterm, SweepKind::constancy,
                                       SweepKind::gram};
  for (SweepKind k : kAll)
    if (to_string(k) == name) return k;
  fail(ErrorKind::usage_error, "unknown sweep kind '" + std::string(name) + "'");
}

std::string_view to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::cosine: return "cosine";
    case SweepKind::bottleneck: return "bottleneck";
    case SweepKind::remainder: return "remainder";
    case SweepKind::ntk: return "ntk";
    case SweepKind::crossterm: return "crossterm";
    case SweepKind::constancy: return "constancy";
    case SweepKind::gram: return "gram";
  }
  return "?";
}

void SweepConfig::validate() const {
  require(!widths.empty(), "a sweep needs at least one width");
  require(!seeds.empty(), "a sweep needs at least one seed");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    require(widths[i] >= 1, "widths must be positive");
    require(i == 0 || widths[i] > widths[i - 1], "widths must be strictly increasing");
  }
  require(depth >= 2, "depth must be at least 2");
  require(radius >= 0.0, "radius must be non-negative");
  require(!lr || *lr >= 0.0, "learning rate must be non-negative");
  require(dataset.n >= 1 && dataset.dim >= 1, "dataset needs n >= 1 and dim >= 1");
  require(max_pairs >= 1, "max_pairs must be positive");
  require(jobs >= 1, "jobs must be positive");
  require(experiment_id.find_first_of(",\n\r") == std::string::npos && !experiment_id.empty(),
          "experiment id must be non-empty without commas");
}

namespace {

constexpr std::uint64_t kDataTask = 0xda7a5e7ULL;

struct Cell {
  std::size_t width;
  std::uint64_t seed;
};

MetricsRow row(const SweepConfig& c, const Cell& cell, std::size_t layer, std::string metric,
               double value, std::size_t n) {
  MetricsRow r;
  r.experiment_id = c.experiment_id;
  r.width = cell.width;
  r.seed = cell.seed;
  r.layer = layer;
  r.metric = std::move(metric);
  r.value = value;
  r.degenerate = !std::isfinite(value);
  r.n_samples = n;
  return r;
}

MetricsRow degenerate_row(const SweepConfig& c, const Cell& cell, std::size_t layer,
                          std::string metric) {
  MetricsRow r = row(c, cell, layer, std::move(metric), 0.0, 0);
  r.degenerate = true;
  return r;
}

using CellFn = std::function<std::vector<MetricsRow>(const SweepConfig&, const Cell&)>;

std::vector<MetricsRow> run_cells(const SweepConfig& config, const CellFn& fn) {
  config.validate();
  const std::size_t ns = config.seeds.size();
  const std::size_t n = config.widths.size() * ns;
  auto results = parallel_map<std::vector<MetricsRow>>(n, config.jobs, [&](std::size_t i) {
    return fn(config, Cell{config.widths[i / ns], config.seeds[i % ns]});
  });
  std::vector<MetricsRow> rows;
  for (auto& r : results)
    for (auto& x : r) rows.push_back(std::move(x));
  return rows;
}

Rng cell_rng(const Cell& cell) { return Rng(Rng::mix_seed(cell.seed, cell.width)); }

NetworkSpec equal_width_spec(const SweepConfig& c, std::size_t d, std::size_t width) {
  NetworkSpec s;
  s.input_dim = d;
  s.hidden_widths.assign(c.depth - 1, width);
  s.activation = c.activation;
  s.architecture = c.architecture;
  return s;
}

double learning_rate(const SweepConfig& c, const Network& net, const ParamVector& theta0,
                     const Dataset& ds) {
  return c.lr ? *c.lr : default_learning_rate(net, theta0, ds.inputs);
}

void cosine_rows(const SweepConfig& c, const Cell& cell, const Network& net,
                 const ParamVector& theta, const Dataset& ds, const std::vector<std::size_t>& layers,
                 const std::string& stage, Rng& rng, std::vector<MetricsRow>& out) {
  for (std::size_t l : layers) {
    const std::string metric = "mean_abs_cos@" + stage;
    try {
      const CosineStats st = cosine_stats(net, theta, l, ds.inputs, c.max_pairs, rng);
      out.push_back(row(c, cell, l, metric, st.mean_abs_cos, st.n_pairs));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_input) throw;
      out.push_back(degenerate_row(c, cell, l, metric));
    }
  }
}

std::vector<MetricsRow> cosine_like_cell(const SweepConfig& c, const Cell& cell,
                                         const NetworkSpec& spec,
                                         const std::vector<std::size_t>& layers) {
  Rng rng = cell_rng(cell);
  const Dataset ds = make_dataset(c.dataset, cell.seed);
  NetworkSpec s = spec;
  s.input_dim = ds.dim();
  auto [net, theta0] = build_network(s, rng);
  std::vector<MetricsRow> out;
  cosine_rows(c, cell, net, theta0, ds, layers, "init", rng, out);
  if (c.train) {
    const double lr = learning_rate(c, net, theta0, ds);
    const Trajectory tr = train_gd(NetworkModel(net), theta0.values(), ds, lr, c.steps);
    cosine_rows(c, cell, net, net.wrap(tr.final_theta), ds, layers, "trained", rng, out);
    out.push_back(row(c, cell, 0, "final_loss", tr.loss.back(), ds.size()));
  }
  return out;
}

std::vector<std::size_t> checkpoint_steps(std::size_t steps, std::size_t every) {
  std::vector<std::size_t> cps;
  if (every == 0) every = steps == 0 ? 1 : steps;
  for (std::size_t t = 0; t <= steps; t += every) cps.push_back(t);
  if (cps.back() != steps) cps.push_back(steps);
  return cps;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

std::string series_text(const std::map<std::size_t, double>& s) {
  std::string out;
  for (const auto& [w, v] : s) out += (out.empty() ? "" : " ") + std::to_string(w) + ":" + fmt(v);
  return out;
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Rng rng(Rng::mix_seed(seed, kDataTask));
  if (spec.source == DataSource::cifar10) {
    try {
      return load_cifar10(spec.path, spec.n, rng, {0, 2, spec.pixels});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::io_error || !spec.fallback_synthetic) throw;
    }
  }
  return synthetic_dataset(spec.dim, spec.n, rng);
}

std::vector<MetricsRow> run_cosine_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    std::vector<std::size_t> layers;
    for (std::size_t l = 2; l < c.depth; ++l) layers.push_back(l);
    return cosine_like_cell(c, cell, equal_width_spec(c, 1, cell.width), layers);
  });
}

std::vector<MetricsRow> run_bottleneck_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    NetworkSpec s;
    s.input_dim = 1;
    s.hidden_widths = {c.outer_width, cell.width, c.outer_width};
    s.activation = c.activation;
    s.architecture = c.architecture;
    return cosine_like_cell(c, cell, s, {2});
  });
}

std::vector<MetricsRow> run_remainder_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    Rng rng = cell_rng(cell);
    const Dataset ds = make_dataset(c.dataset, cell.seed);
    const AssemblyModel model = two_layer_assembly(ds.dim(), cell.width, c.activation, c.weights,
                                                   Scaling::sqrt_m, rng);
    const Vector theta0 = gaussian_vector(model.dim(), rng);
    const RemainderReport rep = remainder_at(model, theta0, ds.inputs.row(0).transpose(),
                                             {c.radius, c.probes, c.beta_probes, true}, rng);
    return std::vector<MetricsRow>{
        row(c, cell, 2, "remainder", rep.remainder, rep.probes),
        row(c, cell, 2, "bound", rep.bound, rep.beta_probes),
        row(c, cell, 2, "beta", rep.beta, rep.beta_probes),
        row(c, cell, 2, "bound_ok", rep.pass ? 1.0 : 0.0, rep.probes),
    };
  });
}

std::vector<MetricsRow> run_ntk_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    Rng rng = cell_rng(cell);
    const Dataset ds = make_dataset(c.dataset, cell.seed);
    auto [net, theta0] = build_network(equal_width_spec(c, ds.dim(), cell.width), rng);
    const NtkMatrix k0 = ntk(net, theta0, ds.inputs);
    const double lr = learning_rate(c, net, theta0, ds);

    std::vector<MetricsRow> out;
    bool psd = true;
    double min_rel = INFINITY;
    double drift = 0.0;
    const std::vector<std::size_t> cps = checkpoint_steps(c.steps, c.checkpoint_every);
    const Trajectory tr =
        train_gd(NetworkModel(net), theta0.values(), ds, lr, c.steps, cps,
                 [&](std::size_t step, const Vector& theta) {
                   const NtkMatrix kt = ntk(net, net.wrap(theta), ds.inputs);
                   psd = psd && kt.is_psd();
                   min_rel = std::min(min_rel, kt.min_eigenvalue() / kt.k.trace());
                   drift = ntk_drift(k0, kt);
                   if (step > 0)
                     out.push_back(row(c, cell, 0, "ntk_drift@" + std::to_string(step), drift,
                                       ds.size()));
                 });
    out.push_back(row(c, cell, 0, "ntk_drift", drift, ds.size()));
    out.push_back(row(c, cell, 0, "ntk_psd", psd ? 1.0 : 0.0, cps.size()));
    out.push_back(row(c, cell, 0, "ntk_min_eig_rel", min_rel, cps.size()));
    out.push_back(row(c, cell, 0, "initial_loss", tr.loss.front(), ds.size()));
    out.push_back(row(c, cell, 0, "final_loss", tr.loss.back(), ds.size()));
    out.push_back(row(c, cell, 0, "distance", tr.distance.back(), c.steps));
    out.push_back(row(c, cell, 0, "lr", lr, 1));
    return out;
  });
}

std::vector<MetricsRow> run_crossterm_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    Rng rng = cell_rng(cell);
    const Dataset ds = make_dataset(c.dataset, cell.seed);
    auto [net, theta0] = build_network(equal_width_spec(c, ds.dim(), cell.width), rng);
    const std::size_t l = net.depth() - 1;
    const CrossTermSweepPoint pt = cross_term_probe(net, theta0, ds.inputs.row(0).transpose(), l,
                                                    c.radius, c.probes, c.beta_probes, rng);
    return std::vector<MetricsRow>{
        row(c, cell, l, "cross_a", pt.max_abs_a, pt.probes),
        row(c, cell, l, "cross_b", pt.max_abs_b, pt.probes),
        row(c, cell, l, "cross_c", pt.max_abs_c, pt.probes),
        row(c, cell, l, "c_bound", pt.c_bound, pt.probes),
        row(c, cell, l, "b_bound", pt.b_bound, c.beta_probes),
        row(c, cell, l, "beta", pt.beta, c.beta_probes),
        row(c, cell, l, "a_zero", pt.a_zero ? 1.0 : 0.0, pt.probes),
        row(c, cell, l, "b_ok", pt.b_within_bound ? 1.0 : 0.0, pt.probes),
        row(c, cell, l, "c_ok", pt.c_within_bound ? 1.0 : 0.0, pt.probes),
    };
  });
}

std::vector<MetricsRow> run_constancy_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    Rng rng = cell_rng(cell);
    const Dataset ds = make_dataset(c.dataset, cell.seed);
    NetworkSpec s = equal_width_spec(c, ds.dim(), cell.width);
    s.hidden_widths = {cell.width};
    auto [net, theta0] = build_network(s, rng);
    const Vector x = ds.inputs.row(0).transpose();
    const double deep = normal_constancy(net, theta0, GradTarget::output(), c.radius, c.probes, x, rng);
    const double first =
        normal_constancy(net, theta0, GradTarget::neuron(1, 0), c.radius, c.probes, x, rng);
    return std::vector<MetricsRow>{
        row(c, cell, 2, "min_cos", deep, c.probes),
        row(c, cell, 1, "min_cos", first, c.probes),
    };
  });
}

std::vector<MetricsRow> run_gram_sweep(const SweepConfig& config) {
  return run_cells(config, [](const SweepConfig& c, const Cell& cell) {
    Rng rng = cell_rng(cell);
    const Dataset ds = make_dataset(c.dataset, cell.seed);
    auto [net, theta0] = build_network(equal_width_spec(c, ds.dim(), cell.width), rng);
    const Vector x = ds.inputs.row(0).transpose();
    std::vector<MetricsRow> out;
    for (std::size_t l = 1; l < net.depth(); ++l) {
      out.push_back(row(c, cell, l, "jacobian_gram", dense_jacobian_gram_spectral(net, theta0, x, l),
                        net.width(l)));
    }
    return out;
  });
}

std::vector<MetricsRow> run_sweep(const SweepConfig& config) {
  switch (config.kind) {
    case SweepKind::cosine: return run_cosine_sweep(config);
    case SweepKind::bottleneck: return run_bottleneck_sweep(config);
    case SweepKind::remainder: return run_remainder_sweep(config);
    case SweepKind::ntk: return run_ntk_sweep(config);
    case SweepKind::crossterm: return run_crossterm_sweep(config);
    case SweepKind::constancy: return run_constancy_sweep(config);
    case SweepKind::gram: return run_gram_sweep(config);
  }
  fail(ErrorKind::invalid_argument, "unknown sweep kind");
}

// ---------------------------------------------------------------------------
// Fits and summaries

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "x and y differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log-log fit needs positive x and y");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 3, "slope fit needs at least 3 distinct x values");

  const auto n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  SlopeFit fit;
  fit.points = lx.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

std::map<std::size_t, double> median_by_width(const std::vector<MetricsRow>& rows,
                                              std::string_view metric,
                                              std::optional<std::size_t> layer) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const MetricsRow& r : rows)
    if (r.metric == metric && !r.degenerate && (!layer || r.layer == *layer))
      groups[r.width].push_back(r.value);
  std::map<std::size_t, double> out;
  for (auto& [w, v] : groups) out[w] = median(std::move(v));
  return out;
}

SlopeFit slope_fit(const std::vector<MetricsRow>& rows, std::string_view metric,
                   std::optional<std::size_t> layer) {
  const auto med = median_by_width(rows, metric, layer);
  std::vector<double> x, y;
  for (const auto& [w, v] : med) {
    x.push_back(static_cast<double>(w));
    y.push_back(v);
  }
  return fit_loglog(x, y);
}

bool strictly_decreasing(const std::map<std::size_t, double>& series) {
  if (series.size() < 2) return false;
  double prev = INFINITY;
  for (const auto& [w, v] : series) {
    if (!(v < prev)) return false;
    prev = v;
  }
  return true;
}

bool strictly_increasing(const std::map<std::size_t, double>& series) {
  if (series.size() < 2) return false;
  double prev = -INFINITY;
  for (const auto& [w, v] : series) {
    if (!(v > prev)) return false;
    prev = v;
  }
  return true;
}

namespace {

std::vector<std::size_t> layers_of(const std::vector<MetricsRow>& rows, std::string_view metric) {
  std::vector<std::size_t> out;
  for (const MetricsRow& r : rows)
    if (r.metric == metric && std::find(out.begin(), out.end(), r.layer) == out.end())
      out.push_back(r.layer);
  std::sort(out.begin(), out.end());
  return out;
}

SummaryLine trend_line(const std::string& name, const std::map<std::size_t, double>& med,
                       bool decreasing) {
  SummaryLine s;
  s.name = name;
  s.applicable = med.size() >= 2;
  s.pass = decreasing ? strictly_decreasing(med) : strictly_increasing(med);
  s.detail = "medians " + series_text(med);
  return s;
}

SummaryLine slope_line(const std::string& name, const std::vector<MetricsRow>& rows,
                       std::string_view metric, std::optional<std::size_t> layer, double lo,
                       double hi) {
  SummaryLine s;
  s.name = name;
  const auto med = median_by_width(rows, metric, layer);
  bool positive = true;
  for (const auto& [w, v] : med) positive = positive && v > 0.0;
  if (med.size() < 3 || !positive) {
    s.applicable = false;
    s.detail = "needs 3+ widths with positive medians";
    return s;
  }
  const SlopeFit fit = slope_fit(rows, metric, layer);
  s.pass = fit.slope >= lo && fit.slope <= hi;
  s.detail = "slope " + fmt(fit.slope) + " (r2 " + fmt(fit.r2) + "), window [" + fmt(lo) + ", " +
             fmt(hi) + "]";
  return s;
}

SummaryLine all_ones_line(const std::string& name, const std::vector<MetricsRow>& rows,
                          std::string_view metric, std::optional<std::size_t> layer = {}) {
  SummaryLine s;
  s.name = name;
  std::size_t total = 0, ones = 0;
  for (const MetricsRow& r : rows)
    if (r.metric == metric && (!layer || r.layer == *layer)) {
      ++total;
      ones += (!r.degenerate && r.value == 1.0) ? 1 : 0;
    }
  s.applicable = total > 0;
  s.pass = total > 0 && ones == total;
  s.detail = std::to_string(ones) + "/" + std::to_string(total) + " cells";
  return s;
}

}  // namespace

std::vector<SummaryLine> summarize(SweepKind kind, const std::vector<MetricsRow>& rows) {
  std::vector<SummaryLine> out;
  switch (kind) {
    case SweepKind::cosine:
    case SweepKind::bottleneck:
      for (const char* stage : {"init", "trained"}) {
        const std::string metric = std::string("mean_abs_cos@") + stage;
        for (std::size_t l : layers_of(rows, metric)) {
          const std::string tag = "layer " + std::to_string(l) + " @" + stage;
          out.push_back(trend_line(tag + " decreasing", median_by_width(rows, metric, l), true));
          if (kind == SweepKind::cosine)
            out.push_back(slope_line(tag + " slope", rows, metric, l, -0.8, -0.2));
        }
      }
      break;
    case SweepKind::remainder:
      out.push_back(slope_line("remainder slope", rows, "remainder", {}, -0.65, -0.35));
      out.push_back(all_ones_line("remainder within bound", rows, "bound_ok"));
      break;
    case SweepKind::ntk: {
      const auto med = median_by_width(rows, "ntk_drift");
      SummaryLine s;
      s.name = "drift smaller at the widest net";
      s.applicable = med.size() >= 2;
      s.pass = s.applicable && med.rbegin()->second < med.begin()->second;
      s.detail = "medians " + series_text(med);
      out.push_back(s);
      out.push_back(all_ones_line("NTK positive semidefinite", rows, "ntk_psd"));
      break;
    }
    case SweepKind::crossterm:
      out.push_back(slope_line("|C| slope", rows, "cross_c", {}, -0.8, -0.2));
      out.push_back(all_ones_line("A vanishes", rows, "a_zero"));
      out.push_back(all_ones_line("|B| within bound", rows, "b_ok"));
      out.push_back(all_ones_line("|C| within bound", rows, "c_ok"));
      break;
    case SweepKind::constancy: {
      out.push_back(trend_line("layer 2 min cos increasing", median_by_width(rows, "min_cos", 2),
                               false));
      SummaryLine s;
      s.name = "layer 1 min cos exactly 1";
      std::size_t total = 0, ones = 0;
      for (const MetricsRow& r : rows)
        if (r.metric == "min_cos" && r.layer == 1) {
          ++total;
          ones += (!r.degenerate && r.value == 1.0) ? 1 : 0;
        }
      s.applicable = total > 0;
      s.pass = total > 0 && ones == total;
      s.detail = std::to_string(ones) + "/" + std::to_string(total) + " cells";
      out.push_back(s);
      break;
    }
    case SweepKind::gram:
      for (std::size_t l : layers_of(rows, "jacobian_gram"))
        out.push_back(slope_line("layer " + std::to_string(l) + " Gram slope", rows,
                                 "jacobian_gram", l, -0.2, 0.2));
      break;
  }
  return out;
}

}  // namespace widenet
