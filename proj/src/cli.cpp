#include "widenet/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "widenet/batch.hpp"
#include "widenet/linearity.hpp"

namespace widenet {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io_error:
    case ErrorKind::format_error:
    case ErrorKind::insufficient_data: return kExitIo;
    case ErrorKind::usage_error:
    case ErrorKind::invalid_argument:
    case ErrorKind::unsupported_activation: return kExitUsage;
    default: return kExitCheckFailed;
  }
}

Config RunConfig::resolve() const {
  Config cfg = config_path ? Config::load(*config_path) : Config{};
  cfg.erase_section("manifest");
  if (dataset) {
    if (*dataset == "synthetic") {
      cfg.set("data", "source", "synthetic");
    } else if (dataset->rfind("cifar10:", 0) == 0 && dataset->size() > 8) {
      cfg.set("data", "source", "cifar10");
      cfg.set("data", "path", dataset->substr(8));
    } else {
      fail(ErrorKind::usage_error, "--dataset expects 'synthetic' or 'cifar10:<path>'");
    }
  }
  if (seed) cfg.set("run", "seed", std::to_string(*seed));
  if (jobs) cfg.set("run", "jobs", std::to_string(*jobs));
  for (const std::string& o : overrides) cfg.apply_override(o);
  return cfg;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string num(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

std::uint64_t run_seed(const Config& cfg) {
  const auto v = cfg.get("run", "seed");
  return v ? parse_uint(*v, "run.seed") : 0;
}

/// Defaults overlaid with the resolved config, minus the keys that must not
/// influence outputs.
Config effective_config(const Config& resolved) {
  Config merged = default_config();
  for (const auto& [section, keys] : resolved.sections())
    for (const auto& [k, v] : keys) merged.set(section, k, v);
  merged.erase("run", "jobs");
  return merged;
}

void write_manifest(const std::filesystem::path& path, const std::string& command,
                    const Config& effective) {
  std::string text = "[manifest]\n";
  text += "command = " + command + "\n";
  text += "config_hash = " + hex64(effective.hash()) + "\n";
  text += "seed = " + std::to_string(run_seed(effective)) + "\n";
  text += "tool_version = " + std::string(kToolVersion) + "\n\n";
  text += effective.canonical();
  write_text(path, text);
}

// ---------------------------------------------------------------------------
// verify

struct CheckResult {
  explicit CheckResult(std::string n) : name(std::move(n)) {}

  std::string name;
  std::uint64_t seed = 0;
  std::size_t width = 0;
  bool pass = false;
  bool vacuous = false;
  std::size_t samples = 0;
  std::string detail;
};

class Checker {
 public:
  Checker(const VerifyHooks& hooks, std::size_t width) : hooks_(hooks), width_(width) {}

  ParamVector gradient(const Network& net, const ParamVector& theta, const Vector& x,
                       const GradTarget& t) const {
    return hooks_.gradient ? hooks_.gradient(net, theta, x, t) : grad(net, theta, x, t);
  }

  std::vector<CheckResult> run(std::uint64_t seed, const Dataset& data) const {
    Rng rng(Rng::mix_seed(seed, 0x7e51f1ULL));
    std::vector<CheckResult> out;
    auto add = [&](CheckResult r) {
      r.seed = seed;
      out.push_back(std::move(r));
    };
    Rng r1 = rng.child(1), r2 = rng.child(2), r3 = rng.child(3), r4 = rng.child(4),
        r5 = rng.child(5), r6 = rng.child(6), r7 = rng.child(7), r8 = rng.child(8),
        r9 = rng.child(9), r10 = rng.child(10), r11 = rng.child(11), r12 = rng.child(12);
    add(gradient_fd(r1));
    add(hvp_fd(r2));
    add(hessian_symmetry(r3));
    add(cross_submodel_hvp(r4));
    add(jvp_vjp_adjoint(r5));
    add(batch_forward(r6, data));
    add(power_iteration(r7));
    add(ntk_psd(r8, data));
    add(monte_carlo("weight_spectral", 64, verify_weight_spectral(64, 1000, r9), 0.999));
    add(monte_carlo("chi_square", 32, verify_chi_square(32, 10000, r10), 1.0));
    add(monte_carlo("max_gaussian", 100, verify_max_gaussian(100, 10000, r11), 0.995));
    Rng r11b = rng.child(13);
    add(monte_carlo("max_gaussian_small_m", 3, verify_max_gaussian(3, 1000, r11b), 0.0));
    add(remainder_bound(r12, data));
    return out;
  }

 private:
  NetworkSpec spec(std::size_t d, std::size_t depth, Activation a, Architecture arch) const {
    NetworkSpec s;
    s.input_dim = d;
    s.hidden_widths.assign(depth - 1, width_);
    s.activation = a;
    s.architecture = arch;
    return s;
  }

  static double rel_err(double a, double b, double scale) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale});
  }

  CheckResult gradient_fd(Rng& rng) const {
    CheckResult r("gradient_fd");
    r.width = width_;
    double worst = 0.0;
    std::string worst_case;
    for (Activation a : {Activation::tanh, Activation::sigmoid, Activation::softplus,
                         Activation::identity})
      for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
        auto [net, theta] = build_network(spec(3, 3, a, arch), rng);
        const Vector x = gaussian_vector(3, rng);
        for (const GradTarget& t :
             {GradTarget::output(), GradTarget::neuron(2, rng.index(width_), Stage::pre),
              GradTarget::neuron(2, rng.index(width_), Stage::post)}) {
          const Vector g = gradient(net, theta, x, t).values();
          const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
          const ScalarFunction f = [&](const Vector& v) {
            return target_value(net, net.wrap(v), x, t);
          };
          for (int k = 0; k < 50; ++k) {
            const std::size_t i = rng.index(net.parameter_count());
            const double e = rel_err(g(i), central_diff(f, theta.values(), i), scale);
            ++r.samples;
            if (e > worst) {
              worst = e;
              worst_case = std::string(to_string(a)) + "/" + std::string(to_string(arch));
            }
          }
        }
      }
    r.pass = worst <= 1e-6;
    r.detail = "max rel err " + num(worst) + (worst_case.empty() ? "" : " (" + worst_case + ")");
    return r;
  }

  CheckResult hvp_fd(Rng& rng) const {
    CheckResult r("hvp_fd");
    r.width = width_;
    double worst = 0.0;
    for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
      auto [net, theta] = build_network(spec(3, 3, Activation::tanh, arch), rng);
      const Vector x = gaussian_vector(3, rng);
      const Vector v = sphere_sample(net.parameter_count(), 1.0, rng);
      const GradTarget t = GradTarget::output();
      const Vector hv = hvp(net, theta, x, v, t).values();
      const double h = 1e-5;
      const Vector fd = (gradient(net, theta.with_values(theta.values() + h * v), x, t).values() -
                         gradient(net, theta.with_values(theta.values() - h * v), x, t).values()) /
                        (2 * h);
      worst = std::max(worst, (hv - fd).norm() / std::max(fd.norm(), 1e-12));
      ++r.samples;
    }
    r.pass = worst <= 1e-5;
    r.detail = "max rel err " + num(worst);
    return r;
  }

  CheckResult hessian_symmetry(Rng& rng) const {
    CheckResult r("hessian_symmetry");
    r.width = width_;
    auto [net, theta] = build_network(spec(3, 3, Activation::softplus, Architecture::densenet), rng);
    const Vector x = gaussian_vector(3, rng);
    const Vector u = gaussian_vector(net.parameter_count(), rng);
    const Vector v = gaussian_vector(net.parameter_count(), rng);
    const double uhv = u.dot(hvp(net, theta, x, v, GradTarget::output()).values());
    const double vhu = v.dot(hvp(net, theta, x, u, GradTarget::output()).values());
    const double e = rel_err(uhv, vhu, 1e-300);
    r.samples = 1;
    r.pass = e <= 1e-10;
    r.detail = "rel asymmetry " + num(e);
    return r;
  }

  CheckResult cross_submodel_hvp(Rng& rng) const {
    CheckResult r("cross_submodel_hvp");
    r.width = width_;
    NetworkSpec s = spec(3, 2, Activation::tanh, Architecture::mlp);
    auto [net, theta] = build_network(s, rng);
    const Vector x = gaussian_vector(3, rng);
    const auto slices = two_layer_slices(3, width_);
    double worst = 0.0;
    for (std::size_t j = 0; j < width_; ++j) {
      const Vector v = embed(slices[j], gaussian_vector(total_length(slices[j]), rng),
                             net.parameter_count());
      const Vector hv = hvp(net, theta, x, v, GradTarget::output()).values();
      for (std::size_t i = 0; i < width_; ++i) {
        if (i == j) continue;
        for (const Slice& sl : slices[i])
          worst = std::max(worst, hv.segment(sl.offset, sl.length).cwiseAbs().maxCoeff());
        ++r.samples;
      }
    }
    r.pass = worst == 0.0;
    r.detail = "max |off-block| " + num(worst);
    return r;
  }

  CheckResult jvp_vjp_adjoint(Rng& rng) const {
    CheckResult r("jvp_vjp_adjoint");
    r.width = width_;
    double worst = 0.0;
    for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
      auto [net, theta] = build_network(spec(3, 4, Activation::tanh, arch), rng);
      const Vector x = gaussian_vector(3, rng);
      for (std::size_t l = 1; l < net.depth(); ++l) {
        const Vector v = gaussian_vector(net.parameter_count(), rng);
        const Vector u = gaussian_vector(net.width(l), rng);
        const double a = u.dot(jvp(net, theta, x, l, Stage::post, v));
        const double b = vjp(net, theta, x, l, Stage::post, u).dot(v);
        worst = std::max(worst, rel_err(a, b, 1e-300));
        ++r.samples;
      }
    }
    r.pass = worst <= 1e-10;
    r.detail = "max rel err " + num(worst);
    return r;
  }

  CheckResult batch_forward(Rng& rng, const Dataset& data) const {
    CheckResult r("batch_forward");
    r.width = width_;
    double worst = 0.0;
    for (Architecture arch : {Architecture::mlp, Architecture::densenet}) {
      auto [net, theta] = build_network(spec(data.dim(), 4, Activation::tanh, arch), rng);
      const Vector batch = forward_batch(net, theta, data.inputs).pre.back().col(0);
      for (std::size_t a = 0; a < data.size(); ++a) {
        const double f = evaluate(net, theta, data.inputs.row(a).transpose());
        worst = std::max(worst, rel_err(f, batch(a), 1.0));
        ++r.samples;
      }
    }
    r.pass = worst <= 1e-12;
    r.detail = "max err " + num(worst);
    return r;
  }

  CheckResult power_iteration(Rng& rng) const {
    CheckResult r("power_iteration");
    r.width = 20;
    const DenseMatrix a = gaussian_matrix(20, 20, rng);
    const double exact = std::sqrt(symmetric_eigenvalues(a.transpose() * a).maxCoeff());
    const SpectralEstimate est = spectral_norm(a);
    const double e = std::abs(est.value - exact) / exact;
    r.samples = est.iterations;
    r.pass = e <= 1e-6;
    r.detail = "rel err " + num(e) + " after " + std::to_string(est.iterations) + " iterations";
    return r;
  }

  CheckResult ntk_psd(Rng& rng, const Dataset& data) const {
    CheckResult r("ntk_psd");
    r.width = width_;
    auto [net, theta] = build_network(spec(data.dim(), 3, Activation::tanh, Architecture::mlp), rng);
    const NtkMatrix k = ntk(net, theta, data.inputs);
    r.samples = k.size();
    r.pass = k.is_psd();
    r.detail = "min eig / trace " + num(k.min_eigenvalue() / k.k.trace());
    return r;
  }

  static CheckResult monte_carlo(std::string name, std::size_t m, const MonteCarloResult& mc,
                                 double threshold) {
    CheckResult r(std::move(name));
    r.width = m;
    r.samples = mc.trials;
    r.vacuous = mc.vacuous;
    r.pass = mc.vacuous || (mc.consistent && mc.fraction >= threshold);
    r.detail = "fraction " + num(mc.fraction, 6) + ", bound " + num(mc.bound, 6) +
               (mc.vacuous ? " (vacuous, not asserted)" : "");
    return r;
  }

  CheckResult remainder_bound(Rng& rng, const Dataset& data) const {
    CheckResult r("remainder_bound");
    const std::size_t m = std::max<std::size_t>(64, width_);
    r.width = m;
    const AssemblyModel model = two_layer_assembly(data.dim(), m, Activation::tanh,
                                                   WeightRule::rademacher, Scaling::sqrt_m, rng);
    const Vector theta0 = gaussian_vector(model.dim(), rng);
    const RemainderReport rep =
        remainder_at(model, theta0, data.inputs.row(0).transpose(), {1.0, 100, 100, true}, rng);
    r.samples = rep.probes;
    r.pass = rep.pass;
    r.detail = "remainder " + num(rep.remainder) + " <= bound " + num(rep.bound);
    return r;
  }

  const VerifyHooks& hooks_;
  std::size_t width_;
};

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

std::filesystem::path default_out_dir() {
  const char* env = std::getenv(kOutEnv);
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("results");
}

}  // namespace

int cmd_verify(const RunConfig& run, std::ostream& out, std::ostream& err,
               const VerifyHooks& hooks) {
  return guarded(err, [&] {
    const Config cfg = run.resolve();
    const Config eff = effective_config(cfg);
    const std::uint64_t offset = run_seed(eff);
    const auto seeds = parse_uint_list(eff.get("verify", "seeds").value_or("0,1"), "verify.seeds");
    const std::size_t width =
        parse_uint(eff.get("verify", "width").value_or("8"), "verify.width");
    if (seeds.empty() || width < 2) fail(ErrorKind::usage_error, "verify needs seeds and width >= 2");

    // The dataset section is honoured so a missing CIFAR file surfaces here.
    SweepConfig data_cfg = sweep_config(cfg, SweepKind::cosine, offset);
    data_cfg.dataset.dim = parse_uint(eff.get("data", "dim").value_or("64"), "data.dim");

    std::vector<CheckResult> results;
    const Checker checker(hooks, width);
    for (std::uint64_t s : seeds) {
      const Dataset data = make_dataset(data_cfg.dataset, s + offset);
      for (CheckResult& r : checker.run(s + offset, data)) results.push_back(std::move(r));
    }

    std::vector<MetricsRow> rows;
    std::vector<std::string> failed;
    out << std::left << std::setw(22) << "check" << std::setw(8) << "seed" << std::setw(9)
        << "status" << "detail\n";
    for (const CheckResult& r : results) {
      const char* status = r.vacuous ? "vacuous" : r.pass ? "pass" : "FAIL";
      out << std::setw(22) << r.name << std::setw(8) << r.seed << std::setw(9) << status
          << r.detail << "\n";
      if (!r.pass && std::find(failed.begin(), failed.end(), r.name) == failed.end())
        failed.push_back(r.name);
      MetricsRow row;
      row.experiment_id = "verify";
      row.width = r.width;
      row.seed = r.seed;
      row.metric = "check:" + r.name;
      row.value = r.pass ? 1.0 : 0.0;
      row.degenerate = r.vacuous;
      row.n_samples = r.samples;
      rows.push_back(row);
    }
    std::filesystem::create_directories(run.out_dir);
    write_csv(rows, run.out_dir / "verify.csv");
    write_manifest(run.out_dir / "verify.manifest.ini", "verify", eff);

    if (!failed.empty()) {
      std::string names;
      for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
      err << "verify: failing checks: " << names << "\n";
      return static_cast<int>(kExitCheckFailed);
    }
    out << results.size() << " checks passed\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(SweepKind kind, const RunConfig& run, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Config cfg = run.resolve();
    const Config eff = effective_config(cfg);
    SweepConfig sc = sweep_config(cfg, kind, run_seed(eff));
    if (auto j = cfg.get("run", "jobs")) sc.jobs = parse_uint(*j, "run.jobs");

    const std::vector<MetricsRow> rows = run_sweep(sc);
    const std::string name(to_string(kind));
    std::filesystem::create_directories(run.out_dir);
    write_csv(rows, run.out_dir / (name + ".csv"));
    const GroupKey group =
        kind == SweepKind::cosine || kind == SweepKind::gram ? GroupKey::layer : GroupKey::metric;
    emit_svg_plot(rows, run.out_dir / (name + ".svg"), group, name + " sweep");
    write_manifest(run.out_dir / (name + ".manifest.ini"), "sweep " + name, eff);

    out << name << ": " << rows.size() << " rows -> " << (run.out_dir / (name + ".csv")).string()
        << "\n";
    for (const SummaryLine& s : summarize(kind, rows))
      out << "  " << (s.applicable ? (s.pass ? "PASS " : "FAIL ") : "n/a  ") << s.name << ": "
          << s.detail << "\n";
    return static_cast<int>(kExitOk);
  });
}

namespace {

struct Claim {
  std::string name;
  std::string evidence;
  std::string verdict;  // pass, fail or missing
};

std::string verdict_of(const std::vector<SummaryLine>& lines) {
  if (lines.empty()) return "missing";
  for (const SummaryLine& s : lines)
    if (!s.applicable) return "inconclusive";
  for (const SummaryLine& s : lines)
    if (!s.pass) return "fail";
  return "pass";
}

std::string join_details(const std::vector<SummaryLine>& lines) {
  std::string out;
  for (const SummaryLine& s : lines)
    out += (out.empty() ? "" : "; ") + s.name + ": " + s.detail;
  return out.empty() ? "no rows" : out;
}

std::vector<SummaryLine> pick(const std::vector<SummaryLine>& lines,
                              std::initializer_list<std::string_view> names) {
  std::vector<SummaryLine> out;
  for (const SummaryLine& s : lines)
    for (std::string_view n : names)
      if (s.name.find(n) != std::string::npos) out.push_back(s);
  return out;
}

std::vector<SummaryLine> verify_lines(const std::vector<MetricsRow>& rows,
                                      std::initializer_list<std::string_view> checks) {
  std::vector<SummaryLine> out;
  for (std::string_view c : checks) {
    const std::string metric = "check:" + std::string(c);
    SummaryLine s;
    s.name = std::string(c);
    std::size_t total = 0, ok = 0;
    for (const MetricsRow& r : rows)
      if (r.metric == metric) {
        ++total;
        ok += (r.degenerate || r.value == 1.0) ? 1 : 0;
      }
    if (total == 0) continue;
    s.pass = ok == total;
    s.detail = std::to_string(ok) + "/" + std::to_string(total) + " seeds";
    out.push_back(s);
  }
  return out;
}

}  // namespace

int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(dir))
      for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::map<std::string, std::vector<MetricsRow>> by_kind;
    for (const auto& f : files) {
      std::vector<MetricsRow> rows = read_csv(f);
      auto& dst = by_kind[f.stem().string()];
      dst.insert(dst.end(), rows.begin(), rows.end());
    }

    std::string tsv = "claim\tverdict\tevidence\n";
    if (files.empty()) {
      err << "warning: no CSV files in " << dir.string() << "; empty report\n";
    } else {
      auto lines = [&](SweepKind k) {
        const auto it = by_kind.find(std::string(to_string(k)));
        return it == by_kind.end() ? std::vector<SummaryLine>{} : summarize(k, it->second);
      };
      const auto verify_rows = by_kind.count("verify") ? by_kind["verify"] : std::vector<MetricsRow>{};
      const auto remainder = lines(SweepKind::remainder);
      const auto cross = lines(SweepKind::crossterm);
      auto spectral = verify_lines(verify_rows, {"weight_spectral", "chi_square"});
      for (const SummaryLine& s : lines(SweepKind::gram)) spectral.push_back(s);

      const std::vector<std::pair<std::string, std::vector<SummaryLine>>> claims = {
          {"remainder-bound", pick(remainder, {"within bound"})},
          {"gradient-orthogonality", lines(SweepKind::cosine)},
          {"frozen-next-layer-remainder", pick(cross, {"|B|"})},
          {"remainder-scaling", pick(remainder, {"slope"})},
          {"max-of-gaussians", verify_lines(verify_rows, {"max_gaussian"})},
          {"spectral-bounds", spectral},
          {"cross-term", pick(cross, {"A vanishes", "|C|"})},
      };
      for (const auto& [name, ls] : claims) {
        const Claim c{name, join_details(ls), verdict_of(ls)};
        tsv += c.name + "\t" + c.verdict + "\t" + c.evidence + "\n";
      }
    }
    out << tsv;
    if (std::filesystem::is_directory(dir)) write_text(dir / "claims.tsv", tsv);
    return static_cast<int>(kExitOk);
  });
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Width sweeps and oracle checks for wide-network linearity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunConfig run;
  std::string out_dir;
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string dataset;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (default $WIDENET_OUT or ./results)");
    sub->add_option("--seed", seed, "Seed offset added to every configured seed");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", run.overrides, "Override section.key=value (repeatable)");
    sub->add_option("--dataset", dataset, "synthetic or cifar10:<path>");
  };

  CLI::App* verify = app.add_subcommand("verify", "Run the oracle and Monte-Carlo checks");
  common(verify);
  CLI::App* sweep = app.add_subcommand("sweep", "Run one width sweep");
  std::string kind_name;
  sweep->add_option("kind", kind_name, "cosine|bottleneck|remainder|ntk|crossterm|constancy|gram")
      ->required();
  common(sweep);
  CLI::App* report = app.add_subcommand("report", "Collate sweep CSVs into claims.tsv");
  std::string report_dir;
  report->add_option("dir", report_dir, "Directory with sweep outputs (default --out)");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kExitOk) : static_cast<int>(kExitUsage);
  }

  CLI::App* active = app.get_subcommands().front();
  run.command = active->get_name();
  run.out_dir = out_dir.empty() ? default_out_dir() : std::filesystem::path(out_dir);
  if (!config_path.empty()) run.config_path = config_path;
  if (active->count("--seed")) run.seed = seed;
  if (active->count("--jobs")) run.jobs = jobs;
  if (!dataset.empty()) run.dataset = dataset;

  if (active == verify) return cmd_verify(run, out, err);
  if (active == sweep) {
    return guarded(err, [&] {
      const SweepKind kind = parse_sweep_kind(kind_name);
      return cmd_sweep(kind, run, out, err);
    });
  }
  return cmd_report(report_dir.empty() ? run.out_dir : std::filesystem::path(report_dir), out,
                    err);
}

}  // namespace widenet
