// uqkit command-line entry point. One pipeline per invocation; reports go to
// stdout and to a JSON file in the output directory.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uqkit/uqkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace uqkit {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Binding {
  std::string key;
  CLI::Option *option;
  std::function<void(const json &, bool)> set;  // bool: assign or only type-check
  std::function<json()> get;
};

struct Context {
  RunConfig config;
  fs::path out_dir;
  bool dry_run = false;
  std::vector<fs::path> inputs;   // files that must exist
  std::vector<fs::path> outputs;  // files written by the pipeline

  fs::path output(const std::string &name) {
    const fs::path base = fs::weakly_canonical(out_dir);
    const fs::path target = fs::weakly_canonical(base / name);
    const auto [end, _] = std::mismatch(base.begin(), base.end(), target.begin(), target.end());
    if (end != base.end() || target == base) {
      throw DomainError("output path '" + name + "' is outside the output directory '" +
                        out_dir.string() + "'");
    }
    outputs.push_back(target);
    return target;
  }

  fs::path input(const std::string &name) {
    inputs.push_back(name);
    return name;
  }
};

class Command {
 public:
  Command(CLI::App &parent, const std::string &name, const std::string &help)
      : name_(name), app_(parent.add_subcommand(name, help)) {}

  template <typename T>
  CLI::Option *bind(const std::string &flag, T &var, const std::string &help) {
    CLI::Option *o = app_->add_option(flag, var, help);
    remember(flag, o, var);
    return o;
  }

  CLI::Option *flag(const std::string &flag, bool &var, const std::string &help) {
    CLI::Option *o = app_->add_flag(flag, var, help);
    remember(flag, o, var);
    return o;
  }

  // Method block values fill options not given on the command line.
  void apply_config(const json &block, std::vector<std::string> &errors) {
    for (const auto &[key, value] : block.items()) {
      const auto it = std::find_if(bindings_.begin(), bindings_.end(),
                                   [&](const Binding &b) { return b.key == key; });
      if (it == bindings_.end()) {
        errors.push_back(name_ + "." + key + ": unknown field");
        continue;
      }
      try {
        it->set(value, it->option->count() == 0);
      } catch (const json::exception &) {
        errors.push_back(name_ + "." + key + ": wrong type (" + value.dump() + ")");
      }
    }
  }

  json settings() const {
    json s = json::object();
    for (const Binding &b : bindings_) s[b.key] = b.get();
    return s;
  }

  CLI::App *app() const { return app_; }
  const std::string &name() const { return name_; }

  std::function<json(Context &)> run;

 private:
  template <typename T>
  void remember(const std::string &flag, CLI::Option *o, T &var) {
    std::string key = flag.substr(flag.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '-', '_');
    bindings_.push_back({key, o, [&var](const json &j, bool assign) {
                           T v = j.get<T>();
                           if (assign) var = std::move(v);
                         },
                         [&var] { return json(var); }});
  }

  std::string name_;
  CLI::App *app_;
  std::vector<Binding> bindings_;
};

// "lo:hi:steps"
struct GridSpec {
  double lo = kNaN;
  double hi = kNaN;
  int steps = 200;
};

GridSpec parse_grid(const std::string &text, const std::vector<double> &values) {
  GridSpec g;
  if (text.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double pad = *mx > *mn ? 0.05 * (*mx - *mn) : 1.0;
    g.lo = *mn - pad;
    g.hi = *mx + pad;
    return g;
  }
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw DomainError("grid must look like lo:hi:steps, got '" + text + "'");
  }
  try {
    g.lo = std::stod(text.substr(0, a));
    g.hi = std::stod(text.substr(a + 1, b - a - 1));
    g.steps = std::stoi(text.substr(b + 1));
  } catch (const std::exception &) {
    throw DomainError("grid must look like lo:hi:steps, got '" + text + "'");
  }
  if (!(g.hi > g.lo) || g.steps < 1) {
    throw DomainError("grid needs lo < hi and steps >= 1, got '" + text + "'");
  }
  return g;
}

std::vector<std::string> split_columns(const std::string &text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

FunctionFamily make_family(const std::string &kind, int knots, int centers, double width,
                           int degree) {
  FunctionFamily f;
  f.kind = family_kind_from_string(kind);
  f.interior_knots = knots;
  f.centers = centers;
  f.rbf_width = width;
  f.degree = degree;
  return f;
}

PairedDataset load_dataset(const fs::path &path, const std::string &inputs,
                           const std::string &output, DataKind kind) {
  return parse_dataset(path, ColumnSchema{split_columns(inputs), output}, kind);
}

InputSample load_inputs(const fs::path &path, const std::string &columns,
                        Eigen::Index expected_dim) {
  InputSample s = read_input_sample(path, split_columns(columns));
  if (expected_dim > 0 && s.dim() != expected_dim) {
    throw DataError("'" + path.string() + "' has " + std::to_string(s.dim()) +
                    " input columns, the model expects " + std::to_string(expected_dim));
  }
  return s;
}

// Inputs from a file, or drawn from the normal law fitted to `fallback`.
InputSample surrogate_inputs(const std::string &path, const std::string &columns,
                             const Matrix &fallback, std::int64_t count, std::uint64_t seed,
                             Context &ctx) {
  if (!path.empty()) return load_inputs(ctx.input(path), columns, fallback.cols());
  return sample_mvn(estimate_mvn(InputSample(fallback)), count,
                    derive_seed(seed, StreamPurpose::kSampling));
}

json vector_json(const std::vector<double> &v) { return json(v); }

void write_json(const fs::path &path, const json &j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json error_json(const std::string &code, const std::string &message) {
  return json{{"error", {{"code", code}, {"message", message}}}};
}

std::optional<int> env_threads() {
  const char *v = std::getenv("UQ_THREADS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    return std::stoi(v);
  } catch (const std::exception &) {
    throw DomainError(std::string("UQ_THREADS must be an integer, got '") + v + "'");
  }
}

int run(int argc, char **argv) {
  CLI::App app{"Uncertainty quantification with imperfect computer models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::uint64_t seed = 0;
  int threads = -1;
  std::string out_dir = ".";
  std::string config_path;
  std::string report_name;
  bool dry_run = false;
  CLI::Option *seed_opt = app.add_option("--seed", seed, "master seed");
  CLI::Option *threads_opt =
      app.add_option("--threads", threads, "worker cap (0 = all cores; env UQ_THREADS)");
  CLI::Option *out_dir_opt =
      app.add_option("--out-dir", out_dir, "directory for every written file");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--report", report_name, "report file name (default <command>.json)");
  app.add_flag("--dry-run", dry_run, "validate settings and files, compute nothing");

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string &name, const std::string &help) -> Command & {
    commands.push_back(std::make_unique<Command>(app, name, help));
    return *commands.back();
  };

  // gen-inputs
  std::string gi_dist = "mvn", gi_from, gi_columns, gi_out = "inputs.csv";
  std::vector<std::string> gi_ranges;
  std::int64_t gi_count = 0;
  {
    Command &c = add("gen-inputs", "sample inputs from a fitted normal law or a Latin hypercube");
    c.bind("--dist", gi_dist, "mvn or lhs")->check(CLI::IsMember({"mvn", "lhs"}));
    c.bind("--from", gi_from, "CSV whose rows estimate the normal law");
    c.bind("--columns", gi_columns, "comma-separated columns of --from (default all)");
    c.bind("--range", gi_ranges, "lo:hi per input for lhs (repeatable)");
    c.bind("--count", gi_count, "number of points (default surrogate_size)");
    c.bind("--out", gi_out, "output CSV");
    c.run = [&](Context &ctx) {
      const std::int64_t count = gi_count > 0 ? gi_count : ctx.config.surrogate_size;
      std::vector<std::string> header;
      InputSample sample(Matrix::Zero(1, 1));
      json extra = json::object();
      if (gi_dist == "mvn") {
        if (gi_from.empty()) throw DomainError("--dist mvn needs --from <csv>");
        const fs::path from = ctx.input(gi_from);
        const fs::path out = ctx.output(gi_out);
        if (ctx.dry_run) return json::object();
        header = split_columns(gi_columns);
        if (header.empty()) header = read_csv(from).header;
        const MvnParams p = estimate_mvn(read_input_sample(from, header));
        sample = sample_mvn(p, count, derive_seed(ctx.config.seed, StreamPurpose::kSampling));
        extra["mean"] = detail::vector_to_json(p.mean);
        extra["covariance"] = detail::matrix_to_json(p.covariance);
        write_input_sample(out, sample, header);
      } else {
        if (gi_ranges.empty()) throw DomainError("--dist lhs needs at least one --range lo:hi");
        std::vector<Range> ranges;
        for (const std::string &r : gi_ranges) {
          const GridSpec g = parse_grid(r + ":1", {});
          ranges.push_back({g.lo, g.hi});
        }
        const fs::path out = ctx.output(gi_out);
        if (ctx.dry_run) return json::object();
        sample = latin_hypercube(ranges, count, derive_seed(ctx.config.seed, StreamPurpose::kSampling));
        write_input_sample(out, sample);
      }
      extra["count"] = count;
      extra["file"] = gi_out;
      return extra;
    };
  }

  // fit-surrogate
  std::string fs_sim, fs_exp, fs_inputs_cols, fs_output_col, fs_family = "spline1d",
                                                             fs_res_family = "poly",
                                                             fs_extra, fs_out = "model.json";
  int fs_knots = 8, fs_centers = 20, fs_degree = 1, fs_res_degree = 1, fs_res_knots = 4,
      fs_folds = 5;
  double fs_width = 1.0;
  bool fs_weighted = false;
  {
    Command &c = add("fit-surrogate", "penalized least-squares surrogate, optionally improved");
    c.bind("--sim", fs_sim, "simulated pairs (CSV)")->required();
    c.bind("--exp", fs_exp, "experimental pairs (CSV) for the residual model");
    c.bind("--input-columns", fs_inputs_cols, "comma-separated input columns");
    c.bind("--output-column", fs_output_col, "output column (default last)");
    c.bind("--family", fs_family, "spline1d, rbf or poly");
    c.bind("--knots", fs_knots, "interior spline knots");
    c.bind("--centers", fs_centers, "RBF centers");
    c.bind("--width", fs_width, "RBF width");
    c.bind("--degree", fs_degree, "polynomial degree");
    c.bind("--residual-family", fs_res_family, "family of the residual model");
    c.bind("--residual-degree", fs_res_degree, "polynomial degree of the residual model");
    c.bind("--residual-knots", fs_res_knots, "interior knots of a spline residual model");
    c.bind("--folds", fs_folds, "cross-validation folds");
    c.flag("--weighted", fs_weighted, "weighted residual fit with extra inputs");
    c.bind("--extra", fs_extra, "extra inputs (CSV); drawn from the fitted law if absent");
    c.bind("--out", fs_out, "model file");
    c.run = [&](Context &ctx) {
      const fs::path sim_path = ctx.input(fs_sim);
      std::optional<fs::path> exp_path;
      if (!fs_exp.empty()) exp_path = ctx.input(fs_exp);
      if (!fs_extra.empty()) ctx.input(fs_extra);
      const fs::path out = ctx.output(fs_out);
      const FunctionFamily base_family =
          make_family(fs_family, fs_knots, fs_centers, fs_width, fs_degree);
      const FunctionFamily res_family =
          make_family(fs_res_family, fs_res_knots, fs_centers, fs_width, fs_res_degree);
      if (ctx.dry_run) return json::object();
      const PairedDataset sim =
          load_dataset(sim_path, fs_inputs_cols, fs_output_col, DataKind::kSimulated);
      json result;
      if (!exp_path) {
        SurrogateModel base = fit_penalized_ls_gcv(base_family, sim);
        SurrogateModel zero = constant_model(res_family, sim.inputs(), 0.0);
        const ImprovedSurrogate model(std::move(base), std::move(zero), 0.0);
        save_model(out, model);
        result["base"] = to_json(model.base());
      } else {
        const PairedDataset exp =
            load_dataset(*exp_path, fs_inputs_cols, fs_output_col, DataKind::kExperimental);
        std::optional<Matrix> extra;
        if (fs_weighted) {
          extra = fs_extra.empty()
                      ? surrogate_inputs("", "", exp.inputs(), ctx.config.residual_extra_size,
                                         derive_seed(ctx.config.seed, StreamPurpose::kSampling),
                                         ctx)
                            .points()
                      : load_inputs(fs_extra, fs_inputs_cols, exp.dim()).points();
        }
        ImprovedFitSettings settings;
        settings.folds = fs_folds;
        settings.seed = derive_seed(ctx.config.seed, StreamPurpose::kFolds);
        const ImprovedSurrogate model =
            fit_improved_surrogate(base_family, res_family, sim, exp, extra, settings);
        save_model(out, model);
        result["weight"] = model.weight();
        result["residual_penalty"] = model.residual().family().penalty;
        result["cv_score"] = detail::number_or_null(model.residual().info().cv_score);
        result["residuals"] = detail::vector_to_json(compute_residuals(model.base(), exp));
      }
      result["model_file"] = fs_out;
      return result;
    };
  }

  // density and quantile share their inputs
  std::string dq_model, dq_inputs, dq_columns, dq_kernel = "naive", dq_bandwidth = "auto",
                                                dq_grid, dq_out = "density.csv";
  double q_alpha = 0.95;
  std::string q_model, q_inputs, q_columns;
  {
    Command &c = add("density", "kernel density of surrogate outputs");
    c.bind("--model", dq_model, "model file")->required();
    c.bind("--inputs", dq_inputs, "input sample (CSV)")->required();
    c.bind("--columns", dq_columns, "comma-separated input columns");
    c.bind("--kernel", dq_kernel, "naive, gauss or epanechnikov")
        ->check(CLI::IsMember({"naive", "gauss", "epanechnikov"}));
    c.bind("--bandwidth", dq_bandwidth, "auto or a positive number");
    c.bind("--grid", dq_grid, "lo:hi:steps (default output range)");
    c.bind("--out", dq_out, "CSV of (y, density)");
    c.run = [&](Context &ctx) {
      const fs::path model_path = ctx.input(dq_model);
      const fs::path in_path = ctx.input(dq_inputs);
      const fs::path out = ctx.output(dq_out);
      std::optional<double> h;
      if (dq_bandwidth != "auto") {
        try {
          h = std::stod(dq_bandwidth);
        } catch (const std::exception &) {
          throw DomainError("--bandwidth must be auto or a number, got '" + dq_bandwidth + "'");
        }
      }
      if (ctx.dry_run) return json::object();
      const ImprovedSurrogate model = load_model(model_path);
      const InputSample x = load_inputs(in_path, dq_columns, model.input_dim());
      const KernelKind kernel = dq_kernel == "naive"  ? KernelKind::kNaive
                                : dq_kernel == "gauss" ? KernelKind::kGauss
                                                       : KernelKind::kEpanechnikov;
      const KdeModel kde = surrogate_density(model, x, kernel, h);
      const GridSpec g = parse_grid(dq_grid, kde.values());
      const std::vector<double> grid = band_grid(g.lo, g.hi, g.steps);
      Matrix table(static_cast<Eigen::Index>(grid.size()), 2);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        table(static_cast<Eigen::Index>(i), 0) = grid[i];
        table(static_cast<Eigen::Index>(i), 1) = kde(grid[i]);
      }
      write_csv(out, {"y", "density"}, table);
      return json{{"bandwidth", kde.bandwidth()},
                  {"kernel", to_string(kernel)},
                  {"sample_size", kde.size()},
                  {"grid", {{"lo", g.lo}, {"hi", g.hi}, {"steps", g.steps}}},
                  {"mass_on_grid", kde.integral(g.lo, g.hi)},
                  {"file", dq_out}};
    };
  }
  {
    Command &c = add("quantile", "Monte Carlo quantile of surrogate outputs");
    c.bind("--model", q_model, "model file")->required();
    c.bind("--inputs", q_inputs, "input sample (CSV)")->required();
    c.bind("--columns", q_columns, "comma-separated input columns");
    c.bind("--alpha", q_alpha, "quantile level in (0, 1)");
    c.run = [&](Context &ctx) {
      const fs::path model_path = ctx.input(q_model);
      const fs::path in_path = ctx.input(q_inputs);
      check_alpha(q_alpha);
      if (ctx.dry_run) return json::object();
      const ImprovedSurrogate model = load_model(model_path);
      const InputSample x = load_inputs(in_path, q_columns, model.input_dim());
      const QuantileEstimate q = mc_quantile(model.evaluate(x.points()), q_alpha);
      return json{{"alpha", q.alpha}, {"value", q.value}, {"sample_size", q.sample_size}};
    };
  }

  // avm
  std::string avm_exp, avm_sim, avm_exp_col, avm_sim_col, avm_out;
  int avm_steps = 1000;
  {
    Command &c = add("avm", "area validation metric between two output samples");
    c.bind("--exp", avm_exp, "experimental CSV")->required();
    c.bind("--sim", avm_sim, "simulated CSV")->required();
    c.bind("--exp-column", avm_exp_col, "output column of --exp (default last)");
    c.bind("--sim-column", avm_sim_col, "output column of --sim (default last)");
    c.bind("--grid-steps", avm_steps, "Riemann grid steps");
    c.bind("--out", avm_out, "CSV of (t, F_exp, F_sim) on the grid");
    c.run = [&](Context &ctx) {
      const fs::path e = ctx.input(avm_exp);
      const fs::path s = ctx.input(avm_sim);
      std::optional<fs::path> out;
      if (!avm_out.empty()) out = ctx.output(avm_out);
      if (avm_steps < 2) throw DomainError("--grid-steps must be >= 2");
      if (ctx.dry_run) return json::object();
      auto column = [](const fs::path &p, const std::string &name) {
        const CsvTable t = read_csv(p);
        const std::string col = name.empty() ? t.header.back() : name;
        return to_std_vector(table_columns(t, {col}).col(0));
      };
      const std::vector<double> a = column(e, avm_exp_col);
      const std::vector<double> b = column(s, avm_sim_col);
      const AvmResult r = avm(a, b, avm_steps);
      if (out) {
        const EmpiricalCdf fa(a), fb(b);
        const std::vector<double> grid = band_grid(r.grid_lo, r.grid_hi, r.grid_steps);
        Matrix table(static_cast<Eigen::Index>(grid.size()), 3);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto k = static_cast<Eigen::Index>(i);
          table(k, 0) = grid[i];
          table(k, 1) = fa(grid[i]);
          table(k, 2) = fb(grid[i]);
        }
        write_csv(*out, {"t", "F_exp", "F_sim"}, table);
      }
      return json{{"exact", r.exact},
                  {"riemann", r.riemann},
                  {"grid", {{"lo", r.grid_lo}, {"hi", r.grid_hi}, {"steps", r.grid_steps}}},
                  {"exp_size", a.size()},
                  {"sim_size", b.size()}};
    };
  }

  // gp-error
  std::string gp_exp, gp_model, gp_inputs, gp_columns, gp_output_col, gp_mode = "closed_form";
  double gp_alpha = 0.95;
  int gp_reps = 1000, gp_restarts = 20, gp_evals = 1000;
  {
    Command &c = add("gp-error", "MAP Gaussian-process model error and its quantile");
    c.bind("--exp", gp_exp, "experimental pairs (CSV)")->required();
    c.bind("--model", gp_model, "model file; its base surrogate gives m(X)")->required();
    c.bind("--input-columns", gp_columns, "comma-separated input columns");
    c.bind("--output-column", gp_output_col, "output column (default last)");
    c.bind("--inputs", gp_inputs, "points for the error simulation (default experimental)");
    c.bind("--mode", gp_mode, "closed_form, empirical or free");
    c.bind("--alpha", gp_alpha, "quantile level");
    c.bind("--reps", gp_reps, "simulation replicates");
    c.bind("--restarts", gp_restarts, "optimizer restarts");
    c.bind("--max-evaluations", gp_evals, "objective evaluations per restart");
    c.run = [&](Context &ctx) {
      const fs::path e = ctx.input(gp_exp);
      const fs::path m = ctx.input(gp_model);
      const BetaMode mode = beta_mode_from_string(gp_mode);
      check_alpha(gp_alpha);
      if (!gp_inputs.empty()) ctx.input(gp_inputs);
      if (ctx.dry_run) return json::object();
      const PairedDataset exp = load_dataset(e, gp_columns, gp_output_col, DataKind::kExperimental);
      const ImprovedSurrogate model = load_model(m);
      const GpData data = make_gp_data(exp, model.base().evaluate(exp.inputs()));
      const GpHyperParams hyper = default_gp_hyper(data);
      GpFitOptions options;
      options.restarts = gp_restarts;
      options.max_evaluations = gp_evals;
      options.seed = derive_seed(ctx.config.seed, StreamPurpose::kRestarts);
      const GpFitResult fit = gp_fit_map(data, hyper, mode, options);
      const Matrix x = gp_inputs.empty()
                           ? exp.inputs()
                           : load_inputs(gp_inputs, gp_columns, exp.dim()).points();
      const GpErrorQuantileReport q = gp_error_quantile(
          fit.params, x, gp_alpha, gp_reps, derive_seed(ctx.config.seed, StreamPurpose::kNoise));
      return json{{"params",
                   {{"lambda", fit.params.lambda},
                    {"beta", fit.params.beta},
                    {"sigma2", fit.params.sigma2},
                    {"omega", detail::vector_to_json(fit.params.omega)}}},
                  {"log_posterior", fit.log_posterior},
                  {"log_likelihood", fit.log_likelihood},
                  {"jitter", fit.jitter},
                  {"restarts", fit.restarts},
                  {"failed_restarts", fit.failed_restarts},
                  {"mode", to_string(mode)},
                  {"alpha", q.alpha},
                  {"median", q.median},
                  {"quantiles", vector_json(q.quantiles)},
                  {"reps", q.reps}};
    };
  }

  // bootstrap-error
  std::string be_exp, be_model, be_columns, be_output_col, be_family = "poly", be_extra;
  int be_replicates = 500, be_learning = 10, be_degree = 1, be_knots = 4;
  double be_alpha = 0.95, be_weight = 1.0;
  {
    Command &c = add("bootstrap-error", "bootstrap quantile of the model error");
    c.bind("--exp", be_exp, "experimental pairs (CSV)")->required();
    c.bind("--model", be_model, "model file; its base surrogate is used")->required();
    c.bind("--input-columns", be_columns, "comma-separated input columns");
    c.bind("--output-column", be_output_col, "output column (default last)");
    c.bind("--residual-family", be_family, "family of the residual model");
    c.bind("--residual-degree", be_degree, "polynomial degree of the residual model");
    c.bind("--residual-knots", be_knots, "interior knots of a spline residual model");
    c.bind("--replicates", be_replicates, "bootstrap replicates B");
    c.bind("--learning-size", be_learning, "learning sample size");
    c.bind("--alpha", be_alpha, "quantile level");
    c.bind("--extra", be_extra, "extra inputs (CSV) for the weighted residual fit");
    c.bind("--weight", be_weight, "weight of the extra-input term");
    c.run = [&](Context &ctx) {
      const fs::path e = ctx.input(be_exp);
      const fs::path m = ctx.input(be_model);
      if (!be_extra.empty()) ctx.input(be_extra);
      const FunctionFamily family = make_family(be_family, be_knots, 20, 1.0, be_degree);
      check_alpha(be_alpha);
      if (ctx.dry_run) return json::object();
      const PairedDataset exp = load_dataset(e, be_columns, be_output_col, DataKind::kExperimental);
      const ImprovedSurrogate model = load_model(m);
      BootstrapSettings s;
      s.replicates = be_replicates;
      s.learning_size = be_learning;
      s.alpha = be_alpha;
      s.weight = be_weight;
      s.seed = derive_seed(ctx.config.seed, StreamPurpose::kBootstrap);
      if (!be_extra.empty()) s.extra_inputs = load_inputs(be_extra, be_columns, exp.dim()).points();
      const BootstrapErrorReport r = bootstrap_error_quantile(exp, model.base(), family, s);
      return json{{"median", r.median},
                  {"quantiles", vector_json(r.quantiles)},
                  {"replicates", r.replicates},
                  {"learning_size", r.learning_size},
                  {"alpha", r.alpha},
                  {"degenerate_replicates", r.degenerate_replicates}};
    };
  }

  // ci-quantile
  std::string ci_exp, ci_model, ci_inputs, ci_columns, ci_output_col;
  double ci_alpha = 0.95, ci_delta = 0.05, ci_dd = kNaN;
  bool ci_improved = false;
  {
    Command &c = add("ci-quantile", "confidence interval for a quantile of the true output");
    c.bind("--exp", ci_exp, "experimental pairs (CSV)")->required();
    c.bind("--model", ci_model, "model file")->required();
    c.bind("--inputs", ci_inputs, "fresh inputs (default drawn, density_size points)");
    c.bind("--input-columns", ci_columns, "comma-separated input columns");
    c.bind("--output-column", ci_output_col, "output column (default last)");
    c.bind("--alpha", ci_alpha, "quantile level");
    c.bind("--delta", ci_delta, "error probability");
    c.bind("--delta-delta", ci_dd, "split of delta (default: best of a sweep)");
    c.flag("--improved", ci_improved, "use the improved surrogate instead of the base");
    c.run = [&](Context &ctx) {
      const fs::path e = ctx.input(ci_exp);
      const fs::path m = ctx.input(ci_model);
      check_alpha(ci_alpha);
      if (ctx.dry_run) {
        if (!ci_inputs.empty()) ctx.input(ci_inputs);
        return json::object();
      }
      const PairedDataset exp = load_dataset(e, ci_columns, ci_output_col, DataKind::kExperimental);
      const ImprovedSurrogate model = load_model(m);
      const InputSample x = surrogate_inputs(ci_inputs, ci_columns, exp.inputs(),
                                             ctx.config.density_size, ctx.config.seed, ctx);
      auto interval = [&](const auto &m) {
        const std::vector<double> out = to_std_vector(m.evaluate(x.points()));
        return std::isnan(ci_dd) ? quantile_ci_sweep(exp, m, out, ci_alpha, ci_delta)
                                 : quantile_ci(exp, m, out, ci_alpha, ci_delta, ci_dd);
      };
      const FeasibilityReport f = ci_feasibility(static_cast<int>(exp.size()), ci_alpha,
                                                 ci_delta, {}, static_cast<double>(x.size()));
      const QuantileCi ci = ci_improved ? interval(model) : interval(model.base());
      return json{{"lo", ci.lo},
                  {"hi", ci.hi},
                  {"width", ci.width()},
                  {"alpha", ci.alpha},
                  {"delta", ci.delta},
                  {"delta_delta", ci.delta_delta},
                  {"n", ci.n},
                  {"big_n", ci.big_n},
                  {"beta", ci.beta},
                  {"eps", ci.eps},
                  {"gamma", ci.gamma},
                  {"n1", ci.n1},
                  {"n2", ci.n2},
                  {"lower_level", ci.lower_level},
                  {"upper_level", ci.upper_level},
                  {"feasibility",
                   {{"feasible", f.feasible},
                    {"delta_delta", f.delta_delta},
                    {"eps", f.eps_gamma.eps},
                    {"gamma", f.eps_gamma.gamma},
                    {"lower_level", f.lower_level},
                    {"upper_level", f.upper_level}}}};
    };
  }

  // density-band
  std::string db_exp, db_model, db_inputs, db_columns, db_output_col, db_grid,
      db_out = "band.csv";
  double db_kappa = kNaN, db_delta = 0.05;
  std::vector<double> db_bandwidths;
  bool db_improved = false;
  {
    Command &c = add("density-band", "confidence band for the density of the true output");
    c.bind("--exp", db_exp, "experimental pairs (CSV)")->required();
    c.bind("--model", db_model, "model file")->required();
    c.bind("--inputs", db_inputs, "fresh inputs (default drawn, density_size points)");
    c.bind("--input-columns", db_columns, "comma-separated input columns");
    c.bind("--output-column", db_output_col, "output column (default last)");
    c.bind("--kappa", db_kappa, "minimal interval length");
    c.bind("--delta", db_delta, "error probability");
    c.bind("--bandwidths", db_bandwidths, "naive-kernel bandwidths (default one automatic)");
    c.bind("--grid", db_grid, "lo:hi:steps (default output range)");
    c.bind("--out", db_out, "CSV of (y, lower, upper)");
    c.flag("--improved", db_improved, "use the improved surrogate instead of the base");
    c.run = [&](Context &ctx) {
      const fs::path e = ctx.input(db_exp);
      const fs::path m = ctx.input(db_model);
      const fs::path out = ctx.output(db_out);
      if (!(db_kappa > 0.0)) throw DomainError("--kappa must be given and > 0");
      if (ctx.dry_run) {
        if (!db_inputs.empty()) ctx.input(db_inputs);
        return json::object();
      }
      const PairedDataset exp = load_dataset(e, db_columns, db_output_col, DataKind::kExperimental);
      const ImprovedSurrogate model = load_model(m);
      const InputSample x = surrogate_inputs(db_inputs, db_columns, exp.inputs(),
                                             ctx.config.density_size, ctx.config.seed, ctx);
      const std::vector<double> outputs = to_std_vector(
          db_improved ? model.evaluate(x.points()) : model.base().evaluate(x.points()));
      BandSettings s;
      s.kappa = db_kappa;
      s.delta = db_delta;
      s.bandwidths = db_bandwidths.empty() ? std::vector<double>{select_bandwidth(outputs)}
                                           : db_bandwidths;
      const GridSpec g = parse_grid(db_grid, outputs);
      s.lo = g.lo;
      s.hi = g.hi;
      s.grid_steps = g.steps;
      const DensityBand band = db_improved ? density_band(outputs, exp, model, s)
                                           : density_band(outputs, exp, model.base(), s);
      Matrix table(static_cast<Eigen::Index>(band.grid.size()), 3);
      for (std::size_t i = 0; i < band.grid.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        table(k, 0) = band.grid[i];
        table(k, 1) = band.lower[i];
        table(k, 2) = band.upper[i];
      }
      write_csv(out, {"y", "lower", "upper"}, table);
      return json{{"kappa", band.kappa},
                  {"delta", band.delta},
                  {"bandwidths", band.bandwidths},
                  {"beta", band.beta},
                  {"eps", band.eps},
                  {"gamma", band.gamma},
                  {"correction", band.correction},
                  {"n", band.n},
                  {"big_n", band.big_n},
                  {"grid", {{"lo", g.lo}, {"hi", g.hi}, {"steps", g.steps}}},
                  {"file", db_out}};
    };
  }

  // synth
  std::string sy_system = "mafds", sy_bias = "constant", sy_prefix;
  double sy_magnitude = kNaN, sy_sigma = 0.0;
  std::int64_t sy_n = 10, sy_sim = 0, sy_inputs = 0;
  {
    Command &c = add("synth", "experiment, simulation and input files from a synthetic system");
    c.bind("--system", sy_system, "mafds or hidim")->check(CLI::IsMember({"mafds", "hidim"}));
    c.bind("--bias", sy_bias, "constant, linear or smooth");
    c.bind("--magnitude", sy_magnitude, "bias magnitude (default per system)");
    c.bind("--sigma", sy_sigma, "observation noise standard deviation");
    c.bind("--n", sy_n, "experimental points");
    c.bind("--sim-size", sy_sim, "simulated pairs (default surrogate_size)");
    c.bind("--inputs-count", sy_inputs, "fresh inputs to emit (0 = none)");
    c.bind("--prefix", sy_prefix, "file name prefix");
    c.run = [&](Context &ctx) {
      const BiasKind kind = bias_kind_from_string(sy_bias);
      const fs::path exp_out = ctx.output(sy_prefix + "exp.csv");
      const fs::path sim_out = ctx.output(sy_prefix + "sim.csv");
      std::optional<fs::path> in_out;
      if (sy_inputs > 0) in_out = ctx.output(sy_prefix + "inputs.csv");
      const bool mafds = sy_system == "mafds";
      const double mag = std::isnan(sy_magnitude) ? (mafds ? kDefaultBias : 0.2) : sy_magnitude;
      const SyntheticSystem s =
          mafds ? make_mafds_like(kind, sy_sigma, mag) : make_hidim_like(kind, sy_sigma, mag);
      if (ctx.dry_run) return json::object();
      const std::int64_t sim_size = sy_sim > 0 ? sy_sim : ctx.config.surrogate_size;
      std::vector<std::string> names;
      if (mafds) {
        names = {"h"};
      } else {
        names.assign(kPiezoColumns.begin(), kPiezoColumns.end() - 1);
      }
      auto named = [&](const PairedDataset &d) {
        return PairedDataset(d.inputs(), d.outputs(), d.kind(), names, "y");
      };
      write_dataset(exp_out, named(draw_experiment(s, sy_n, stream_seed(ctx.config.seed, 0))));
      write_dataset(sim_out, named(draw_simulation(s, sim_size, stream_seed(ctx.config.seed, 1))));
      if (in_out) {
        write_input_sample(*in_out, draw_inputs(s, sy_inputs, stream_seed(ctx.config.seed, 2)),
                           names);
      }
      json r{{"system", s.name},
             {"bias", to_string(kind)},
             {"magnitude", mag},
             {"sigma_obs", sy_sigma},
             {"n", sy_n},
             {"sim_size", sim_size},
             {"inputs_count", sy_inputs},
             {"files", json::array({sy_prefix + "exp.csv", sy_prefix + "sim.csv"})}};
      if (in_out) r["files"].push_back(sy_prefix + "inputs.csv");
      if (mafds) r["truth_quantile_95"] = mafds_oracle::truth_quantile(0.95);
      return r;
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << error_json("usage", e.what()).dump() << '\n';
    return 64;
  }

  const auto start = std::chrono::steady_clock::now();
  Command *cmd = nullptr;
  for (auto &c : commands) {
    if (c->app()->parsed()) cmd = c.get();
  }

  Context ctx;
  ctx.dry_run = dry_run;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw DataError("cannot open config file '" + config_path + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception &e) {
      throw DataError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    ctx.config = run_config_from_json(j);
  }
  if (seed_opt->count() > 0) ctx.config.seed = seed;
  std::vector<std::string> errors = ctx.config.validation_errors();
  const json global = ctx.config.method("global");
  for (const auto &[key, value] : global.items()) {
    if (key == "threads" && value.is_number_integer()) continue;
    if (key == "out_dir" && value.is_string()) continue;
    errors.push_back(key + ": unknown or ill-typed field");
  }
  std::string block_name = cmd->name();
  std::replace(block_name.begin(), block_name.end(), '-', '_');
  cmd->apply_config(ctx.config.method(cmd->name()), errors);
  if (block_name != cmd->name()) cmd->apply_config(ctx.config.method(block_name), errors);
  if (!errors.empty()) {
    std::string message = "invalid settings:";
    for (const auto &e : errors) message += " " + e + ";";
    throw DomainError(message);
  }

  ctx.out_dir = out_dir_opt->count() == 0 && global.contains("out_dir")
                    ? global["out_dir"].get<std::string>()
                    : out_dir;

  int worker_cap = 0;
  if (threads_opt->count() > 0) {
    worker_cap = threads;
  } else if (const auto env = env_threads()) {
    worker_cap = *env;
  } else if (global.contains("threads")) {
    worker_cap = global["threads"].get<int>();
  }
  if (worker_cap < 0) throw DomainError("thread count must be >= 0");
  set_max_threads(worker_cap);

  const std::string report = report_name.empty() ? cmd->name() + ".json" : report_name;
  const fs::path report_path = ctx.output(report);
  if (!ctx.dry_run) fs::create_directories(ctx.out_dir);

  json results = cmd->run(ctx);
  for (const fs::path &p : ctx.inputs) {
    if (!fs::exists(p)) throw DataError("cannot open file '" + p.string() + "'");
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json out{{"command", cmd->name()},
           {"version", kVersion},
           {"rng_contract", kRngContract},
           {"seed", ctx.config.seed},
           {"settings", cmd->settings()},
           {"config", to_json(ctx.config)},
           {"threads", max_threads()},
           {"dry_run", ctx.dry_run}};
  if (ctx.dry_run) {
    json planned = json::array();
    for (const fs::path &p : ctx.outputs) planned.push_back(p.string());
    out["planned_outputs"] = planned;
  } else {
    out["results"] = std::move(results);
    out["timings"] = {{"total_seconds", seconds}};
    write_json(report_path, out);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace
}  // namespace uqkit

int main(int argc, char **argv) {
  try {
    return uqkit::run(argc, argv);
  } catch (const uqkit::InfeasibleError &e) {
    json j = uqkit::error_json(e.code(), e.what());
    if (e.minimal_delta() > 0.0) j["error"]["minimal_delta"] = e.minimal_delta();
    std::cerr << j.dump() << '\n';
  } catch (const uqkit::Error &e) {
    std::cerr << uqkit::error_json(e.code(), e.what()).dump() << '\n';
  } catch (const std::exception &e) {
    std::cerr << uqkit::error_json("internal", e.what()).dump() << '\n';
  }
  return 1;
}
