// svdd: command-line front end.
//
//   svdd gen-data  --shape star --n 582 --seed 1 --out star.csv
//   svdd train     --data star.csv --s 0.9 --f 0.001 --out model.json
//   svdd score     --model model.json --data star.csv --out scores.csv
//   svdd select    --data star.csv --method full-peak --out-prefix run/star
//   svdd sweep     --data clusters.csv --method cv --M 40 --schedule 10%:100%:10% --seed 1
//   svdd f1-sweep  --train star.csv --score-data mixed.csv --label-column label
//   svdd timing    --data big.csv --schedule 1%:5%:1% --seed 1 --out timing.csv
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print one
// JSON line on stderr. The run report goes to stdout unless --report is given.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "svdd/svdd.hpp"

using json = nlohmann::json;
using namespace svdd;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "usage"; }
};

struct Report {
  json doc;
  json stages = json::object();
  json outputs = json::array();
  json result = json::object();

  void stage(const std::string& name, double seconds) {
    stages[name] = seconds;
    std::cerr << "[svdd] " << name << ": " << seconds << " s\n";
  }
  void output(const std::string& path) { outputs.push_back(path); }
};

struct GridFlags {
  double s_min = 0.05;
  double s_max = 10.0;
  double s_step = 0.05;
  SweepGrid grid() const { return SweepGrid(s_min, s_max, s_step); }
};

struct LabelFlags {
  std::string column;
  std::string target = "1";
  CsvOptions options() const {
    CsvOptions o;
    if (!column.empty()) o.label_column = column;
    o.target_value = target;
    return o;
  }
};

struct SolverFlags {
  double kkt_tol = 1e-6;
  std::size_t max_passes = 0;
  SolverSettings settings() const {
    SolverSettings s;
    s.kkt_tol = kkt_tol;
    s.max_passes = max_passes;
    return s;
  }
};

void add_grid(CLI::App* app, GridFlags& g) {
  app->add_option("--s-min", g.s_min, "Smallest bandwidth on the grid")->capture_default_str();
  app->add_option("--s-max", g.s_max, "Largest bandwidth on the grid")->capture_default_str();
  app->add_option("--s-step", g.s_step, "Grid spacing")->capture_default_str();
}

void add_labels(CLI::App* app, LabelFlags& l) {
  app->add_option("--label-column", l.column, "CSV column holding class labels");
  app->add_option("--target-value", l.target, "Label value of the target class")->capture_default_str();
}

void add_solver(CLI::App* app, SolverFlags& s) {
  app->add_option("--kkt-tol", s.kkt_tol, "SMO stopping tolerance")->capture_default_str();
  app->add_option("--max-passes", s.max_passes, "SMO iteration budget (0 = automatic)")->capture_default_str();
}

// "5%:100%:1%" gives fractions of N; "20:200:20" gives absolute sizes.
SampleSchedule parse_schedule(const std::string& text, std::size_t total, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("--schedule expects start:end:step, e.g. 5%:100%:1%");
  const bool pct = parts[0].ends_with('%');
  for (const auto& p : parts)
    if (p.ends_with('%') != pct) throw UsageError("--schedule must use % on all three parts or on none");
  try {
    if (pct) {
      const auto frac = [](const std::string& p) { return std::stod(p.substr(0, p.size() - 1)) / 100.0; };
      return SampleSchedule::from_fractions(total, frac(parts[0]), frac(parts[1]), frac(parts[2]), seed);
    }
    return SampleSchedule(std::stoul(parts[0]), std::stoul(parts[1]), std::stoul(parts[2]), seed);
  } catch (const std::logic_error&) {
    throw UsageError("--schedule has a non-numeric part: '" + text + "'");
  }
}

json options_snapshot(const CLI::App* app) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_type_size() == 0) out[names.front()] = true;
      else if (res.size() == 1) out[names.front()] = res.front();
      else out[names.front()] = res;
    } else if (!opt->get_default_str().empty()) {
      out[names.front()] = opt->get_default_str();
    }
  }
  return out;
}

std::string hint_for(const Error& e) {
  const std::string code = e.code();
  if (code == "io_error") return "check that the path exists and is readable/writable";
  if (code == "parse_error") return "expected a comma-separated file with a header row";
  if (code == "no_interior_maximum" || code == "no_zero_crossing")
    return "widen the grid (--s-min/--s-max) or change --knots";
  if (code == "non_convergence") return "raise --max-passes or loosen --kkt-tol";
  if (code == "infeasible") return "f must lie in (0, 1)";
  if (code == "singular_system") return "try fewer --knots or a fixed --lambda";
  return "";
}

void write_json_file(const std::string& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

std::string path_with(const std::string& prefix, const std::string& suffix) {
  const std::filesystem::path p(prefix + suffix);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

Dataset load(const std::string& path, const LabelFlags& labels) {
  return load_csv(path, labels.options());
}

Dataset target_rows(const Dataset& d) { return d.has_labels() ? d.filter(Label::target) : d; }

void curve_file(Report& rep, const std::string& path, const Curve& c, const SplineFit* fit) {
  auto out = open_output(path);
  write_curve_csv(out, c, fit);
  rep.output(path);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support vector data description with bandwidth selection"};
  app.set_version_flag("--version", version_string);
  app.set_config("--config", "", "TOML file with defaults; command-line flags win");
  app.require_subcommand(1);
  app.fallthrough();

  unsigned threads = 1;
  std::string report_path;
  app.add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
  app.add_option("--report", report_path, "Write the JSON run report here instead of stdout");

  Report rep;
  std::function<void()> action;

  // ------------------------------------------------------------ gen-data
  std::string shape_name = "star";
  std::size_t gen_n = 0;
  std::uint64_t seed = 0;
  std::size_t gen_box = 0;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic 2-D dataset");
  gen->add_option("--shape", shape_name, "star | clusters3 | banana")
      ->check(CLI::IsMember({"star", "clusters3", "banana"}))
      ->capture_default_str();
  gen->add_option("--n", gen_n, "Number of points")->required();
  gen->add_option("--seed", seed, "RNG seed")->required();
  gen->add_option("--uniform", gen_box,
                  "Append this many uniform bounding-box points and label every row by shape membership");
  gen->add_option("--out", out_path, "Output CSV")->required();
  gen->callback([&] {
    action = [&] {
      Stopwatch sw;
      const Shape shape = parse_shape(shape_name);
      auto data = generate(shape, gen_n, seed);
      if (gen_box > 0) {
        const auto& p = data.points();
        const auto box = uniform_box(gen_box, p.col(0).minCoeff(), p.col(0).maxCoeff(), p.col(1).minCoeff(),
                                     p.col(1).maxCoeff(), seed,
                                     [&](std::span<const double> z) { return inside_shape(shape, z); });
        Matrix all(data.rows() + box.rows(), 2);
        all << data.points(), box.points();
        std::vector<Label> labels(static_cast<std::size_t>(data.rows()), Label::target);
        labels.insert(labels.end(), box.labels().begin(), box.labels().end());
        data = Dataset(std::move(all), std::move(labels), {"x", "y"});
      }
      write_csv(out_path, data);
      rep.output(out_path);
      const std::string meta = out_path + ".meta.json";
      write_json_file(meta, {{"shape", shape_name},
                             {"n", gen_n},
                             {"uniform", gen_box},
                             {"seed", seed},
                             {"rows", data.rows()},
                             {"generator_version", version_string}});
      rep.output(meta);
      rep.stage("generate", sw.seconds());
      rep.result = {{"rows", data.rows()}};
    };
  });

  // --------------------------------------------------------------- train
  std::string data_path;
  LabelFlags labels;
  SolverFlags solver;
  double s = 1.0;
  double f = 0.001;
  std::size_t sample_size = 0;
  auto* train = app.add_subcommand("train", "Fit an SVDD model at one bandwidth");
  train->add_option("--data", data_path, "Training CSV")->required();
  add_labels(train, labels);
  train->add_option("--s", s, "Gaussian bandwidth")->required();
  train->add_option("--f", f, "Expected outlier fraction")->capture_default_str();
  train->add_option("--sample-size", sample_size, "Use sampling SVDD with this sample size (needs --seed)");
  train->add_option("--seed", seed, "RNG seed for sampling SVDD");
  add_solver(train, solver);
  train->add_option("--out", out_path, "Model JSON")->required();
  train->callback([&] {
    if (sample_size > 0 && train->count("--seed") == 0)
      throw CLI::ValidationError("--seed", "sampling SVDD needs an explicit --seed");
    action = [&] {
      Stopwatch sw;
      const auto data = target_rows(load(data_path, labels));
      rep.stage("load", sw.seconds());
      Stopwatch fit;
      SvddModel model;
      if (sample_size > 0) {
        const auto res = sample_train(data, s, f, SamplingTrainConfig{sample_size, 200, 5, 0.01, seed},
                                      solver.settings());
        model = res.model;
        rep.result["sampling_iterations"] = res.iterations;
        rep.result["sampling_converged"] = res.converged;
      } else {
        model = solve_dual(data, SvddConfig{s, f, solver.settings()});
      }
      rep.stage("train", fit.seconds());
      save_model(model, out_path);
      rep.output(out_path);
      rep.result["oof"] = model.oof;
      rep.result["nsv"] = model.nsv;
      rep.result["r_squared"] = model.r_squared;
      rep.result["iterations"] = model.iterations;
    };
  });

  // --------------------------------------------------------------- score
  std::string model_path;
  std::string grid_prefix;
  std::size_t resolution = 200;
  auto* scorecmd = app.add_subcommand("score", "Score rows (and optionally a 2-D grid) with a saved model");
  scorecmd->add_option("--model", model_path, "Model JSON")->required();
  scorecmd->add_option("--data", data_path, "CSV to score")->required();
  add_labels(scorecmd, labels);
  scorecmd->add_option("--out", out_path, "Per-row CSV: row,distance_sq,outlier");
  scorecmd->add_option("--grid-prefix", grid_prefix, "Write <prefix>_grid.csv and <prefix>_grid.svg (2-D only)");
  scorecmd->add_option("--resolution", resolution, "Grid cells per axis")->capture_default_str();
  scorecmd->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto model = load_model(model_path);
      const auto data = load(data_path, labels);
      if (data.cols() != model.dims())
        throw DimensionMismatch("data has " + std::to_string(data.cols()) + " columns, model expects " +
                                std::to_string(model.dims()));
      rep.stage("load", sw.seconds());
      Stopwatch sc;
      const auto scores = score_all(model, data);
      std::size_t outliers = 0;
      for (const auto& r : scores) outliers += r.is_outlier ? 1 : 0;
      rep.stage("score", sc.seconds());
      rep.result["rows"] = data.rows();
      rep.result["outliers"] = outliers;
      rep.result["outlier_fraction"] = static_cast<double>(outliers) / static_cast<double>(data.rows());
      if (data.has_labels()) {
        const auto q = evaluate(model, data);
        rep.result["precision"] = q.precision;
        rep.result["recall"] = q.recall;
        rep.result["f1"] = q.f1;
      }
      if (!out_path.empty()) {
        auto out = open_output(out_path);
        out << "row,distance_sq,outlier\n";
        for (std::size_t i = 0; i < scores.size(); ++i)
          out << i << ',' << detail::format_double(scores[i].distance_sq) << ',' << (scores[i].is_outlier ? 1 : 0)
              << '\n';
        rep.output(out_path);
      }
      if (!grid_prefix.empty()) {
        Stopwatch gs;
        const auto g = grid_score_2d(model, default_bounds(data), resolution, threads);
        const auto csv = path_with(grid_prefix, "_grid.csv");
        auto c = open_output(csv);
        write_grid_csv(c, g);
        rep.output(csv);
        const auto svg = path_with(grid_prefix, "_grid.svg");
        auto v = open_output(svg);
        write_grid_svg(v, g, &data);
        rep.output(svg);
        rep.stage("grid", gs.seconds());
        rep.result["grid_inside_cells"] = g.inside_count();
      }
    };
  });

  // -------------------------------------------------------------- select
  std::string method = "full-peak";
  GridFlags grid;
  SmootherParams smoother;
  std::optional<double> lambda;
  std::string schedule_text = "5%:100%:1%";
  ConvergenceParams conv;
  std::string prefix;
  auto* select = app.add_subcommand("select", "Choose the Gaussian bandwidth");
  select->add_option("--data", data_path, "Training CSV")->required();
  add_labels(select, labels);
  select->add_option("--method", method, "full-peak | sampling-peak | cv | dfn")
      ->check(CLI::IsMember({"full-peak", "sampling-peak", "cv", "dfn"}))
      ->capture_default_str();
  add_grid(select, grid);
  select->add_option("--f", f, "Expected outlier fraction")->capture_default_str();
  select->add_option("--knots", smoother.knots, "P-spline knots")->capture_default_str();
  select->add_option("--lambda", lambda, "Fixed P-spline penalty (default: GCV)");
  select->add_option("--schedule", schedule_text, "Sample sizes start:end:step, % of N or absolute")
      ->capture_default_str();
  select->add_option("--eps-s", conv.eps_s, "Relative convergence tolerance")->capture_default_str();
  select->add_option("--u", conv.u, "Consecutive agreements required")->capture_default_str();
  select->add_option("--seed", seed, "RNG seed (sampling-peak)");
  add_solver(select, solver);
  select->add_option("--out-prefix", prefix, "Prefix for curve and trace CSVs");
  select->callback([&] {
    if (method == "sampling-peak" && select->count("--seed") == 0)
      throw CLI::ValidationError("--seed", "sampling-peak needs an explicit --seed");
    action = [&] {
      Stopwatch sw;
      const auto data = target_rows(load(data_path, labels));
      rep.stage("load", sw.seconds());
      smoother.lambda = lambda;
      const auto g = grid.grid();
      Stopwatch run;
      double s_opt = 0.0;
      if (method == "full-peak") {
        const auto r = full_peak(data, g, f, smoother, solver.settings(), threads);
        s_opt = r.s_opt();
        rep.result["first_max_s"] = optional_json(r.first_max_s);
        rep.result["band_crossing_s"] = optional_json(r.band_crossing_s);
        rep.result["lambda_first"] = r.first_fit.lambda;
        rep.result["lambda_second"] = r.second_fit.lambda;
        if (!prefix.empty()) {
          curve_file(rep, path_with(prefix, "_oof.csv"), r.oof, nullptr);
          curve_file(rep, path_with(prefix, "_first_diff.csv"), r.first_diff, &r.first_fit);
          curve_file(rep, path_with(prefix, "_second_diff.csv"), r.second_diff, &r.second_fit);
        }
      } else if (method == "sampling-peak") {
        SamplingPeakOptions opt;
        opt.conv = conv;
        opt.smoother = smoother;
        opt.solver = solver.settings();
        opt.threads = threads;
        const auto sched = parse_schedule(schedule_text, static_cast<std::size_t>(data.rows()), seed);
        const auto trace = sampling_peak(data, sched, g, f, opt);
        if (std::isnan(trace.final_s))
          throw NoInteriorMaximum("no sample size produced an interior maximum of the first difference");
        s_opt = trace.final_s;
        rep.result["converged"] = trace.converged;
        rep.result["converged_at"] = trace.converged_at ? json(*trace.converged_at) : json(nullptr);
        json rows = json::array();
        for (const auto& e : trace.entries)
          rows.push_back({{"n_i", e.sample_size},
                          {"s_opt", std::isnan(e.s_opt) ? json(nullptr) : json(e.s_opt)},
                          {"seconds", e.seconds},
                          {"unconverged_cells", e.unconverged}});
        rep.result["trace"] = rows;
        if (!trace.converged) std::cerr << "[svdd] warning: schedule exhausted without convergence\n";
        if (!prefix.empty()) {
          const auto path = path_with(prefix, "_trace.csv");
          auto out = open_output(path);
          write_trace_csv(out, trace);
          rep.output(path);
        }
      } else {
        const auto m = method == "cv" ? SweepMethod::cv : SweepMethod::dfn;
        s_opt = select_with(m, data, g);
        if (!prefix.empty()) {
          const auto path = path_with(prefix, "_objective.csv");
          auto out = open_output(path);
          out << "s,objective\n";
          for (std::size_t k = 0; k < g.size(); ++k)
            out << detail::format_double(g[k]) << ','
                << detail::format_double(m == SweepMethod::cv ? cv_objective(data, g[k]) : dfn_objective(data, g[k]))
                << '\n';
          rep.output(path);
        }
      }
      rep.stage(method, run.seconds());
      rep.result["s_opt"] = s_opt;
      std::cerr << "[svdd] s_opt = " << s_opt << '\n';
    };
  });

  // --------------------------------------------------------------- sweep
  std::string sweep_method = "cv";
  std::size_t M = 40;
  bool without_replacement = false;
  bool keep_duplicates = false;
  std::string draws_path;
  auto* sweep = app.add_subcommand("sweep", "Randomized CV/DFN sweep over sample sizes");
  sweep->add_option("--data", data_path, "CSV")->required();
  add_labels(sweep, labels);
  sweep->add_option("--method", sweep_method, "cv | dfn")->check(CLI::IsMember({"cv", "dfn"}))->capture_default_str();
  sweep->add_option("--M", M, "Draws per sample size")->capture_default_str();
  sweep->add_option("--schedule", schedule_text, "Sample sizes start:end:step, % of N or absolute")
      ->capture_default_str();
  sweep->add_option("--seed", seed, "RNG seed")->required();
  add_grid(sweep, grid);
  sweep->add_flag("--without-replacement", without_replacement, "Draw rows without replacement");
  sweep->add_flag("--keep-duplicates", keep_duplicates, "Keep repeated rows of with-replacement draws");
  sweep->add_option("--out", out_path, "Per-size CSV: n_i,mean,var,seconds");
  sweep->add_option("--draws-out", draws_path, "Per-draw CSV: n_i,draw,s_opt");
  sweep->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto data = target_rows(load(data_path, labels));
      rep.stage("load", sw.seconds());
      RandomizedSweepConfig cfg;
      cfg.M = M;
      cfg.schedule = parse_schedule(schedule_text, static_cast<std::size_t>(data.rows()), seed);
      cfg.method = parse_sweep_method(sweep_method);
      cfg.s_grid = grid.grid();
      cfg.seed = seed;
      cfg.with_replacement = !without_replacement;
      cfg.collapse_duplicates = !keep_duplicates;
      cfg.threads = threads;
      Stopwatch run;
      const auto stats = randomized_sweep(data, cfg);
      rep.stage("sweep", run.seconds());
      json rows = json::array();
      for (const auto& st : stats)
        rows.push_back({{"n_i", st.sample_size}, {"mean", st.mean}, {"var", st.variance}, {"seconds", st.seconds}});
      rep.result["sizes"] = rows;
      if (!out_path.empty()) {
        auto out = open_output(out_path);
        write_sweep_csv(out, stats);
        rep.output(out_path);
      }
      if (!draws_path.empty()) {
        auto out = open_output(draws_path);
        out << "n_i,draw,s_opt\n";
        for (const auto& st : stats)
          for (std::size_t r = 0; r < st.draws.size(); ++r)
            out << st.sample_size << ',' << r << ',' << detail::format_double(st.draws[r]) << '\n';
        rep.output(draws_path);
      }
    };
  });

  // ------------------------------------------------------------ f1-sweep
  std::string score_path;
  bool inside_is_other = false;
  auto* f1cmd = app.add_subcommand("f1-sweep", "F1 of full SVDD along the bandwidth grid");
  f1cmd->add_option("--train", data_path, "Training CSV (target rows used when labelled)")->required();
  f1cmd->add_option("--score-data", score_path, "Labelled scoring CSV")->required();
  add_labels(f1cmd, labels);
  add_grid(f1cmd, grid);
  f1cmd->add_option("--f", f, "Expected outlier fraction")->capture_default_str();
  f1cmd->add_flag("--inside-is-other", inside_is_other, "Treat `other` rows as the positive class");
  add_solver(f1cmd, solver);
  f1cmd->add_option("--out", out_path, "CSV: s,precision,recall,f1,nsv");
  f1cmd->callback([&] {
    if (labels.column.empty()) throw CLI::ValidationError("--label-column", "f1-sweep needs labelled scoring data");
    action = [&] {
      Stopwatch sw;
      CsvOptions train_opts = labels.options();
      std::ifstream probe(data_path);
      std::string header;
      std::getline(probe, header);
      if (header.find(labels.column) == std::string::npos) train_opts.label_column.reset();
      const auto train_data = load_csv(data_path, train_opts);
      const auto score_data = load(score_path, labels);
      rep.stage("load", sw.seconds());
      Stopwatch run;
      const auto curve = f1_sweep(train_data, score_data, grid.grid(), f, solver.settings(), threads, !inside_is_other);
      rep.stage("f1-sweep", run.seconds());
      const double best = curve.best_s();
      const auto k = static_cast<std::size_t>(std::find(curve.s.begin(), curve.s.end(), best) - curve.s.begin());
      rep.result["best_s"] = best;
      rep.result["best_f1"] = curve.scores[k].f1;
      if (!out_path.empty()) {
        auto out = open_output(out_path);
        out << "s,precision,recall,f1,nsv\n";
        for (std::size_t i = 0; i < curve.s.size(); ++i)
          out << detail::format_double(curve.s[i]) << ',' << detail::format_double(curve.scores[i].precision) << ','
              << detail::format_double(curve.scores[i].recall) << ',' << detail::format_double(curve.scores[i].f1)
              << ',' << curve.nsv[i] << '\n';
        rep.output(out_path);
      }
    };
  });

  // -------------------------------------------------------------- timing
  bool skip_full = false;
  auto* timing = app.add_subcommand("timing", "Sampling-peak cost per sample size against the full sweep");
  timing->add_option("--data", data_path, "CSV")->required();
  add_labels(timing, labels);
  timing->add_option("--schedule", schedule_text, "Sample sizes start:end:step, % of N or absolute")
      ->capture_default_str();
  timing->add_option("--seed", seed, "RNG seed")->required();
  add_grid(timing, grid);
  timing->add_option("--f", f, "Expected outlier fraction")->capture_default_str();
  add_solver(timing, solver);
  timing->add_flag("--skip-full", skip_full, "Do not time the full-data sweep");
  timing->add_option("--out", out_path, "CSV: method,n_i,seconds")->required();
  timing->callback([&] {
    action = [&] {
      Stopwatch sw;
      const auto data = target_rows(load(data_path, labels));
      rep.stage("load", sw.seconds());
      const auto g = grid.grid();
      const auto sched = parse_schedule(schedule_text, static_cast<std::size_t>(data.rows()), seed);
      sched.validate_against(static_cast<std::size_t>(data.rows()));
      SamplingPeakOptions opt;
      opt.solver = solver.settings();
      opt.threads = threads;
      auto out = open_output(out_path);
      out << "method,n_i,seconds\n";
      json rows = json::array();
      const auto sizes = sched.sizes();
      Stopwatch samp;
      for (std::size_t a = 0; a < sizes.size(); ++a) {
        const auto e = sampling_row(data, sizes[a], a, g, f, seed, opt);
        out << "sampling," << e.sample_size << ',' << detail::format_double(e.seconds) << '\n';
        rows.push_back({{"n_i", e.sample_size}, {"seconds", e.seconds}});
      }
      rep.stage("sampling", samp.seconds());
      rep.result["sampling"] = rows;
      if (!skip_full) {
        Stopwatch full;
        const auto tc = train_curve(data, g, f, opt.solver, threads);
        double total = 0.0;
        for (double t : tc.seconds) total += t;
        out << "full," << data.rows() << ',' << detail::format_double(total) << '\n';
        rep.result["full_seconds"] = total;
        rep.stage("full", full.seconds());
      }
      rep.output(out_path);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"hint", "run with --help"}}.dump() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}, {"hint", "run with --help"}}.dump() << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::string> echo(argv, argv + argc);
  rep.doc = {{"tool", "svdd"}, {"version", version_string}, {"command", echo}, {"subcommand", sub->get_name()}};
  json config = options_snapshot(sub);
  config["threads"] = threads;
  rep.doc["config"] = config;

  Stopwatch total;
  try {
    action();
  } catch (const UsageError& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}, {"hint", "run with --help"}}.dump() << '\n';
    return 2;
  } catch (const Error& e) {
    json err{{"error", e.code()}, {"message", e.what()}};
    if (const auto h = hint_for(e); !h.empty()) err["hint"] = h;
    std::cerr << err.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  rep.stage("total", total.seconds());
  rep.doc["stages"] = rep.stages;
  rep.doc["outputs"] = rep.outputs;
  rep.doc["result"] = rep.result;
  try {
    if (report_path.empty()) {
      std::cout << rep.doc.dump(2) << '\n';
    } else {
      write_json_file(report_path, rep.doc);
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
