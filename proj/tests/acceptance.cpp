// Acceptance run: one PASS/FAIL/SKIP line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any criterion fails.
//
//   SVDD_ACCEPT_ONLY=1,4,8   run a subset
//   SVDD_SHUTTLE_CSV=path    enables criterion 12 (header row, class column)
//   SVDD_SHUTTLE_LABEL=name  class column name (default "class"), target value "1"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>

#include "oracle.hpp"
#include "svdd/svdd.hpp"

using namespace svdd;

namespace {

struct Verdict {
  enum Kind { pass, fail, skip } kind;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// Model audit shared by every solve in this binary.
struct Audit {
  std::mutex mu;
  std::size_t models = 0;
  std::size_t bad = 0;
  double worst_sum = 0.0;
  double worst_box = 0.0;
  double worst_boundary = 0.0;
  std::string first_bad;

  void check(const Dataset& data, const SvddModel& m, double kkt_tol) {
    const double sum = std::abs(m.alphas.sum() - 1.0);
    double box = 0.0;
    double boundary = 0.0;
    for (Index k = 0; k < m.nsv; ++k) {
      box = std::max(box, std::max(-m.alphas[k], m.alphas[k] - m.C));
      if (m.sv_interior[static_cast<std::size_t>(k)])
        boundary = std::max(boundary, std::abs(score(m, m.sv(k)).distance_sq - m.r_squared));
    }
    const bool ok = sum <= 1e-8 && box <= 1e-12 && boundary <= 10 * kkt_tol;
    std::lock_guard lock(mu);
    ++models;
    worst_sum = std::max(worst_sum, sum);
    worst_box = std::max(worst_box, box);
    worst_boundary = std::max(worst_boundary, boundary / kkt_tol);
    if (!ok) {
      ++bad;
      if (first_bad.empty())
        first_bad = "n=" + std::to_string(data.rows()) + " s=" + fmt(m.s) + " sum_err=" + fmt(sum) +
                    " box_err=" + fmt(box) + " boundary=" + fmt(boundary);
    }
  }
};

Audit audit;

SolverSettings audited(SolverSettings base = {}) {
  const double tol = base.kkt_tol;
  base.observer = [tol](const Dataset& d, const SvddModel& m) { audit.check(d, m, tol); };
  return base;
}

const SweepGrid star_grid(0.05, 10.0, 0.05);

// Shared between criteria 6 and 7.
std::optional<SelectionTrace> star_trace;
std::optional<FullPeakResult> star_full;

const Dataset& star582() {
  static const Dataset d = gen_star(582, 1);
  return d;
}

const FullPeakResult& star_full_peak() {
  if (!star_full) star_full = full_peak(star582(), star_grid, 0.001, {}, audited());
  return *star_full;
}

const SelectionTrace& star_sampling_trace() {
  if (!star_trace) {
    SamplingPeakOptions opt;
    opt.conv = ConvergenceParams{0.05, 3};
    opt.solver = audited();
    star_trace = sampling_peak(star582(), SampleSchedule::from_fractions(582, 0.05, 1.0, 0.01, 1), star_grid,
                               0.001, opt);
  }
  return *star_trace;
}

// ------------------------------------------------------------------ 1
Verdict c1() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> nd(1, 12);
  std::uniform_int_distribution<int> md(1, 4);
  std::uniform_real_distribution<double> sd(0.1, 5.0);
  std::uniform_real_distribution<double> fd(0.05, 0.5);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_oof = 0.0;
  double worst_alpha = 0.0;
  int degenerate = 0;
  int failures = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = nd(rng);
    const int m = md(rng);
    Matrix x(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) x(i, j) = g(rng);
    const double s = sd(rng);
    const double f = fd(rng);
    const Dataset d(x);
    SolverSettings tight;
    tight.kkt_tol = 1e-9;
    const auto model = solve_dual(d, SvddConfig{s, f, audited(tight)});
    const auto K = oracle::gram(d, s);
    const auto ref = oracle::svdd_dual(K, model.C, 1e-10);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    for (Index k = 0; k < model.nsv; ++k) full[model.sv_indices[static_cast<std::size_t>(k)]] = model.alphas[k];
    const double doof = std::abs(model.oof - ref.oof);
    const double dalpha = (full - ref.alpha).lpNorm<Eigen::Infinity>();
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff();
    const bool singular = lmin < 1e-6;
    degenerate += singular ? 1 : 0;
    worst_oof = std::max(worst_oof, doof);
    if (!singular) worst_alpha = std::max(worst_alpha, dalpha);
    if (doof > 1e-6 || (!singular && dalpha > 1e-4)) ++failures;
  }
  return {failures == 0 ? Verdict::pass : Verdict::fail,
          "200 instances, SMO kkt_tol 1e-9, max |oof diff| " + fmt(worst_oof) + ", max alpha diff " + fmt(worst_alpha) + " (" +
              std::to_string(degenerate) + " singular-kernel instances compared on oof only), failures " +
              std::to_string(failures)};
}

// ------------------------------------------------------------------ 3
Verdict c3() {
  const auto& fp = star_full_peak();
  const auto& asc = fp.oof;
  double worst = 0.0;
  for (std::size_t k = 1; k < asc.size(); ++k) worst = std::max(worst, asc.ys[k - 1] - asc.ys[k]);
  return {worst <= 1e-6 ? Verdict::pass : Verdict::fail,
          "star n=582 f=0.001, 200 grid points, largest downward step of the ascending OOF curve " + fmt(worst)};
}

// ------------------------------------------------------------------ 4
Verdict c4() {
  const auto lo = solve_dual(star582(), SvddConfig{0.01, 0.001, audited()});
  const auto hi = solve_dual(star582(), SvddConfig{100.0, 0.001, audited()});
  const bool ok = lo.nsv == 582 && hi.nsv <= 10;
  return {ok ? Verdict::pass : Verdict::fail,
          "NSV(0.01) = " + std::to_string(lo.nsv) + ", NSV(100) = " + std::to_string(hi.nsv)};
}

// ------------------------------------------------------------------ 5
Verdict c5() {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, std::sqrt(1e-4));
  Curve c;
  for (std::size_t i = 0; i < 200; ++i) {
    const double s = 0.05 * static_cast<double>(i + 1);
    c.xs.push_back(s);
    c.ys.push_back(s - std::exp(-s) + noise(rng));
  }
  std::optional<double> first;
  std::optional<double> band;
  try {
    const auto r = peak_from_curve(c);
    first = r.first_max_s;
    band = r.band_crossing_s;
  } catch (const Error&) {
  }
  const auto show = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); };
  const bool ok = first && band && std::abs(*first - *band) <= 2 * 0.05 + 1e-9;
  return {ok ? Verdict::pass : Verdict::fail,
          "grid 0.05..10, noise variance 1e-4: first-difference max " + show(first) + ", band crossing " + show(band)};
}

// ------------------------------------------------------------------ 6
Verdict c6() {
  const auto& tr = star_sampling_trace();
  const auto& fp = star_full_peak();
  if (!fp.first_max_s) return {Verdict::fail, "full peak has no first-difference maximum"};
  const double gap = std::abs(tr.final_s - *fp.first_max_s);
  const bool ok = tr.converged && gap <= 0.15;
  return {ok ? Verdict::pass : Verdict::fail,
          std::string("converged ") + (tr.converged ? "yes at n=" + std::to_string(*tr.converged_at) : "no") +
              ", final_s " + fmt(tr.final_s) + ", full-peak first-difference s " + fmt(*fp.first_max_s) +
              ", |diff| " + fmt(gap)};
}

// ------------------------------------------------------------------ 7
Verdict c7() {
  const auto& star = star582();
  const auto& tr = star_sampling_trace();
  const auto& p = star.points();
  const auto box = uniform_box(500, p.col(0).minCoeff(), p.col(0).maxCoeff(), p.col(1).minCoeff(),
                               p.col(1).maxCoeff(), 1, inside_star);
  Matrix all(star.rows() + box.rows(), 2);
  all << star.points(), box.points();
  std::vector<Label> labels(static_cast<std::size_t>(star.rows()), Label::target);
  labels.insert(labels.end(), box.labels().begin(), box.labels().end());
  const Dataset scoring(std::move(all), std::move(labels));
  const auto f1_at = [&](double s) { return evaluate(solve_dual(star, SvddConfig{s, 0.001, audited()}), scoring).f1; };
  const double mid = f1_at(tr.final_s);
  const double lo = f1_at(0.05);
  const double hi = f1_at(10.0);
  const bool ok = mid - lo >= 0.05 && mid - hi >= 0.05;
  return {ok ? Verdict::pass : Verdict::fail,
          "F1 at s=" + fmt(tr.final_s) + ": " + fmt(mid) + ", at 0.05: " + fmt(lo) + ", at 10: " + fmt(hi)};
}

// ------------------------------------------------------------------ 8
Verdict c8() {
  std::ostringstream detail;
  bool ok = true;
  const std::vector<std::pair<std::string, Dataset>> sets{
      {"star", gen_star(582, 1)}, {"clusters3", gen_three_clusters(276, 1)}, {"banana", gen_banana(267, 1)}};
  for (const auto& [name, d] : sets) {
    const double diam = diameter(d);
    const double cv_lo = cv_objective(d, 1e-3 * diam);
    const double cv_hi = cv_objective(d, 1e3 * diam);
    const double dfn_lo = dfn_objective(d, 1e-3 * diam);
    const double dfn_hi = dfn_objective(d, 1e3 * diam);
    for (double v : {cv_lo, cv_hi, dfn_lo, dfn_hi}) ok = ok && v <= 1e-4;
    detail << name << ": cv " << fmt(cv_lo) << "/" << fmt(cv_hi) << ", dfn " << fmt(dfn_lo) << "/" << fmt(dfn_hi)
           << "; ";
  }
  Matrix x(3, 1);
  x << 0.0, 1.0, 2.0;
  const Dataset three(x);
  const double cv3 = cv_objective(three, 1.0);
  const double dfn3 = dfn_objective(three, 1.0);
  ok = ok && std::abs(cv3 - 0.1098) <= 1e-3 && std::abs(dfn3 - 0.6283) <= 1e-3;
  detail << "collinear cv " << fmt(cv3) << ", dfn " << fmt(dfn3) << " (values at 1e-3*diam / 1e3*diam)";
  return {ok ? Verdict::pass : Verdict::fail, detail.str()};
}

// ------------------------------------------------------------------ 9
Verdict c9() {
  const auto d = gen_three_clusters(276, 1);
  RandomizedSweepConfig cfg;
  cfg.M = 40;
  cfg.schedule = SampleSchedule(28, 276, 31, 1);  // 10% to 100% of N in nine steps
  cfg.method = SweepMethod::cv;
  cfg.seed = 1;
  const auto stats = randomized_sweep(d, cfg);
  // Histogram of every draw, bins of width 0.25 in s.
  std::map<int, std::vector<double>> bins;
  for (const auto& st : stats)
    for (double v : st.draws) bins[static_cast<int>(std::floor(v / 0.25))].push_back(v);
  std::vector<std::pair<std::size_t, double>> peaks;  // (count, mean s) of histogram local maxima
  for (const auto& [b, members] : bins) {
    const auto count = [&](int k) { return bins.count(k) ? bins.at(k).size() : std::size_t{0}; };
    if (members.size() >= count(b - 1) && members.size() >= count(b + 1)) {
      double mean = 0.0;
      for (double v : members) mean += v;
      peaks.emplace_back(members.size(), mean / static_cast<double>(members.size()));
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double ratio = 1.0;
  if (peaks.size() >= 2)
    ratio = std::max(peaks[0].second, peaks[1].second) / std::min(peaks[0].second, peaks[1].second);
  const double v_small = stats.front().variance;
  const double v_large = stats.back().variance;
  const bool bimodal = peaks.size() >= 2 && ratio >= 3.0;
  const bool variance_kept = v_large >= 0.5 * v_small;
  std::ostringstream detail;
  detail << "modes";
  for (std::size_t k = 0; k < std::min<std::size_t>(2, peaks.size()); ++k)
    detail << " s~" << fmt(peaks[k].second) << " (" << peaks[k].first << " draws)";
  detail << ", ratio " << fmt(ratio) << "; variance n=" << stats.front().sample_size << ": " << fmt(v_small)
         << ", n=" << stats.back().sample_size << ": " << fmt(v_large);
  return {bimodal && variance_kept ? Verdict::pass : Verdict::fail, detail.str()};
}

// ----------------------------------------------------------------- 10
Verdict c10() {
  const auto d = gen_banana(267, 1);
  const SweepGrid grid(0.05, 10.0, 0.05);
  SmootherParams k100;
  SmootherParams k40;
  k40.knots = 40;
  const auto tc = train_curve(d, grid, 0.001, audited());
  const auto asc = ascending_oof(tc.s, tc.oof);
  const auto a = peak_from_curve(asc, k100);
  const auto b = peak_from_curve(asc, k40);
  const auto maxima_on = [](const FullPeakResult& r) {
    std::vector<double> v;
    for (double x : r.first_diff.xs)
      if (x <= 2.0 + 1e-9) v.push_back(eval_spline(r.first_fit, x).value);
    return local_maxima(v).size();
  };
  const auto n100 = maxima_on(a);
  const auto n40 = maxima_on(b);
  const bool differ = a.first_max_s && b.first_max_s && std::abs(*a.first_max_s - *b.first_max_s) > 1e-9;
  const auto show = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); };
  return {differ && n40 < n100 ? Verdict::pass : Verdict::fail,
          "100 knots: s " + show(a.first_max_s) + ", " + std::to_string(n100) + " maxima on [0.05,2]; 40 knots: s " +
              show(b.first_max_s) + ", " + std::to_string(n40) + " maxima"};
}

// ----------------------------------------------------------------- 11
Verdict c11() {
  const auto d = gen_star(20000, 1);
  const SweepGrid grid(0.25, 10.0, 0.25);
  SamplingPeakOptions opt;
  opt.solver = audited();
  Stopwatch sw;
  const auto row = sampling_row(d, 200, 0, grid, 0.001, 1, opt);
  const double sampling = sw.seconds();
  std::cerr << "[acceptance] 11: sampling row " << sampling << " s, starting full sweep\n";
  Stopwatch fw;
  const auto full = full_peak(d, grid, 0.001, {}, audited());
  const double full_s = fw.seconds();
  const bool ok = sampling < 0.25 * full_s;
  return {ok ? Verdict::pass : Verdict::fail,
          "N=20000, 40-point grid: sampling at n=200 " + fmt(sampling) + " s, full peak " + fmt(full_s) +
              " s, ratio " + fmt(sampling / full_s) + (row.unconverged ? " (some cells hit max_iters)" : "")};
}

// ----------------------------------------------------------------- 12
Verdict c12() {
  const char* path = std::getenv("SVDD_SHUTTLE_CSV");
  if (!path) return {Verdict::skip, "set SVDD_SHUTTLE_CSV to run the Shuttle checks"};
  CsvOptions opts;
  const char* label = std::getenv("SVDD_SHUTTLE_LABEL");
  opts.label_column = label ? label : "class";
  opts.target_value = "1";
  const auto data = load_csv(path, opts);
  const auto target = data.filter(Label::target);
  auto rng = make_rng(1, {12});
  const auto rows = draw_indices_without_replacement(target.rows(), std::min<std::size_t>(2000, target.rows()), rng);
  const auto train = target.subset(rows);
  const SweepGrid grid(1.0, 100.0, 1.0);
  const auto curve = f1_sweep(train, data, grid, 0.001, audited());
  const double best = curve.best_s();
  SamplingPeakOptions opt;
  opt.solver = audited();
  const auto tr = sampling_peak(train, SampleSchedule::from_fractions(train.rows(), 0.05, 1.0, 0.01, 1), grid,
                                0.001, opt);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (tr.converged) {
    const auto& e = tr.entries;
    for (std::size_t k = e.size() - (opt.conv.u + 1); k < e.size(); ++k) {
      lo = std::min(lo, e[k].s_opt);
      hi = std::max(hi, e[k].s_opt);
    }
  }
  const bool ok = std::abs(best - 17.0) <= 1.0 && tr.converged && hi >= 15.3 && lo <= 15.75;
  return {ok ? Verdict::pass : Verdict::fail, "F1 max at s=" + fmt(best) + ", sampling-peak range [" + fmt(lo) +
                                                  ", " + fmt(hi) + "]" + (tr.converged ? "" : " (not converged)")};
}

// Criterion 2 summarises the audit of every model trained above.
Verdict c2() {
  std::lock_guard lock(audit.mu);
  const bool ok = audit.bad == 0 && audit.models > 0;
  return {ok ? Verdict::pass : Verdict::fail,
          std::to_string(audit.models) + " models audited, " + std::to_string(audit.bad) +
              " violations; worst |sum-1| " + fmt(audit.worst_sum) + ", worst box excess " + fmt(audit.worst_box) +
              ", worst |D2-R2| " + fmt(audit.worst_boundary) + " x kkt_tol" +
              (audit.first_bad.empty() ? "" : "; first: " + audit.first_bad)};
}

}  // namespace

int main() {
  std::set<int> only;
  if (const char* sel = std::getenv("SVDD_ACCEPT_ONLY")) {
    std::stringstream ss(sel);
    for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
  }
  const std::vector<std::pair<int, Verdict (*)()>> order{{1, c1},  {3, c3}, {4, c4},   {5, c5},   {6, c6}, {7, c7},
                                                         {8, c8},  {9, c9}, {10, c10}, {11, c11}, {12, c12}};
  const std::map<int, std::string> names{{1, "solver-oracle equivalence"},
                                         {2, "feasibility/KKT of every trained model"},
                                         {3, "OOF monotonicity"},
                                         {4, "NSV endpoints"},
                                         {5, "peak-method self-consistency"},
                                         {6, "sampling-peak convergence to full peak"},
                                         {7, "boundary quality via ground truth"},
                                         {8, "CV/DFN limits and hand values"},
                                         {9, "CV bimodality on clusters"},
                                         {10, "knot sensitivity"},
                                         {11, "performance crossover"},
                                         {12, "dataset-gated Shuttle checks"}};
  std::map<int, Verdict> results;
  for (const auto& [id, fn] : order) {
    if (!only.empty() && !only.count(id)) continue;
    std::cerr << "[acceptance] criterion " << id << " ...\n";
    Stopwatch sw;
    try {
      results.emplace(id, fn());
    } catch (const std::exception& e) {
      results.emplace(id, Verdict{Verdict::fail, std::string("exception: ") + e.what()});
    }
    results.at(id).detail += " [" + fmt(sw.seconds(), 3) + " s]";
    std::cerr << "[acceptance] criterion " << id << " done in " << sw.seconds() << " s\n";
  }
  if (only.empty() || only.count(2)) results.emplace(2, c2());

  int failed = 0;
  for (const auto& [id, v] : results) {
    const char* tag = v.kind == Verdict::pass ? "PASS" : v.kind == Verdict::fail ? "FAIL" : "SKIP";
    failed += v.kind == Verdict::fail ? 1 : 0;
    std::cout << tag << " criterion " << id << " (" << names.at(id) << "): " << v.detail << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all criteria met")
            << std::endl;
  return failed ? 1 : 0;
}
