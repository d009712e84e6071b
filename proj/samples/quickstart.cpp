// Generate a star, pick the bandwidth by the full peak method and by sampling,
// train a description and score a few points.
#include <array>
#include <cstdio>
#include <fstream>

#include "svdd/svdd.hpp"

int main() {
  using namespace svdd;
  const Dataset star = gen_star(582, 1);
  const SweepGrid grid(0.05, 10.0, 0.05);
  const double f = 0.001;

  const FullPeakResult full = full_peak(star, grid, f);
  std::printf("full peak: s = %.2f\n", full.s_opt());

  SamplingPeakOptions opt;
  opt.conv = ConvergenceParams{0.05, 3};
  const SelectionTrace trace =
      sampling_peak(star, SampleSchedule::from_fractions(star.rows(), 0.05, 1.0, 0.01, 1), grid, f, opt);
  std::printf("sampling peak: s = %.2f after %zu sample sizes (%s)\n", trace.final_s, trace.entries.size(),
              trace.converged ? "converged" : "not converged");

  const SvddModel model = solve_dual(star, SvddConfig{trace.final_s, f});
  std::printf("model: %ld support vectors, R^2 = %.4f\n", static_cast<long>(model.nsv), model.r_squared);

  for (const auto& p : {std::array{0.0, 0.0}, std::array{3.5, 0.0}, std::array{6.0, 6.0}}) {
    const ScoreResult r = score(model, p);
    std::printf("(%4.1f, %4.1f): D^2 = %.4f -> %s\n", p[0], p[1], r.distance_sq, r.is_outlier ? "outlier" : "inside");
  }

  std::ofstream svg("quickstart_boundary.svg");
  write_grid_svg(svg, grid_score_2d(model, default_bounds(star)), &star);
  std::printf("boundary written to quickstart_boundary.svg\n");
}
