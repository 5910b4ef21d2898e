#pragma once

#include <cstdint>

#include "sbreak/asymptotic.hpp"
#include "sbreak/model_core.hpp"

namespace sbreak {

// Least-squares break fit: argmin of the SSR profile plus the plug-in slopes.
struct LsEstimate {
  double tau_hat = 0.0;
  int break_index = 0;
  VectorXd gamma_hat;
  double ssr = 0.0;
  double sigma2_hat = 0.0;  // S_T(tau_hat) / (T - d_x - d_z)
  MatrixXd V_hat;           // T^{-1} chi'chi at tau_hat
  int T = 0;
};

LsEstimate ls_fit(const Dataset& ds, const BreakGrid& grid);
LsEstimate ls_fit(const Dataset& ds, const GramProfile& gp, const BreakGrid& grid);

// Slope estimate/CI at a fixed break index (tau treated as known).
LsEstimate ls_fit_at(const Dataset& ds, int break_index);

// Conventional per-component CIs: gamma_j +- z * sqrt(s2 [Vhat^-1]_jj / T).
IntervalSet slope_ci(const LsEstimate& ls, int component, double level);
// Same for a linear combination a'gamma.
IntervalSet slope_ci(const LsEstimate& ls, const VectorXd& contrast, double level);
std::vector<IntervalSet> slope_ci_all(const LsEstimate& ls, double level);

// Break-location interval from the simulated argmax-W* limit with plug-ins
// (delta_hat, sample second moment of z, sigma2_hat).
IntervalSet break_ci_wstar(const LsEstimate& ls, const Dataset& ds,
                           double level, int n_sims, std::uint64_t seed,
                           int m_range = 0);

// Inverted likelihood-ratio confidence set for tau with parametric-bootstrap
// critical values. Reported as maximal runs of consecutive grid points.
struct IlrResult {
  IntervalSet set;
  double critical_value = 0.0;
  int skipped_grid_points = 0;  // singular designs skipped with a warning count
};

IlrResult ilr_set(const Dataset& ds, const BreakGrid& grid, const LsEstimate& ls,
                  double level, int n_boot, std::uint64_t seed);

// LR(tau) = T log(S_T(tau) / S_T(tau_hat)) over the grid.
std::vector<std::pair<int, double>> lr_profile(const GramProfile& gp,
                                               const BreakGrid& grid,
                                               double ssr_min);

}  // namespace sbreak
