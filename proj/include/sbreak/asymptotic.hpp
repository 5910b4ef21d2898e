#pragma once

#include <cstdint>

#include "sbreak/types.hpp"

namespace sbreak {

// Plug-in configuration for the two-sided break limit process W*(m).
struct WstarConfig {
  VectorXd delta;    // d_z
  MatrixXd sigma_z;  // d_z x d_z, SPD
  double sigma2 = 1.0;
  int m_range = 50;
  int n_paths = 1000;
  std::uint64_t seed = 0;
};

struct WstarResult {
  std::vector<long> argmax;        // one per path
  double boundary_fraction = 0.0;  // paths whose argmax sits at +-m_range
  int m_range = 0;
};

// Simulates n_paths of W*(m) on [-m_range, m_range] and returns the argmax of
// each path. W*(0)=0; both arms are random walks with drift -delta'Sz delta.
// Ties break to smallest |m|, then negative m.
WstarResult simulate_wstar(const WstarConfig& cfg);

// Doubles m_range until the boundary fraction drops below 0.1%; throws
// DivergingArgmaxError at the cap.
WstarResult simulate_wstar_adaptive(WstarConfig cfg, int max_range = 1000000);

// Suggested starting window from the drift rate.
int wstar_initial_range(const VectorXd& delta, const MatrixXd& sigma_z,
                        double sigma2);

// Limit of T^{-1} S_T(tau): Q(tau) = sigma0^2 + Delta(tau).
struct QLimitConfig {
  double tau0 = 0.5;
  VectorXd delta0;   // d_z
  MatrixXd sigma_x;  // d_x x d_x, SPD
  MatrixXd R;        // d_x x d_z
  double sigma2_0 = 1.0;
};

double q_limit(const QLimitConfig& cfg, double tau);

}  // namespace sbreak
