#pragma once

#include "sbreak/types.hpp"

namespace sbreak {

// Per-break OLS fit.
struct OlsFit {
  VectorXd gamma_hat;  // beta then delta
  double ssr = 0.0;    // S_T(tau)
  double sigma2_hat = 0.0;  // S_T(tau) / T
  MatrixXd xtx;        // chi_tau' chi_tau
  int break_index = 0;
};

// Row t of the design is (x_t', 0') for t <= k and (x_t', z_t') for t > k.
MatrixXd build_design(const Dataset& ds, int break_index);

// OLS at a fixed break via column-pivoted QR on the design (no Gram inverse).
// Throws SingularDesignError when the design is rank deficient.
OlsFit ols_at_break(const Dataset& ds, int break_index);

// Suffix Gram tables: normal-equation blocks for every break index in O(p^2)
// after an O(T p^2) sweep. Shared by the SSR profile and the conjugate
// posterior enumeration.
class GramProfile {
 public:
  explicit GramProfile(const Dataset& ds);

  int T() const { return T_; }
  int p() const { return p_; }
  double yty() const { return syy_; }

  // chi_k' chi_k and chi_k' y for break index k (1 <= k <= T-1).
  void normal_equations(int k, MatrixXd& xtx, VectorXd& xty) const;

  // Gram-based OLS solve; cheap but less pivoted than ols_at_break.
  OlsFit solve(int k) const;

 private:
  int T_, dx_, dz_, p_;
  MatrixXd sxx_;
  VectorXd sxy_;
  double syy_;
  // suffix over rows t..T-1 (0-based) of z z', z x', z y
  std::vector<MatrixXd> suf_zz_;
  std::vector<MatrixXd> suf_zx_;
  std::vector<VectorXd> suf_zy_;
};

// S_T(tau) over the grid; agrees with ols_at_break to relative 1e-8.
std::vector<std::pair<int, double>> ssr_profile(const Dataset& ds,
                                                const BreakGrid& grid);
std::vector<std::pair<int, double>> ssr_profile(const GramProfile& gp,
                                                const BreakGrid& grid);

}  // namespace sbreak
