#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sbreak {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A break candidate left the per-regime design rank deficient.
struct SingularDesignError : NumericError {
  int break_index;
  explicit SingularDesignError(int k)
      : NumericError("singular design at break index " + std::to_string(k)),
        break_index(k) {}
};

// b_bar collapsed to <= 0 (exact interpolation under an improper prior).
struct DegeneratePosteriorError : NumericError {
  using NumericError::NumericError;
};

// argmax of the simulated W* process keeps escaping the search window.
struct DivergingArgmaxError : NumericError {
  using NumericError::NumericError;
};

// ---------------------------------------------------------------------------
// Dataset: response, regressors, and the break transformation z_t = R'x_t.

class Dataset {
 public:
  VectorXd y;                       // T
  MatrixXd X;                       // T x d_x, rows x_t'
  MatrixXd R;                       // d_x x d_z, full column rank
  MatrixXd Z;                       // X * R, cached
  std::vector<std::string> labels;  // optional per-observation stamps

  Dataset(VectorXd y_in, MatrixXd X_in, MatrixXd R_in,
          std::vector<std::string> labels_in = {});

  int T() const { return static_cast<int>(y.size()); }
  int dx() const { return static_cast<int>(X.cols()); }
  int dz() const { return static_cast<int>(R.cols()); }
  int p() const { return dx() + dz(); }

  // Same design, new response. Used by parametric bootstraps.
  Dataset with_response(VectorXd y_new) const;
};

// Break index under the strict-floor convention: the largest integer
// strictly smaller than tau*T.
inline int strict_floor_break(double tau, int T) {
  double a = tau * T;
  int k = static_cast<int>(std::floor(a));
  if (static_cast<double>(k) == a) --k;
  return k;
}

// ---------------------------------------------------------------------------
// BreakGrid: admissible break indices after trimming.

class BreakGrid {
 public:
  double trim = 0.0;
  std::vector<int> indices;      // ascending, 1 <= k <= T-1
  std::vector<double> fractions; // k / T

  // All k with trim*T < k < (1-trim)*T (strict, mirroring the open interval).
  static BreakGrid trimmed(int T, double trim);
  static BreakGrid from_indices(int T, std::vector<int> ks);

  int size() const { return static_cast<int>(indices.size()); }
  // Position of the grid point nearest to the given fraction.
  int nearest_position(double tau) const;
  // Position of break index k, or -1.
  int position_of(int k) const;
};

// ---------------------------------------------------------------------------
// IntervalSet: carrier for every interval/set kind the engine reports.

enum class IntervalKind { slope_ci, break_ci, ilr_set, hpd_set, equal_tailed };

struct IntervalSet {
  IntervalKind kind;
  double level = 0.0;
  std::vector<std::pair<double, double>> intervals;  // disjoint, lo <= hi
  double point = 0.0;
  int grid_count = 0;  // # grid indices in the set (discrete kinds only)

  bool contains(double x) const {
    for (const auto& [lo, hi] : intervals)
      if (x >= lo && x <= hi) return true;
    return false;
  }
  double total_length() const {
    double s = 0.0;
    for (const auto& [lo, hi] : intervals) s += hi - lo;
    return s;
  }
};

const char* interval_kind_name(IntervalKind k);

}  // namespace sbreak
