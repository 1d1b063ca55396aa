#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mschemo/functionals.hpp"
#include "mschemo/greens.hpp"
#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo {

class BubbleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// U_eps(x) = log(8 eps^2 / (eps^2 + |x - c|^2)^2), c the grid center unless given.
ScalarField liouville_bubble(const Grid& grid, double epsilon, std::optional<Point> center = {});

/// psi_eps = lambda e^{U_eps} / int e^{U_eps}, normalized by the discrete integral.
ScalarField bubble_density(const Grid& grid, double epsilon, double lambda);

/// Band of atoms carrying the concentrating family: [1 - eta, 1], or the mirror
/// [-1, -1 + eta] when the upper band holds no atoms.
struct AlphaBand {
  double lo = 0.0;
  double hi = 0.0;
  double probability = 0.0;  // P(band)
  double mean_alpha = 0.0;   // int_band alpha dP / P(band)
};

/// Throws BubbleError for eta outside (0, 1) or when neither band holds an atom.
AlphaBand select_band(const SpeciesMeasure& measure, double eta);

/// rho_eps: atoms in the band carry psi_eps / P(band), the others zero.
SpeciesDensity bubble_species_density(const Grid& grid, double epsilon, double lambda,
                                      const SpeciesMeasure& measure, double eta);

struct BubbleRecord {
  double epsilon = 0.0;
  double int_eU = 0.0;         // int e^U
  double int_eU_U = 0.0;       // int e^U U
  double int_eU_GeU = 0.0;     // int e^U G*e^U
  double psi_log_psi = 0.0;    // int psi log psi
  double psi_G_psi = 0.0;      // int psi G*psi
  double F = 0.0;              // F0(psi_eps) at the scan's lambda
  double mass_ratio = 0.0;     // int e^U / (8 pi (1 - eps^2/(1+eps^2)))
  double log_ratio = 0.0;      // int e^U U / (log(1/eps^2) int e^U)
  double green_ratio = 0.0;    // int e^U G*e^U / (log(1/eps^4) int e^U)
  double projection_error = 0.0;
};

struct BubbleScan {
  double lambda = 0.0;
  std::vector<BubbleRecord> records;
  double slope = 0.0;  // least-squares slope of F against log(1/eps^2)
  double slope_stderr = 0.0;
};

/// Integrals of the bubble family on the grid, one record per epsilon.
///
/// The projection error is the max over |x - c| <= R/2 of
/// |G*e^U - U + log(8 eps^2) - 8 pi H(x, c)|, with H analytic on a disk
/// centered at c and taken from the discrete Green function otherwise.
/// Epsilons must be strictly decreasing, inside (0, R/4) and at least 4h.
BubbleScan expansion_report(const Grid& grid, const std::vector<double>& epsilons,
                            const GreenOperator& green, double lambda = kCriticalMass,
                            int threads = 1);

/// Least-squares line y = intercept + slope x with the slope's standard error.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual_rms = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

enum class Verdict { bounded, unbounded };
const char* to_string(Verdict v);

struct CollapsePoint {
  double epsilon = 0.0;
  double log_inv_eps2 = 0.0;
  double F = 0.0;
};

struct CollapseResult {
  double lambda = 0.0;
  AlphaBand band;
  std::vector<CollapsePoint> points;
  LineFit fit;
  /// lambda (1 - c^2 lambda / 8 pi) with c the band's mean alpha.
  double predicted_slope = 0.0;
  /// Negative slopes of magnitude up to this are reported as bounded.
  double tolerance = 0.0;
  Verdict verdict = Verdict::bounded;
};

/// Relative slope margin used by the verdict: |slope| <= kVerdictMargin * 8 pi
/// counts as the bounded boundary case.
inline constexpr double kVerdictMargin = 0.15;

/// Fits F(rho_eps) against log(1/eps^2). The verdict is unbounded iff the
/// slope is below -max(2 stderr, kVerdictMargin * 8 pi). Needs at least 4
/// epsilons.
CollapseResult collapse_experiment(const Grid& grid, const SpeciesMeasure& measure, double lambda,
                                   double eta, const std::vector<double>& epsilons,
                                   const GreenOperator& green, int threads = 1);

/// The default ladder {0.2, 0.141, 0.1, 0.071, 0.05}.
std::vector<double> default_epsilon_ladder();

/// One row per epsilon: epsilon,int_eU,int_eU_U,int_eU_GeU,psi_log_psi,psi_G_psi,F,
/// mass_ratio,log_ratio,green_ratio,projection_error
void write_bubble_scan_csv(std::ostream& out, const BubbleScan& scan);

/// One row per (lambda, epsilon): lambda,epsilon,log_inv_eps2,F
void write_collapse_csv(std::ostream& out, const std::vector<CollapseResult>& results);

}  // namespace mschemo
