#include "mschemo/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <ostream>
#include <numeric>
#include <string>

namespace mschemo {

namespace {

// Results of f(0..n-1), at most `threads` evaluations in flight.
template <typename F>
auto parallel_map(std::size_t n, int threads, F f) -> std::vector<decltype(f(std::size_t{}))> {
  std::vector<decltype(f(std::size_t{}))> out(n);
  const std::size_t width = static_cast<std::size_t>(std::max(1, threads));
  if (width == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  for (std::size_t start = 0; start < n; start += width) {
    std::vector<std::future<decltype(f(std::size_t{}))>> batch;
    for (std::size_t i = start; i < std::min(n, start + width); ++i)
      batch.push_back(std::async(std::launch::async, f, i));
    for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
  }
  return out;
}

double inscribed_radius(const Grid& grid) {
  if (grid.kind() == GeometryKind::disk) return grid.radius();
  return 0.5 * std::min(grid.length_x(), grid.length_y());
}

void require_ladder(const Grid& grid, const std::vector<double>& eps) {
  if (eps.empty()) throw BubbleError("empty epsilon list");
  const double r = inscribed_radius(grid);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0) || !(eps[i] < 0.25 * r))
      throw BubbleError("epsilon " + std::to_string(eps[i]) + " outside (0, R/4)");
    if (eps[i] < 4.0 * grid.h())
      throw BubbleError("epsilon " + std::to_string(eps[i]) + " below 4h: bubble under-resolved");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw BubbleError("epsilons must be strictly decreasing");
  }
}

double dist2(Point a, Point b) { return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y); }

// H(x, c) on every cell.
ScalarField robin_field(const Grid& grid, const GreenOperator& green) {
  const Point c = grid.center();
  if (grid.kind() == GeometryKind::disk)
    return grid.constant(std::log(grid.radius()) / (2.0 * kPi));
  const std::size_t c_cell = grid.nearest_cell(c);
  const Point x0 = grid.position(c_cell);
  ScalarField delta = grid.zeros();
  delta[static_cast<Eigen::Index>(c_cell)] = 1.0 / grid.cell_area();
  ScalarField H = green.solve(delta);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k == c_cell) continue;
    H[static_cast<Eigen::Index>(k)] += std::log(std::sqrt(dist2(grid.position(k), x0))) / (2.0 * kPi);
  }
  H[static_cast<Eigen::Index>(c_cell)] = robin_self(green, c_cell);
  return H;
}

}  // namespace

ScalarField liouville_bubble(const Grid& grid, double epsilon, std::optional<Point> center) {
  if (!(epsilon > 0.0)) throw BubbleError("bubble needs epsilon > 0");
  const Point c = center.value_or(grid.center());
  const double e2 = epsilon * epsilon;
  ScalarField u(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double d = e2 + dist2(grid.position(k), c);
    u[static_cast<Eigen::Index>(k)] = std::log(8.0 * e2) - 2.0 * std::log(d);
  }
  return u;
}

ScalarField bubble_density(const Grid& grid, double epsilon, double lambda) {
  if (!(lambda > 0.0)) throw BubbleError("bubble density needs lambda > 0");
  ScalarField e = liouville_bubble(grid, epsilon).array().exp();
  return e * (lambda / integrate_field(e, grid));
}

AlphaBand select_band(const SpeciesMeasure& measure, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw BubbleError("eta must lie in (0, 1)");
  AlphaBand b{1.0 - eta, 1.0, 0.0, 0.0};
  b.probability = measure.mass_of(b.lo, b.hi);
  if (b.probability == 0.0) {
    b = {-1.0, -1.0 + eta, 0.0, 0.0};
    b.probability = measure.mass_of(b.lo, b.hi);
  }
  if (b.probability == 0.0) throw BubbleError("no atoms within eta of alpha = 1 or alpha = -1");
  double moment = 0.0;
  for (const auto& a : measure.atoms())
    if (a.alpha >= b.lo && a.alpha <= b.hi) moment += a.weight * a.alpha;
  b.mean_alpha = moment / b.probability;
  return b;
}

SpeciesDensity bubble_species_density(const Grid& grid, double epsilon, double lambda,
                                      const SpeciesMeasure& measure, double eta) {
  const AlphaBand band = select_band(measure, eta);
  const ScalarField psi = bubble_density(grid, epsilon, lambda);
  SpeciesDensity rho;
  for (const auto& a : measure.atoms()) {
    if (a.alpha >= band.lo && a.alpha <= band.hi)
      rho.species.push_back(psi / band.probability);
    else
      rho.species.push_back(grid.zeros());
  }
  return rho;
}

BubbleScan expansion_report(const Grid& grid, const std::vector<double>& epsilons,
                            const GreenOperator& green, double lambda, int threads) {
  require_ladder(grid, epsilons);
  if (!(lambda > 0.0)) throw BubbleError("expansion report needs lambda > 0");
  const ScalarField H = robin_field(grid, green);
  const Point c = grid.center();
  const double half_r2 = 0.25 * inscribed_radius(grid) * inscribed_radius(grid);

  BubbleScan scan;
  scan.lambda = lambda;
  scan.records = parallel_map(epsilons.size(), threads, [&](std::size_t i) {
    BubbleRecord r;
    const double eps = epsilons[i];
    r.epsilon = eps;
    const ScalarField U = liouville_bubble(grid, eps);
    const ScalarField eU = U.array().exp();
    const ScalarField GeU = green.solve(eU);
    r.int_eU = integrate_field(eU, grid);
    r.int_eU_U = inner(eU, U, grid);
    r.int_eU_GeU = inner(eU, GeU, grid);
    const ScalarField psi = eU * (lambda / r.int_eU);
    r.psi_log_psi = inner(psi, psi.array().log().matrix(), grid);
    r.psi_G_psi = r.int_eU_GeU * (lambda / r.int_eU) * (lambda / r.int_eU);
    r.F = r.psi_log_psi - lambda - 0.5 * r.psi_G_psi;
    const double e2 = eps * eps;
    r.mass_ratio = r.int_eU / (kCriticalMass * (1.0 - e2 / (1.0 + e2)));
    r.log_ratio = r.int_eU_U / (std::log(1.0 / e2) * r.int_eU);
    r.green_ratio = r.int_eU_GeU / (std::log(1.0 / (e2 * e2)) * r.int_eU);
    const double shift = std::log(8.0 * e2);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (dist2(grid.position(k), c) > half_r2) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const double err = std::abs(GeU[kk] - U[kk] + shift - 8.0 * kPi * H[kk]);
      r.projection_error = std::max(r.projection_error, err);
    }
    return r;
  });
  std::vector<double> x, y;
  for (const auto& r : scan.records) {
    x.push_back(std::log(1.0 / (r.epsilon * r.epsilon)));
    y.push_back(r.F);
  }
  if (x.size() >= 3) {
    const LineFit fit = fit_line(x, y);
    scan.slope = fit.slope;
    scan.slope_stderr = fit.slope_stderr;
  }
  return scan;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw BubbleError("line fit needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw BubbleError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.residual_rms = std::sqrt(ss / n);
  f.slope_stderr = std::sqrt(ss / (n - 2.0) / sxx);
  return f;
}

const char* to_string(Verdict v) { return v == Verdict::bounded ? "bounded" : "unbounded"; }

CollapseResult collapse_experiment(const Grid& grid, const SpeciesMeasure& measure, double lambda,
                                   double eta, const std::vector<double>& epsilons,
                                   const GreenOperator& green, int threads) {
  if (epsilons.size() < 4) throw BubbleError("collapse experiment needs at least 4 epsilons");
  require_ladder(grid, epsilons);
  if (!(lambda > 0.0)) throw BubbleError("collapse experiment needs lambda > 0");
  CollapseResult res;
  res.lambda = lambda;
  res.band = select_band(measure, eta);
  res.points = parallel_map(epsilons.size(), threads, [&](std::size_t i) {
    const double eps = epsilons[i];
    const SpeciesDensity rho = bubble_species_density(grid, eps, lambda, measure, eta);
    return CollapsePoint{eps, std::log(1.0 / (eps * eps)), free_energy_F(rho, measure, grid, green).value};
  });
  std::vector<double> x, y;
  for (const auto& p : res.points) {
    if (!std::isfinite(p.F)) continue;
    x.push_back(p.log_inv_eps2);
    y.push_back(p.F);
  }
  if (x.size() < 4) throw BubbleError("degenerate fit: fewer than 4 usable points");
  res.fit = fit_line(x, y);
  const double c = res.band.mean_alpha;
  res.predicted_slope = lambda * (1.0 - c * c * lambda / kCriticalMass);
  res.tolerance = std::max(2.0 * res.fit.slope_stderr, kVerdictMargin * kCriticalMass);
  res.verdict = res.fit.slope < -res.tolerance ? Verdict::unbounded : Verdict::bounded;
  return res;
}

std::vector<double> default_epsilon_ladder() { return {0.2, 0.141, 0.1, 0.071, 0.05}; }

void write_bubble_scan_csv(std::ostream& out, const BubbleScan& scan) {
  out << "epsilon,int_eU,int_eU_U,int_eU_GeU,psi_log_psi,psi_G_psi,F,mass_ratio,log_ratio,green_ratio,"
         "projection_error\n"
      << std::setprecision(17);
  for (const auto& r : scan.records)
    out << r.epsilon << ',' << r.int_eU << ',' << r.int_eU_U << ',' << r.int_eU_GeU << ',' << r.psi_log_psi
        << ',' << r.psi_G_psi << ',' << r.F << ',' << r.mass_ratio << ',' << r.log_ratio << ','
        << r.green_ratio << ',' << r.projection_error << '\n';
}

void write_collapse_csv(std::ostream& out, const std::vector<CollapseResult>& results) {
  out << "lambda,epsilon,log_inv_eps2,F\n" << std::setprecision(17);
  for (const auto& r : results)
    for (const auto& p : r.points) out << r.lambda << ',' << p.epsilon << ',' << p.log_inv_eps2 << ',' << p.F << '\n';
}

}  // namespace mschemo
