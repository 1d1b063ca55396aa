#include "mschemo/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace mschemo {

namespace {

constexpr std::size_t kMaxAtomsPerSide = 30;

// Gray-code walk over all nonempty subsets of `side`, keeping running sums.
double min_ratio_over_subsets(const std::vector<Atom>& side) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = side.size();
  if (n == 0) return best;
  const std::uint64_t count = std::uint64_t{1} << n;
  double mass = 0.0;
  double moment = 0.0;
  std::uint64_t previous = 0;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::uint64_t gray = k ^ (k >> 1);
    const std::uint64_t flipped = gray ^ previous;
    const auto bit = static_cast<std::size_t>(std::countr_zero(flipped));
    const double sign = (gray & flipped) ? 1.0 : -1.0;
    mass += sign * side[bit].weight;
    moment += sign * side[bit].weight * side[bit].alpha;
    previous = gray;
    if (moment == 0.0) continue;
    // Running sums drift; recompute exactly for candidates that might win.
    const double approx = kCriticalMass * mass / (moment * moment);
    if (approx <= best * (1.0 + 1e-9)) {
      double m = 0.0;
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        if (gray & (std::uint64_t{1} << b)) {
          m += side[b].weight;
          s += side[b].weight * side[b].alpha;
        }
      }
      if (s != 0.0) best = std::min(best, kCriticalMass * m / (s * s));
    }
  }
  return best;
}

}  // namespace

SpeciesMeasure make_measure(std::span<const Atom> atoms) {
  if (atoms.empty()) throw MeasureError("species measure needs at least one atom");
  std::vector<Atom> sorted(atoms.begin(), atoms.end());
  double total = 0.0;
  for (const auto& a : sorted) {
    if (!std::isfinite(a.alpha) || a.alpha < -1.0 || a.alpha > 1.0)
      throw MeasureError("atom alpha " + std::to_string(a.alpha) + " outside [-1,1]");
    if (!std::isfinite(a.weight) || a.weight <= 0.0)
      throw MeasureError("atom weight must be positive, got " + std::to_string(a.weight));
    total += a.weight;
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Atom& x, const Atom& y) { return x.alpha < y.alpha; });
  for (std::size_t j = 1; j < sorted.size(); ++j) {
    if (sorted[j].alpha == sorted[j - 1].alpha)
      throw MeasureError("duplicate atom at alpha " + std::to_string(sorted[j].alpha));
  }
  for (auto& a : sorted) a.weight /= total;
  SpeciesMeasure m;
  m.atoms_ = std::move(sorted);
  return m;
}

bool SpeciesMeasure::in_support(double alpha) const {
  return std::any_of(atoms_.begin(), atoms_.end(),
                     [alpha](const Atom& a) { return a.alpha == alpha; });
}

double SpeciesMeasure::mass_of(double lo, double hi) const {
  double m = 0.0;
  for (const auto& a : atoms_)
    if (a.alpha >= lo && a.alpha <= hi) m += a.weight;
  return m;
}

double SpeciesMeasure::max_abs_alpha() const {
  double m = 0.0;
  for (const auto& a : atoms_) m = std::max(m, std::abs(a.alpha));
  return m;
}

double integrate_alpha(const SpeciesMeasure& measure,
                       const std::function<double(double)>& g) {
  double sum = 0.0;
  for (const auto& a : measure.atoms()) sum += a.weight * g(a.alpha);
  return sum;
}

std::optional<double> critical_mass_average(const SpeciesMeasure& measure) {
  if (measure.in_support(1.0) || measure.in_support(-1.0)) return kCriticalMass;
  return std::nullopt;
}

double critical_mass_individual(const SpeciesMeasure& measure) {
  std::vector<Atom> positive;
  std::vector<Atom> negative;
  bool any_nonzero = false;
  for (const auto& a : measure.atoms()) {
    if (a.alpha != 0.0) any_nonzero = true;
    (a.alpha >= 0.0 ? positive : negative).push_back(a);
  }
  if (!any_nonzero)
    throw MeasureError("individual critical mass undefined: every atom has alpha = 0");
  if (positive.size() > kMaxAtomsPerSide || negative.size() > kMaxAtomsPerSide)
    throw MeasureError("individual critical mass enumeration limited to 30 atoms per sign");
  return std::min(min_ratio_over_subsets(positive), min_ratio_over_subsets(negative));
}

}  // namespace mschemo
