#pragma once

#include <cstdint>
#include <random>

#include "mschemo/grid.hpp"
#include "mschemo/measure.hpp"

namespace mschemo {

/// Seeded generator with a platform-independent uniform mapping, so seeded
/// checks print the same numbers everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// Gaussian bump of the given total mass (normalized by the discrete integral).
ScalarField gaussian_bump(const Grid& grid, Point center, double width, double mass);

/// Sum of a few random Gaussian bumps of either sign with peak size up to
/// `amplitude`; smooth on the mesh scale.
ScalarField random_smooth_field(const Grid& grid, Rng& rng, double amplitude);

/// Positive smooth random species densities with average mass lambda.
SpeciesDensity random_density(const Grid& grid, const SpeciesMeasure& measure, Rng& rng,
                              double lambda);

}  // namespace mschemo
